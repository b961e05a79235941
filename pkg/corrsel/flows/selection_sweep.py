from typing import Any, Dict, List

from prefect import Flow, unmapped

from ..config import ExperimentConfig
from ..task_utils import concat_frames, df_to_csv
from ..tasks import CorrelationToDF, SelectionToDF


class SelectionSweep(Flow):
    def __init__(
        self,
        name: str,
        config: ExperimentConfig,
        path: str,
        if_empty: str = "warn",
        timeout: int = 3600,
        *args: List[Any],
        **kwargs: Dict[str, Any],
    ):
        """
        Flow for sweeping a selection study over its budgets (or, for the `correlation`
        kind, over its correlation parameters) and writing one CSV.

        Args:
            name (str): The name of the flow.
            config (ExperimentConfig): A `select`, `select-weak` or `correlation` experiment.
            path (str): Path of the output CSV.
            if_empty (str, optional): What to do if a sweep point produces no rows. Defaults to "warn".
            timeout(int, optional): The amount of time (in seconds) to wait while running a sweep point before
                a timeout occurs. Defaults to 3600.
        """
        self.config = config
        self.path = path
        self.if_empty = if_empty
        self.timeout = timeout

        super().__init__(*args, name=name, **kwargs)

        self.gen_flow()

    def gen_flow(self) -> Flow:
        if self.config.kind == "correlation":
            frames = CorrelationToDF(if_empty=self.if_empty, timeout=self.timeout).map(
                config=unmapped(self.config), rho=self.config.model.rhos, flow=self
            )
        else:
            frames = SelectionToDF(if_empty=self.if_empty, timeout=self.timeout).map(
                config=unmapped(self.config), s=self.config.budgets.s, flow=self
            )
        df = concat_frames.bind(frames, flow=self)
        df_to_csv.bind(df=df, path=self.path, config=self.config, flow=self)
