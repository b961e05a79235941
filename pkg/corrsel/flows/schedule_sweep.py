from typing import Any, Dict, List

from prefect import Flow, unmapped

from ..config import ExperimentConfig
from ..task_utils import concat_frames, df_to_csv
from ..tasks import ScheduleToDF


class ScheduleSweep(Flow):
    def __init__(
        self,
        name: str,
        config: ExperimentConfig,
        path: str,
        timeout: int = 3600,
        *args: List[Any],
        **kwargs: Dict[str, Any],
    ):
        """
        Flow for scheduling one window at every individual budget and writing one CSV.

        Args:
            name (str): The name of the flow.
            config (ExperimentConfig): A `schedule` experiment.
            path (str): Path of the output CSV.
            timeout(int, optional): The amount of time (in seconds) to wait while running a sweep point before
                a timeout occurs. Defaults to 3600.
        """
        self.config = config
        self.path = path
        self.timeout = timeout

        super().__init__(*args, name=name, **kwargs)

        self.gen_flow()

    def gen_flow(self) -> Flow:
        frames = ScheduleToDF(timeout=self.timeout).map(
            config=unmapped(self.config), s_i=self.config.budgets.s_i, flow=self
        )
        df = concat_frames.bind(frames, flow=self)
        df_to_csv.bind(df=df, path=self.path, config=self.config, flow=self)
