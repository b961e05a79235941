from typing import Any, Dict, List

from prefect import Flow, unmapped

from ..config import ExperimentConfig
from ..sources import AcceptanceSuite
from ..task_utils import concat_frames, report_to_json
from ..tasks import AcceptanceCheckToDF


class AcceptanceCheck(Flow):
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
        Flow running the acceptance checks and writing the JSON pass/fail report.

        The report task is kept as `self.report`, so callers can read the report from
        the flow state.

        Args:
            name (str): The name of the flow.
            config (ExperimentConfig): A `verify` experiment.
            path (str): Path of the JSON report.
            timeout(int, optional): The amount of time (in seconds) to wait while running a check before
                a timeout occurs. Defaults to 3600.
        """
        self.config = config
        self.path = path
        self.timeout = timeout
        self.checks = AcceptanceSuite(config=config).checks

        super().__init__(*args, name=name, **kwargs)

        self.gen_flow()

    def gen_flow(self) -> Flow:
        frames = AcceptanceCheckToDF(timeout=self.timeout).map(
            config=unmapped(self.config), check=self.checks, flow=self
        )
        df = concat_frames.bind(frames, flow=self)
        self.report = report_to_json.bind(
            df=df, path=self.path, config=self.config, flow=self
        )
