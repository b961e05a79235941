import os
from typing import Any, Dict, List

from prefect import Flow, unmapped

from ..config import ExperimentConfig
from ..task_utils import concat_frames, df_to_csv
from ..tasks import TrackingToDF


def snapshot_path(path: str) -> str:
    root, extension = os.path.splitext(path)
    return f"{root}.snapshots{extension or '.csv'}"


class TrackingSweep(Flow):
    def __init__(
        self,
        name: str,
        config: ExperimentConfig,
        path: str,
        snapshots_path: str = None,
        timeout: int = 3600 * 4,
        *args: List[Any],
        **kwargs: Dict[str, Any],
    ):
        """
        Flow for the Monte Carlo tracking study. Writes the per-step MSE table and the
        schedule snapshots to two CSV files.

        Args:
            name (str): The name of the flow.
            config (ExperimentConfig): A `track` experiment.
            path (str): Path of the per-step MSE CSV.
            snapshots_path (str, optional): Path of the snapshot CSV. Defaults to `path`
                with a `.snapshots` suffix before the extension.
            timeout(int, optional): The amount of time (in seconds) to wait while running a sweep point before
                a timeout occurs. Defaults to 3600 * 4.
        """
        self.config = config
        self.path = path
        self.snapshots_path = snapshots_path or snapshot_path(path)
        self.timeout = timeout

        super().__init__(*args, name=name, **kwargs)

        self.gen_flow()

    def gen_flow(self) -> Flow:
        results = TrackingToDF(timeout=self.timeout).map(
            config=unmapped(self.config), s_i=self.config.budgets.s_i, flow=self
        )
        mse = concat_frames(results, key="mse", flow=self)
        snapshots = concat_frames(results, key="snapshots", flow=self)
        df_to_csv(df=mse, path=self.path, config=self.config, flow=self)
        df_to_csv(
            df=snapshots, path=self.snapshots_path, config=self.config, flow=self
        )
