from typing import Dict

import pandas as pd
from prefect import Task
from prefect.utilities.tasks import defaults_from_attrs

from ..config import ExperimentConfig
from ..sources import ScheduleStudy, TrackingStudy


class ScheduleToDF(Task):
    """
    Task for scheduling one window at one individual budget.

    Args:
        config (ExperimentConfig, optional): A `schedule` experiment. Defaults to None.
        s_i (int, optional): The individual budget. Defaults to None (all of `config.budgets.s_i`).
        if_empty (str, optional): What to do if the study produces no rows. Defaults to "warn".
        timeout(int, optional): The amount of time (in seconds) to wait while running this task before
            a timeout occurs. Defaults to 3600.
    """

    def __init__(
        self,
        config: ExperimentConfig = None,
        s_i: int = None,
        if_empty: str = "warn",
        timeout: int = 3600,
        *args,
        **kwargs,
    ):
        self.config = config
        self.s_i = s_i
        self.if_empty = if_empty

        super().__init__(name="schedule_to_df", timeout=timeout, *args, **kwargs)

    @defaults_from_attrs("config", "s_i", "if_empty")
    def run(
        self, config: ExperimentConfig = None, s_i: int = None, if_empty: str = None
    ) -> pd.DataFrame:
        individual = None if s_i is None else [s_i]
        return ScheduleStudy(config=config, individual=individual).to_df(if_empty=if_empty)


class TrackingToDF(Task):
    """
    Task for the Monte Carlo tracking runs of one individual budget.

    Returns a dictionary with the per-step MSE table under "mse" and the schedule
    snapshots under "snapshots".

    Args:
        config (ExperimentConfig, optional): A `track` experiment. Defaults to None.
        s_i (int, optional): The individual budget. Defaults to None (all of `config.budgets.s_i`).
        if_empty (str, optional): What to do if the study produces no rows. Defaults to "warn".
        timeout(int, optional): The amount of time (in seconds) to wait while running this task before
            a timeout occurs. Defaults to 3600 * 4.
    """

    def __init__(
        self,
        config: ExperimentConfig = None,
        s_i: int = None,
        if_empty: str = "warn",
        timeout: int = 3600 * 4,
        *args,
        **kwargs,
    ):
        self.config = config
        self.s_i = s_i
        self.if_empty = if_empty

        super().__init__(name="tracking_to_df", timeout=timeout, *args, **kwargs)

    @defaults_from_attrs("config", "s_i", "if_empty")
    def run(
        self, config: ExperimentConfig = None, s_i: int = None, if_empty: str = None
    ) -> Dict[str, pd.DataFrame]:
        individual = None if s_i is None else [s_i]
        study = TrackingStudy(config=config, individual=individual)
        self.logger.info(f"Simulating {config.trials} trials for s_i={study.individual}...")
        return {
            "mse": study.to_df(if_empty=if_empty),
            "snapshots": study.snapshots(if_empty=if_empty),
        }
