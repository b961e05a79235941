import pandas as pd
from prefect import Task
from prefect.utilities.tasks import defaults_from_attrs

from ..config import ExperimentConfig
from ..sources import CorrelationStudy, SelectionStudy


class SelectionToDF(Task):
    """
    Task for running one budget of a selection study.

    Args:
        config (ExperimentConfig, optional): A `select` or `select-weak` experiment. Defaults to None.
        s (int, optional): The energy budget to run. Defaults to None (the whole sweep).
        if_empty (str, optional): What to do if the study produces no rows. Defaults to "warn".
        timeout(int, optional): The amount of time (in seconds) to wait while running this task before
            a timeout occurs. Defaults to 3600.
    """

    def __init__(
        self,
        config: ExperimentConfig = None,
        s: int = None,
        if_empty: str = "warn",
        timeout: int = 3600,
        *args,
        **kwargs,
    ):
        self.config = config
        self.s = s
        self.if_empty = if_empty

        super().__init__(name="selection_to_df", timeout=timeout, *args, **kwargs)

    @defaults_from_attrs("config", "s", "if_empty")
    def run(
        self, config: ExperimentConfig = None, s: int = None, if_empty: str = None
    ) -> pd.DataFrame:
        budgets = None if s is None else [s]
        study = SelectionStudy(config=config, budgets=budgets)
        self.logger.info(f"Running {config.kind} study for budgets {study.budgets}...")
        return study.to_df(if_empty=if_empty)


class CorrelationToDF(Task):
    """
    Task for running one correlation parameter of a correlation study.

    Args:
        config (ExperimentConfig, optional): A `correlation` experiment. Defaults to None.
        rho (float, optional): One of `config.model.rhos`. Defaults to None (all of them).
        if_empty (str, optional): What to do if the study produces no rows. Defaults to "warn".
        timeout(int, optional): The amount of time (in seconds) to wait while running this task before
            a timeout occurs. Defaults to 3600.
    """

    def __init__(
        self,
        config: ExperimentConfig = None,
        rho: float = None,
        if_empty: str = "warn",
        timeout: int = 3600,
        *args,
        **kwargs,
    ):
        self.config = config
        self.rho = rho
        self.if_empty = if_empty

        super().__init__(name="correlation_to_df", timeout=timeout, *args, **kwargs)

    @defaults_from_attrs("config", "rho", "if_empty")
    def run(
        self, config: ExperimentConfig = None, rho: float = None, if_empty: str = None
    ) -> pd.DataFrame:
        rhos = None if rho is None else [rho]
        return CorrelationStudy(config=config, rhos=rhos).to_df(if_empty=if_empty)
