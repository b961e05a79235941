import pandas as pd
from prefect import Task
from prefect.utilities.tasks import defaults_from_attrs

from ..config import ExperimentConfig
from ..sources import AcceptanceSuite


class AcceptanceCheckToDF(Task):
    """
    Task for running one numbered acceptance check.

    Args:
        config (ExperimentConfig, optional): A `verify` experiment. Defaults to None.
        check (int, optional): The check number, 1 to 10. Defaults to None (every configured check).
        timeout(int, optional): The amount of time (in seconds) to wait while running this task before
            a timeout occurs. Defaults to 3600.
    """

    def __init__(
        self,
        config: ExperimentConfig = None,
        check: int = None,
        timeout: int = 3600,
        *args,
        **kwargs,
    ):
        self.config = config
        self.check = check

        super().__init__(name="acceptance_check_to_df", timeout=timeout, *args, **kwargs)

    @defaults_from_attrs("config", "check")
    def run(self, config: ExperimentConfig = None, check: int = None) -> pd.DataFrame:
        checks = None if check is None else [check]
        return AcceptanceSuite(config=config, checks=checks).to_df(if_empty="fail")
