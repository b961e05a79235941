from typing import List, Optional

import numpy as np
import pandas as pd

from ..config import ExperimentConfig
from ..oracle import exhaustive_schedule
from ..schedule import (
    DynamicalSystem,
    Schedule,
    fim_recursion,
    greedy_schedule,
    individual_budgets,
    random_schedule,
    schedule_objective,
)
from ..tracksim import TrackingScenario
from .base import Source

SCHEDULE_COLUMNS = ["method", "s_i", "objective", "wall_time"]


class ScheduleStudy(Source):
    """Single-window scheduling on the tracking model, linearised at x̂₀.

    Every individual budget s_i is a sweep point; the cumulative budget is
    s = m·s_i.

    Args:
        config (ExperimentConfig): A `schedule` experiment.
        individual (List[int], optional): Subset of `config.budgets.s_i` to run.
            Defaults to all of them.
    """

    def __init__(
        self,
        *args,
        config: ExperimentConfig = None,
        individual: Optional[List[int]] = None,
        **kwargs,
    ):
        super().__init__(*args, config=config, **kwargs)
        self.individual = (
            individual if individual is not None else self.config.budgets.s_i
        )
        self._system = None

    @property
    def system(self) -> DynamicalSystem:
        if self._system is None:
            scenario = TrackingScenario.from_settings(
                self.config.tracking, self.config.budgets.tau, self.point_rng()
            )
            self._system = scenario.system()
        return self._system

    def objective(self, method: str, s_i: int) -> float:
        sys, horizon = self.system, self.config.budgets.tau
        budgets = individual_budgets(s_i, sys.m)
        s = int(budgets.sum())
        if method == "greedy":
            return greedy_schedule(sys, horizon, s, budgets).objective
        if method == "exhaustive":
            return exhaustive_schedule(sys, horizon, s, budgets).best_value
        if method == "random":
            schedule = random_schedule(horizon, sys.m, s, budgets, self.point_rng(s_i))
        elif method == "all-on":
            schedule = Schedule(np.ones((horizon, sys.m), dtype=np.int8))
        else:
            raise ValueError(f"unknown method '{method}'")
        return schedule_objective(fim_recursion(sys, schedule))

    def to_df(self, if_empty: str = "warn") -> pd.DataFrame:
        rows = []
        for s_i in self.individual:
            for method in self.config.methods:
                value, wall_time = self.timed(self.objective, method, s_i)
                rows.append(
                    {
                        "method": method,
                        "s_i": s_i,
                        "objective": value,
                        "wall_time": wall_time,
                    }
                )
            self.logger.info(f"Individual budget s_i={s_i} done.")
        return self._frame(rows, SCHEDULE_COLUMNS, if_empty)
