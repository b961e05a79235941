from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..config import ExperimentConfig
from ..tracksim import MonteCarloResult, TrackingScenario, TrackRun, monte_carlo_mse
from .base import Source

MSE_COLUMNS = ["method", "s_i", "step", "mse"]
SNAPSHOT_COLUMNS = ["s_i", "window", "step", "sensor", "x", "y", "active"]


class TrackingStudy(Source):
    """Monte Carlo tracking MSE per step for every scheduler and individual budget.

    All schedulers of one s_i see the same trajectories and noise. Schedule
    snapshots come from the first trial of the greedy scheduler, or of the first
    configured method when greedy is not run.

    Args:
        config (ExperimentConfig): A `track` experiment.
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
        self._scenario = None
        self._results: Dict[int, Dict[str, MonteCarloResult]] = {}

    @property
    def scenario(self) -> TrackingScenario:
        if self._scenario is None:
            self._scenario = TrackingScenario.from_settings(
                self.config.tracking, self.config.budgets.tau, self.point_rng()
            )
        return self._scenario

    def run(self) -> Dict[int, Dict[str, MonteCarloResult]]:
        for s_i in self.individual:
            if s_i in self._results:
                continue
            seed = np.random.SeedSequence([self.config.seed, s_i])
            self._results[s_i] = {
                method: monte_carlo_mse(
                    self.scenario, method, self.config.trials, seed, s_i=s_i
                )
                for method in self.config.methods
            }
        return self._results

    def to_df(self, if_empty: str = "warn") -> pd.DataFrame:
        rows = []
        for s_i, results in self.run().items():
            for method, result in results.items():
                for step, mse in enumerate(result.per_step, start=1):
                    rows.append({"method": method, "s_i": s_i, "step": step, "mse": mse})
        return self._frame(rows, MSE_COLUMNS, if_empty)

    def _snapshot_rows(self, s_i: int, run: TrackRun) -> List[dict]:
        horizon = self.scenario.horizon
        positions = self.scenario.sensors.positions
        rows = []
        for step in self.config.tracking.snapshot_steps:
            if not 1 <= step <= self.scenario.steps:
                self.logger.warning(f"Snapshot step {step} is outside the simulation.")
                continue
            window, offset = divmod(step - 1, horizon)
            active = run.schedules[window].w_matrix[offset]
            for sensor, (x, y) in enumerate(positions):
                rows.append(
                    {
                        "s_i": s_i,
                        "window": window + 1,
                        "step": step,
                        "sensor": sensor,
                        "x": x,
                        "y": y,
                        "active": int(active[sensor]),
                    }
                )
        return rows

    def snapshots(self, if_empty: str = "warn") -> pd.DataFrame:
        """Sensor positions and activation flags at the configured snapshot steps."""
        methods = self.config.methods
        method = "greedy" if "greedy" in methods else next(iter(methods), None)
        rows = []
        for s_i, results in self.run().items():
            if method is None:
                break
            rows.extend(self._snapshot_rows(s_i, results[method].example))
        return self._frame(rows, SNAPSHOT_COLUMNS, if_empty)
