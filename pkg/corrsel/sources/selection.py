from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..config import ExperimentConfig, sdp_backend
from ..greedy import greedy_select
from ..model import (
    MeasurementModel,
    SelectionVector,
    SensorGeometry,
    decompose_covariance,
    empirical_mse,
    exp_covariance,
    exponential_instance,
    fisher_truncated,
    objective_trace_inverse,
)
from ..oracle import exhaustive_search
from ..relaxation import select_sdr
from ..weakcorr import bilinear_solve, build_trace_max
from .base import Source

SELECTION_COLUMNS = ["method", "s", "objective", "empirical_mse", "wall_time"]
CORRELATION_COLUMNS = ["method", "rho", "s", "objective", "empirical_mse", "wall_time"]


def random_subset(m: int, s: int, rng: np.random.Generator) -> SelectionVector:
    return SelectionVector.from_indices(
        m, rng.choice(m, size=s, replace=False), budget=s
    )


class SelectionStudy(Source):
    """Objective and empirical MSE versus the energy budget.

    One estimation instance is drawn from the config seed; every budget s is a
    sweep point with its own seed. All methods of a point share the Monte Carlo
    draws used for the empirical MSE.

    Args:
        config (ExperimentConfig): A `select` or `select-weak` experiment.
        budgets (List[int], optional): Subset of `config.budgets.s` to run.
            Defaults to all of them.
    """

    def __init__(
        self,
        *args,
        config: ExperimentConfig = None,
        budgets: Optional[List[int]] = None,
        **kwargs,
    ):
        super().__init__(*args, config=config, **kwargs)
        self.budgets = budgets if budgets is not None else self.config.budgets.s
        self._model = None
        self._decomp = None

    @property
    def model(self) -> MeasurementModel:
        if self._model is None:
            settings = self.config.model
            self._model, _ = exponential_instance(
                settings.m,
                settings.n,
                settings.rho,
                self.point_rng(),
                region=settings.region,
                lattice=settings.lattice,
                noise_var=settings.noise_var,
                prior_mean=settings.prior_mean,
                prior_var=settings.prior_var,
            )
        return self._model

    @property
    def decomp(self):
        if self._decomp is None:
            self._decomp = decompose_covariance(self.model.noise_cov)
        return self._decomp

    def select(
        self, method: str, model: MeasurementModel, s: int, seed: int, decomp=None
    ) -> SelectionVector:
        """Selection made by one method for budget `s`."""
        solver = self.config.solver
        sdr = dict(
            samples=solver.samples,
            seed=seed,
            tol=solver.tol,
            solver=sdp_backend(solver.backend),
        )
        if method == "greedy":
            return greedy_select(model, s).selection
        if method == "sdr+rand":
            return select_sdr(model, s, "general", decomp=decomp, **sdr)[0].selection
        if method == "sdr-no-rand":
            result, _ = select_sdr(
                model, s, "general", randomize=False, decomp=decomp, **sdr
            )
            return result.selection
        if method == "sdr-box":
            return select_sdr(model, s, "box", decomp=decomp, **sdr)[0].selection
        if method == "sdr-weak+rand":
            return select_sdr(model, s, "weak", **sdr)[0].selection
        if method == "bilinear":
            problem = build_trace_max(model, s)
            return bilinear_solve(problem, starts=solver.restarts, seed=seed).selection
        if method == "exhaustive":
            return exhaustive_search(model, s).best_w
        if method == "random-baseline":
            return random_subset(model.m, s, np.random.default_rng(seed))
        if method == "all-on":
            return SelectionVector.ones(model.m)
        raise ValueError(f"unknown method '{method}'")

    def evaluate(
        self,
        method: str,
        model: MeasurementModel,
        s: int,
        seeds: np.random.SeedSequence,
        decomp=None,
    ) -> Dict[str, Any]:
        method_seed, mse_seed = seeds.spawn(2)
        seed = int(method_seed.generate_state(1)[0])
        selection, wall_time = self.timed(self.select, method, model, s, seed, decomp)
        mse = empirical_mse(
            model, selection, self.config.trials, np.random.default_rng(mse_seed)
        )
        return {
            "method": method,
            "s": s,
            "objective": objective_trace_inverse(fisher_truncated(model, selection)),
            "empirical_mse": mse,
            "wall_time": wall_time,
        }

    def to_df(self, if_empty: str = "warn") -> pd.DataFrame:
        rows = []
        for s in self.budgets:
            for method in self.config.methods:
                seeds = np.random.SeedSequence([self.config.seed, s])
                rows.append(self.evaluate(method, self.model, s, seeds, self.decomp))
            self.logger.info(f"Budget s={s} done.")
        return self._frame(rows, SELECTION_COLUMNS, if_empty)


class CorrelationStudy(SelectionStudy):
    """Objective and empirical MSE versus the correlation parameter ρ.

    Sensor positions and H are fixed; only R changes with ρ. The all-on reference
    is reported once per ρ with s = m.

    Args:
        config (ExperimentConfig): A `correlation` experiment.
        rhos (List[float], optional): Subset of `config.model.rhos` to run.
            Defaults to all of them.
    """

    def __init__(
        self,
        *args,
        config: ExperimentConfig = None,
        rhos: Optional[List[float]] = None,
        **kwargs,
    ):
        super().__init__(*args, config=config, **kwargs)
        self.rhos = rhos if rhos is not None else self.config.model.rhos
        self._geometry = None

    @property
    def geometry(self) -> SensorGeometry:
        if self._geometry is None:
            _ = self.model
        return self._geometry

    @property
    def model(self) -> MeasurementModel:
        if self._model is None:
            settings = self.config.model
            self._model, self._geometry = exponential_instance(
                settings.m,
                settings.n,
                settings.rhos[0],
                self.point_rng(),
                region=settings.region,
                lattice=settings.lattice,
                noise_var=settings.noise_var,
                prior_mean=settings.prior_mean,
                prior_var=settings.prior_var,
            )
        return self._model

    def model_at(self, rho: float) -> MeasurementModel:
        geometry = SensorGeometry(
            self.geometry.positions, self.geometry.noise_var, corr_param=rho
        )
        return self.model.with_noise_cov(exp_covariance(geometry))

    def to_df(self, if_empty: str = "warn") -> pd.DataFrame:
        rows = []
        for rho in self.rhos:
            index = self.config.model.rhos.index(rho)
            model = self.model_at(rho)
            decomp = decompose_covariance(model.noise_cov)
            for method in self.config.methods:
                budgets = [model.m] if method == "all-on" else self.budgets
                for s in budgets:
                    seeds = np.random.SeedSequence([self.config.seed, index, s])
                    row = self.evaluate(method, model, s, seeds, decomp)
                    rows.append({"rho": rho, **row})
            self.logger.info(f"Correlation parameter rho={rho} done.")
        return self._frame(rows, CORRELATION_COLUMNS, if_empty)
