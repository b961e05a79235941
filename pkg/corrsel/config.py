from __future__ import annotations

import json
from math import comb
from os.path import expanduser, join
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, root_validator, validator

USER_HOME = expanduser("~")

SCHEMA_VERSION = 1
DEFAULT_SDP_BACKEND = "CLARABEL"
EXHAUSTIVE_GUARD = 10**7


class Config(dict):
    @classmethod
    def from_json(cls, path: str, key: Optional[str] = None) -> Config:
        with open(path) as f:
            config = json.load(f)
            if key:
                config = config[key]
            return cls(**config)


try:
    local_config = Config.from_json(join(USER_HOME, ".config", "corrsel.json"))
except FileNotFoundError:
    local_config = Config()


ExperimentKind = Literal[
    "select", "select-weak", "correlation", "schedule", "track", "verify"
]

METHODS: Dict[str, List[str]] = {
    "select": [
        "greedy",
        "sdr+rand",
        "sdr-no-rand",
        "sdr-box",
        "exhaustive",
        "random-baseline",
    ],
    "select-weak": [
        "greedy",
        "sdr+rand",
        "sdr-weak+rand",
        "bilinear",
        "exhaustive",
        "random-baseline",
    ],
    "correlation": ["sdr+rand", "sdr-weak+rand", "greedy", "all-on"],
    "schedule": ["greedy", "random", "all-on", "exhaustive"],
    "track": ["greedy", "random", "all-on"],
    "verify": [],
}

DEFAULT_METHODS: Dict[str, List[str]] = {
    "select": ["greedy", "sdr+rand", "sdr-no-rand", "random-baseline"],
    "select-weak": ["sdr-weak+rand", "bilinear", "sdr+rand", "greedy"],
    "correlation": ["sdr+rand", "sdr-weak+rand", "all-on"],
    "schedule": ["greedy", "random"],
    "track": ["greedy", "random"],
    "verify": [],
}


def sdp_backend(requested: Optional[str] = None) -> str:
    """Resolve the conic backend: explicit request, then `~/.config/corrsel.json`, then the default."""
    if requested:
        return requested
    return local_config.get("SDP", {}).get("backend", DEFAULT_SDP_BACKEND)


class Settings(BaseModel):
    class Config:
        extra = "forbid"


class ModelSettings(Settings):
    m: int = Field(20, ge=1)
    n: int = Field(2, ge=1)
    region: float = Field(50.0, gt=0)
    lattice: bool = False
    rho: Optional[float] = Field(None, gt=0)
    rhos: List[float] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]
    noise_var: float = Field(1.0, gt=0)
    prior_mean: Optional[List[float]] = None
    prior_var: float = Field(1.0, gt=0)

    @validator("rhos", each_item=True)
    def rho_positive(cls, value):
        if value <= 0:
            raise ValueError("correlation parameters must be positive")
        return value

    @root_validator(skip_on_failure=True)
    def prior_mean_length(cls, values):
        prior_mean = values.get("prior_mean")
        if prior_mean is None:
            values["prior_mean"] = [10.0] * values["n"]
        elif len(prior_mean) != values["n"]:
            raise ValueError(
                f"prior_mean has {len(prior_mean)} entries, expected n={values['n']}"
            )
        return values


class SolverSettings(Settings):
    backend: Optional[str] = None
    tol: float = Field(1e-6, gt=0)
    samples: int = Field(100, ge=1)
    restarts: int = Field(10, ge=1)


class BudgetSettings(Settings):
    s: Optional[List[int]] = None
    s_i: List[int] = [1, 2, 3]
    tau: int = Field(6, ge=1)

    @validator("s", "s_i", each_item=True)
    def non_negative(cls, value):
        if value < 0:
            raise ValueError("budgets must be non-negative")
        return value


class TrackingSettings(Settings):
    m: int = Field(30, ge=1)
    steps: int = Field(30, ge=1)
    interval: float = Field(1.0, gt=0)
    q: float = Field(0.01, ge=0)
    power: float = Field(1e4, gt=0)
    rho: float = Field(0.035, gt=0)
    noise_var: float = Field(1.0, gt=0)
    region: float = Field(50.0, gt=0)
    initial_mean: List[float] = [1.0, 1.0, 0.5, 0.5]
    initial_cov_diag: List[float] = [1.0, 1.0, 0.1, 0.1]
    snapshot_steps: List[int] = [10, 24]

    @validator("initial_mean", "initial_cov_diag")
    def four_entries(cls, value):
        if len(value) != 4:
            raise ValueError("the tracking state has 4 components")
        return value

    @validator("initial_cov_diag", each_item=True)
    def positive_variance(cls, value):
        if value <= 0:
            raise ValueError("initial variances must be positive")
        return value


class VerifySettings(Settings):
    checks: Optional[List[int]] = None
    formula_instances: int = Field(200, ge=1)
    update_events: int = Field(100, ge=1)
    sandwich_instances: int = Field(50, ge=1)
    weak_instances: int = Field(20, ge=1)
    boolean_vectors: int = Field(100, ge=1)
    schedule_instances: int = Field(30, ge=1)
    tracking_trials: int = Field(100, ge=1)
    correlation_trials: int = Field(1000, ge=1)

    @validator("checks", each_item=True)
    def known_check(cls, value):
        if not 1 <= value <= 10:
            raise ValueError("acceptance checks are numbered 1 to 10")
        return value


class OutputSettings(Settings):
    path: Optional[str] = None
    record_wall_time: bool = True


class ExperimentConfig(Settings):
    """A validated experiment description, loaded from a single JSON document.

    Every nested section rejects unknown keys. `budgets.s` defaults to the
    sweep 2..m and `methods` to the kind's default method list.
    """

    kind: ExperimentKind = "select"
    model: ModelSettings = ModelSettings()
    solver: SolverSettings = SolverSettings()
    budgets: BudgetSettings = BudgetSettings()
    tracking: TrackingSettings = TrackingSettings()
    verify: VerifySettings = VerifySettings()
    output: OutputSettings = OutputSettings()
    methods: Optional[List[str]] = None
    trials: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)

    @root_validator(skip_on_failure=True)
    def resolve(cls, values):
        kind = values["kind"]
        model = values["model"]
        budgets = values["budgets"]

        methods = values.get("methods")
        if methods is None:
            methods = list(DEFAULT_METHODS[kind])
        unknown = sorted(set(methods) - set(METHODS[kind]))
        if unknown:
            raise ValueError(f"unknown methods for '{kind}': {unknown}")
        values["methods"] = methods
        if model.rho is None:
            model.rho = 0.5 if kind == "select-weak" else 0.1

        if kind in ("select", "select-weak"):
            if budgets.s is None:
                budgets.s = list(range(min(2, model.m), model.m + 1))
            too_large = [s for s in budgets.s if s > model.m]
            if too_large:
                raise ValueError(f"budgets {too_large} exceed m={model.m}")
            if "exhaustive" in methods and budgets.s:
                count = sum(comb(model.m, k) for k in range(max(budgets.s) + 1))
                if count > EXHAUSTIVE_GUARD:
                    raise ValueError(
                        f"exhaustive search over {count} subsets exceeds the guard of {EXHAUSTIVE_GUARD}"
                    )
        elif kind == "correlation":
            if budgets.s is None:
                budgets.s = [7, 13]
            too_large = [s for s in budgets.s if s > model.m]
            if too_large:
                raise ValueError(f"budgets {too_large} exceed m={model.m}")

        if kind == "schedule" and "exhaustive" in methods:
            slots = budgets.tau * values["tracking"].m
            if slots > 20:
                raise ValueError(
                    f"exhaustive scheduling over {slots} slots exceeds the guard of 2^20"
                )
        return values

    @classmethod
    def from_file(cls, path: str, seed: Optional[int] = None) -> ExperimentConfig:
        config = Config.from_json(path)
        if seed is not None:
            config["seed"] = seed
        return cls.parse_obj(config)

    def header(self) -> str:
        """Compact JSON echo of the resolved configuration."""
        return json.dumps(json.loads(self.json()), sort_keys=True, separators=(",", ":"))
