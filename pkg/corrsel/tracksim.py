"""Target tracking testbed: white-noise-acceleration motion, power-attenuation sensors,
an extended Kalman filter over correlated measurement noise and Monte Carlo MSE.

The target state is (x₁, x₂, ẋ₁, ẋ₂).
"""
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from prefect.utilities import logging

from .config import TrackingSettings
from .exceptions import ValidationError
from .model import SensorGeometry, deploy_sensors, exp_covariance
from .schedule import (
    Budgets,
    DynamicalSystem,
    Schedule,
    greedy_schedule,
    individual_budgets,
    random_schedule,
)
from .utils import make_rng, min_eigenvalue, solve_spd, spawn_seeds, symmetrize

logger = logging.get_logger(__name__)

Scheduler = Literal["greedy", "random", "all-on"]

PSD_TOL = 1e-9


@dataclass(frozen=True)
class WhiteNoiseAcceleration:
    interval: float = 1.0
    q: float = 0.01

    @property
    def transition(self) -> np.ndarray:
        d = self.interval
        return np.array(
            [
                [1.0, 0.0, d, 0.0],
                [0.0, 1.0, 0.0, d],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )

    @property
    def process_cov(self) -> np.ndarray:
        d = self.interval
        a, b = d**3 / 3, d**2 / 2
        return self.q * np.array(
            [
                [a, 0.0, b, 0.0],
                [0.0, a, 0.0, b],
                [b, 0.0, d, 0.0],
                [0.0, b, 0.0, d],
            ]
        )


@dataclass(frozen=True)
class PowerSensor:
    position: Tuple[float, float]
    power: float = 1e4


@dataclass(frozen=True, eq=False)
class PowerAttenuationField:
    """h_i(x) = sqrt(P₀ / (1 + (x₁ − β_{i,1})² + (x₂ − β_{i,2})²)) for every sensor."""

    positions: np.ndarray
    power: float = 1e4

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ValidationError(f"positions must be m x 2, got {positions.shape}")
        object.__setattr__(self, "positions", positions)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    def _offsets(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=float)[:2] - self.positions

    def measure(self, state: np.ndarray) -> np.ndarray:
        offsets = self._offsets(state)
        return np.sqrt(self.power / (1.0 + np.sum(offsets**2, axis=1)))

    def jacobian(self, state: np.ndarray) -> np.ndarray:
        offsets = self._offsets(state)
        scale = -np.sqrt(self.power) * (1.0 + np.sum(offsets**2, axis=1)) ** -1.5
        rows = np.zeros((self.m, 4))
        rows[:, :2] = scale[:, None] * offsets
        return rows


def measure(sensor: PowerSensor, state: np.ndarray) -> float:
    return float(PowerAttenuationField([sensor.position], sensor.power).measure(state)[0])


def jacobian(sensor: PowerSensor, state: np.ndarray) -> np.ndarray:
    """1×4 row; the velocity entries are always zero."""
    return PowerAttenuationField([sensor.position], sensor.power).jacobian(state)


def ekf_step(
    sys: DynamicalSystem,
    estimate: np.ndarray,
    cov: np.ndarray,
    active: Sequence[int],
    measurements: Sequence[float],
    t: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """One extended Kalman filter cycle.

    Predicts with F and Q, then updates with the active sensors only. Their noise
    covariance is the block of R on the active sensors, and the Jacobian is taken
    at the predicted state. The covariance update uses the Joseph form.

    Args:
        sys (DynamicalSystem): Motion and measurement model.
        estimate (np.ndarray): Posterior mean at the previous step.
        cov (np.ndarray): Posterior covariance at the previous step.
        active (Sequence[int]): Sensors reporting at this step.
        measurements (Sequence[float]): Their readings, in the same order.
        t (int, optional): Step index within the system's horizon. Defaults to 1.

    Raises:
        ValidationError: If the number of readings does not match `active`.
        IllConditionedError: If the innovation covariance is numerically singular.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Posterior mean and covariance.
    """
    F = sys.F(t - 1)
    predicted_mean = F @ np.asarray(estimate, dtype=float)
    predicted_cov = symmetrize(F @ cov @ F.T + sys.process_cov)

    active = np.asarray(active, dtype=int).reshape(-1)
    measurements = np.asarray(measurements, dtype=float).reshape(-1)
    if measurements.size != active.size:
        raise ValidationError(
            f"{measurements.size} readings for {active.size} active sensors"
        )
    if active.size == 0:
        return predicted_mean, predicted_cov

    H = sys.jacobian(t, predicted_mean)[active]
    expected = sys.measure(t, predicted_mean)[active]
    noise_block = sys.noise_cov[np.ix_(active, active)]
    innovation_cov = H @ predicted_cov @ H.T + noise_block
    gain = solve_spd(innovation_cov, H @ predicted_cov, "innovation covariance").T

    mean = predicted_mean + gain @ (measurements - expected)
    correction = np.eye(predicted_cov.shape[0]) - gain @ H
    posterior = correction @ predicted_cov @ correction.T + gain @ noise_block @ gain.T
    return mean, symmetrize(posterior)


@dataclass(frozen=True, eq=False)
class TrackingScenario:
    motion: WhiteNoiseAcceleration
    sensors: PowerAttenuationField
    noise_cov: np.ndarray
    initial_mean: np.ndarray
    initial_cov: np.ndarray
    steps: int = 30
    horizon: int = 6

    @property
    def m(self) -> int:
        return self.sensors.m

    def system(
        self, mean: Optional[np.ndarray] = None, cov: Optional[np.ndarray] = None
    ) -> DynamicalSystem:
        return DynamicalSystem(
            transition=self.motion.transition,
            process_cov=self.motion.process_cov,
            noise_cov=self.noise_cov,
            initial_mean=self.initial_mean if mean is None else mean,
            initial_cov=self.initial_cov if cov is None else cov,
            measurement_fn=self.sensors.measure,
            jacobian_fn=self.sensors.jacobian,
        )

    @classmethod
    def from_settings(
        cls, settings: TrackingSettings, horizon: int, rng: np.random.Generator
    ) -> "TrackingScenario":
        """Deploy `settings.m` sensors uniformly over the region and build the scenario."""
        positions = deploy_sensors(settings.m, settings.region, rng)
        geometry = SensorGeometry(
            positions, noise_var=settings.noise_var, corr_param=settings.rho
        )
        return cls(
            motion=WhiteNoiseAcceleration(settings.interval, settings.q),
            sensors=PowerAttenuationField(positions, settings.power),
            noise_cov=exp_covariance(geometry),
            initial_mean=np.array(settings.initial_mean, dtype=float),
            initial_cov=np.diag(settings.initial_cov_diag),
            steps=settings.steps,
            horizon=horizon,
        )


@dataclass(frozen=True, eq=False)
class TrackRun:
    states: np.ndarray
    estimates: np.ndarray
    covariances: np.ndarray
    schedules: List[Schedule]
    squared_errors: np.ndarray


def plan_window(
    sys: DynamicalSystem,
    horizon: int,
    scheduler: Scheduler,
    s_i: Budgets,
    rng: np.random.Generator,
) -> Schedule:
    """Schedule one window with the cumulative budget s = Σ s_i."""
    budgets = individual_budgets(s_i, sys.m)
    s = int(budgets.sum())
    if scheduler == "greedy":
        return greedy_schedule(sys, horizon, s, budgets).schedule
    if scheduler == "random":
        return random_schedule(horizon, sys.m, s, budgets, rng)
    if scheduler == "all-on":
        return Schedule(np.ones((horizon, sys.m), dtype=np.int8))
    raise ValueError(f"unknown scheduler '{scheduler}'")


def simulate_track(
    scenario: TrackingScenario,
    scheduler: Scheduler,
    s_i: Budgets,
    rng: np.random.Generator,
    plan_rng: Optional[np.random.Generator] = None,
) -> TrackRun:
    """Simulate one trajectory, rescheduling every `scenario.horizon` steps.

    The true initial state is drawn from N(x̂₀, P̂₀). Measurement noise is drawn for
    every sensor at every step, so runs with different schedulers and the same
    `rng` see the same noise.
    """
    plan_rng = plan_rng or rng
    motion = scenario.motion
    F, Q, R = motion.transition, motion.process_cov, scenario.noise_cov
    m = scenario.m

    state = rng.multivariate_normal(scenario.initial_mean, scenario.initial_cov)
    estimate = np.array(scenario.initial_mean, dtype=float)
    cov = np.array(scenario.initial_cov, dtype=float)

    states, estimates, covariances = [state], [estimate], [cov]
    schedules, errors = [], []
    sys = schedule = None
    for k in range(scenario.steps):
        offset = k % scenario.horizon
        if offset == 0:
            window = min(scenario.horizon, scenario.steps - k)
            sys = scenario.system(estimate, cov)
            schedule = plan_window(sys, window, scheduler, s_i, plan_rng)
            schedules.append(schedule)

        state = F @ state + rng.multivariate_normal(np.zeros(4), Q, method="eigh")
        readings = scenario.sensors.measure(state) + rng.multivariate_normal(np.zeros(m), R)
        active = schedule.selection(offset + 1).active
        estimate, cov = ekf_step(sys, estimate, cov, active, readings[active], t=offset + 1)
        if min_eigenvalue(cov) < -PSD_TOL:
            raise ValidationError(f"EKF covariance lost positive semidefiniteness at step {k + 1}")

        states.append(state)
        estimates.append(estimate)
        covariances.append(cov)
        errors.append(float(np.sum((estimate - state) ** 2)))

    return TrackRun(
        states=np.array(states),
        estimates=np.array(estimates),
        covariances=np.array(covariances),
        schedules=schedules,
        squared_errors=np.array(errors),
    )


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    per_step: np.ndarray
    mean: float
    example: TrackRun = field(repr=False)


def monte_carlo_mse(
    scenario: TrackingScenario,
    scheduler: Scheduler,
    trials: int,
    seed: int,
    s_i: Budgets = 2,
) -> MonteCarloResult:
    """Mean squared state-estimation error per step and over all steps.

    Trial k uses its own stream spawned from `seed`; its first child drives the
    trajectory and the noise, its second child the random scheduler. The first
    trial's run is kept as an example for schedule snapshots.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    totals = np.zeros(scenario.steps)
    example = None
    for trial_seed in spawn_seeds(seed, trials):
        noise_seed, plan_seed = trial_seed.spawn(2)
        run = simulate_track(
            scenario, scheduler, s_i, make_rng(noise_seed), make_rng(plan_seed)
        )
        totals += run.squared_errors
        if example is None:
            example = run
    per_step = totals / trials
    logger.info(f"{scheduler} scheduler: mean MSE {per_step.mean():.6g} over {trials} trials")
    return MonteCarloResult(per_step=per_step, mean=float(per_step.mean()), example=example)
