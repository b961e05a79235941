import json

import numpy as np
import pytest

from corrsel.config import TrackingSettings
from corrsel.model import MeasurementModel, exponential_instance
from corrsel.schedule import DynamicalSystem
from corrsel.tracksim import TrackingScenario


@pytest.fixture(scope="session")
def toy_model():
    """Σ = I, H = I, R = I with two sensors."""
    return MeasurementModel(
        prior_mean=np.zeros(2),
        prior_cov=np.eye(2),
        obs_matrix=np.eye(2),
        noise_cov=np.eye(2),
    )


@pytest.fixture(scope="session")
def small_model():
    model, _ = exponential_instance(5, 2, 0.1, np.random.default_rng(1))
    return model


@pytest.fixture(scope="session")
def medium_model():
    model, _ = exponential_instance(10, 2, 0.1, np.random.default_rng(10))
    return model


@pytest.fixture(scope="session")
def linear_system():
    rng = np.random.default_rng(7)
    m, n = 5, 2
    model, _ = exponential_instance(m, n, 0.1, rng)
    return DynamicalSystem(
        transition=np.array([[1.0, 0.1], [0.0, 1.0]]),
        process_cov=0.01 * np.eye(n),
        noise_cov=model.noise_cov,
        initial_mean=np.zeros(n),
        initial_cov=np.eye(n),
        obs_matrix=model.obs_matrix,
    )


@pytest.fixture(scope="session")
def static_system():
    """F = I, Q = 0, P̂₀ = I, H = I and R = I with two sensors."""
    return DynamicalSystem(
        transition=np.eye(2),
        process_cov=np.zeros((2, 2)),
        noise_cov=np.eye(2),
        initial_mean=np.zeros(2),
        initial_cov=np.eye(2),
        obs_matrix=np.eye(2),
    )


@pytest.fixture(scope="session")
def tracking_scenario():
    """A small version of the tracking testbed: 8 sensors, 12 steps, τ = 3."""
    settings = TrackingSettings(m=8, steps=12)
    return TrackingScenario.from_settings(settings, 3, np.random.default_rng(3))


@pytest.fixture
def config_file(tmp_path):
    def write(document: dict, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)

    return write
