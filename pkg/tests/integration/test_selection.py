import numpy as np
import pytest

from corrsel.config import ExperimentConfig
from corrsel.sources import CorrelationStudy, SelectionStudy
from corrsel.sources.selection import (
    CORRELATION_COLUMNS,
    SELECTION_COLUMNS,
    random_subset,
)

SELECT_CONFIG = {
    "kind": "select",
    "seed": 2,
    "trials": 1000,
    "model": {"m": 6},
    "budgets": {"s": [2, 3]},
    "solver": {"samples": 20},
    "methods": ["greedy", "sdr+rand", "exhaustive", "random-baseline"],
}


@pytest.fixture(scope="session")
def selection():
    study = SelectionStudy(config=ExperimentConfig(**SELECT_CONFIG))
    yield study, study.to_df()


def test_to_df(selection):
    _, df = selection
    assert df.columns.tolist() == SELECTION_COLUMNS
    assert len(df) == 8
    assert df["method"].tolist()[:4] == SELECT_CONFIG["methods"]
    assert df["s"].tolist() == [2] * 4 + [3] * 4
    assert (df["wall_time"] >= 0).all()


def test_exhaustive_is_best(selection):
    _, df = selection
    for _, point in df.groupby("s"):
        best = point.loc[point["method"] == "exhaustive", "objective"].item()
        assert (point["objective"] >= best - 1e-10).all()


def test_empirical_mse_tracks_the_objective(selection):
    _, df = selection
    ratio = df["empirical_mse"] / df["objective"]
    assert ratio.between(0.7, 1.3).all()


def test_sweep_point_is_reproducible_alone(selection):
    study, df = selection
    alone = SelectionStudy(config=study.config, budgets=[3]).to_df()
    full = df[df["s"] == 3].reset_index(drop=True)
    assert np.allclose(alone["objective"], full["objective"])
    assert np.allclose(alone["empirical_mse"], full["empirical_mse"])


def test_unknown_method(selection):
    study, _ = selection
    with pytest.raises(ValueError):
        study.select("simulated-annealing", study.model, 2, 0)


def test_random_subset():
    subset = random_subset(10, 4, np.random.default_rng(0))
    assert subset.count == 4
    assert subset.budget == 4


def test_weak_methods():
    config = ExperimentConfig(
        kind="select-weak",
        trials=50,
        model={"m": 6},
        budgets={"s": [3]},
        solver={"samples": 10, "restarts": 3},
        methods=["sdr-weak+rand", "bilinear"],
    )
    df = SelectionStudy(config=config).to_df()
    assert df["method"].tolist() == ["sdr-weak+rand", "bilinear"]
    assert np.isfinite(df["objective"]).all()


def test_correlation_study():
    config = ExperimentConfig(
        kind="correlation",
        trials=50,
        model={"m": 6, "rhos": [0.05, 1.0]},
        budgets={"s": [2]},
        solver={"samples": 10},
        methods=["greedy", "all-on"],
    )
    study = CorrelationStudy(config=config)
    df = study.to_df()
    assert df.columns.tolist() == CORRELATION_COLUMNS
    assert df["rho"].tolist() == [0.05, 0.05, 1.0, 1.0]
    assert df.loc[df["method"] == "all-on", "s"].tolist() == [6, 6]

    strong, weak = study.model_at(0.05), study.model_at(1.0)
    assert np.array_equal(strong.obs_matrix, weak.obs_matrix)
    assert not np.allclose(strong.noise_cov, weak.noise_cov)

    alone = CorrelationStudy(config=config, rhos=[1.0]).to_df()
    assert np.allclose(
        alone["objective"], df[df["rho"] == 1.0]["objective"].reset_index(drop=True)
    )


def test_relaxation_variants():
    config = ExperimentConfig(
        trials=50,
        model={"m": 6},
        budgets={"s": [2]},
        methods=["sdr-no-rand", "sdr-box", "all-on"],
    )
    df = SelectionStudy(config=config).to_df()
    assert df["method"].tolist() == ["sdr-no-rand", "sdr-box", "all-on"]
    all_on = df.loc[df["method"] == "all-on", "objective"].item()
    assert (df["objective"] >= all_on - 1e-10).all()
