import os

from corrsel.config import ExperimentConfig
from corrsel.flows import SelectionSweep
from corrsel.sources.base import read_csv


def test_selection_sweep(tmp_path):
    config = ExperimentConfig(
        seed=4,
        trials=50,
        model={"m": 5},
        budgets={"s": [2, 3]},
        methods=["greedy", "random-baseline"],
    )
    path = os.path.join(tmp_path, "select.csv")
    flow = SelectionSweep("selection sweep test", config=config, path=path)
    state = flow.run()
    assert state.is_successful()

    with open(path) as f:
        assert f.readline() == "# schema_version: 1\n"
        assert f.readline() == "# seed: 4\n"
    df = read_csv(path)
    assert df["s"].tolist() == [2, 2, 3, 3]
    assert df["method"].tolist() == ["greedy", "random-baseline"] * 2


def test_correlation_sweep(tmp_path):
    config = ExperimentConfig(
        kind="correlation",
        trials=50,
        model={"m": 5, "rhos": [0.1, 1.0]},
        budgets={"s": [2]},
        methods=["greedy", "all-on"],
    )
    path = os.path.join(tmp_path, "correlation.csv")
    state = SelectionSweep("correlation sweep test", config=config, path=path).run()
    assert state.is_successful()
    df = read_csv(path)
    assert df["rho"].tolist() == [0.1, 0.1, 1.0, 1.0]
    assert df["s"].tolist() == [2, 5, 2, 5]
