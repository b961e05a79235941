import pytest

from corrsel.config import ExperimentConfig
from corrsel.sources import ScheduleStudy
from corrsel.sources.schedule import SCHEDULE_COLUMNS

CONFIG = {
    "kind": "schedule",
    "seed": 1,
    "tracking": {"m": 4},
    "budgets": {"tau": 3, "s_i": [1, 2]},
    "methods": ["greedy", "exhaustive", "random", "all-on"],
}


@pytest.fixture(scope="session")
def schedule_df():
    yield ScheduleStudy(config=ExperimentConfig(**CONFIG)).to_df()


def test_to_df(schedule_df):
    assert schedule_df.columns.tolist() == SCHEDULE_COLUMNS
    assert schedule_df["s_i"].tolist() == [1] * 4 + [2] * 4
    assert schedule_df["method"].tolist() == CONFIG["methods"] * 2


def test_methods_are_ordered(schedule_df):
    for _, point in schedule_df.groupby("s_i"):
        value = dict(zip(point["method"], point["objective"]))
        assert value["exhaustive"] <= value["greedy"] + 1e-10
        assert value["exhaustive"] <= value["random"] + 1e-10
        assert value["all-on"] <= value["exhaustive"] + 1e-10


def test_single_budget_matches_the_sweep(schedule_df):
    config = ExperimentConfig(**CONFIG)
    alone = ScheduleStudy(config=config, individual=[2]).to_df()
    expected = schedule_df[schedule_df["s_i"] == 2]["objective"].tolist()
    assert alone["objective"].tolist() == pytest.approx(expected)


def test_unknown_method():
    study = ScheduleStudy(config=ExperimentConfig(**CONFIG))
    with pytest.raises(ValueError):
        study.objective("round-robin", 1)
