import pandas as pd
import pytest

from corrsel.config import ExperimentConfig
from corrsel.sources import AcceptanceSuite
from corrsel.sources.verification import CHECK_COLUMNS, report

CONFIG = {
    "kind": "verify",
    "seed": 0,
    "verify": {
        "formula_instances": 20,
        "update_events": 20,
        "sandwich_instances": 2,
        "weak_instances": 3,
        "boolean_vectors": 12,
    },
    "solver": {"samples": 20, "restarts": 3},
}


@pytest.fixture(scope="session")
def suite():
    yield AcceptanceSuite(config=ExperimentConfig(**CONFIG), checks=[1, 2, 3, 5, 6, 10])


def test_checks_default_to_all():
    assert AcceptanceSuite(config=ExperimentConfig(kind="verify")).checks == list(
        range(1, 11)
    )
    config = ExperimentConfig(kind="verify", verify={"checks": [2, 4]})
    assert AcceptanceSuite(config=config).checks == [2, 4]


@pytest.mark.parametrize("check", [1, 2, 3, 5, 6, 10])
def test_check_passes(suite, check):
    outcome = suite.run_check(check)
    assert outcome.check == check
    assert outcome.passed, outcome


def test_sandwich_family_is_cached(suite):
    family = suite.sandwich_family()
    assert suite.sandwich_family() is family
    assert len(family) == 2
    for row in family:
        assert row["relaxation"] <= row["optimum"] + 1e-5
        assert row["optimum"] <= row["rounded"] + 1e-9
        assert row["optimum"] <= row["greedy"] + 1e-9


def test_to_df(suite):
    df = AcceptanceSuite(config=suite.config, checks=[1, 10]).to_df()
    assert df.columns.tolist() == CHECK_COLUMNS
    assert df["check"].tolist() == [1, 10]
    assert df["name"].tolist() == ["formula_equivalence", "truncation_order"]


def test_report():
    config = ExperimentConfig(kind="verify", seed=9)
    df = pd.DataFrame(
        [
            {"check": 1, "name": "formula_equivalence", "passed": True, "measured": 1e-12, "tolerance": 1e-8},
            {"check": 10, "name": "truncation_order", "passed": False, "measured": 1e-4, "tolerance": 1e-3},
        ],
        columns=CHECK_COLUMNS,
    )
    document = report(df, config)
    assert document["schema_version"] == 1
    assert document["seed"] == 9
    assert document["config"]["kind"] == "verify"
    assert [c["check"] for c in document["checks"]] == [1, 10]
    assert document["passed"] is False
    assert report(df.iloc[:1], config)["passed"] is True
    assert report(df.iloc[:0], config)["passed"] is False


@pytest.fixture(scope="module")
def default_suite():
    return AcceptanceSuite(config=ExperimentConfig(kind="verify"))


def test_near_optimality_on_the_default_family(default_suite):
    outcome = default_suite.run_check(4)
    assert outcome.passed, outcome
    assert outcome.measured <= 0.01

    family = default_suite.sandwich_family()
    assert len(family) == 50
    for row in family:
        assert max(row["greedy"], row["rounded"]) <= row["mean_random"]
        assert row["best_random"] <= row["mean_random"]
    # a single lucky draw can still beat greedy
    assert any(row["best_random"] < row["greedy"] for row in family)


@pytest.mark.parametrize("check", [7, 9])
def test_trend_check_passes(default_suite, check):
    outcome = default_suite.run_check(check)
    assert outcome.passed, outcome


def test_tracking_trend_is_measured():
    config = ExperimentConfig(
        kind="verify",
        tracking={"m": 8, "steps": 6, "snapshot_steps": [1]},
        budgets={"tau": 2},
        verify={"tracking_trials": 2},
    )
    outcome = AcceptanceSuite(config=config).run_check(8)
    assert outcome.name == "tracking_trend"
    assert outcome.measured > 0
    assert outcome.tolerance == 1.0
    assert outcome.passed == (outcome.measured < 1.0)
