from corrsel.config import ExperimentConfig
from corrsel.sources.selection import CORRELATION_COLUMNS, SELECTION_COLUMNS
from corrsel.tasks import CorrelationToDF, SelectionToDF

SELECT_CONFIG = ExperimentConfig(
    trials=50, model={"m": 5}, budgets={"s": [2, 3]}, methods=["greedy", "exhaustive"]
)


def test_selection_to_df_one_budget():
    task = SelectionToDF(config=SELECT_CONFIG)
    df = task.run(s=3)
    assert df.columns.tolist() == SELECTION_COLUMNS
    assert df["s"].tolist() == [3, 3]


def test_selection_to_df_whole_sweep():
    df = SelectionToDF().run(config=SELECT_CONFIG)
    assert df["s"].tolist() == [2, 2, 3, 3]


def test_correlation_to_df():
    config = ExperimentConfig(
        kind="correlation",
        trials=50,
        model={"m": 5, "rhos": [0.1, 0.5]},
        budgets={"s": [2]},
        methods=["greedy"],
    )
    df = CorrelationToDF(config=config, rho=0.5).run()
    assert df.columns.tolist() == CORRELATION_COLUMNS
    assert df["rho"].tolist() == [0.5]
