import json
import os

from corrsel.config import ExperimentConfig
from corrsel.flows import AcceptanceCheck


def test_acceptance_check(tmp_path):
    config = ExperimentConfig(
        kind="verify",
        seed=1,
        verify={"checks": [1, 10], "formula_instances": 5},
    )
    path = os.path.join(tmp_path, "verify.json")
    flow = AcceptanceCheck("acceptance check test", config=config, path=path)
    assert flow.checks == [1, 10]

    state = flow.run()
    assert state.is_successful()
    report = state.result[flow.report].result
    assert report["passed"] is True

    with open(path) as f:
        written = json.load(f)
    assert written == report
    assert [c["name"] for c in written["checks"]] == [
        "formula_equivalence",
        "truncation_order",
    ]
    assert written["seed"] == 1
