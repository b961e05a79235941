import pandas as pd

from corrsel.task_utils import concat_frames


def test_concat_frames():
    first = pd.DataFrame({"method": ["greedy"], "s": [2]})
    second = pd.DataFrame({"method": ["random"], "s": [3]})
    df = concat_frames.run([first, pd.DataFrame(), second])
    assert df["method"].tolist() == ["greedy", "random"]
    assert df.index.tolist() == [0, 1]


def test_concat_frames_by_key():
    frames = [
        {"mse": pd.DataFrame({"step": [1]}), "snapshots": pd.DataFrame()},
        {"mse": pd.DataFrame({"step": [2]}), "snapshots": pd.DataFrame()},
    ]
    assert concat_frames.run(frames, key="mse")["step"].tolist() == [1, 2]
    assert concat_frames.run(frames, key="snapshots").empty


def test_concat_frames_nothing():
    assert concat_frames.run([]).empty
