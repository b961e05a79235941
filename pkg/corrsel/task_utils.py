import json
import os
from typing import Any, Dict, List, Union

import pandas as pd
import prefect
from prefect import task

from .config import ExperimentConfig
from .sources.base import write_csv
from .sources.verification import report


@task(timeout=3600)
def concat_frames(
    frames: List[Union[pd.DataFrame, Dict[str, pd.DataFrame]]], key: str = None
) -> pd.DataFrame:
    """Join the tables of all sweep points, in sweep order.

    Args:
        frames (List): Tables, or dictionaries of tables when `key` is given.
        key (str, optional): The table to take from each dictionary. Defaults to None.
    """
    if key is not None:
        frames = [frame[key] for frame in frames]
    frames = [frame for frame in frames if frame is not None and not frame.empty]
    if not frames:
        return pd.DataFrame()
    return pd.concat(frames, ignore_index=True)


@task(timeout=3600)
def df_to_csv(df: pd.DataFrame, path: str, config: ExperimentConfig) -> str:
    """Write a result table with the schema, seed and config header."""
    logger = prefect.context.get("logger")
    write_csv(df, path, config)
    logger.info(f"Wrote {len(df)} rows to {path}.")
    return path


@task(timeout=3600)
def report_to_json(df: pd.DataFrame, path: str, config: ExperimentConfig) -> Dict[str, Any]:
    """Write the verify report and return it."""
    logger = prefect.context.get("logger")
    result = report(df, config)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(result, f, indent=2)
        f.write("\n")
    status = "passed" if result["passed"] else "failed"
    logger.info(f"Acceptance suite {status}; report written to {path}.")
    return result
