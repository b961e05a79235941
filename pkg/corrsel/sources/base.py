import json
import os
import time
from abc import abstractmethod
from typing import Any, Callable, Dict, List, Literal, NoReturn, Optional, Tuple

import numpy as np
import pandas as pd
from prefect.utilities import logging

from ..config import SCHEMA_VERSION, ExperimentConfig
from ..signals import SKIP
from ..utils import make_rng

logger = logging.get_logger(__name__)


def header_lines(config: ExperimentConfig) -> List[str]:
    return [
        f"# schema_version: {SCHEMA_VERSION}",
        f"# seed: {config.seed}",
        f"# config: {config.header()}",
    ]


def write_csv(df: pd.DataFrame, path: str, config: ExperimentConfig) -> None:
    """Write a result table under the schema, seed and config comment lines.

    The file is UTF-8 with LF newlines and `.` as decimal separator. Missing values
    (e.g. unrecorded wall times) are written as empty fields.
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in header_lines(config):
            f.write(line + "\n")
        df.to_csv(f, index=False, sep=",", decimal=".", lineterminator="\n")


def read_csv(path: str) -> pd.DataFrame:
    """Read a result table back, skipping the comment header."""
    return pd.read_csv(path, comment="#")


class Source:
    """Base class of every experiment study.

    A study turns a validated `ExperimentConfig` into a result table. Randomness of
    a sweep point comes from `SeedSequence([seed, *point])`, so a point gives the
    same rows whether it runs alone or inside the full sweep.
    """

    def __init__(self, *args, config: ExperimentConfig = None, **kwargs):
        self.config = config or ExperimentConfig()
        self.logger = logger

    @abstractmethod
    def to_df(self, if_empty: str = "warn") -> pd.DataFrame:
        pass

    def to_json(self, if_empty: str = "warn") -> Dict[str, Any]:
        """The result rows together with the schema, seed and resolved config."""
        try:
            df = self.to_df(if_empty=if_empty)
        except SKIP:
            df = pd.DataFrame()
        rows = json.loads(df.to_json(orient="records"))
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.config.seed,
            "config": json.loads(self.config.header()),
            "rows": rows,
        }

    def to_csv(self, path: str, if_empty: str = "warn", **kwargs) -> bool:
        """
        Run the study and write its table to a CSV file.

        Args:
            path (str): The destination path.
            if_empty (str, optional): What to do if the study produces no rows.
            Defaults to "warn".

        Returns:
            bool: Whether the file was written.
        """
        try:
            df = self.to_df(if_empty=if_empty, **kwargs)
        except SKIP:
            return False
        write_csv(df, path, self.config)
        return True

    def point_rng(self, *point: int) -> np.random.Generator:
        return make_rng(np.random.SeedSequence([self.config.seed, *point]))

    def timed(self, fn: Callable, *args, **kwargs) -> Tuple[Any, Optional[float]]:
        """Call `fn` and return its result with the elapsed seconds, or None when
        wall times are not recorded."""
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        elapsed = time.perf_counter() - start
        if not self.config.output.record_wall_time:
            elapsed = None
        return result, elapsed

    def _handle_if_empty(
        self, if_empty: Literal["warn", "fail", "skip"] = "warn"
    ) -> NoReturn:
        """
        What to do if a study produced no rows.

        Args:
            if_empty (Literal["warn", "fail", "skip"], optional): What to do if the study produces no rows. Defaults to "warn".

        Raises:
            ValueError: When the table is empty and if_empty is set to "fail".
            SKIP: When the table is empty and if_empty is set to "skip".
        """
        if if_empty == "warn":
            logger.warning("The study produced no data.")
        elif if_empty == "skip":
            raise SKIP("The study produced no data. Skipping...")
        elif if_empty == "fail":
            raise ValueError("The study produced no data.")

    def _frame(self, rows: List[Dict[str, Any]], columns: List[str], if_empty: str):
        df = pd.DataFrame(rows, columns=columns)
        if df.empty:
            self._handle_if_empty(if_empty)
        return df
