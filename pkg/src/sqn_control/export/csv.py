"""
CSV export for sqn-control.

Writes per-seed metrics and episode logs, drift tables and run summaries.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from sqn_control.constants import EPISODE_COLUMNS, METRICS_COLUMNS, SUMMARY_COLUMNS
from sqn_control.metrics.series import moving_average_column, time_average

if TYPE_CHECKING:
    from sqn_control.drift.threshold import DriftTable


def metrics_path(output_dir: Path, algorithm: str, seed: int) -> Path:
    return output_dir / f"metrics_{algorithm}_seed{seed}.csv"


def episodes_path(output_dir: Path, algorithm: str, seed: int) -> Path:
    return output_dir / f"episodes_{algorithm}_seed{seed}.csv"


def drift_path(output_dir: Path, seed: int) -> Path:
    return output_dir / f"drift_seed{seed}.csv"


def metrics_frame(
    backlogs: np.ndarray,
    intervened: np.ndarray,
    episode: np.ndarray,
    int_rate: np.ndarray,
    eta_hat: np.ndarray,
    q_star: np.ndarray,
    window: int,
) -> pd.DataFrame:
    """
    Per-step metrics table.

    ``t`` is 1-based; ``time_avg`` at row t averages the first t backlogs and
    ``moving_avg`` is empty until a full window is available.
    """
    backlogs = np.asarray(backlogs, dtype=np.int64)
    return pd.DataFrame(
        {
            "t": np.arange(1, len(backlogs) + 1),
            "backlog": backlogs,
            "time_avg": time_average(backlogs),
            "moving_avg": moving_average_column(backlogs, window),
            "intervened": np.asarray(intervened, dtype=np.int64),
            "episode": np.asarray(episode, dtype=np.int64),
            "int_rate": int_rate,
            "eta_hat": eta_hat,
            "q_star": q_star,
        },
        columns=METRICS_COLUMNS,
    )


def _write_csv(output: Path, frame: pd.DataFrame, na_rep: str = "") -> int:
    """Write a frame to CSV without the index."""
    output.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output, index=False, na_rep=na_rep)
    return len(frame)


def write_metrics(output: Path, frame: pd.DataFrame) -> int:
    return _write_csv(output, frame[METRICS_COLUMNS])


def write_episodes(output: Path, records: list[dict[str, object]]) -> int:
    return _write_csv(output, pd.DataFrame(records, columns=EPISODE_COLUMNS))


def write_drift_table(output: Path, table: DriftTable) -> int:
    return _write_csv(output, table.to_frame())


def write_summary(output: Path, frame: pd.DataFrame) -> int:
    """Summary table; missing confidence intervals are written as ``n/a``."""
    return _write_csv(output, frame[SUMMARY_COLUMNS], na_rep="n/a")
