"""
Cross-seed summaries of a run directory.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from sqn_control.constants import BACKPRESSURE, MAXWEIGHT, NEVER, SUMMARY_COLUMNS

logger = logging.getLogger(__name__)

METRICS_PATTERN = re.compile(r"^metrics_(?P<algo>[a-z0-9-]+)_seed(?P<seed>\d+)\.csv$")
BASELINE_NAMES = (MAXWEIGHT, BACKPRESSURE)


def confidence_interval(values: np.ndarray, level: float = 0.95) -> float:
    """
    Half-width of the t-distribution confidence interval of the mean.

    NaN for fewer than two values.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 2:
        return float("nan")
    sem = float(values.std(ddof=1)) / np.sqrt(n)
    return float(stats.t.ppf(0.5 + level / 2, n - 1) * sem)


def crossing_time(moving_avg: pd.Series, t: pd.Series, level: float) -> float:
    """First t at which the moving average drops below ``level``; inf if never."""
    below = (moving_avg < level).to_numpy()
    if not below.any():
        return NEVER
    return float(t.to_numpy()[np.argmax(below)])


def load_metrics(run_dir: Path) -> dict[str, dict[int, pd.DataFrame]]:
    """Metrics tables keyed by algorithm and seed."""
    found: dict[str, dict[int, pd.DataFrame]] = {}
    for path in sorted(run_dir.glob("metrics_*.csv")):
        match = METRICS_PATTERN.match(path.name)
        if match is None:
            logger.debug(f"Skipping {path.name}")
            continue
        frame = pd.read_csv(path)
        if frame.empty:
            logger.warning(f"{path.name} has no rows, skipping")
            continue
        found.setdefault(match["algo"], {})[int(match["seed"])] = frame
    return found


def summarize(run_dir: str | Path) -> pd.DataFrame:
    """
    Summarize every (algorithm, seed) metrics file in a run directory.

    Per algorithm: mean and 95% confidence half-width of the final
    time-averaged and moving-average backlog across seeds, and the mean
    time at which the moving average first drops below the baseline's
    final time average (same seed when available).

    Raises:
        FileNotFoundError: If the directory or its metrics files are missing.
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"Run directory not found: {run_dir}")
    metrics = load_metrics(run_dir)
    if not metrics:
        raise FileNotFoundError(f"No metrics files in {run_dir}")

    baseline_name = next((name for name in BASELINE_NAMES if name in metrics), None)
    baseline_final: dict[int, float] = {}
    if baseline_name is not None:
        baseline_final = {
            seed: float(frame["time_avg"].iloc[-1]) for seed, frame in metrics[baseline_name].items()
        }
    baseline_mean = float(np.mean(list(baseline_final.values()))) if baseline_final else None

    rows = []
    for algo, seeds in sorted(metrics.items()):
        final_time = np.array([frame["time_avg"].iloc[-1] for frame in seeds.values()], dtype=float)
        final_moving = np.array([frame["moving_avg"].iloc[-1] for frame in seeds.values()], dtype=float)

        crossing = float("nan")
        if baseline_mean is not None:
            times = [
                crossing_time(frame["moving_avg"], frame["t"], baseline_final.get(seed, baseline_mean))
                for seed, frame in seeds.items()
            ]
            crossing = float(np.mean(times))

        rows.append({
            "algorithm": algo,
            "seeds": len(seeds),
            "final_time_avg": float(final_time.mean()),
            "final_time_avg_ci": confidence_interval(final_time),
            "final_moving_avg": float(np.nanmean(final_moving)) if np.isfinite(final_moving).any() else float("nan"),
            "final_moving_avg_ci": confidence_interval(final_moving[np.isfinite(final_moving)]),
            "crossing_t": crossing,
        })

    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
