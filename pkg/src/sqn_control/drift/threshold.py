"""
Empirical drift tables and intervention-threshold estimation.

Drift samples delta_t = Phi(s_{t+1}) - Phi(s_t) from a run of the
stabilizing policy are bucketed by integer backlog. The threshold is the
backlog beyond which the estimated drift stays at or below ``omega``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
import pandas as pd

from sqn_control.constants import (
    DRIFT_COLUMNS,
    DRIFT_SMOOTHING_WINDOW,
    DRIFT_TRIM_FRACTION,
    FALLBACK_PERCENTILE,
    OMEGA,
    PILOT_MAX_EPISODES,
    PILOT_TOLERANCE,
    PILOT_WINDOW,
    THRESHOLD_RULE_MAX,
    THRESHOLD_RULE_MIN,
    THRESHOLD_RULES,
)

if TYPE_CHECKING:
    from sqn_control.env.network import QueueNetwork
    from sqn_control.policies.base import Policy
    from sqn_control.train.trajectory import Trajectory

logger = logging.getLogger(__name__)

NOT_STABILIZING = "π₀ not observed stabilizing"


@dataclass
class DriftTable:
    """
    Drift statistics per observed backlog value.

    Attributes:
        backlog: Distinct observed backlogs, ascending
        count: Samples per backlog
        raw: Mean drift per backlog
        smoothed: Counts-weighted moving average over kept buckets, NaN elsewhere
        kept: Buckets surviving the top-backlog trim
    """

    backlog: np.ndarray
    count: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray
    kept: np.ndarray

    def __len__(self) -> int:
        return len(self.backlog)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "backlog": self.backlog,
                "count": self.count,
                "raw_drift": self.raw,
                "smoothed_drift": self.smoothed,
                "kept": self.kept,
            },
            columns=DRIFT_COLUMNS,
        )


class ThresholdEstimate(NamedTuple):
    point: float
    weighted: float
    table: DriftTable


def weighted_moving_average(values: np.ndarray, weights: np.ndarray, window: int) -> np.ndarray:
    """
    Centered weighted moving average that shrinks at the boundaries.

    Entry i averages positions i - (window - 1) // 2 .. i + window // 2.
    """
    n = len(values)
    if n == 0:
        return np.zeros(0)
    weighted = np.concatenate([[0.0], np.cumsum(values * weights)])
    total = np.concatenate([[0.0], np.cumsum(weights)])
    idx = np.arange(n)
    lo = np.clip(idx - (window - 1) // 2, 0, n)
    hi = np.clip(idx + window // 2 + 1, 0, n)
    return (weighted[hi] - weighted[lo]) / (total[hi] - total[lo])


def build_drift_table(
    backlogs: np.ndarray,
    drift_samples: np.ndarray,
    trim: float = DRIFT_TRIM_FRACTION,
    window: int = DRIFT_SMOOTHING_WINDOW,
) -> DriftTable:
    """
    Bucket drift samples by backlog, drop the top ``trim`` share of distinct
    backlog values, and smooth the rest.

    Raises:
        ValueError: On empty or mismatched inputs.
    """
    backlogs = np.asarray(backlogs, dtype=np.int64)
    drift_samples = np.asarray(drift_samples, dtype=np.float64)
    if len(backlogs) == 0:
        raise ValueError("cannot estimate drift from an empty trajectory")
    if backlogs.shape != drift_samples.shape:
        raise ValueError(f"{len(backlogs)} backlogs but {len(drift_samples)} drift samples")

    values, inverse = np.unique(backlogs, return_inverse=True)
    counts = np.bincount(inverse)
    raw = np.bincount(inverse, weights=drift_samples) / counts

    n_keep = max(1, len(values) - int(np.ceil(trim * len(values))))
    kept = np.arange(len(values)) < n_keep
    smoothed = np.full(len(values), np.nan)
    smoothed[kept] = weighted_moving_average(raw[kept], counts[kept].astype(np.float64), window)
    return DriftTable(backlog=values, count=counts, raw=raw, smoothed=smoothed, kept=kept)


def threshold_from_series(
    backlog: np.ndarray,
    drift: np.ndarray,
    omega: float,
    rule: str = THRESHOLD_RULE_MAX,
) -> float | None:
    """
    Apply a threshold rule to a drift series over ascending backlogs.

    max rule: largest q with drift > omega at every smaller observed backlog.
    min rule: smallest q with drift < omega at every larger observed backlog.

    Returns:
        The threshold, or None if the series never reaches ``omega``.
    """
    if rule not in THRESHOLD_RULES:
        raise ValueError(f"Unknown threshold rule {rule!r}. Valid: {', '.join(sorted(THRESHOLD_RULES))}")
    if rule == THRESHOLD_RULE_MAX:
        crossing = np.flatnonzero(drift <= omega)
        return float(backlog[crossing[0]]) if len(crossing) else None

    above = np.flatnonzero(drift >= omega)
    if len(above) == 0:
        return float(backlog[0])
    last = above[-1]
    return float(backlog[last]) if last < len(backlog) - 1 else None


def estimate_threshold_from_samples(
    backlogs: np.ndarray,
    drift_samples: np.ndarray,
    omega: float = OMEGA,
    rule: str = THRESHOLD_RULE_MAX,
    trim: float = DRIFT_TRIM_FRACTION,
    window: int = DRIFT_SMOOTHING_WINDOW,
) -> ThresholdEstimate:
    """
    Point and smoothed threshold estimates from (backlog, drift) samples.

    When a series dips below zero but never reaches ``omega``, the threshold
    falls back to the 95th percentile of observed backlogs.

    Raises:
        ValueError: If omega is not negative, the data is empty, or the
            smoothed drift is positive at every kept backlog.
    """
    if not omega < 0:
        raise ValueError(f"omega must be negative, got {omega}")
    table = build_drift_table(backlogs, drift_samples, trim, window)
    fallback = float(np.percentile(np.asarray(backlogs), FALLBACK_PERCENTILE))

    kept_backlog = table.backlog[table.kept]
    kept_smoothed = table.smoothed[table.kept]
    if (kept_smoothed > 0).all():
        raise ValueError(NOT_STABILIZING)

    estimates = []
    for label, backlog, series in (
        ("point", table.backlog, table.raw),
        ("weighted", kept_backlog, kept_smoothed),
    ):
        value = threshold_from_series(backlog, series, omega, rule)
        if value is None:
            logger.warning(
                f"{label} drift never reaches omega={omega}; "
                f"using the {FALLBACK_PERCENTILE:g}th backlog percentile {fallback:g}"
            )
            value = fallback
        estimates.append(value)

    point, weighted = estimates
    logger.info(f"Threshold estimates ({rule} rule): point={point:g} weighted={weighted:g}")
    return ThresholdEstimate(point=point, weighted=weighted, table=table)


def estimate_threshold(
    trajectory: Trajectory,
    omega: float = OMEGA,
    rule: str = THRESHOLD_RULE_MAX,
    trim: float = DRIFT_TRIM_FRACTION,
    window: int = DRIFT_SMOOTHING_WINDOW,
) -> ThresholdEstimate:
    """Threshold estimates from a trajectory of the stabilizing policy."""
    if len(trajectory) == 0:
        raise ValueError("cannot estimate drift from an empty trajectory")
    return estimate_threshold_from_samples(
        trajectory.backlogs, trajectory.drifts, omega, rule, trim, window
    )


def mean_drift_beyond(trajectory: Trajectory, q_star: float) -> float:
    """Counts-weighted mean drift over steps whose backlog exceeds ``q_star``."""
    beyond = trajectory.backlogs > q_star
    if not beyond.any():
        return float("nan")
    return float(trajectory.drifts[beyond].mean())


# =============================================================================
# PILOT
# =============================================================================


def time_average_converged(backlogs: np.ndarray, window: int, tol: float) -> bool:
    """
    True once the running mean moved by at most ``tol`` (relative) over the last window.

    Needs at least two full windows of data.
    """
    t = len(backlogs)
    if t < 2 * window:
        return False
    total = int(backlogs.sum())
    earlier = int(backlogs[: t - window].sum())
    current = total / t
    previous = earlier / (t - window)
    if previous == 0:
        return current == 0
    return abs(current - previous) <= tol * previous


def run_pilot(
    env: QueueNetwork,
    policy: Policy,
    episode_length: int,
    max_steps: int | None = None,
    tol: float = PILOT_TOLERANCE,
    window: int = PILOT_WINDOW,
    episodes: int | None = None,
) -> tuple[list[Trajectory], int]:
    """
    Run the stabilizing policy alone until the time-averaged backlog settles.

    Episodes of ``episode_length`` slots are generated back to back. With
    ``episodes`` set, exactly that many are run. Otherwise convergence is
    checked after each episode and the pilot stops at ``max_steps``
    (default: the episode cap times the episode length) with a warning.

    Returns:
        (one trajectory per pilot episode, total pilot steps T0)
    """
    from sqn_control.drift.gate import InterventionGate
    from sqn_control.train.rollout import rollout

    gate = InterventionGate.always()
    if max_steps is None:
        max_steps = PILOT_MAX_EPISODES * episode_length
    limit = episodes if episodes is not None else max(1, max_steps // episode_length)

    parts: list[Trajectory] = []
    backlogs = np.zeros(0, dtype=np.int64)
    converged = False
    while len(parts) < limit:
        part = rollout(env, None, policy, gate, episode_length)
        parts.append(part)
        backlogs = np.concatenate([backlogs, part.backlogs])
        if episodes is None and time_average_converged(backlogs, window, tol):
            converged = True
            break

    t0 = len(backlogs)
    if episodes is None and not converged:
        logger.warning(f"Pilot time-average did not converge within {t0} steps; using the full pilot")
    else:
        logger.info(f"Pilot finished after {len(parts)} episodes ({t0} steps)")
    return parts, t0
