"""
Running averages of backlog series.

Sums are accumulated in integer arithmetic, so every entry is the exact
ratio of an integer sum and its length.
"""

from __future__ import annotations

import numpy as np


def time_average(series: np.ndarray) -> np.ndarray:
    """Prefix means: entry t-1 is (1/t) * sum of the first t values."""
    values = np.asarray(series, dtype=np.int64)
    return np.cumsum(values) / np.arange(1, len(values) + 1)


def moving_average(series: np.ndarray, window: int) -> np.ndarray:
    """
    Trailing means over exactly ``window`` entries.

    The output starts at the first full window, so it has
    ``len(series) - window + 1`` entries (empty when the window is longer).
    """
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    values = np.asarray(series, dtype=np.int64)
    if window > len(values):
        return np.zeros(0)
    sums = np.cumsum(np.concatenate([[0], values]))
    return (sums[window:] - sums[:-window]) / window


def moving_average_column(series: np.ndarray, window: int) -> np.ndarray:
    """``moving_average`` aligned to the input, NaN before the first full window."""
    out = np.full(len(series), np.nan)
    averages = moving_average(series, window)
    if len(averages):
        out[window - 1 :] = averages
    return out
