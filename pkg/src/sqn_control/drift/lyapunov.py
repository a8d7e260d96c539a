"""
Quadratic Lyapunov function and one-step drifts.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from sqn_control.env.state import NetworkState


def lyapunov(state: NetworkState | np.ndarray) -> float:
    """Phi(q) = 1/2 * sum of squared backlogs."""
    q = state if isinstance(state, np.ndarray) else state.q
    q = np.asarray(q, dtype=np.int64)
    return 0.5 * float((q * q).sum())


def drifts(phis: np.ndarray) -> np.ndarray:
    """delta_t = Phi(s_{t+1}) - Phi(s_t) from a length T + 1 series."""
    return np.diff(np.asarray(phis, dtype=np.float64))
