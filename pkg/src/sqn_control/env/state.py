"""
Queue state and per-step outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def shaped_cost(backlog: float) -> float:
    """Shaped per-step cost -1/(1 + backlog), bounded in [-1, 0)."""
    return -1.0 / (1.0 + backlog)


@dataclass
class NetworkState:
    """
    Queue backlogs and link capacities at the start of one time slot.

    Attributes:
        q: Backlog matrix. Shape (K, 1) for single-hop (one queue per user),
            (N, K) for multi-hop (node x class).
        y: Link capacities for this slot, length M.
        t: Slot counter, starting at 0.
    """

    q: np.ndarray
    y: np.ndarray
    t: int = 0

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.q.ndim != 2:
            raise ValueError(f"q must be a matrix, got shape {self.q.shape}")
        if self.y.ndim != 1:
            raise ValueError(f"y must be a vector, got shape {self.y.shape}")

    @property
    def backlog(self) -> int:
        """Total packets queued in the network."""
        return int(self.q.sum())

    def copy(self) -> NetworkState:
        return NetworkState(q=self.q.copy(), y=self.y.copy(), t=self.t)

    def to_dict(self) -> dict[str, object]:
        return {"q": self.q.tolist(), "y": self.y.tolist(), "t": self.t}

    @classmethod
    def from_dict(cls, data: dict[str, object]) -> NetworkState:
        return cls(q=np.asarray(data["q"]), y=np.asarray(data["y"]), t=int(data["t"]))  # type: ignore[call-overload]


@dataclass
class StepOutcome:
    """
    Result of executing one action for one slot.

    ``cost`` is the backlog of the state the action was taken in, not of
    ``next_state``.
    """

    next_state: NetworkState
    cost: int
    shaped_cost: float
    arrivals: np.ndarray
    delivered: np.ndarray
