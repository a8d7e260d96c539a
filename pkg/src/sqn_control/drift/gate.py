"""
Intervention gate: decides whether the stabilizing policy takes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from sqn_control.constants import OMEGA, THRESHOLD_GAMMA, THRESHOLD_R_MIN

if TYPE_CHECKING:
    from sqn_control.env.state import NetworkState


@dataclass(frozen=True)
class InterventionGate:
    """
    Backlog threshold gate.

    The learned policy acts while the total backlog is at most ``q_star``;
    above it the intervention policy acts.

    Attributes:
        q_star: Backlog threshold. May be -inf (always intervene).
        omega: Target drift used when estimating the threshold (negative)
        gamma: Threshold step size after each episode
        r_min: Intervention rate below which the threshold is frozen
        enabled: A disabled gate never intervenes
    """

    q_star: float = 0.0
    omega: float = OMEGA
    gamma: float = THRESHOLD_GAMMA
    r_min: float = THRESHOLD_R_MIN
    enabled: bool = True

    def __post_init__(self) -> None:
        if not self.omega < 0:
            raise ValueError(f"omega must be negative, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not 0.0 <= self.r_min <= 1.0:
            raise ValueError(f"r_min must lie in [0, 1], got {self.r_min}")
        if math.isnan(self.q_star):
            raise ValueError("q_star is NaN")

    @classmethod
    def disabled(cls, **kwargs: float) -> InterventionGate:
        """Gate that never intervenes."""
        return cls(q_star=math.inf, enabled=False, **kwargs)

    @classmethod
    def always(cls, **kwargs: float) -> InterventionGate:
        """Gate that intervenes in every state."""
        return cls(q_star=-math.inf, enabled=True, **kwargs)


def intervene(gate: InterventionGate, state: NetworkState | int) -> bool:
    """True iff the gate is enabled and the backlog exceeds the threshold."""
    backlog = state.backlog if hasattr(state, "backlog") else int(state)
    return gate.enabled and backlog > gate.q_star


def update_threshold(gate: InterventionGate, rate: float) -> InterventionGate:
    """
    Raise the threshold after an episode with intervention rate ``rate``.

    q* <- q* + gamma * (1 - R) when R > r_min, unchanged otherwise.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"intervention rate must lie in [0, 1], got {rate}")
    if rate <= gate.r_min or not math.isfinite(gate.q_star):
        return gate
    return replace(gate, q_star=gate.q_star + gate.gamma * (1.0 - rate))
