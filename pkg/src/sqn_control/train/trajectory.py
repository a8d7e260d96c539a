"""
Trajectory storage for one rollout episode.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from sqn_control.drift.lyapunov import drifts


@dataclass
class Trajectory:
    """
    Transitions of one contiguous stretch of interaction.

    Attributes:
        obs: (T, D) encoded states s_t
        next_obs: (T, D) encoded states s_{t+1}
        backlogs: (T,) raw backlog of s_t; also the cost c_t
        intervened: (T,) whether the intervention policy acted
        actions: (T,) link indices or (T, M, K + 1) allocations
        masks: (T, K + 1) single-hop action masks, None for multi-hop
        log_probs: (T,) behavior log-probabilities, NaN where intervened
        shaped_costs: (T,) -1 / (1 + backlog)
        phis: (T + 1,) Lyapunov values of s_0 .. s_T
        start_t: Slot index of s_0
    """

    obs: np.ndarray
    next_obs: np.ndarray
    backlogs: np.ndarray
    intervened: np.ndarray
    actions: np.ndarray
    masks: np.ndarray | None
    log_probs: np.ndarray
    shaped_costs: np.ndarray
    phis: np.ndarray
    start_t: int = 0

    def __len__(self) -> int:
        return len(self.backlogs)

    @property
    def costs(self) -> np.ndarray:
        return self.backlogs

    @property
    def free(self) -> np.ndarray:
        """Steps where the learned policy acted."""
        return ~self.intervened

    @property
    def intervention_rate(self) -> float:
        return float(self.intervened.mean()) if len(self) else 0.0

    @property
    def drifts(self) -> np.ndarray:
        return drifts(self.phis)

    @classmethod
    def concatenate(cls, parts: Sequence[Trajectory]) -> Trajectory:
        """Join consecutive episodes of one run into a single trajectory."""
        if not parts:
            raise ValueError("nothing to concatenate")
        masks = None if parts[0].masks is None else np.concatenate([p.masks for p in parts])  # type: ignore[misc]
        return cls(
            obs=np.concatenate([p.obs for p in parts]),
            next_obs=np.concatenate([p.next_obs for p in parts]),
            backlogs=np.concatenate([p.backlogs for p in parts]),
            intervened=np.concatenate([p.intervened for p in parts]),
            actions=np.concatenate([p.actions for p in parts]),
            masks=masks,
            log_probs=np.concatenate([p.log_probs for p in parts]),
            shaped_costs=np.concatenate([p.shaped_costs for p in parts]),
            phis=np.concatenate([p.phis[:-1] for p in parts] + [parts[-1].phis[-1:]]),
            start_t=parts[0].start_t,
        )


@dataclass
class TrajectoryBuilder:
    """Accumulates per-step records and freezes them into a Trajectory."""

    start_t: int = 0
    rows: dict[str, list[Any]] = field(default_factory=lambda: {
        "obs": [],
        "next_obs": [],
        "backlogs": [],
        "intervened": [],
        "actions": [],
        "masks": [],
        "log_probs": [],
        "shaped_costs": [],
        "phis": [],
    })

    def add(
        self,
        obs: np.ndarray,
        next_obs: np.ndarray,
        backlog: int,
        intervened: bool,
        action: Any,
        mask: np.ndarray | None,
        log_prob: float,
        shaped_cost: float,
        phi: float,
    ) -> None:
        self.rows["obs"].append(obs)
        self.rows["next_obs"].append(next_obs)
        self.rows["backlogs"].append(backlog)
        self.rows["intervened"].append(intervened)
        self.rows["actions"].append(action)
        self.rows["masks"].append(mask)
        self.rows["log_probs"].append(log_prob)
        self.rows["shaped_costs"].append(shaped_cost)
        self.rows["phis"].append(phi)

    def build(self, final_phi: float, single_hop: bool) -> Trajectory:
        r = self.rows
        return Trajectory(
            obs=np.asarray(r["obs"], dtype=np.float64),
            next_obs=np.asarray(r["next_obs"], dtype=np.float64),
            backlogs=np.asarray(r["backlogs"], dtype=np.int64),
            intervened=np.asarray(r["intervened"], dtype=bool),
            actions=np.asarray(r["actions"], dtype=np.int64),
            masks=np.asarray(r["masks"], dtype=bool) if single_hop else None,
            log_probs=np.asarray(r["log_probs"], dtype=np.float64),
            shaped_costs=np.asarray(r["shaped_costs"], dtype=np.float64),
            phis=np.asarray([*r["phis"], final_phi], dtype=np.float64),
            start_t=self.start_t,
        )
