"""
Average-cost advantage estimation.

There is no discount factor: temporal differences are taken relative to
the average shaped cost of the trajectory, and GAE runs backwards over the
episode without bootstrapping past its final state value.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import torch

from sqn_control.nn.mlp import forward

if TYPE_CHECKING:
    from sqn_control.nn.mlp import Mlp
    from sqn_control.train.trajectory import Trajectory

logger = logging.getLogger(__name__)


def estimate_eta(costs: Trajectory | np.ndarray) -> float:
    """Average shaped cost over a trajectory."""
    values = costs if isinstance(costs, np.ndarray) else costs.shaped_costs
    if len(values) == 0:
        raise ValueError("cannot estimate the average cost of an empty trajectory")
    return float(np.mean(values))


def gae_advantages(
    costs: np.ndarray,
    values: np.ndarray,
    next_values: np.ndarray,
    lam: float,
    eta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    GAE for the average-cost setting.

    delta_t = c_t - eta + V(s_{t+1}) - V(s_t)
    A_t = sum_l lam^l delta_{t+l}, truncated at the end of the trajectory
    target_t = A_t + V(s_t)

    Returns:
        (advantages, value targets)

    Raises:
        ValueError: If ``lam`` is outside [0, 1].
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"GAE lambda must lie in [0, 1], got {lam}")
    costs = np.asarray(costs, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    next_values = np.asarray(next_values, dtype=np.float64)

    deltas = costs - eta + next_values - values
    advantages = np.zeros_like(deltas)
    running = 0.0
    for t in range(len(deltas) - 1, -1, -1):
        running = deltas[t] + lam * running
        advantages[t] = running
    return advantages, advantages + values


def critic_values(critic: Mlp, trajectory: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """V(s_t) and V(s_{t+1}) for every step, without tracking gradients."""
    with torch.no_grad():
        values = forward(critic, trajectory.obs).squeeze(-1).numpy()
        next_values = forward(critic, trajectory.next_obs).squeeze(-1).numpy()
    return values, next_values


def compute_advantages(
    trajectory: Trajectory,
    critic: Mlp,
    lam: float,
    eta: float | None = None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Advantages and targets for a trajectory under the current critic.

    Returns:
        (advantages, value targets, eta)
    """
    eta = estimate_eta(trajectory) if eta is None else eta
    values, next_values = critic_values(critic, trajectory)
    advantages, targets = gae_advantages(trajectory.shaped_costs, values, next_values, lam, eta)
    return advantages, targets, eta


def normalize_advantages(advantages: np.ndarray, free: np.ndarray) -> np.ndarray:
    """
    Standardize advantages using the statistics of the free (non-intervened) steps.

    Returned unchanged when fewer than two free steps exist or they are all equal.
    """
    selected = advantages[free]
    if len(selected) < 2:
        logger.debug("Advantage normalization skipped: fewer than two free steps")
        return advantages
    std = float(selected.std())
    if std == 0.0:
        logger.warning("Advantage normalization skipped: zero variance over free steps")
        return advantages
    return (advantages - float(selected.mean())) / std
