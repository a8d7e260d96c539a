"""
Rollouts, advantage estimation, losses and updates.
"""

from sqn_control.train.advantages import (
    compute_advantages,
    estimate_eta,
    gae_advantages,
    normalize_advantages,
)
from sqn_control.train.critic import CriticState
from sqn_control.train.losses import critic_loss, ia_pg_loss, ia_ppo_loss
from sqn_control.train.rollout import rollout
from sqn_control.train.trajectory import Trajectory
from sqn_control.train.update import UpdateStats, update_phase

__all__ = [
    "CriticState",
    "Trajectory",
    "UpdateStats",
    "compute_advantages",
    "critic_loss",
    "estimate_eta",
    "gae_advantages",
    "ia_pg_loss",
    "ia_ppo_loss",
    "normalize_advantages",
    "rollout",
    "update_phase",
]
