"""
Policy and critic updates from one trajectory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import torch

from sqn_control.constants import IA_PG
from sqn_control.nn.mlp import loss_gradients
from sqn_control.nn.optim import opt_step
from sqn_control.train.advantages import compute_advantages, normalize_advantages
from sqn_control.train.losses import ia_pg_loss, ia_ppo_loss

if TYPE_CHECKING:
    from sqn_control.config import TrainConfig
    from sqn_control.nn.optim import OptState
    from sqn_control.policies.actor import ActorPolicy
    from sqn_control.train.critic import CriticState
    from sqn_control.train.trajectory import Trajectory

logger = logging.getLogger(__name__)


@dataclass
class UpdateStats:
    """Diagnostics of one update phase (means over minibatches)."""

    eta: float
    policy_loss: float
    critic_loss: float
    clip_fraction: float
    critic_bias: float
    actor_steps: int
    critic_steps: int


def _minibatches(length: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [idx for idx in np.array_split(rng.permutation(length), count) if len(idx)]


def update_phase(
    trajectory: Trajectory,
    actor: ActorPolicy,
    actor_opt: OptState,
    critic: CriticState,
    config: TrainConfig,
    rng: np.random.Generator,
) -> UpdateStats:
    """
    Run ``config.epochs`` passes of minibatch updates over one trajectory.

    Advantages and value targets are computed once, from the critic as it
    was before the update. Each minibatch takes one actor step (skipped if
    every step in it was intervened) and one critic step; the critic bias
    is refreshed after every epoch. Behavior log-probabilities are the ones
    recorded during the rollout.
    """
    if config.algorithm == IA_PG and config.epochs > 1:
        logger.warning(
            f"IA-PG with {config.epochs} update epochs: the policy gradient only "
            "supports a single update per trajectory"
        )

    advantages, targets, eta = compute_advantages(trajectory, critic.mlp, config.gae_lambda)
    critic.eta = eta
    free = trajectory.free
    if config.normalize_advantages:
        advantages = normalize_advantages(advantages, free)

    obs = torch.as_tensor(trajectory.obs, dtype=torch.float64)
    actions = torch.as_tensor(trajectory.actions)
    masks = None if trajectory.masks is None else torch.as_tensor(trajectory.masks)
    behavior = torch.as_tensor(trajectory.log_probs, dtype=torch.float64)
    adv = torch.as_tensor(advantages, dtype=torch.float64)
    value_targets = torch.as_tensor(targets, dtype=torch.float64)
    intervened = torch.as_tensor(trajectory.intervened)

    policy_losses: list[float] = []
    critic_losses: list[float] = []
    clip_hits = 0
    free_seen = 0

    for _ in range(config.epochs):
        for idx in _minibatches(len(trajectory), config.minibatches, rng):
            batch_free = free[idx]
            tidx = torch.as_tensor(idx)
            if batch_free.any():
                rows = torch.as_tensor(idx[batch_free])
                new_free = actor.log_prob(
                    obs[rows], actions[rows], None if masks is None else masks[rows]
                )
                positions = torch.as_tensor(np.flatnonzero(batch_free))
                log_probs = torch.zeros(len(idx), dtype=torch.float64).index_put((positions,), new_free)

                if config.algorithm == IA_PG:
                    loss = ia_pg_loss(log_probs, adv[tidx], intervened[tidx])
                else:
                    loss, ratio = ia_ppo_loss(
                        log_probs,
                        behavior[tidx],
                        adv[tidx],
                        intervened[tidx],
                        config.clip,
                        config.clip_form,
                    )
                    outside = (ratio - 1.0).abs() > config.clip
                    clip_hits += int(outside[torch.as_tensor(batch_free)].sum())
                    free_seen += int(batch_free.sum())
                opt_step(actor.mlp, loss_gradients(actor.mlp, loss), actor_opt)
                policy_losses.append(float(loss))

            critic_losses.append(critic.train_step(obs[tidx], value_targets[tidx]))
        critic.update_bias(obs)

    return UpdateStats(
        eta=eta,
        policy_loss=float(np.mean(policy_losses)) if policy_losses else float("nan"),
        critic_loss=float(np.mean(critic_losses)) if critic_losses else float("nan"),
        clip_fraction=clip_hits / free_seen if free_seen else float("nan"),
        critic_bias=critic.bias,
        actor_steps=len(policy_losses),
        critic_steps=len(critic_losses),
    )
