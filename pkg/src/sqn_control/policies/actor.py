"""
Neural actor: state encoding, network construction and action sampling.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import torch

from sqn_control.constants import ACTOR_OUTPUT_GAIN, CRITIC_OUTPUT_GAIN, HIDDEN_WIDTHS
from sqn_control.env.masks import link_class_mask, reachability_mask, work_conserving_mask
from sqn_control.nn.mlp import Mlp, forward, symlog
from sqn_control.policies.base import Policy
from sqn_control.policies.heads import (
    LinkMultinomial,
    MaskedCategorical,
    allocation_log_prob,
    categorical_log_prob,
    categorical_sample,
    multinomial_sample,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from sqn_control.env.network import Action
    from sqn_control.env.sampling import UniformSource
    from sqn_control.env.spec import NetworkConfig
    from sqn_control.env.state import NetworkState


def encode_state(state: NetworkState) -> np.ndarray:
    """Symlog of the flattened backlogs followed by the link capacities."""
    return symlog(np.concatenate([state.q.ravel(), state.y]).astype(np.float64))  # type: ignore[return-value]


def observation_size(config: NetworkConfig) -> int:
    rows, cols = config.queue_shape
    return rows * cols + config.num_links


def action_size(config: NetworkConfig) -> int:
    if config.is_single_hop:
        return config.num_classes + 1
    return config.num_links * (config.num_classes + 1)


def build_actor(config: NetworkConfig, seed: int | None = None, hidden: Sequence[int] = HIDDEN_WIDTHS) -> Mlp:
    return Mlp(observation_size(config), action_size(config), hidden, ACTOR_OUTPUT_GAIN, seed)


def build_critic(config: NetworkConfig, seed: int | None = None, hidden: Sequence[int] = HIDDEN_WIDTHS) -> Mlp:
    return Mlp(observation_size(config), 1, hidden, CRITIC_OUTPUT_GAIN, seed)


def actor_forward(
    mlp: Mlp,
    state: NetworkState,
    config: NetworkConfig,
    masks: np.ndarray | None = None,
) -> MaskedCategorical | list[LinkMultinomial]:
    """
    Action distribution of the actor in one state.

    Args:
        mlp: Actor network.
        state: Current state.
        config: Network instance.
        masks: Single-hop action mask (computed from the state when None) or
            the M x (K + 1) multi-hop column mask (computed from topology when None).
    """
    logits = forward(mlp, encode_state(state))
    if config.is_single_hop:
        mask = work_conserving_mask(state) if masks is None else masks
        return MaskedCategorical(logits, mask)

    if masks is None:
        masks = link_class_mask(reachability_mask(config))
    block = logits.reshape(config.num_links, config.num_classes + 1)
    return [
        LinkMultinomial(block[m], int(state.y[m]), masks[m])
        for m in range(config.num_links)
    ]


class ActorPolicy(Policy):
    """
    Stochastic policy driven by an actor network.

    Attributes:
        mlp: Actor network, updated in place by training
        class_mask: Multi-hop column mask, None for single-hop
    """

    name = "actor"
    description = "Learned stochastic policy"

    def __init__(self, config: NetworkConfig, mlp: Mlp) -> None:
        super().__init__(config)
        self.mlp = mlp
        self.class_mask = None if config.is_single_hop else link_class_mask(reachability_mask(config))

    def sample(self, state: NetworkState, rng: UniformSource) -> tuple[Action, float, np.ndarray]:
        """
        Draw an action.

        Returns:
            (action, behavior log-probability, mask used)
        """
        with torch.no_grad():
            if self.config.is_single_hop:
                mask = work_conserving_mask(state)
                head = actor_forward(self.mlp, state, self.config, mask)
                index, log_prob = categorical_sample(head, rng)  # type: ignore[arg-type]
                return index, log_prob, mask
            heads = actor_forward(self.mlp, state, self.config, self.class_mask)
            allocation, log_prob = multinomial_sample(heads, rng)  # type: ignore[arg-type]
            return allocation, log_prob, self.class_mask  # type: ignore[return-value]

    def act(self, state: NetworkState, rng: UniformSource) -> Action:
        return self.sample(state, rng)[0]

    def log_prob(
        self,
        obs: torch.Tensor,
        actions: torch.Tensor,
        masks: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """
        Differentiable log pi(a|s) for a batch of encoded states.

        Args:
            obs: (B, D) encoded states
            actions: (B,) link indices or (B, M, K + 1) allocations
            masks: (B, K + 1) single-hop masks; ignored for multi-hop
        """
        logits = forward(self.mlp, obs)
        if self.config.is_single_hop:
            if masks is None:
                raise ValueError("single-hop log-probabilities need the per-step masks")
            return categorical_log_prob(logits, masks, actions)
        block = logits.reshape(-1, self.config.num_links, self.config.num_classes + 1)
        return allocation_log_prob(block, self.class_mask, actions)  # type: ignore[arg-type]
