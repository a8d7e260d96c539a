"""
Rollouts under the intervention-assisted policy.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

from sqn_control.drift.gate import InterventionGate, intervene
from sqn_control.drift.lyapunov import lyapunov
from sqn_control.env.masks import work_conserving_mask
from sqn_control.policies.actor import encode_state
from sqn_control.train.trajectory import Trajectory, TrajectoryBuilder

if TYPE_CHECKING:
    from sqn_control.env.network import QueueNetwork
    from sqn_control.env.sampling import UniformSource
    from sqn_control.policies.actor import ActorPolicy
    from sqn_control.policies.base import Policy

logger = logging.getLogger(__name__)


def rollout(
    env: QueueNetwork,
    actor: ActorPolicy | None,
    intervention: Policy,
    gate: InterventionGate,
    steps: int,
    rng: UniformSource | None = None,
) -> Trajectory:
    """
    Run ``steps`` slots from the network's current state.

    In each slot the gate decides who acts: the intervention policy when
    the backlog exceeds the threshold, the actor otherwise. The network
    keeps its final state for the next episode.

    Args:
        env: Network to drive; mutated in place.
        actor: Learned policy. May be None only if the gate always intervenes.
        intervention: Stabilizing policy.
        gate: Intervention gate.
        steps: Episode length.
        rng: Policy stream; defaults to the network's own.

    Raises:
        ValueError: If the actor is needed but missing.
    """
    rng = env.streams.policy if rng is None else rng
    single_hop = env.config.is_single_hop
    builder = TrajectoryBuilder(start_t=env.state.t)

    for _ in range(steps):
        state = env.state
        flag = intervene(gate, state)
        if flag:
            action = intervention.act(state, rng)
            log_prob = math.nan
            mask = work_conserving_mask(state) if single_hop else None
        else:
            if actor is None:
                raise ValueError("rollout reached the learning region without an actor")
            action, log_prob, mask = actor.sample(state, rng)
        outcome = env.step(action)
        builder.add(
            obs=encode_state(state),
            next_obs=encode_state(outcome.next_state),
            backlog=outcome.cost,
            intervened=flag,
            action=action,
            mask=mask,
            log_prob=log_prob,
            shaped_cost=outcome.shaped_cost,
            phi=lyapunov(state),
        )

    trajectory = builder.build(lyapunov(env.state), single_hop)
    logger.debug(
        f"Rollout t={trajectory.start_t}..{env.state.t}: "
        f"intervention rate {trajectory.intervention_rate:.3f}, final backlog {env.state.backlog}"
    )
    return trajectory
