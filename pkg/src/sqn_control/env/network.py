"""
Slot dynamics for single-hop and multi-hop networks.

Within a slot the order is: observe (q, y), act, transmit, add arrivals,
resample link capacities. Packets move at most one hop per slot.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

import numpy as np

from sqn_control.env.masks import link_class_mask, reachability_mask, work_conserving_mask
from sqn_control.env.sampling import RandomStreams, UniformSource, sample_arrivals, sample_link_states
from sqn_control.env.state import NetworkState, StepOutcome, shaped_cost

if TYPE_CHECKING:
    from sqn_control.env.spec import NetworkConfig

logger = logging.getLogger(__name__)

# Either a single-hop link index (K = Idle) or an M x (K + 1) allocation matrix
Action = Any


def single_hop_index(action: Action, num_classes: int) -> int:
    """Coerce a single-hop action to an index in 0..K, rejecting matrices."""
    if isinstance(action, np.ndarray) and action.ndim > 0:
        raise ValueError(f"single-hop network expects a link index, got array of shape {action.shape}")
    if isinstance(action, (bool, np.bool_)) or not isinstance(action, (int, np.integer)):
        raise ValueError(f"single-hop network expects an integer link index, got {action!r}")
    index = int(action)
    if not 0 <= index <= num_classes:
        raise ValueError(f"link index {index} outside 0..{num_classes}")
    return index


def check_allocation(action: Action, y: np.ndarray, num_classes: int) -> np.ndarray:
    """Validate a multi-hop allocation matrix against the current capacities."""
    if not isinstance(action, np.ndarray) or action.ndim != 2:
        raise ValueError("multi-hop network expects an M x (K+1) allocation matrix")
    expected = (y.shape[0], num_classes + 1)
    if action.shape != expected:
        raise ValueError(f"allocation shape {action.shape}, expected {expected}")
    allocation = action.astype(np.int64)
    if not np.array_equal(allocation, action):
        raise ValueError("allocations must be integers")
    if (allocation < 0).any():
        raise ValueError("negative allocation")
    row_sums = allocation.sum(axis=1)
    if not np.array_equal(row_sums, y):
        bad = np.flatnonzero(row_sums != y) + 1
        raise ValueError(f"allocation rows {bad.tolist()} do not sum to link capacity")
    return allocation


def _finish_slot(
    config: NetworkConfig,
    state: NetworkState,
    q: np.ndarray,
    arrival_rng: UniformSource,
    link_rng: UniformSource,
    delivered: np.ndarray,
) -> StepOutcome:
    arrivals = sample_arrivals(config, arrival_rng)
    if config.is_single_hop:
        q[:, 0] += arrivals
    else:
        np.add.at(q, (config.sources, np.arange(config.num_classes)), arrivals)
    y = sample_link_states(config, link_rng)
    cost = state.backlog
    return StepOutcome(
        next_state=NetworkState(q=q, y=y, t=state.t + 1),
        cost=cost,
        shaped_cost=shaped_cost(cost),
        arrivals=arrivals,
        delivered=delivered,
    )


def step_single_hop(
    config: NetworkConfig,
    state: NetworkState,
    action: Action,
    streams: RandomStreams,
) -> StepOutcome:
    """
    Serve min(q_k, y_k) packets on the chosen link, then add arrivals.

    Raises:
        ValueError: If the action is not a link index or the link is masked.
    """
    k = config.num_classes
    index = single_hop_index(action, k)
    mask = work_conserving_mask(state)
    if not mask[index]:
        raise ValueError(f"action {index} violates the work-conserving mask {mask.tolist()}")

    q = state.q.copy()
    delivered = np.zeros(k, dtype=np.int64)
    if index < k:
        served = min(int(q[index, 0]), int(state.y[index]))
        q[index, 0] -= served
        delivered[index] = served
    return _finish_slot(config, state, q, streams.arrivals, streams.links, delivered)


def step_multi_hop(
    config: NetworkConfig,
    state: NetworkState,
    action: Action,
    streams: RandomStreams,
) -> StepOutcome:
    """
    Move packets along links according to an allocation matrix.

    Links are served in ascending id; on each link the transmitted count per
    class is truncated to what is still queued at the link's tail. Packets
    reaching their class destination leave the network, the rest are
    queued at the head node for the next slot.

    Raises:
        ValueError: On a shape, sign or row-sum violation.
    """
    k = config.num_classes
    allocation = check_allocation(action, state.y, k)

    q = state.q.copy()
    incoming = np.zeros_like(q)
    delivered = np.zeros(k, dtype=np.int64)
    destinations = config.destinations
    for m, (i, j) in enumerate(zip(config.link_starts, config.link_ends)):
        sent = np.minimum(q[i], allocation[m, 1:])
        q[i] -= sent
        leaving = destinations == j
        delivered += np.where(leaving, sent, 0)
        incoming[j] += np.where(leaving, 0, sent)
    q += incoming
    return _finish_slot(config, state, q, streams.arrivals, streams.links, delivered)


# =============================================================================
# STATEFUL NETWORKS
# =============================================================================


class QueueNetwork(ABC):
    """
    A network instance together with its current state and random streams.

    The state is never reset between episodes; rollouts continue from
    wherever the previous one stopped.
    """

    kind: str = "base"

    def __init__(self, config: NetworkConfig, streams: RandomStreams) -> None:
        """
        Initialize with empty queues and a freshly sampled link state.

        Args:
            config: Validated network instance.
            streams: Random streams owned by this network.
        """
        self.config = config
        self.streams = streams
        self.state = NetworkState(
            q=np.zeros(config.queue_shape, dtype=np.int64),
            y=sample_link_states(config, streams.links),
            t=0,
        )

    @property
    @abstractmethod
    def num_actions(self) -> int:
        """Width of the policy output."""
        ...

    @abstractmethod
    def action_mask(self) -> np.ndarray:
        """Mask of valid actions in the current state."""
        ...

    @abstractmethod
    def _transition(self, action: Action) -> StepOutcome: ...

    def step(self, action: Action) -> StepOutcome:
        """Execute one slot and advance the stored state."""
        outcome = self._transition(action)
        self.state = outcome.next_state
        return outcome

    def get_state(self) -> dict[str, Any]:
        return {"state": self.state.to_dict(), "streams": self.streams.get_state()}

    def set_state(self, data: dict[str, Any]) -> None:
        self.state = NetworkState.from_dict(data["state"])
        self.streams.set_state(data["streams"])


class SingleHopNetwork(QueueNetwork):
    """K users sharing a base station; at most one link active per slot."""

    kind = "single-hop"

    @property
    def num_actions(self) -> int:
        return self.config.num_classes + 1

    def action_mask(self) -> np.ndarray:
        return work_conserving_mask(self.state)

    def _transition(self, action: Action) -> StepOutcome:
        return step_single_hop(self.config, self.state, action, self.streams)


class MultiHopNetwork(QueueNetwork):
    """Multi-class routing over a directed graph."""

    kind = "multi-hop"

    def __init__(self, config: NetworkConfig, streams: RandomStreams) -> None:
        super().__init__(config, streams)
        self.reachability = reachability_mask(config)
        self.class_mask = link_class_mask(self.reachability)

    @property
    def num_actions(self) -> int:
        return self.config.num_links * (self.config.num_classes + 1)

    def action_mask(self) -> np.ndarray:
        return self.class_mask

    def _transition(self, action: Action) -> StepOutcome:
        return step_multi_hop(self.config, self.state, action, self.streams)


def make_network(config: NetworkConfig, seed: int | RandomStreams) -> QueueNetwork:
    """Build the network matching the instance's kind."""
    streams = seed if isinstance(seed, RandomStreams) else RandomStreams.from_seed(seed)
    if config.is_single_hop:
        return SingleHopNetwork(config, streams)
    return MultiHopNetwork(config, streams)
