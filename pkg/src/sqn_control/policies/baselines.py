"""
Classical scheduling and routing policies.

MaxWeight (single-hop) and Backpressure (multi-hop) serve as the
intervention policy and as non-learning baselines; the randomized policy
is the uninformed reference. Ties are broken by the lowest index.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from sqn_control.constants import BACKPRESSURE, BASELINE_ALGORITHMS, MAXWEIGHT, RANDOM
from sqn_control.env.masks import link_class_mask, reachability_mask, work_conserving_mask
from sqn_control.policies.base import Policy
from sqn_control.policies.heads import masked_cdf, pick_index, sample_counts

if TYPE_CHECKING:
    from sqn_control.env.network import Action
    from sqn_control.env.sampling import UniformSource
    from sqn_control.env.spec import NetworkConfig
    from sqn_control.env.state import NetworkState

logger = logging.getLogger(__name__)

TIE_BREAK = "lowest-index"


def max_weight(state: NetworkState) -> int:
    """
    Activate the valid link with the largest q_k * y_k.

    Returns:
        0-based link index, or K (Idle) when no link is usable.
    """
    mask = work_conserving_mask(state)
    k = len(mask) - 1
    if mask[k]:
        return k
    weights = np.where(mask[:k], state.q[:, 0] * state.y, -1)
    # argmax returns the first maximum
    return int(np.argmax(weights))


def backpressure(
    state: NetworkState,
    config: NetworkConfig,
    mask: np.ndarray,
) -> np.ndarray:
    """
    Give each link's full capacity to the class with the largest positive differential.

    For link m = (i, j) the differential of class k is q[i, k] - q[j, k],
    with the destination's own queue counted as zero. Links where no
    allowed class has a positive differential leave their capacity unused.

    Args:
        state: Multi-hop state.
        config: Network instance.
        mask: M x K reachability matrix.

    Returns:
        M x (K + 1) allocation matrix; column 0 is unused capacity.
    """
    q = state.q.copy()
    q[config.destinations, np.arange(config.num_classes)] = 0
    diffs = q[config.link_starts] - q[config.link_ends]
    diffs = np.where(mask, diffs, np.iinfo(np.int64).min)
    best = np.argmax(diffs, axis=1)
    best_diff = diffs[np.arange(len(best)), best]

    allocation = np.zeros((config.num_links, config.num_classes + 1), dtype=np.int64)
    active = best_diff > 0
    rows = np.arange(config.num_links)
    allocation[rows[active], best[active] + 1] = state.y[active]
    allocation[rows[~active], 0] = state.y[~active]
    return allocation


def randomized_policy(
    state: NetworkState,
    rng: UniformSource,
    class_mask: np.ndarray | None = None,
) -> Action:
    """
    Uniformly random valid action.

    Single-hop (``class_mask`` is None): uniform over the work-conserving
    mask. Multi-hop: each link's capacity is split by a multinomial with
    equal weight on every allowed column of ``class_mask``.
    """
    if class_mask is None:
        mask = work_conserving_mask(state)
        probs = mask / mask.sum()
        return int(pick_index(masked_cdf(probs, mask), mask, np.asarray(rng.random(1)))[0])

    rows = []
    for m, allowed in enumerate(class_mask):
        probs = allowed / allowed.sum()
        rows.append(sample_counts(probs, allowed, int(state.y[m]), rng))
    return np.vstack(rows)


class MaxWeightPolicy(Policy):
    """Single-hop MaxWeight scheduler."""

    name = MAXWEIGHT
    description = "Serve the link maximizing backlog x capacity"
    tie_break = TIE_BREAK

    def __init__(self, config: NetworkConfig) -> None:
        if not config.is_single_hop:
            raise ValueError("MaxWeight applies to single-hop networks only")
        super().__init__(config)

    def act(self, state: NetworkState, rng: UniformSource) -> int:
        return max_weight(state)


class BackpressurePolicy(Policy):
    """Multi-hop Backpressure router."""

    name = BACKPRESSURE
    description = "Route each link's capacity to the largest positive queue differential"
    tie_break = TIE_BREAK

    def __init__(self, config: NetworkConfig) -> None:
        if config.is_single_hop:
            raise ValueError("Backpressure applies to multi-hop networks only")
        super().__init__(config)
        self.mask = reachability_mask(config)

    def act(self, state: NetworkState, rng: UniformSource) -> np.ndarray:
        return backpressure(state, self.config, self.mask)


class RandomizedPolicy(Policy):
    """Uniform choice among valid actions."""

    name = RANDOM
    description = "Uniformly random valid action"

    def __init__(self, config: NetworkConfig) -> None:
        super().__init__(config)
        self.class_mask = None if config.is_single_hop else link_class_mask(reachability_mask(config))

    def act(self, state: NetworkState, rng: UniformSource) -> Action:
        return randomized_policy(state, rng, self.class_mask)


def make_baseline(kind: str, config: NetworkConfig) -> Policy:
    """
    Build a baseline policy by name.

    Raises:
        ValueError: For unknown names or a name that does not fit the network kind.
    """
    if kind not in BASELINE_ALGORITHMS:
        raise ValueError(f"Unknown baseline {kind!r}. Valid: {', '.join(sorted(BASELINE_ALGORITHMS))}")
    if kind == MAXWEIGHT:
        return MaxWeightPolicy(config)
    if kind == BACKPRESSURE:
        return BackpressurePolicy(config)
    return RandomizedPolicy(config)


def intervention_policy(config: NetworkConfig) -> Policy:
    """The stabilizing policy for this network kind."""
    return make_baseline(MAXWEIGHT if config.is_single_hop else BACKPRESSURE, config)
