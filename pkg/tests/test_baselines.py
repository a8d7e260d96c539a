"""Tests for MaxWeight, Backpressure and the randomized policy."""

from __future__ import annotations

import numpy as np
import pytest

from sqn_control.env.masks import link_class_mask, reachability_mask
from sqn_control.env.state import NetworkState
from sqn_control.policies.baselines import (
    BackpressurePolicy,
    MaxWeightPolicy,
    RandomizedPolicy,
    backpressure,
    intervention_policy,
    make_baseline,
    max_weight,
    randomized_policy,
)
from tests.conftest import single_hop_state


class TestMaxWeight:
    """Tests for single-hop MaxWeight."""

    def test_largest_product(self):
        """q=(3,1), y=(1,2) serves link 1."""
        assert max_weight(single_hop_state([3, 1], [1, 2])) == 0

    def test_second_link(self):
        """q=(1,3), y=(1,2) serves link 2."""
        assert max_weight(single_hop_state([1, 3], [1, 2])) == 1

    def test_tie_lowest_index(self):
        """Equal weights pick the lowest link."""
        assert max_weight(single_hop_state([2, 1], [1, 2])) == 0

    def test_idle_when_empty(self):
        """Empty queues give Idle."""
        assert max_weight(single_hop_state([0, 0], [1, 2])) == 2

    def test_skips_zero_capacity(self):
        """A long queue without capacity is never chosen."""
        assert max_weight(single_hop_state([9, 1], [0, 1])) == 1

    @pytest.mark.parametrize("scale", [2, 3, 7])
    def test_scale_invariant(self, scale):
        """Scaling every queue by a positive constant leaves the decision unchanged."""
        rng = np.random.default_rng(scale)
        for _ in range(200):
            q = rng.integers(0, 10, size=4)
            y = rng.integers(0, 4, size=4)
            assert max_weight(single_hop_state(scale * q, y)) == max_weight(single_hop_state(q, y))

    def test_policy_rejects_multi_hop(self, mh1):
        """MaxWeight is single-hop only."""
        with pytest.raises(ValueError, match="single-hop"):
            MaxWeightPolicy(mh1)


class TestBackpressure:
    """Tests for multi-hop Backpressure."""

    def _state(self) -> NetworkState:
        q = np.zeros((4, 2), dtype=np.int64)
        q[0] = [3, 1]
        q[1] = [1, 0]
        return NetworkState(q=q, y=np.array([2, 1, 2, 1, 1, 2]))

    def test_allocation(self, mh1):
        """Each link sends its full capacity to the best positive differential."""
        allocation = backpressure(self._state(), mh1, reachability_mask(mh1))
        expected = [
            [0, 2, 0],  # 1->2: differentials (2, 1)
            [0, 1, 0],  # 1->3: (3, 1)
            [0, 2, 0],  # 2->3: (1, 0)
            [1, 0, 0],  # 3->2: (-1, 0)
            [0, 1, 0],  # 2->4: destination counts as empty
            [2, 0, 0],  # 3->4: nothing queued
        ]
        assert allocation.tolist() == expected

    def test_rows_sum_to_capacity(self, mh2):
        """Allocations always meet the capacity constraint."""
        rng = np.random.default_rng(0)
        mask = reachability_mask(mh2)
        for _ in range(50):
            state = NetworkState(q=rng.integers(0, 5, size=(8, 4)), y=rng.integers(0, 6, size=13))
            allocation = backpressure(state, mh2, mask)
            assert allocation.sum(axis=1).tolist() == state.y.tolist()
            assert not allocation[:, 1:][~mask].any()

    def test_tie_lowest_class(self, mh1):
        """Equal differentials favour the lowest class."""
        q = np.zeros((4, 2), dtype=np.int64)
        q[0] = [2, 2]
        state = NetworkState(q=q, y=np.array([1, 0, 0, 0, 0, 0]))
        assert backpressure(state, mh1, reachability_mask(mh1))[0].tolist() == [0, 1, 0]

    def test_policy_rejects_single_hop(self, sh1):
        """Backpressure is multi-hop only."""
        with pytest.raises(ValueError, match="multi-hop"):
            BackpressurePolicy(sh1)


class TestRandomizedPolicy:
    """Tests for the uniform reference policy."""

    @pytest.mark.parametrize("u, expected", [(0.25, 0), (0.75, 1)])
    def test_single_hop_uniform(self, stub_uniform, u, expected):
        """Draws split the valid links evenly and never pick Idle."""
        state = single_hop_state([1, 1], [1, 1])
        assert randomized_policy(state, stub_uniform([u])) == expected

    def test_single_hop_only_idle(self, stub_uniform):
        """With nothing to serve the only choice is Idle."""
        state = single_hop_state([0, 0], [1, 1])
        assert randomized_policy(state, stub_uniform([0.9])) == 2

    def test_multi_hop_valid(self, mh2):
        """Multi-hop samples meet capacity and reachability."""
        rng = np.random.default_rng(4)
        class_mask = link_class_mask(reachability_mask(mh2))
        state = NetworkState(q=np.zeros((8, 4), dtype=np.int64), y=np.array([4, 5, 4, 3, 3, 4, 4, 2, 3, 4, 4, 8, 8]))
        for _ in range(20):
            allocation = randomized_policy(state, rng, class_mask)
            assert allocation.shape == (13, 5)
            assert allocation.sum(axis=1).tolist() == state.y.tolist()
            assert not allocation[~class_mask].any()

    def test_policy_class(self, mh1):
        """The policy object carries the link-class mask for multi-hop."""
        policy = RandomizedPolicy(mh1)
        assert policy.class_mask is not None
        assert policy.class_mask.shape == (6, 3)


class TestMakeBaseline:
    """Tests for baseline construction."""

    def test_by_name(self, sh1, mh1):
        """Names map to policy classes."""
        assert isinstance(make_baseline("maxweight", sh1), MaxWeightPolicy)
        assert isinstance(make_baseline("backpressure", mh1), BackpressurePolicy)
        assert isinstance(make_baseline("random", sh1), RandomizedPolicy)

    def test_unknown(self, sh1):
        """Unknown names raise ValueError."""
        with pytest.raises(ValueError, match="Unknown baseline"):
            make_baseline("greedy", sh1)

    def test_intervention_policy(self, sh1, mh1):
        """The stabilizing policy follows the network kind."""
        assert isinstance(intervention_policy(sh1), MaxWeightPolicy)
        assert isinstance(intervention_policy(mh1), BackpressurePolicy)
