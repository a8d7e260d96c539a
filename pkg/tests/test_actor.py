"""Tests for the neural actor."""

from __future__ import annotations

import math

import numpy as np
import pytest
import torch

from sqn_control.env.network import check_allocation
from sqn_control.env.state import NetworkState
from sqn_control.policies.actor import (
    ActorPolicy,
    action_size,
    actor_forward,
    build_actor,
    build_critic,
    encode_state,
    observation_size,
)
from tests.conftest import single_hop_state


class TestEncoding:
    """Tests for the state encoding."""

    def test_symlog_of_queues_and_capacities(self):
        """q=(1,0), y=(1,2) encodes to (ln 2, 0, ln 2, ln 3)."""
        x = encode_state(single_hop_state([1, 0], [1, 2]))
        np.testing.assert_allclose(x, [math.log(2), 0.0, math.log(2), math.log(3)])

    def test_multi_hop_layout(self, mh1):
        """Multi-hop encodes the node x class matrix row by row, then y."""
        q = np.zeros((4, 2), dtype=np.int64)
        q[1, 0] = 3
        x = encode_state(NetworkState(q=q, y=np.zeros(6, dtype=np.int64)))
        assert x.shape == (observation_size(mh1),)
        assert x[2] == pytest.approx(math.log(4))

    @pytest.mark.parametrize(
        "name, obs, actions",
        [("sh1", 4, 3), ("sh2", 8, 5), ("mh1", 14, 18), ("mh2", 45, 65)],
    )
    def test_sizes(self, name, obs, actions, request):
        """Input and output widths follow the network dimensions."""
        config = request.getfixturevalue(name)
        assert observation_size(config) == obs
        assert action_size(config) == actions
        actor = build_actor(config, seed=0)
        assert (actor.input_dim, actor.output_dim) == (obs, actions)
        assert build_critic(config, seed=0).output_dim == 1


class TestActorForward:
    """Tests for the actor's action distributions."""

    def test_zero_actor_single_hop_uniform(self, sh1):
        """A zeroed actor spreads mass evenly over the valid links."""
        actor = build_actor(sh1, seed=0).zero_()
        head = actor_forward(actor, single_hop_state([1, 1], [1, 1]), sh1)
        np.testing.assert_allclose(head.probs, [0.5, 0.5, 0.0])

    def test_zero_actor_multi_hop_uniform(self, mh1):
        """With a full mask each link spreads mass evenly over K + 1 columns."""
        actor = build_actor(mh1, seed=0).zero_()
        state = NetworkState(q=np.zeros((4, 2), dtype=np.int64), y=np.array([2, 1, 2, 1, 1, 2]))
        heads = actor_forward(actor, state, mh1)
        assert len(heads) == 6
        for head, y in zip(heads, state.y):
            np.testing.assert_allclose(head.probs, [1 / 3] * 3)
            assert head.trials == y

    def test_initial_actor_near_uniform(self, sh2):
        """The small output gain keeps initial policies close to uniform."""
        actor = build_actor(sh2, seed=0)
        head = actor_forward(actor, single_hop_state([5, 5, 5, 5], [1, 1, 1, 1]), sh2)
        np.testing.assert_allclose(head.probs[:4], 0.25, atol=0.05)


class TestActorPolicy:
    """Tests for sampling and batched log-probabilities."""

    def test_single_hop_samples_valid(self, sh2):
        """Sampled links respect the work-conserving mask."""
        policy = ActorPolicy(sh2, build_actor(sh2, seed=1))
        rng = np.random.default_rng(0)
        state = single_hop_state([0, 2, 0, 1], [1, 1, 1, 0])
        for _ in range(50):
            action, log_prob, mask = policy.sample(state, rng)
            assert action == 1
            assert log_prob == pytest.approx(0.0)
            assert mask.tolist() == [False, True, False, False, False]

    def test_multi_hop_samples_valid(self, mh2):
        """Sampled allocations meet capacity and reachability."""
        policy = ActorPolicy(mh2, build_actor(mh2, seed=1))
        rng = np.random.default_rng(0)
        state = NetworkState(q=np.ones((8, 4), dtype=np.int64), y=np.array([4, 5, 4, 3, 3, 4, 4, 2, 3, 4, 4, 8, 8]))
        for _ in range(10):
            allocation, log_prob, _ = policy.sample(state, rng)
            check_allocation(allocation, state.y, 4)
            assert not allocation[~policy.class_mask].any()
            assert math.isfinite(log_prob) and log_prob <= 0

    def test_batched_log_prob_matches_sampled(self, mh1):
        """Recomputed log-probabilities equal those recorded at sampling time."""
        policy = ActorPolicy(mh1, build_actor(mh1, seed=2))
        rng = np.random.default_rng(1)
        states = [
            NetworkState(q=np.full((4, 2), i, dtype=np.int64), y=np.array([2, 1, 2, 1, 1, 2]))
            for i in range(4)
        ]
        samples = [policy.sample(s, rng) for s in states]
        obs = torch.as_tensor(np.stack([encode_state(s) for s in states]))
        actions = torch.as_tensor(np.stack([a for a, _, _ in samples]))
        recomputed = policy.log_prob(obs, actions)
        np.testing.assert_allclose(recomputed.detach().numpy(), [lp for _, lp, _ in samples], atol=1e-12)

    def test_single_hop_log_prob_needs_masks(self, sh1):
        """Single-hop recomputation requires the per-step masks."""
        policy = ActorPolicy(sh1, build_actor(sh1, seed=0))
        with pytest.raises(ValueError, match="masks"):
            policy.log_prob(torch.zeros(1, 4, dtype=torch.float64), torch.zeros(1))
