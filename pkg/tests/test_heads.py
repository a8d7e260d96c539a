"""Tests for masked categorical and per-link multinomial heads."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
import torch

from sqn_control.policies.heads import (
    LinkMultinomial,
    MaskedCategorical,
    allocation_log_prob,
    categorical_log_prob,
    categorical_sample,
    mask_logits,
    masked_cdf,
    multinomial_logprob,
    multinomial_sample,
    pick_index,
)


def _logits(*values: float) -> torch.Tensor:
    return torch.tensor(values, dtype=torch.float64)


class TestMaskLogits:
    """Tests for logit masking."""

    def test_invalid_entries_replaced(self):
        """Masked entries become a large negative constant."""
        out = mask_logits(_logits(1.0, 2.0, 3.0), np.array([True, False, True]))
        assert out[0] == 1.0 and out[2] == 3.0
        assert out[1] < -1e8

    def test_batch_broadcast(self):
        """A single mask applies to every row of a batch."""
        out = mask_logits(torch.zeros(4, 3, dtype=torch.float64), np.array([False, True, True]))
        assert (out[:, 0] < -1e8).all()

    def test_length_mismatch(self):
        """Mask and logits must have the same width."""
        with pytest.raises(ValueError, match="mask length"):
            mask_logits(_logits(0.0, 0.0), np.array([True]))

    def test_empty_mask(self):
        """At least one entry must be valid."""
        with pytest.raises(ValueError, match="no valid entry"):
            mask_logits(_logits(0.0, 0.0), np.array([False, False]))


class TestMaskedCategorical:
    """Tests for the single-hop head."""

    def test_sample_and_log_prob(self, stub_uniform):
        """u = 0.25 with two equally likely links picks link 1 with log-probability ln 0.5."""
        head = MaskedCategorical(_logits(0.0, 0.0, 0.0), np.array([True, True, False]))
        index, log_prob = categorical_sample(head, stub_uniform([0.25]))
        assert index == 0
        assert log_prob == pytest.approx(math.log(0.5))

    def test_masked_never_sampled(self, stub_uniform):
        """Masked actions have zero probability even with the largest logit."""
        head = MaskedCategorical(_logits(0.0, 50.0, 0.0), np.array([True, False, True]))
        assert head.probs[1] == 0.0
        picks = {categorical_sample(head, stub_uniform([u]))[0] for u in np.linspace(0, 0.999, 20)}
        assert 1 not in picks

    def test_probs_sum_to_one(self):
        """Valid probabilities form a distribution."""
        head = MaskedCategorical(_logits(0.3, -1.2, 2.0, 0.1), np.array([True, True, False, True]))
        assert head.probs.sum() == pytest.approx(1.0)

    def test_batched_matches_single(self):
        """categorical_log_prob agrees with per-state evaluation."""
        logits = torch.tensor([[0.1, 0.5, -0.3], [1.0, 0.0, 0.0]], dtype=torch.float64)
        masks = torch.tensor([[True, True, False], [False, False, True]])
        actions = torch.tensor([1, 2])
        batch = categorical_log_prob(logits, masks, actions)
        for row in range(2):
            head = MaskedCategorical(logits[row], masks[row].numpy())
            assert batch[row].item() == pytest.approx(head.log_prob(int(actions[row])).item())


class TestLinkMultinomial:
    """Tests for the multi-hop per-link head."""

    def test_even_split_log_prob(self):
        """Two trials split (1, 1) over two equal columns have probability 1/2."""
        head = LinkMultinomial(_logits(0.0, 0.0), 2, np.array([True, True]))
        log_prob, _ = multinomial_logprob(head, [1, 1])
        assert log_prob == pytest.approx(-math.log(2))

    def test_gradient(self):
        """The logit gradient is row - trials * p."""
        logits = _logits(0.2, -0.4, 1.0)
        head = LinkMultinomial(logits, 3, np.array([True, True, True]))
        row = np.array([1, 0, 2])
        _, grad = multinomial_logprob(head, row)
        p = torch.softmax(logits, dim=-1).numpy()
        np.testing.assert_allclose(grad, row - 3 * p, atol=1e-12)

    @pytest.mark.parametrize("trials", [0, 1, 2, 4])
    @pytest.mark.parametrize("columns", [2, 3, 4])
    def test_enumeration_sums_to_one(self, trials, columns):
        """Probabilities of all allocations of y trials sum to 1."""
        rng = np.random.default_rng(trials * 10 + columns)
        head = LinkMultinomial(torch.as_tensor(rng.normal(size=columns)), trials, np.ones(columns, dtype=bool))
        total = 0.0
        for row in itertools.product(range(trials + 1), repeat=columns):
            if sum(row) == trials:
                total += math.exp(multinomial_logprob(head, row)[0])
        assert total == pytest.approx(1.0)

    def test_unused_column_always_allowed(self):
        """Column 0 stays valid whatever the mask says."""
        head = LinkMultinomial(_logits(0.0, 0.0), 1, np.array([False, False]))
        assert head.class_mask.tolist() == [True, False]
        assert head.probs.tolist() == [1.0, 0.0]

    def test_invalid_rows(self):
        """Rows must sum to the trials and avoid masked classes."""
        head = LinkMultinomial(_logits(0.0, 0.0, 0.0), 2, np.array([True, True, False]))
        with pytest.raises(ValueError, match="not a valid allocation"):
            multinomial_logprob(head, [1, 0, 0])
        with pytest.raises(ValueError, match="masked class"):
            multinomial_logprob(head, [1, 0, 1])

    def test_sample(self, stub_uniform):
        """Draws 0.25 and 0.75 over two equal columns give (1, 1)."""
        head = LinkMultinomial(_logits(0.0, 0.0), 2, np.array([True, True]))
        allocation, log_prob = multinomial_sample([head], stub_uniform([0.25, 0.75]))
        assert allocation.tolist() == [[1, 1]]
        assert log_prob == pytest.approx(-math.log(2))

    def test_zero_capacity_link(self, stub_uniform):
        """A link without capacity samples an all-zero row and consumes no draws."""
        empty = LinkMultinomial(_logits(0.0, 0.0), 0, np.array([True, True]))
        full = LinkMultinomial(_logits(0.0, 0.0), 1, np.array([True, True]))
        allocation, log_prob = multinomial_sample([empty, full], stub_uniform([0.75]))
        assert allocation.tolist() == [[0, 0], [0, 1]]
        assert log_prob == pytest.approx(math.log(0.5))

    def test_batched_allocation_log_prob(self):
        """Batched log-probabilities sum the per-link terms."""
        logits = torch.tensor([[[0.0, 0.0], [0.5, -0.5]]], dtype=torch.float64)
        allocations = torch.tensor([[[1, 1], [0, 1]]])
        mask = np.ones((2, 2), dtype=bool)
        batch = allocation_log_prob(logits, mask, allocations)
        expected = sum(
            multinomial_logprob(LinkMultinomial(logits[0, m], int(allocations[0, m].sum()), mask[m]), allocations[0, m].numpy())[0]
            for m in range(2)
        )
        assert batch.item() == pytest.approx(expected)


class TestMaskingInvariance:
    """Raising a masked logit changes nothing observable."""

    def test_categorical(self, stub_uniform):
        """Probabilities, samples and log-probabilities ignore masked logits."""
        mask = np.array([True, True, False, True])
        base = MaskedCategorical(_logits(0.3, -1.0, 2.0, 0.1), mask)
        raised = MaskedCategorical(_logits(0.3, -1.0, 80.0, 0.1), mask)

        np.testing.assert_array_equal(base.probs, raised.probs)
        for u in np.linspace(0.0, 0.999, 25):
            assert categorical_sample(base, stub_uniform([u])) == categorical_sample(raised, stub_uniform([u]))

    def test_multinomial(self, stub_uniform):
        """Per-link probabilities, samples and log-probabilities ignore masked logits."""
        mask = np.array([True, False, True])
        base = LinkMultinomial(_logits(0.2, -0.5, 0.7), 3, mask)
        raised = LinkMultinomial(_logits(0.2, 40.0, 0.7), 3, mask)

        np.testing.assert_array_equal(base.probs, raised.probs)
        draws = [0.1, 0.5, 0.9]
        a_base, lp_base = multinomial_sample([base], stub_uniform(draws))
        a_raised, lp_raised = multinomial_sample([raised], stub_uniform(draws))
        assert a_base.tolist() == a_raised.tolist()
        assert lp_base == lp_raised

        value_base, grad_base = multinomial_logprob(base, [1, 0, 2])
        value_raised, grad_raised = multinomial_logprob(raised, [1, 0, 2])
        assert value_base == value_raised
        np.testing.assert_array_equal(grad_base, grad_raised)


class TestMultinomialGradient:
    """Finite-difference checks of the per-link logit gradient."""

    @pytest.mark.parametrize(
        "mask",
        [np.array([True, True, True, True]), np.array([True, False, True, True])],
    )
    def test_central_difference(self, mask):
        """The analytic gradient matches central differences within 1e-6."""
        logits = _logits(0.4, -0.3, 1.1, -0.8)
        row = np.array([2, 0, 1, 1])
        _, grad = multinomial_logprob(LinkMultinomial(logits, 4, mask), row)

        h = 1e-5
        numeric = np.zeros(4)
        for k in range(4):
            step = torch.zeros(4, dtype=torch.float64)
            step[k] = h
            plus, _ = multinomial_logprob(LinkMultinomial(logits + step, 4, mask), row)
            minus, _ = multinomial_logprob(LinkMultinomial(logits - step, 4, mask), row)
            numeric[k] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(grad, numeric, atol=1e-6)


class TestNoGrad:
    """Heads evaluated inside torch.no_grad, as during rollouts."""

    def test_multinomial_sample(self, stub_uniform):
        """Sampling under no_grad returns the same log-probability as the gradient path."""
        head = LinkMultinomial(_logits(0.3, -0.2, 0.5), 2, np.array([True, True, True]))
        with torch.no_grad():
            allocation, log_prob = multinomial_sample([head], stub_uniform([0.2, 0.9]))
        expected, _ = multinomial_logprob(head, allocation[0])
        assert log_prob == pytest.approx(expected, abs=1e-12)

    def test_logprob_gradient(self):
        """The gradient-returning log-probability also works under no_grad."""
        head = LinkMultinomial(_logits(0.0, 0.0), 2, np.array([True, True]))
        with torch.no_grad():
            value, grad = multinomial_logprob(head, [1, 1])
        assert value == pytest.approx(-math.log(2))
        np.testing.assert_allclose(grad, [0.0, 0.0], atol=1e-12)


class TestSamplingFrequencies:
    """Monte-Carlo checks of sampled frequencies."""

    def test_categorical_frequencies(self):
        """Frequencies over 10^6 draws match the softmax within 3 standard errors."""
        mask = np.array([True, True, False, True])
        head = MaskedCategorical(_logits(0.5, -0.7, 3.0, 0.1), mask)
        n = 1_000_000
        uniforms = np.random.default_rng(7).random(n)
        picks = pick_index(masked_cdf(head.probs, mask), mask, uniforms)
        freq = np.bincount(picks, minlength=4) / n

        p = head.probs
        se = np.sqrt(p * (1 - p) / n)
        assert freq[2] == 0.0
        assert (np.abs(freq - p) <= 3 * se + 1e-12).all()
