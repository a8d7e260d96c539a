"""
Action distributions over valid network actions.

Single-hop policies use a masked categorical over {link 1..K, Idle}.
Multi-hop policies use one multinomial per link over {unused, class 1..K}
with the link capacity as the number of trials, so every sample meets the
capacity constraint with equality.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch

from sqn_control.constants import MASK_VALUE
from sqn_control.env.sampling import UniformSource


def mask_logits(logits: torch.Tensor, mask: torch.Tensor | np.ndarray) -> torch.Tensor:
    """
    Replace invalid logits with a large negative constant.

    Works on a single vector or on a batch with the mask broadcast against
    the trailing dimension.

    Raises:
        ValueError: If the shapes disagree or some row has no valid entry.
    """
    mask_t = torch.as_tensor(mask, dtype=torch.bool)
    if mask_t.shape[-1] != logits.shape[-1]:
        raise ValueError(f"mask length {mask_t.shape[-1]} != logits length {logits.shape[-1]}")
    if not mask_t.any(dim=-1).all():
        raise ValueError("mask has no valid entry")
    return torch.where(mask_t, logits, torch.full_like(logits, MASK_VALUE))


def masked_cdf(probs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Cumulative distribution with masked mass forced to exactly zero."""
    p = np.where(mask, probs, 0.0)
    cdf = np.cumsum(p)
    return cdf / cdf[-1]


def pick_index(cdf: np.ndarray, mask: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    index = np.searchsorted(cdf, uniforms, side="right")
    # Guard against rounding at the top end: fall back to the last valid entry
    return np.minimum(index, np.flatnonzero(mask)[-1])


@dataclass
class MaskedCategorical:
    """
    Categorical distribution over one slot's single-hop actions.

    Attributes:
        logits: Unnormalized scores, length K + 1 (Idle last)
        mask: Valid entries
    """

    logits: torch.Tensor
    mask: np.ndarray

    def __post_init__(self) -> None:
        self.mask = np.asarray(self.mask, dtype=bool)
        self.masked = mask_logits(self.logits, self.mask)

    @property
    def log_probs(self) -> torch.Tensor:
        return torch.log_softmax(self.masked, dim=-1)

    @property
    def probs(self) -> np.ndarray:
        p = torch.softmax(self.masked, dim=-1).detach().numpy()
        return np.where(self.mask, p, 0.0)

    def log_prob(self, index: int) -> torch.Tensor:
        return self.log_probs[index]


def categorical_sample(head: MaskedCategorical, rng: UniformSource) -> tuple[int, float]:
    """Draw an action index with one uniform and return it with its log-probability."""
    u = np.asarray(rng.random(1))
    index = int(pick_index(masked_cdf(head.probs, head.mask), head.mask, u)[0])
    return index, float(head.log_prob(index))


@dataclass
class LinkMultinomial:
    """
    Allocation distribution for one link.

    Attributes:
        logits: Scores over {unused, class 1..K}
        trials: Link capacity y_m for this slot
        class_mask: Allowed columns; column 0 (unused) is always allowed
    """

    logits: torch.Tensor
    trials: int
    class_mask: np.ndarray

    def __post_init__(self) -> None:
        self.class_mask = np.asarray(self.class_mask, dtype=bool).copy()
        self.class_mask[0] = True
        self.trials = int(self.trials)
        if self.trials < 0:
            raise ValueError(f"negative trial count {self.trials}")
        self.masked = mask_logits(self.logits, self.class_mask)

    @property
    def probs(self) -> np.ndarray:
        p = torch.softmax(self.masked, dim=-1).detach().numpy()
        return np.where(self.class_mask, p, 0.0)


def sample_counts(probs: np.ndarray, mask: np.ndarray, trials: int, rng: UniformSource) -> np.ndarray:
    """Multinomial counts from ``trials`` independent inverse-CDF draws."""
    if trials == 0:
        return np.zeros(len(probs), dtype=np.int64)
    picks = pick_index(masked_cdf(probs, mask), mask, np.asarray(rng.random(trials)))
    return np.bincount(picks, minlength=len(probs)).astype(np.int64)


def multinomial_logprob(head: LinkMultinomial, row: Sequence[int] | np.ndarray) -> tuple[float, np.ndarray]:
    """
    Log-probability of an allocation row and its gradient with respect to the logits.

    The gradient equals ``row - trials * p``.

    Raises:
        ValueError: If the row does not sum to the trial count, has negative
            entries, or places packets on a masked class.
    """
    counts = np.asarray(row, dtype=np.int64)
    if (counts < 0).any() or counts.sum() != head.trials:
        raise ValueError(f"row {counts.tolist()} is not a valid allocation of {head.trials} trials")
    if (counts[~head.class_mask] > 0).any():
        raise ValueError("row allocates capacity to a masked class (log-probability -inf)")

    with torch.enable_grad():
        logits = head.logits.detach().clone().requires_grad_(True)
        value = link_log_prob(mask_logits(logits, head.class_mask), torch.as_tensor(counts, dtype=logits.dtype))
        (grad,) = torch.autograd.grad(value, logits)
    return float(value), grad.numpy()


def link_log_prob(masked_logits: torch.Tensor, counts: torch.Tensor) -> torch.Tensor:
    """
    Multinomial log-pmf along the last dimension.

    sum_k A_k ln p_k + ln Gamma(n + 1) - sum_k ln Gamma(A_k + 1)
    """
    log_p = torch.log_softmax(masked_logits, dim=-1)
    # 0 * (-1e9) is 0, so masked columns with zero counts contribute nothing
    weighted = (counts * log_p).sum(dim=-1)
    n = counts.sum(dim=-1)
    return weighted + torch.lgamma(n + 1) - torch.lgamma(counts + 1).sum(dim=-1)


def multinomial_sample(heads: Sequence[LinkMultinomial], rng: UniformSource) -> tuple[np.ndarray, float]:
    """
    Sample a full allocation matrix, one row per link, and its total log-probability.
    """
    rows = [sample_counts(h.probs, h.class_mask, h.trials, rng) for h in heads]
    allocation = np.vstack(rows) if rows else np.zeros((0, 0), dtype=np.int64)
    total = 0.0
    with torch.no_grad():
        for head, row in zip(heads, rows):
            if head.trials > 0:
                counts = torch.as_tensor(row, dtype=head.masked.dtype)
                total += float(link_log_prob(head.masked.detach(), counts))
    return allocation, total


# =============================================================================
# BATCHED LOG-PROBABILITIES FOR TRAINING
# =============================================================================


def categorical_log_prob(
    logits: torch.Tensor,
    masks: torch.Tensor,
    actions: torch.Tensor,
) -> torch.Tensor:
    """Log pi(a|s) for a batch: logits and masks (B, A), actions (B,)."""
    log_p = torch.log_softmax(mask_logits(logits, masks), dim=-1)
    return log_p.gather(-1, actions.long().unsqueeze(-1)).squeeze(-1)


def allocation_log_prob(
    logits: torch.Tensor,
    class_mask: torch.Tensor | np.ndarray,
    allocations: torch.Tensor,
) -> torch.Tensor:
    """Log pi(A|s) for a batch: logits and allocations (B, M, K + 1), mask (M, K + 1)."""
    masked = mask_logits(logits, class_mask)
    return link_log_prob(masked, allocations.to(logits.dtype)).sum(dim=-1)
