"""
Policy and critic losses.

Costs are minimized, so a positive advantage means the action was worse
than average and gradient descent pushes its probability down. Policy
losses only count steps where the learned policy acted; the critic loss
uses every step.
"""

from __future__ import annotations

import torch

from sqn_control.constants import CLIP_FORM_LITERAL, CLIP_FORM_STANDARD, CLIP_FORMS


def _free_terms(terms: torch.Tensor, intervened: torch.Tensor) -> torch.Tensor:
    return torch.where(intervened, torch.zeros_like(terms), terms)


def ia_pg_loss(
    log_probs: torch.Tensor,
    advantages: torch.Tensor,
    intervened: torch.Tensor,
    normalizer: int | None = None,
) -> torch.Tensor:
    """
    (1/T) sum_t (1 - I_t) A_t log pi(a_t | s_t).

    Entries of ``log_probs`` at intervened steps are ignored, NaN included.
    """
    t = len(advantages) if normalizer is None else normalizer
    safe = _free_terms(log_probs, intervened)
    return _free_terms(advantages * safe, intervened).sum() / t


def clip_advantage(advantages: torch.Tensor, eps: float) -> torch.Tensor:
    """(1 + eps) A for A >= 0, (1 - eps) A otherwise."""
    return torch.where(advantages >= 0, (1 + eps) * advantages, (1 - eps) * advantages)


def ia_ppo_loss(
    log_probs: torch.Tensor,
    behavior_log_probs: torch.Tensor,
    advantages: torch.Tensor,
    intervened: torch.Tensor,
    eps: float,
    form: str = CLIP_FORM_STANDARD,
    normalizer: int | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Clipped surrogate (1/T) sum_t (1 - I_t) max(A_t R_t, clip term).

    The standard form clips the ratio, clip(R, 1 - eps, 1 + eps) * A; the
    literal form clips the advantage alone and ignores R.

    Returns:
        (loss, per-step ratios with 1 at intervened steps)

    Raises:
        ValueError: On an unknown form or eps outside (0, 1).
        FloatingPointError: If any ratio at a free step is non-finite.
    """
    if form not in CLIP_FORMS:
        raise ValueError(f"Unknown clip form {form!r}. Valid: {', '.join(sorted(CLIP_FORMS))}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"clip epsilon must lie in (0, 1), got {eps}")
    t = len(advantages) if normalizer is None else normalizer

    log_ratio = _free_terms(log_probs - behavior_log_probs, intervened)
    ratio = torch.exp(log_ratio)
    if not torch.isfinite(ratio).all():
        raise FloatingPointError("non-finite probability ratio")

    unclipped = advantages * ratio
    if form == CLIP_FORM_LITERAL:
        clipped = clip_advantage(advantages, eps)
    else:
        clipped = torch.clamp(ratio, 1.0 - eps, 1.0 + eps) * advantages
    terms = torch.maximum(unclipped, clipped)
    return _free_terms(terms, intervened).sum() / t, ratio


def critic_loss(
    values: torch.Tensor,
    targets: torch.Tensor,
    bias: float,
    nu: float,
) -> torch.Tensor:
    """(1/T) sum_t 1/2 (V(s_t) - target_t + nu * b)^2 over all steps."""
    return 0.5 * ((values - targets + nu * bias) ** 2).mean()
