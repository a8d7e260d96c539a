"""
Adaptive-moment optimizer state and update step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import torch

from sqn_control.constants import ADAM_BETAS, ADAM_EPS, LEARNING_RATE
from sqn_control.nn.mlp import GradBundle, Mlp


@dataclass
class OptState:
    """
    Adam state bound to one network.

    Attributes:
        mlp: Network whose parameters are updated in place
        lr: Step size
        betas: First and second moment decay rates
        eps: Denominator epsilon
    """

    mlp: Mlp
    lr: float = LEARNING_RATE
    betas: tuple[float, float] = ADAM_BETAS
    eps: float = ADAM_EPS
    optimizer: torch.optim.Adam = field(init=False)

    def __post_init__(self) -> None:
        self.optimizer = torch.optim.Adam(
            self.mlp.parameters(), lr=self.lr, betas=self.betas, eps=self.eps
        )

    @property
    def steps(self) -> int:
        states = [s for s in self.optimizer.state.values() if "step" in s]
        return int(states[0]["step"]) if states else 0

    def state_dict(self) -> dict[str, Any]:
        return self.optimizer.state_dict()

    def load_state_dict(self, state: dict[str, Any]) -> None:
        self.optimizer.load_state_dict(state)


def opt_step(mlp: Mlp, grads: GradBundle, opt: OptState) -> Mlp:
    """
    Apply one descent step with the given gradients.

    Raises:
        ValueError: If a gradient is missing or has the wrong shape.
        FloatingPointError: If any gradient is non-finite. Parameters are untouched.
    """
    named = dict(mlp.named_parameters())
    for name, p in named.items():
        g = grads.get(name)
        if g is None or g.shape != p.shape:
            raise ValueError(f"gradient for {name!r} missing or misshapen")
        if not torch.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for {name!r}")

    for name, p in named.items():
        p.grad = grads[name].detach().clone()
    opt.optimizer.step()
    opt.optimizer.zero_grad(set_to_none=True)
    return mlp
