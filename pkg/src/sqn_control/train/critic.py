"""
Critic with an average value constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import torch

from sqn_control.constants import CRITIC_BIAS_COEF, CRITIC_BIAS_STEP
from sqn_control.nn.mlp import Mlp, forward, loss_gradients
from sqn_control.nn.optim import OptState, opt_step
from sqn_control.train.losses import critic_loss


@dataclass
class CriticState:
    """
    Value network plus the running estimate of its mean output.

    Attributes:
        mlp: Value network V_phi
        opt: Optimizer state for ``mlp``
        bias: Exponential moving average of mean predicted value
        step: Moving-average step size
        nu: Weight of the bias term in the loss
        eta: Latest average shaped cost estimate
    """

    mlp: Mlp
    opt: OptState = field(init=False)
    bias: float = 0.0
    step: float = CRITIC_BIAS_STEP
    nu: float = CRITIC_BIAS_COEF
    eta: float = 0.0
    lr: float | None = None

    def __post_init__(self) -> None:
        if self.nu < 0:
            raise ValueError(f"critic bias coefficient must be nonnegative, got {self.nu}")
        if not 0.0 <= self.step <= 1.0:
            raise ValueError(f"critic bias step must lie in [0, 1], got {self.step}")
        self.opt = OptState(self.mlp) if self.lr is None else OptState(self.mlp, lr=self.lr)

    def values(self, obs: torch.Tensor) -> torch.Tensor:
        return forward(self.mlp, obs).squeeze(-1)

    def train_step(self, obs: torch.Tensor, targets: torch.Tensor) -> float:
        """One descent step on the constrained squared error; returns the loss."""
        loss = critic_loss(self.values(obs), targets, self.bias, self.nu)
        opt_step(self.mlp, loss_gradients(self.mlp, loss), self.opt)
        return float(loss)

    def update_bias(self, obs: torch.Tensor) -> float:
        """b <- (1 - step) b + step * mean V(s)."""
        with torch.no_grad():
            mean_value = float(self.values(obs).mean())
        self.bias = (1.0 - self.step) * self.bias + self.step * mean_value
        return self.bias

    def state_dict(self) -> dict[str, Any]:
        return {
            "mlp": self.mlp.state_dict(),
            "opt": self.opt.state_dict(),
            "bias": self.bias,
            "eta": self.eta,
        }

    def load_state_dict(self, state: dict[str, Any]) -> None:
        self.mlp.load_state_dict(state["mlp"])
        self.opt.load_state_dict(state["opt"])
        self.bias = float(state["bias"])
        self.eta = float(state["eta"])
