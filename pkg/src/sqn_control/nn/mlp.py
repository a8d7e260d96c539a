"""
Multilayer perceptron shared by the actor and the critic.

Everything runs in float64 on the CPU. Gradients come from
``torch.autograd`` and are handed around as plain name -> tensor maps so
that the optimizer step can reject non-finite values before touching the
parameters.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Union

import numpy as np
import torch
from torch import nn

from sqn_control.constants import HIDDEN_GAIN, HIDDEN_WIDTHS

ArrayLike = Union[np.ndarray, torch.Tensor, Sequence[float]]

# Parameter name -> gradient; the key "input" holds the input gradient when requested
GradBundle = dict[str, torch.Tensor]

DTYPE = torch.float64


class Mlp(nn.Module):
    """
    Affine-tanh stack with an identity output layer.

    Attributes:
        widths: Layer widths from input to output, e.g. (d, 64, 64, k)
        layers: One ``nn.Linear`` per consecutive pair of widths
    """

    def __init__(
        self,
        input_dim: int,
        output_dim: int,
        hidden: Sequence[int] = HIDDEN_WIDTHS,
        output_gain: float = 1.0,
        seed: int | None = None,
    ) -> None:
        super().__init__()
        self.widths = (input_dim, *hidden, output_dim)
        self.layers = nn.ModuleList(
            nn.Linear(a, b, dtype=DTYPE) for a, b in zip(self.widths[:-1], self.widths[1:])
        )
        self.reset_parameters(output_gain, seed)

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    @property
    def num_parameters(self) -> int:
        return sum((a + 1) * b for a, b in zip(self.widths[:-1], self.widths[1:]))

    def reset_parameters(self, output_gain: float = 1.0, seed: int | None = None) -> None:
        """Orthogonal weights (gain sqrt 2, last layer ``output_gain``), zero biases."""
        with torch.random.fork_rng(devices=[]):
            if seed is not None:
                torch.manual_seed(seed)
            for i, layer in enumerate(self.layers):
                gain = output_gain if i == len(self.layers) - 1 else HIDDEN_GAIN
                nn.init.orthogonal_(layer.weight, gain=gain)
                nn.init.zeros_(layer.bias)

    def zero_(self) -> Mlp:
        """Set every weight and bias to zero."""
        with torch.no_grad():
            for p in self.parameters():
                p.zero_()
        return self

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        *hidden, last = self.layers
        for layer in hidden:
            x = torch.tanh(layer(x))
        return last(x)  # type: ignore[no-any-return]


def as_tensor(x: ArrayLike) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x) if not isinstance(x, torch.Tensor) else x, dtype=DTYPE)


def forward(mlp: Mlp, x: ArrayLike) -> torch.Tensor:
    """
    Evaluate the network on one input vector or a batch of rows.

    Raises:
        ValueError: If the trailing dimension differs from the input width.
    """
    inputs = as_tensor(x)
    if inputs.shape[-1] != mlp.input_dim:
        raise ValueError(f"input width {inputs.shape[-1]}, network expects {mlp.input_dim}")
    return mlp(inputs)


def backward(
    mlp: Mlp,
    x: ArrayLike,
    output_grad: ArrayLike,
) -> GradBundle:
    """
    Reverse-mode gradient of ``forward(mlp, x) . output_grad``.

    Returns:
        Gradients keyed by parameter name, plus ``"input"``.

    Raises:
        ValueError: If ``output_grad`` does not match the output shape.
    """
    inputs = as_tensor(x).clone().requires_grad_(True)
    outputs = forward(mlp, inputs)
    g = as_tensor(output_grad)
    if g.shape != outputs.shape:
        raise ValueError(f"output_grad shape {tuple(g.shape)}, expected {tuple(outputs.shape)}")
    names, params = zip(*mlp.named_parameters())
    grads = torch.autograd.grad(outputs, (*params, inputs), grad_outputs=g, allow_unused=True)
    bundle = {name: grad for name, grad in zip(names, grads[:-1])}
    bundle["input"] = grads[-1]
    return bundle


def loss_gradients(mlp: Mlp, loss: torch.Tensor) -> GradBundle:
    """Gradients of a scalar loss with respect to every parameter of ``mlp``."""
    names, params = zip(*mlp.named_parameters())
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return {
        name: grad if grad is not None else torch.zeros_like(p)
        for name, p, grad in zip(names, params, grads)
    }


def symlog(x: ArrayLike) -> np.ndarray | torch.Tensor:
    """Elementwise sign(x) * ln(1 + |x|); tensors in, tensors out."""
    if isinstance(x, torch.Tensor):
        return torch.sign(x) * torch.log1p(torch.abs(x))
    arr = np.asarray(x, dtype=np.float64)
    return np.sign(arr) * np.log1p(np.abs(arr))
