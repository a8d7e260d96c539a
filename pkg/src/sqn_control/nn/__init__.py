"""
Function approximation for the actor and critic.
"""

from sqn_control.nn.mlp import GradBundle, Mlp, backward, forward, loss_gradients, symlog
from sqn_control.nn.optim import OptState, opt_step

__all__ = [
    "GradBundle",
    "Mlp",
    "OptState",
    "backward",
    "forward",
    "loss_gradients",
    "opt_step",
    "symlog",
]
