"""
Base class for network control policies.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from sqn_control.env.network import Action
    from sqn_control.env.sampling import UniformSource
    from sqn_control.env.spec import NetworkConfig
    from sqn_control.env.state import NetworkState


class Policy(ABC):
    """
    Abstract base class for policies.

    A policy maps the observed state of a network to an action of the
    matching variant: a link index for single-hop networks, an allocation
    matrix for multi-hop networks.
    """

    name: str = "base"
    description: str = "Base policy"

    def __init__(self, config: NetworkConfig) -> None:
        """
        Initialize the policy.

        Args:
            config: Network instance the policy controls.
        """
        self.config = config

    @abstractmethod
    def act(self, state: NetworkState, rng: UniformSource) -> Action:
        """
        Choose an action.

        Args:
            state: Current queue and link state.
            rng: Policy random stream; deterministic policies ignore it.

        Returns:
            An action valid for the network kind.
        """
        ...
