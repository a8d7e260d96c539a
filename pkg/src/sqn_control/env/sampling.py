"""
Random streams and inverse-CDF sampling of arrivals and link states.

Each experiment seed is split into three independent generators so that
the arrival and link-state sequences do not depend on how many draws a
policy consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np

if TYPE_CHECKING:
    from sqn_control.env.spec import NetworkConfig


class UniformSource(Protocol):
    """Anything that can hand out uniform draws in [0, 1)."""

    def random(self, size: int) -> np.ndarray: ...


@dataclass
class RandomStreams:
    """
    Dedicated generators for one simulation.

    Attributes:
        arrivals: Stream used only for arrival counts
        links: Stream used only for link capacities
        policy: Stream for action sampling and minibatch shuffling
    """

    arrivals: np.random.Generator
    links: np.random.Generator
    policy: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> RandomStreams:
        arrivals, links, policy = np.random.SeedSequence(seed).spawn(3)
        return cls(
            arrivals=np.random.default_rng(arrivals),
            links=np.random.default_rng(links),
            policy=np.random.default_rng(policy),
        )

    def get_state(self) -> dict[str, Any]:
        """Bit-generator states, enough to resume every stream exactly."""
        return {
            "arrivals": self.arrivals.bit_generator.state,
            "links": self.links.bit_generator.state,
            "policy": self.policy.bit_generator.state,
        }

    def set_state(self, state: dict[str, Any]) -> None:
        self.arrivals.bit_generator.state = state["arrivals"]
        self.links.bit_generator.state = state["links"]
        self.policy.bit_generator.state = state["policy"]


def inverse_cdf(
    uniforms: np.ndarray,
    values: np.ndarray,
    cdf: np.ndarray,
) -> np.ndarray:
    """
    Map one uniform per row to a value of that row's distribution.

    Row r selects ``values[r, j]`` for the first j with ``u_r < cdf[r, j]``,
    so values carrying zero probability are never returned.
    """
    index = (uniforms[:, None] >= cdf).sum(axis=1)
    index = np.minimum(index, cdf.shape[1] - 1)
    return values[np.arange(values.shape[0]), index]


def sample_arrivals(config: NetworkConfig, rng: UniformSource) -> np.ndarray:
    """Draw the per-class arrival vector for one slot."""
    values, cdf, _ = config.arrival_tables
    return inverse_cdf(np.asarray(rng.random(config.num_classes)), values, cdf)


def sample_link_states(config: NetworkConfig, rng: UniformSource) -> np.ndarray:
    """Draw the length-M capacity vector for one slot."""
    values, cdf, _ = config.capacity_tables
    return inverse_cdf(np.asarray(rng.random(config.num_links)), values, cdf)
