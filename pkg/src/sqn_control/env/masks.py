"""
Action masks.

Single-hop masks are recomputed from the state every slot; multi-hop
masks depend only on topology and are computed once per network.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np

if TYPE_CHECKING:
    from sqn_control.env.spec import NetworkConfig
    from sqn_control.env.state import NetworkState

logger = logging.getLogger(__name__)


def work_conserving_mask(state: NetworkState) -> np.ndarray:
    """
    Valid single-hop actions as a boolean vector of length K + 1.

    Entry k is true iff link k has capacity and its queue has packets.
    The last entry (Idle) is true only when no link is usable.
    """
    q = state.q[:, 0]
    links = (q > 0) & (state.y > 0)
    return np.append(links, not links.any())


def topology_graph(config: NetworkConfig) -> nx.DiGraph:
    """Directed graph on 1-based node ids with one edge per link."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(1, config.nodes + 1))
    graph.add_edges_from((link.start, link.end, {"id": link.id}) for link in config.links)
    return graph


def reachability_mask(config: NetworkConfig) -> np.ndarray:
    """
    Classes each link may carry, as an M x K boolean matrix.

    Entry (m, k) is true iff link m ends at class k's destination or at a
    node from which that destination can still be reached without passing
    through another class's destination. Distances come from Dijkstra on
    the reversed graph rooted at each destination, with foreign
    destinations removed.

    Raises:
        ConfigError: If some class cannot reach its destination from its source.
    """
    from sqn_control.env.spec import ConfigError

    reversed_graph = topology_graph(config).reverse(copy=True)
    mask = np.zeros((config.num_links, config.num_classes), dtype=bool)
    ends = np.array([link.end for link in config.links])
    destinations = {cls.destination for cls in config.classes}

    for col, cls in enumerate(config.classes):
        foreign = destinations - {cls.destination, cls.source}
        graph = reversed_graph.subgraph(set(reversed_graph) - foreign)
        distances = nx.single_source_dijkstra_path_length(graph, cls.destination)
        if cls.source not in distances:
            raise ConfigError(
                f"class {cls.id}: destination {cls.destination} unreachable from source {cls.source}"
            )
        reachable = np.array(sorted(distances))
        mask[:, col] = np.isin(ends, reachable)

    logger.debug(f"Reachability mask: {int(mask.sum())}/{mask.size} link-class pairs allowed")
    return mask


def link_class_mask(reachability: np.ndarray) -> np.ndarray:
    """Per-link mask over the K + 1 allocation columns; the unused column is always allowed."""
    unused = np.ones((reachability.shape[0], 1), dtype=bool)
    return np.hstack([unused, reachability])
