"""
Network instances for sqn-control.

Traffic classes, links and whole networks are frozen dataclasses that
validate themselves on construction. Documents are JSON objects with the
fields ``kind``, ``classes`` and ``links`` (plus optional ``name`` and
``nodes``); see ``sqn_control/env/configs`` for the shipped instances.
"""

from __future__ import annotations

import json
import logging
import math
import numbers
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from sqn_control.constants import (
    BASE_STATION_ALIAS,
    PROB_SUM_TOLERANCE,
    SHIPPED_ENVIRONMENTS,
)

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised for malformed or inconsistent network documents."""


class NetworkKind(str, Enum):
    """Task family of a network instance."""

    SINGLE_HOP = "single-hop"
    MULTI_HOP = "multi-hop"


def _is_real(x: Any) -> bool:
    return isinstance(x, numbers.Real) and not isinstance(x, bool) and math.isfinite(x)


def _check_pmf(
    owner: str,
    values: Sequence[Any],
    probs: Sequence[Any],
    fields: tuple[str, str] = ("values", "probs"),
) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """
    Validate a finite discrete distribution given as parallel lists.

    Returns:
        The values as ints and the probabilities as floats.
    """
    value_field, prob_field = fields
    if len(values) == 0:
        raise ConfigError(f"{owner}: empty value list")
    if len(values) != len(probs):
        raise ConfigError(
            f"{owner}: {len(values)} values but {len(probs)} probabilities"
        )
    if any(not _is_real(v) or int(v) != v or v < 0 for v in values):
        raise ConfigError(
            f"{owner}: {value_field} must be finite nonnegative integers, got {list(values)}"
        )
    if len(set(values)) != len(values):
        raise ConfigError(f"{owner}: duplicate values {list(values)}")
    if any(not _is_real(p) or p < 0 for p in probs):
        raise ConfigError(
            f"{owner}: {prob_field} must be finite nonnegative probabilities, got {list(probs)}"
        )
    total = float(sum(probs))
    if abs(total - 1.0) > PROB_SUM_TOLERANCE:
        raise ConfigError(f"{owner}: probabilities sum to {total}, expected 1")
    return tuple(int(v) for v in values), tuple(float(p) for p in probs)


@dataclass(frozen=True)
class TrafficClass:
    """
    A traffic class: packets entering at ``source`` bound for ``destination``.

    Attributes:
        id: 1-based class index k
        source: Arrival node id
        destination: Destination node id
        arrival_values: Possible per-slot arrival counts
        arrival_probs: Probability of each arrival count
    """

    id: int
    source: int
    destination: int
    arrival_values: tuple[int, ...]
    arrival_probs: tuple[float, ...]

    def __post_init__(self) -> None:
        values, probs = _check_pmf(
            f"class {self.id}", self.arrival_values, self.arrival_probs, ("arrival_values", "arrival_probs")
        )
        object.__setattr__(self, "arrival_values", values)
        object.__setattr__(self, "arrival_probs", probs)
        if self.source == self.destination:
            raise ConfigError(f"class {self.id}: source equals destination ({self.source})")

    @property
    def mean_arrivals(self) -> float:
        return float(np.dot(self.arrival_values, self.arrival_probs))

    @property
    def max_arrivals(self) -> int:
        return max(v for v, p in zip(self.arrival_values, self.arrival_probs) if p > 0)


@dataclass(frozen=True)
class LinkSpec:
    """
    A directed link from ``start`` to ``end`` with a random per-slot capacity.

    Attributes:
        id: 1-based link index m
        start: Tail node id
        end: Head node id
        capacity_values: Possible capacities y_m
        capacity_probs: Probability of each capacity
    """

    id: int
    start: int
    end: int
    capacity_values: tuple[int, ...]
    capacity_probs: tuple[float, ...]

    def __post_init__(self) -> None:
        values, probs = _check_pmf(
            f"link {self.id}", self.capacity_values, self.capacity_probs, ("capacity_values", "capacity_probs")
        )
        object.__setattr__(self, "capacity_values", values)
        object.__setattr__(self, "capacity_probs", probs)
        if self.start == self.end:
            raise ConfigError(f"link {self.id}: start equals end ({self.start})")

    @property
    def mean_capacity(self) -> float:
        return float(np.dot(self.capacity_values, self.capacity_probs))


def _pmf_tables(
    pmfs: Sequence[tuple[tuple[int, ...], tuple[float, ...]]],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Pad per-row pmfs into rectangular (values, cdf, size) tables.

    Padding columns carry a cdf of 1.0 so they are never selected by
    inverse-CDF lookup; the last real cdf entry is pinned to exactly 1.0.
    """
    width = max(len(values) for values, _ in pmfs)
    values_table = np.zeros((len(pmfs), width), dtype=np.int64)
    cdf_table = np.ones((len(pmfs), width), dtype=np.float64)
    sizes = np.zeros(len(pmfs), dtype=np.int64)
    for row, (values, probs) in enumerate(pmfs):
        n = len(values)
        values_table[row, :n] = values
        cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
        cdf[-1] = 1.0
        cdf_table[row, :n] = cdf
        sizes[row] = n
    return values_table, cdf_table, sizes


@dataclass(frozen=True)
class NetworkConfig:
    """
    A complete stochastic queueing network instance.

    Node ids are 1-based. Single-hop instances have K user nodes and a base
    station with id K+1; every class k enters at its own node and leaves
    through link k. Multi-hop instances route classes over an arbitrary
    directed graph.
    """

    kind: NetworkKind
    nodes: int
    classes: tuple[TrafficClass, ...]
    links: tuple[LinkSpec, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NetworkKind(self.kind))
        object.__setattr__(self, "classes", tuple(sorted(self.classes, key=lambda c: c.id)))
        object.__setattr__(self, "links", tuple(sorted(self.links, key=lambda m: m.id)))
        self._validate_ids()
        self._validate_nodes()
        if self.kind is NetworkKind.SINGLE_HOP:
            self._validate_single_hop()
        else:
            # Raises ConfigError for a class whose destination is unreachable
            from sqn_control.env.masks import reachability_mask

            reachability_mask(self)

    def _validate_ids(self) -> None:
        if not self.classes:
            raise ConfigError("network has no traffic classes")
        if not self.links:
            raise ConfigError("network has no links")
        for label, ids in (
            ("class", [c.id for c in self.classes]),
            ("link", [m.id for m in self.links]),
        ):
            if len(set(ids)) != len(ids):
                raise ConfigError(f"duplicate {label} ids: {ids}")
            if ids != list(range(1, len(ids) + 1)):
                raise ConfigError(f"{label} ids must be 1..{len(ids)}, got {ids}")

    def _validate_nodes(self) -> None:
        if self.nodes < 2:
            raise ConfigError(f"network needs at least 2 nodes, got {self.nodes}")
        endpoints = [(f"class {c.id}", (c.source, c.destination)) for c in self.classes]
        endpoints += [(f"link {m.id}", (m.start, m.end)) for m in self.links]
        for owner, pair in endpoints:
            for node in pair:
                if not 1 <= node <= self.nodes:
                    raise ConfigError(f"{owner}: node {node} outside 1..{self.nodes}")

    def _validate_single_hop(self) -> None:
        k = len(self.classes)
        base_station = k + 1
        if self.nodes != base_station:
            raise ConfigError(f"single-hop network with {k} classes needs {base_station} nodes")
        if len(self.links) != k:
            raise ConfigError(f"single-hop network needs one link per class ({k}), got {len(self.links)}")
        for cls, link in zip(self.classes, self.links):
            if cls.destination != base_station or link.end != base_station:
                raise ConfigError(f"class {cls.id}: single-hop traffic must end at the base station")
            if link.start != cls.source:
                raise ConfigError(f"link {link.id} must start at class {cls.id}'s source {cls.source}")

    # -- derived quantities ---------------------------------------------------

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def num_links(self) -> int:
        return len(self.links)

    @property
    def is_single_hop(self) -> bool:
        return self.kind is NetworkKind.SINGLE_HOP

    @property
    def queue_shape(self) -> tuple[int, int]:
        """Shape of the backlog matrix q: (K, 1) single-hop, (N, K) multi-hop."""
        if self.is_single_hop:
            return (self.num_classes, 1)
        return (self.nodes, self.num_classes)

    @cached_property
    def sources(self) -> np.ndarray:
        """0-based source node index per class."""
        return np.array([c.source - 1 for c in self.classes], dtype=np.int64)

    @cached_property
    def destinations(self) -> np.ndarray:
        """0-based destination node index per class."""
        return np.array([c.destination - 1 for c in self.classes], dtype=np.int64)

    @cached_property
    def link_starts(self) -> np.ndarray:
        return np.array([m.start - 1 for m in self.links], dtype=np.int64)

    @cached_property
    def link_ends(self) -> np.ndarray:
        return np.array([m.end - 1 for m in self.links], dtype=np.int64)

    @cached_property
    def arrival_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _pmf_tables([(c.arrival_values, c.arrival_probs) for c in self.classes])

    @cached_property
    def capacity_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _pmf_tables([(m.capacity_values, m.capacity_probs) for m in self.links])

    @property
    def max_slot_arrivals(self) -> int:
        """Largest total number of packets that can arrive in one slot."""
        return sum(c.max_arrivals for c in self.classes)

    def to_dict(self) -> dict[str, Any]:
        """Serialize back to the document schema."""
        return {
            "name": self.name,
            "kind": self.kind.value,
            "nodes": self.nodes,
            "classes": [
                {
                    "id": c.id,
                    "source": c.source,
                    "destination": c.destination,
                    "arrival_values": list(c.arrival_values),
                    "arrival_probs": list(c.arrival_probs),
                }
                for c in self.classes
            ],
            "links": [
                {
                    "id": m.id,
                    "start": m.start,
                    "end": m.end,
                    "capacity_values": list(m.capacity_values),
                    "capacity_probs": list(m.capacity_probs),
                }
                for m in self.links
            ],
        }


# =============================================================================
# LOADING
# =============================================================================

_CLASS_FIELDS = ("id", "source", "destination", "arrival_values", "arrival_probs")
_LINK_FIELDS = ("id", "start", "end", "capacity_values", "capacity_probs")


def _require(entry: Mapping[str, Any], fields: Sequence[str], owner: str) -> None:
    if not isinstance(entry, Mapping):
        raise ConfigError(f"{owner}: expected an object, got {type(entry).__name__}")
    missing = [f for f in fields if f not in entry]
    if missing:
        raise ConfigError(f"{owner}: missing fields {missing}")


def _node_id(value: Any, base_station: int | None, owner: str) -> int:
    """Resolve a node reference, accepting the base-station alias for single-hop."""
    if isinstance(value, str):
        if value.upper() == BASE_STATION_ALIAS and base_station is not None:
            return base_station
        raise ConfigError(f"{owner}: unknown node reference {value!r}")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{owner}: node ids must be integers, got {value!r}")
    return value


def load_config(document: str | Mapping[str, Any]) -> NetworkConfig:
    """
    Parse and validate a network document.

    Args:
        document: JSON text or an already-decoded mapping.

    Returns:
        A validated NetworkConfig.

    Raises:
        ConfigError: If the document is malformed or describes an invalid network.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid network document: {e}") from e
    else:
        data = document

    if not isinstance(data, Mapping):
        raise ConfigError("Network document must be a JSON object")
    _require(data, ("kind", "classes", "links"), "network")

    try:
        kind = NetworkKind(data["kind"])
    except ValueError as e:
        valid = ", ".join(k.value for k in NetworkKind)
        raise ConfigError(f"Unknown network kind {data['kind']!r}. Valid: {valid}") from e

    raw_classes = data["classes"]
    raw_links = data["links"]
    if not isinstance(raw_classes, list) or not isinstance(raw_links, list):
        raise ConfigError("'classes' and 'links' must be lists")

    base_station = len(raw_classes) + 1 if kind is NetworkKind.SINGLE_HOP else None
    nodes = data.get("nodes", base_station)
    if nodes is None:
        raise ConfigError("multi-hop documents must declare 'nodes'")

    classes = []
    for i, entry in enumerate(raw_classes):
        owner = f"classes[{i}]"
        _require(entry, _CLASS_FIELDS, owner)
        classes.append(
            TrafficClass(
                id=int(entry["id"]),
                source=_node_id(entry["source"], base_station, owner),
                destination=_node_id(entry["destination"], base_station, owner),
                arrival_values=tuple(entry["arrival_values"]),
                arrival_probs=tuple(entry["arrival_probs"]),
            )
        )

    links = []
    for i, entry in enumerate(raw_links):
        owner = f"links[{i}]"
        _require(entry, _LINK_FIELDS, owner)
        links.append(
            LinkSpec(
                id=int(entry["id"]),
                start=_node_id(entry["start"], base_station, owner),
                end=_node_id(entry["end"], base_station, owner),
                capacity_values=tuple(entry["capacity_values"]),
                capacity_probs=tuple(entry["capacity_probs"]),
            )
        )

    config = NetworkConfig(
        kind=kind,
        nodes=int(nodes),
        classes=tuple(classes),
        links=tuple(links),
        name=str(data.get("name", "")),
    )
    logger.debug(
        f"Loaded {kind.value} network {config.name or '<unnamed>'}: "
        f"K={config.num_classes} M={config.num_links} N={config.nodes}"
    )
    return config


def load_config_file(path: str | Path) -> NetworkConfig:
    """Load a network document from disk."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Network document not found: {path}")
    config = load_config(path.read_text(encoding="utf-8"))
    if not config.name:
        object.__setattr__(config, "name", path.stem)
    return config


def load_shipped(name: str) -> NetworkConfig:
    """Load one of the packaged instances (sh1, sh2, mh1, mh2)."""
    key = name.lower()
    if key not in SHIPPED_ENVIRONMENTS:
        raise ConfigError(f"Unknown environment {name!r}. Shipped: {', '.join(SHIPPED_ENVIRONMENTS)}")
    text = resources.files("sqn_control.env.configs").joinpath(f"{key}.json").read_text(encoding="utf-8")
    return load_config(text)


def resolve_config(reference: str | Path) -> NetworkConfig:
    """Resolve a shipped environment name or a path to a document."""
    if isinstance(reference, str) and reference.lower() in SHIPPED_ENVIRONMENTS:
        return load_shipped(reference)
    return load_config_file(reference)
