"""Tests for network documents and their validation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest

from sqn_control.env.spec import (
    ConfigError,
    NetworkKind,
    load_config,
    load_config_file,
    load_shipped,
    resolve_config,
)


def _single_hop_doc(**overrides: Any) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "kind": "single-hop",
        "classes": [
            {"id": 1, "source": 1, "destination": "BS", "arrival_values": [0, 1], "arrival_probs": [0.5, 0.5]},
            {"id": 2, "source": 2, "destination": "BS", "arrival_values": [0, 1], "arrival_probs": [0.5, 0.5]},
        ],
        "links": [
            {"id": 1, "start": 1, "end": "BS", "capacity_values": [1], "capacity_probs": [1.0]},
            {"id": 2, "start": 2, "end": "BS", "capacity_values": [1], "capacity_probs": [1.0]},
        ],
    }
    doc.update(overrides)
    return doc


def _line_doc(links: list[dict[str, Any]]) -> dict[str, Any]:
    return {
        "kind": "multi-hop",
        "nodes": 3,
        "classes": [
            {"id": 1, "source": 1, "destination": 3, "arrival_values": [0, 1], "arrival_probs": [0.5, 0.5]},
        ],
        "links": links,
    }


class TestShippedEnvironments:
    """Tests for the packaged instances."""

    def test_sh1(self, sh1):
        """SH1 has two classes and two links with the tabulated class 1 arrivals."""
        assert sh1.kind is NetworkKind.SINGLE_HOP
        assert sh1.num_classes == 2
        assert sh1.num_links == 2
        assert sh1.nodes == 3
        assert sh1.classes[0].arrival_values == (0, 1)
        assert sh1.classes[0].arrival_probs == (0.7, 0.3)

    def test_mh2(self, mh2):
        """MH2 has four classes, thirteen links and eight nodes."""
        assert mh2.kind is NetworkKind.MULTI_HOP
        assert (mh2.num_classes, mh2.num_links, mh2.nodes) == (4, 13, 8)

    @pytest.mark.parametrize("name", ["sh1", "sh2", "mh1", "mh2"])
    def test_resolve_by_name(self, name):
        """Every shipped name resolves and keeps its name."""
        config = resolve_config(name)
        assert config.name == name

    def test_unknown_shipped(self):
        """Unknown shipped names raise ConfigError."""
        with pytest.raises(ConfigError, match="Unknown environment"):
            load_shipped("sh9")

    def test_queue_shapes(self, sh2, mh1):
        """Backlog matrices are (K, 1) single-hop and (N, K) multi-hop."""
        assert sh2.queue_shape == (4, 1)
        assert mh1.queue_shape == (4, 2)

    def test_max_slot_arrivals(self, mh2):
        """Largest single-slot arrival total sums the per-class maxima."""
        assert mh2.max_slot_arrivals == 4 + 3 + 3 + 2


class TestLoadConfig:
    """Tests for document parsing and validation."""

    def test_json_text(self):
        """JSON text and mappings give equal configs."""
        doc = _single_hop_doc()
        assert load_config(json.dumps(doc)) == load_config(doc)

    def test_base_station_alias(self):
        """'BS' resolves to node K + 1 and nodes defaults to K + 1."""
        config = load_config(_single_hop_doc())
        assert config.nodes == 3
        assert all(c.destination == 3 for c in config.classes)
        assert all(m.end == 3 for m in config.links)

    def test_probabilities_must_sum_to_one(self):
        """Class probs [0.5, 0.4] are rejected."""
        doc = _single_hop_doc()
        doc["classes"][0]["arrival_probs"] = [0.5, 0.4]
        with pytest.raises(ConfigError, match="sum to"):
            load_config(doc)

    def test_mismatched_lengths(self):
        """Value and probability lists must align."""
        doc = _single_hop_doc()
        doc["links"][0]["capacity_probs"] = [0.5, 0.5]
        with pytest.raises(ConfigError, match="probabilities"):
            load_config(doc)

    def test_negative_values(self):
        """Arrival counts must be nonnegative integers."""
        doc = _single_hop_doc()
        doc["classes"][1]["arrival_values"] = [-1, 1]
        with pytest.raises(ConfigError, match="nonnegative"):
            load_config(doc)

    @pytest.mark.parametrize(
        "group, key, bad",
        [
            ("classes", "arrival_values", [float("inf"), 1]),
            ("classes", "arrival_values", ["two", 1]),
            ("links", "capacity_values", [1.5]),
            ("links", "capacity_probs", [float("nan")]),
            ("classes", "arrival_probs", ["half", 0.5]),
        ],
    )
    def test_non_numeric_or_non_finite(self, group, key, bad):
        """Infinite, fractional and non-numeric table entries are ConfigErrors naming the field."""
        doc = _single_hop_doc()
        doc[group][0][key] = bad
        with pytest.raises(ConfigError, match=key):
            load_config(doc)

    def test_duplicate_ids(self):
        """Duplicate class ids are rejected."""
        doc = _single_hop_doc()
        doc["classes"][1]["id"] = 1
        with pytest.raises(ConfigError, match="duplicate"):
            load_config(doc)

    def test_missing_fields(self):
        """Missing required fields are named."""
        doc = _single_hop_doc()
        del doc["links"][0]["capacity_values"]
        with pytest.raises(ConfigError, match="capacity_values"):
            load_config(doc)

    def test_unknown_kind(self):
        """Unknown network kinds are rejected."""
        with pytest.raises(ConfigError, match="Unknown network kind"):
            load_config(_single_hop_doc(kind="mesh"))

    def test_invalid_json(self):
        """Malformed JSON raises ConfigError."""
        with pytest.raises(ConfigError, match="Invalid network document"):
            load_config("{not json")

    def test_single_hop_topology(self):
        """Single-hop links must start at their class's source."""
        doc = _single_hop_doc()
        doc["links"][0]["start"] = 2
        with pytest.raises(ConfigError, match="must start"):
            load_config(doc)

    def test_multi_hop_needs_nodes(self):
        """Multi-hop documents must declare their node count."""
        doc = _line_doc([])
        del doc["nodes"]
        with pytest.raises(ConfigError, match="nodes"):
            load_config(doc)

    def test_unreachable_destination(self):
        """A class whose source has no path to its destination is rejected."""
        doc = _line_doc([
            {"id": 1, "start": 1, "end": 2, "capacity_values": [1], "capacity_probs": [1.0]},
            {"id": 2, "start": 3, "end": 2, "capacity_values": [1], "capacity_probs": [1.0]},
        ])
        with pytest.raises(ConfigError, match="unreachable"):
            load_config(doc)

    def test_links_sorted_by_id(self):
        """Links are stored in ascending id regardless of document order."""
        doc = _line_doc([
            {"id": 2, "start": 2, "end": 3, "capacity_values": [1], "capacity_probs": [1.0]},
            {"id": 1, "start": 1, "end": 2, "capacity_values": [1], "capacity_probs": [1.0]},
        ])
        config = load_config(doc)
        assert [m.id for m in config.links] == [1, 2]
        assert config.link_starts.tolist() == [0, 1]

    def test_round_trip_document(self, mh1):
        """to_dict produces a document that loads back to the same network."""
        assert load_config(mh1.to_dict()) == mh1


class TestLoadConfigFile:
    """Tests for reading documents from disk."""

    def test_name_from_stem(self, tmp_path: Path):
        """Unnamed documents take the file stem as name."""
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps(_single_hop_doc()))
        assert load_config_file(path).name == "tiny"
        assert resolve_config(str(path)).name == "tiny"

    def test_missing_file(self, tmp_path: Path):
        """Missing files raise FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_config_file(tmp_path / "absent.json")
