"""Pytest configuration and fixtures."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pytest

from sqn_control.config import ExperimentConfig
from sqn_control.env.spec import NetworkConfig, load_shipped
from sqn_control.env.state import NetworkState

FIXTURES = Path(__file__).parent / "fixtures"


class StubUniform:
    """Deterministic uniform source handing out a fixed sequence of draws."""

    def __init__(self, draws: Sequence[float]) -> None:
        self.draws = list(draws)
        self.position = 0

    def random(self, size: int) -> np.ndarray:
        out = np.asarray(self.draws[self.position : self.position + size], dtype=np.float64)
        if len(out) != size:
            raise IndexError("stub ran out of draws")
        self.position += size
        return out


@pytest.fixture
def stub_uniform() -> type[StubUniform]:
    """Factory for fixed-draw uniform sources."""
    return StubUniform


@pytest.fixture
def sh1() -> NetworkConfig:
    return load_shipped("sh1")


@pytest.fixture
def sh2() -> NetworkConfig:
    return load_shipped("sh2")


@pytest.fixture
def mh1() -> NetworkConfig:
    return load_shipped("mh1")


@pytest.fixture
def mh2() -> NetworkConfig:
    return load_shipped("mh2")


def single_hop_state(q: Sequence[int], y: Sequence[int]) -> NetworkState:
    return NetworkState(q=np.asarray(q).reshape(-1, 1), y=np.asarray(y))


@pytest.fixture
def temp_output_dir(tmp_path: Path) -> Path:
    """Temporary directory for test outputs."""
    output_dir = tmp_path / "output"
    output_dir.mkdir()
    return output_dir


@pytest.fixture
def small_config(temp_output_dir: Path) -> ExperimentConfig:
    """A few short episodes on a bursty two-user network, fast enough for unit tests."""
    return ExperimentConfig(
        env=str(FIXTURES / "bursty.json"),
        algorithm="ia-ppo",
        seeds=(0,),
        steps=800,
        rollout_length=100,
        pilot_episodes=4,
        epochs=2,
        minibatches=4,
        moving_average_window=50,
        output_dir=temp_output_dir,
    )
