"""
sqn-control
===========

Intervention-assisted reinforcement learning for stochastic queueing networks.

Example usage:

    >>> from sqn_control import Experiment, ExperimentConfig
    >>> config = ExperimentConfig(env="sh2", algorithm="ia-ppo", seeds=(0, 1, 2))
    >>> runs = Experiment(config).run()

Or from the command line:

    $ sqn-control train --env sh2 --algo ia-ppo
    $ sqn-control summarize ./runs
"""

from __future__ import annotations

__version__ = "0.1.0"

from sqn_control.config import ExperimentConfig, TrainConfig
from sqn_control.experiment import Experiment, run_seed

__all__ = [
    "__version__",
    "Experiment",
    "ExperimentConfig",
    "TrainConfig",
    "run_seed",
]
