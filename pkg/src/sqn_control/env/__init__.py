"""
Stochastic queueing network instances and dynamics.
"""

from sqn_control.env.masks import reachability_mask, work_conserving_mask
from sqn_control.env.network import (
    MultiHopNetwork,
    QueueNetwork,
    SingleHopNetwork,
    make_network,
    step_multi_hop,
    step_single_hop,
)
from sqn_control.env.sampling import RandomStreams, sample_arrivals, sample_link_states
from sqn_control.env.spec import (
    ConfigError,
    LinkSpec,
    NetworkConfig,
    NetworkKind,
    TrafficClass,
    load_config,
    load_config_file,
    load_shipped,
    resolve_config,
)
from sqn_control.env.state import NetworkState, StepOutcome, shaped_cost

__all__ = [
    "ConfigError",
    "LinkSpec",
    "MultiHopNetwork",
    "NetworkConfig",
    "NetworkKind",
    "NetworkState",
    "QueueNetwork",
    "RandomStreams",
    "SingleHopNetwork",
    "StepOutcome",
    "TrafficClass",
    "load_config",
    "load_config_file",
    "load_shipped",
    "make_network",
    "reachability_mask",
    "resolve_config",
    "sample_arrivals",
    "sample_link_states",
    "shaped_cost",
    "step_multi_hop",
    "step_single_hop",
    "work_conserving_mask",
]
