"""
Lyapunov drift, threshold estimation and the intervention gate.
"""

from sqn_control.drift.gate import InterventionGate, intervene, update_threshold
from sqn_control.drift.lyapunov import drifts, lyapunov
from sqn_control.drift.threshold import (
    DriftTable,
    ThresholdEstimate,
    build_drift_table,
    estimate_threshold,
    estimate_threshold_from_samples,
    run_pilot,
)

__all__ = [
    "DriftTable",
    "InterventionGate",
    "ThresholdEstimate",
    "build_drift_table",
    "drifts",
    "estimate_threshold",
    "estimate_threshold_from_samples",
    "intervene",
    "lyapunov",
    "run_pilot",
    "update_threshold",
]
