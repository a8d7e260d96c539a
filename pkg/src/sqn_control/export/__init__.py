"""
Export modules for sqn-control.

Supports:
- CSV (metrics, episode logs, drift tables, summaries)
- Checkpoints (torch containers)
"""

from sqn_control.export.checkpoint import checkpoint_path, load_checkpoint, save_checkpoint
from sqn_control.export.csv import (
    metrics_frame,
    write_drift_table,
    write_episodes,
    write_metrics,
    write_summary,
)

__all__ = [
    "checkpoint_path",
    "load_checkpoint",
    "metrics_frame",
    "save_checkpoint",
    "write_drift_table",
    "write_episodes",
    "write_metrics",
    "write_summary",
]
