"""
Backlog metrics and run summaries.
"""

from sqn_control.metrics.series import moving_average, moving_average_column, time_average
from sqn_control.metrics.summary import confidence_interval, summarize

__all__ = [
    "confidence_interval",
    "moving_average",
    "moving_average_column",
    "summarize",
    "time_average",
]
