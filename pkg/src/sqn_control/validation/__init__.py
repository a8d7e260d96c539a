"""Structural validation for sqn-control networks."""

from sqn_control.validation.checks import validate_network

__all__ = ["validate_network"]
