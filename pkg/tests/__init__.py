"""Tests for sqn-control."""
