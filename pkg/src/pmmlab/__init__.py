"""Deterministic laboratory for proactive and multi-token market makers."""

__version__ = "0.1.0"
