"""Exact simulation and verification of Merlin-Arthur finite automata."""

__version__ = "0.1.0"
