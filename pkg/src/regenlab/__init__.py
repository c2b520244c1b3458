"""Regenerating codes for distributed storage: tradeoff curves, flow-graph
min-cuts, a random linear network coding repair engine and the
availability/bandwidth evaluation model."""

__version__ = "0.1.0"
