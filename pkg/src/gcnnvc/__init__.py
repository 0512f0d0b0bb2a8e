"""Finite-group GCNNs, their VC-dimension bounds, and constructive shattering certificates."""

__version__ = "0.1.0"
