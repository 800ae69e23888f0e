"""Verification workbench for Lambda-symmetries, Lambda-invariant Lagrangians
and their deformed conservation laws."""

__version__ = "0.1.0"
