"""Deterministic figure rendering from shotvqe harness CSV files."""

__version__ = "0.1.0"
