"""Hard linear-value MDPs compiled from 3-CNF formulas."""

__version__ = "0.1.0"
