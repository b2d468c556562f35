"""Quantile dependence function estimation and rank-based independence tests."""

__version__ = "0.1.0"
