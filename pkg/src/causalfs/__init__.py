"""Multidata causal feature selection for ensembles of time series."""

__version__ = "0.1.0"
