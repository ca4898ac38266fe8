"""Argument checks shared by the estimators and the functional API."""

import numbers

import numpy as np

from .exceptions import ConfigError


def check_tau_range(tau_min, tau_max):
    if not all(isinstance(t, numbers.Integral) for t in (tau_min, tau_max)):
        raise ConfigError(f"tau_min/tau_max must be integers, got {tau_min!r}, {tau_max!r}")
    if tau_min < 1:
        raise ConfigError(f"tau_min must be >= 1, got {tau_min}")
    if tau_min > tau_max:
        raise ConfigError(f"tau_min={tau_min} exceeds tau_max={tau_max}")
    return int(tau_min), int(tau_max)


def check_alpha(value, name="pc_alpha"):
    if not isinstance(value, numbers.Real) or not 0.0 < float(value) < 1.0:
        raise ConfigError(f"{name} must lie strictly between 0 and 1, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_fractions(fractions):
    f = np.asarray(fractions, dtype=float)
    if f.shape != (3,) or (f < 0).any():
        raise ConfigError(f"fractions must be three non-negative numbers, got {fractions!r}")
    if abs(f.sum() - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {f.sum()!r}")
    return f


def check_grid(grid, name="grid"):
    values = [check_alpha(g, name) for g in grid]
    if not values:
        raise ConfigError(f"{name} must be non-empty")
    return values


def check_ensemble(ens):
    from .series import EnsembleTimeSeries

    if not isinstance(ens, EnsembleTimeSeries):
        raise TypeError(f"expected an EnsembleTimeSeries, got {type(ens).__name__}")
    return ens
