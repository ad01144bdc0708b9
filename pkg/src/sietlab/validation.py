"""Shared error types and argument checks.

Every public entry point validates its inputs with these helpers so the
CLI can map failures onto stable exit codes (invalid input vs infeasible
constraint set vs numerical breakdown).
"""

from __future__ import annotations

import numpy as np


class InvalidParameterError(ValueError):
    """An argument is malformed, out of range, or inconsistent."""


class InsufficientSamplesError(InvalidParameterError):
    """Fewer samples than the reconstruction order requires."""


class InsufficientDataError(InvalidParameterError):
    """Not enough usable points for a statistical fit."""


class InfeasibleError(RuntimeError):
    """The constraint set of an optimization problem is empty."""


class NumericalError(RuntimeError):
    """An iterative solver failed to reach its certified tolerance."""


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if value <= 0:
        raise InvalidParameterError(f"{name} must be positive, got {value}")
    return int(value)


def check_positive_real(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise InvalidParameterError(f"{name} must be a positive finite real, got {value!r}")
    return v


def check_nonnegative_real(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v < 0:
        raise InvalidParameterError(f"{name} must be a nonnegative finite real, got {value!r}")
    return v


def check_unit_interval_grid(x, name: str = "x") -> np.ndarray:
    """Strictly increasing 1-d float array contained in [0, 1]."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidParameterError(f"{name} must be a 1-d array with at least 2 points")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite values")
    if arr[0] < -1e-12 or arr[-1] > 1 + 1e-12:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got range [{arr[0]}, {arr[-1]}]")
    if np.any(np.diff(arr) <= 0):
        raise InvalidParameterError(f"{name} must be strictly increasing")
    return np.clip(arr, 0.0, 1.0)


def check_probability_vector(p, name: str = "p", tol: float = 1e-9) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidParameterError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite values")
    if np.any(arr < -tol):
        raise InvalidParameterError(f"{name} has negative entries (min {arr.min():.3e})")
    s = arr.sum()
    if abs(s - 1.0) > tol:
        raise InvalidParameterError(f"{name} must sum to 1 within {tol}, got {s!r}")
    arr = np.clip(arr, 0.0, None)
    return arr / arr.sum()


def check_row_stochastic(w, name: str = "w", tol: float = 1e-9) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 2:
        raise InvalidParameterError(f"{name} must be a 2-d matrix")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite values")
    if np.any(arr < -tol):
        raise InvalidParameterError(f"{name} has negative entries (min {arr.min():.3e})")
    sums = arr.sum(axis=1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        i = int(np.argmax(np.abs(sums - 1.0)))
        raise InvalidParameterError(f"{name} rows must sum to 1 within {tol}; row {i} sums to {sums[i]!r}")
    arr = np.clip(arr, 0.0, None)
    return arr / arr.sum(axis=1, keepdims=True)
