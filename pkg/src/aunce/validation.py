"""Input validation helpers.

All public entry points funnel array-likes through these converters so the
rest of the library can assume float64, finiteness, and matching shapes.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError, ContractViolationError

PROB_SUM_TOL = 1e-9


def as_vector(x, name: str = "x") -> np.ndarray:
    """Convert to a finite 1-D float64 array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ContractViolationError(f"{name} must be 1-D, got shape {a.shape}")
    if a.size == 0:
        raise ContractViolationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return a


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Convert to a finite 2-D float64 array."""
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2:
        raise ContractViolationError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return a


def as_binary_matrix(Y, name: str = "Y") -> np.ndarray:
    """Convert to a 2-D int64 array with entries in {0, 1}."""
    a = np.asarray(Y)
    if a.ndim != 2:
        raise ContractViolationError(f"{name} must be 2-D, got shape {a.shape}")
    a = a.astype(np.int64, copy=False)
    if not np.isin(a, (0, 1)).all():
        raise ContractViolationError(f"{name} must contain only 0/1 entries")
    return a


def check_same_dimension(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ContractViolationError(
            f"{op}: dimension mismatch {a.shape} vs {b.shape}"
        )


def check_consistent_length(X, Y, name_x: str = "X", name_y: str = "Y") -> None:
    if len(X) != len(Y):
        raise ContractViolationError(
            f"{name_x} and {name_y} have inconsistent lengths "
            f"({len(X)} vs {len(Y)})"
        )


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ConfigurationError(f"{name} must be > 0, got {value}")
    return value


def check_open_unit(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"{name} must lie strictly in (0, 1), got {value}")
    return value


def check_rates(rates, name: str = "rates") -> np.ndarray:
    """Occurrence frequencies: each strictly inside (0, 1)."""
    r = as_vector(rates, name)
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        raise ConfigurationError(f"every entry of {name} must lie strictly in (0, 1)")
    return r


def check_probs(probs) -> tuple[float, float, float, float]:
    """Positive-sampling probabilities: four entries in [0, 1] summing to 1."""
    p = tuple(float(x) for x in probs)
    if len(p) != 4:
        raise ConfigurationError(f"probs must have 4 entries, got {len(p)}")
    for i, x in enumerate(p):
        if not 0.0 <= x <= 1.0:
            raise ConfigurationError(f"probs[{i}] must lie in [0, 1], got {x}")
    if abs(sum(p) - 1.0) > PROB_SUM_TOL:
        raise ConfigurationError(f"probs must sum to 1 within {PROB_SUM_TOL}, got {sum(p)}")
    return p
