"""Deterministic numeric primitives: similarity kernels and stable reductions.

All computation is float64. Similarity between embeddings u, v is the
exponential kernel ``exp(u.v / tau)``; the raw inner product exists only as
:func:`dot`. Loss code never exponentiates directly, it works on the logits
``u.v / tau`` through :func:`log_sum_exp`.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ContractViolationError, DegenerateInputError
from .validation import as_vector, check_positive, check_same_dimension

#: Vectors with Euclidean norm at or below this are rejected by l2_normalize.
NORM_EPS = 1e-12


def dot(a, b) -> float:
    """Inner product of two equal-dimension vectors."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    check_same_dimension(a, b, "dot")
    return float(a @ b)


def exp_sim(a, b, tau: float) -> float:
    """Exponential similarity ``exp(a.b / tau)``; strictly positive.

    ``tau`` is the temperature and must be positive.
    """
    tau = check_positive(tau, "tau")
    return float(np.exp(dot(a, b) / tau))


def log_sum_exp(xs) -> float:
    """``log(sum(exp(x)))`` via max-shift; safe for |x| up to ~700."""
    x = np.asarray(xs, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ContractViolationError("log_sum_exp requires a non-empty 1-D input")
    m = float(np.max(x))
    return m + float(np.log(np.sum(np.exp(x - m))))


def l2_normalize(a) -> np.ndarray:
    """Scale ``a`` to unit Euclidean norm.

    Raises ``DegenerateInputError`` when the norm does not exceed NORM_EPS.
    """
    a = as_vector(a, "a")
    n = float(np.linalg.norm(a))
    if n <= NORM_EPS:
        raise DegenerateInputError(f"cannot normalize near-zero vector (norm={n})")
    return a / n


def softmax(logits: np.ndarray) -> np.ndarray:
    """Shift-invariant softmax over a 1-D logit array."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z)
    e = np.exp(z)
    return e / np.sum(e)
