"""Finite-difference validation of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError


def central_difference(f, inputs, h: float = 1e-6):
    """Central finite differences of scalar ``f`` over a list of arrays.

    ``f`` receives the full input list and returns a float. One array of
    numeric partials is returned per input, matching its shape.
    """
    grads = []
    work = [np.array(x, dtype=np.float64) for x in inputs]
    for k, x in enumerate(work):
        g = np.zeros_like(x)
        flat = x.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = f(work)
            flat[j] = orig - h
            dn = f(work)
            flat[j] = orig
            gflat[j] = (up - dn) / (2.0 * h)
        grads.append(g)
    return grads


@dataclass
class GradCheckReport:
    max_rel_error: float
    tol: float
    n_coordinates: int
    worst_input: int
    worst_coordinate: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def grad_check(op, inputs, h: float = 1e-6, tol: float = 1e-6) -> GradCheckReport:
    """Compare an operation's analytic gradients against central differences.

    ``op`` maps the input list to ``(value, [grad per input])``. Per
    coordinate the error is ``|a - n| / max(|a|, |n|, 1)``, i.e. relative
    for large gradients and absolute below unit scale. The check passes
    when the worst coordinate stays below ``tol``.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ConfigurationError(f"h must lie in [1e-7, 1e-4], got {h}")
    _, analytic = op(inputs)
    numeric = central_difference(lambda xs: op(xs)[0], inputs, h)
    if len(analytic) != len(numeric):
        raise ConfigurationError("op returned a gradient per-input count mismatch")

    worst = 0.0
    worst_input = -1
    worst_coord = -1
    n_coords = 0
    for k, (a, n) in enumerate(zip(analytic, numeric)):
        a = np.asarray(a, dtype=np.float64)
        if a.shape != n.shape:
            raise ConfigurationError(f"gradient {k} has shape {a.shape}, input {n.shape}")
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1.0)
        rel = np.abs(a - n) / denom
        n_coords += rel.size
        j = int(np.argmax(rel))
        if rel.reshape(-1)[j] >= worst:
            worst = float(rel.reshape(-1)[j])
            worst_input = k
            worst_coord = j
    return GradCheckReport(
        max_rel_error=worst,
        tol=tol,
        n_coordinates=n_coords,
        worst_input=worst_input,
        worst_coordinate=worst_coord,
    )
