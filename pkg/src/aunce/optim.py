"""Adaptive-moment optimizer with decoupled weight decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, ContractViolationError


@dataclass
class AdamW:
    """AdamW over a fixed list of parameter arrays, updated in place.

    Update at step t (per array, elementwise), decay decoupled from the
    adaptive term and applied to the incoming parameter first:

        p  = (1 - lr*wd) * p
        m  = b1*m + (1-b1)*g          v = b2*v + (1-b2)*g^2
        p -= lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)

    With lr=0 both terms vanish and parameters stay bitwise unchanged.
    """

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-6

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigurationError("lr must be >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("beta1/beta2 must lie in [0, 1)")
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        if len(params) != len(self._m) or len(grads) != len(self._m):
            raise ContractViolationError("parameter/gradient list length changed")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            p *= 1.0 - self.lr * self.weight_decay
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
