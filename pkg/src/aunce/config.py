"""Configuration for the contrastive loss and sampling policy."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .exceptions import ConfigurationError
from .validation import check_positive, check_probs


@dataclass(frozen=True)
class AunceConfig:
    """Hyperparameters of the weighted contrastive loss.

    tau
        Temperature of the exponential similarity kernel.
    beta_minority / beta_majority
        Negative re-weighting exponents, named after the class of the
        negatives they act on. An anchor holding the *majority* value of a
        label contrasts against minority-class negatives, so it uses
        ``beta_minority`` (default 1.2, amplifying their gradients); a
        minority-class anchor uses ``beta_majority`` (default 0.4,
        damping majority negatives). Setting both to 1 reproduces the
        gradient profile of the unweighted loss.
    probs
        ``(p1, p2, p3, p4)`` selection probabilities for the four positive
        kinds: highest-similarity, augmented view, mean of positives,
        lowest-similarity (diagnostic, default off). Must sum to 1.
    normalize
        L2-normalize embeddings before similarity computation (keeps all
        logits bounded by 1/tau).
    eps
        Probability clamp for the weighted cross-entropy loss.
    """

    tau: float = 0.5
    beta_minority: float = 1.2
    beta_majority: float = 0.4
    probs: tuple[float, float, float, float] = (0.15, 0.15, 0.7, 0.0)
    normalize: bool = True
    eps: float = 1e-7

    def __post_init__(self):
        check_positive(self.tau, "tau")
        check_positive(self.beta_minority, "beta_minority")
        check_positive(self.beta_majority, "beta_majority")
        object.__setattr__(self, "probs", check_probs(self.probs))
        if not 0.0 < self.eps < 0.5:
            raise ConfigurationError(f"eps must lie in (0, 0.5), got {self.eps}")

    def replace(self, **kwargs) -> "AunceConfig":
        values = asdict(self)
        values.update(kwargs)
        return AunceConfig(**values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probs"] = list(self.probs)
        return d


@dataclass(frozen=True)
class AugmentConfig:
    """Vector-domain augmentation parameters (analog of image crop/flip/blur).

    Applied in order: additive Gaussian noise, random global scaling,
    random zero-masking of coordinates.
    """

    noise_sigma: float = 0.05
    scale_low: float = 0.9
    scale_high: float = 1.1
    mask_fraction: float = 0.1

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        if not self.scale_low <= self.scale_high:
            raise ConfigurationError("scale_low must not exceed scale_high")
        if not 0.0 <= self.mask_fraction <= 1.0:
            raise ConfigurationError("mask_fraction must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)
