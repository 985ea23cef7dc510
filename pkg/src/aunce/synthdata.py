"""Seeded synthetic multi-label datasets with controllable imbalance and noise.

Each label owns two unit-norm prototype vectors (one per value); a sample's
features are the sum of its per-label prototypes plus isotropic Gaussian
noise, so every label stays linearly recoverable. Observed labels are then
flipped symmetrically with a configurable probability while the pre-flip
truth is retained for evaluation.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, ContractViolationError
from .rng import RngStream
from .validation import check_rates

#: Per-label occurrence presets (training-set frequencies of well-known corpora).
RATE_PRESETS = {
    "bp4d": [0.211, 0.171, 0.203, 0.462, 0.549, 0.594,
             0.562, 0.466, 0.169, 0.344, 0.165, 0.152],
    "disfa": [0.050, 0.040, 0.150, 0.081, 0.043, 0.132, 0.278, 0.089],
}


@dataclass(frozen=True)
class GeneratorSpec:
    n_au: int
    rates: tuple
    n_samples: int
    seed: int
    feature_dim: int = 64
    prototype_scale: float = 1.0
    noise_sigma: float = 0.5
    flip_rate: float = 0.0

    def __post_init__(self):
        if self.n_au < 1:
            raise ConfigurationError("n_au must be >= 1")
        if self.feature_dim < 1:
            raise ConfigurationError("feature_dim must be >= 1")
        if self.n_samples < 0:
            raise ConfigurationError("n_samples must be >= 0")
        rates = tuple(float(r) for r in self.rates)
        if len(rates) != self.n_au:
            raise ConfigurationError(
                f"rates has {len(rates)} entries for n_au={self.n_au}"
            )
        check_rates(rates)
        object.__setattr__(self, "rates", rates)
        if not 0.0 <= self.flip_rate < 0.5:
            raise ConfigurationError("flip_rate must lie in [0, 0.5)")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")
        if self.prototype_scale <= 0:
            raise ConfigurationError("prototype_scale must be > 0")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["rates"] = list(self.rates)
        return d

    @staticmethod
    def from_dict(d: dict) -> "GeneratorSpec":
        return GeneratorSpec(**{k: (tuple(v) if k == "rates" else v) for k, v in d.items()})


class LabeledSample(NamedTuple):
    features: np.ndarray
    labels: np.ndarray
    clean_labels: np.ndarray


class SyntheticDataset:
    """Column-major container: features (n, D), labels/clean_labels (n, n_au)."""

    def __init__(self, features, labels, clean_labels, spec: GeneratorSpec | None = None,
                 prototypes: np.ndarray | None = None):
        self.features = np.asarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.clean_labels = np.asarray(clean_labels, dtype=np.int64)
        if not (len(self.features) == len(self.labels) == len(self.clean_labels)):
            raise ContractViolationError("dataset arrays have inconsistent lengths")
        if self.labels.shape != self.clean_labels.shape:
            raise ContractViolationError("labels and clean_labels shapes differ")
        self.spec = spec
        self.prototypes = prototypes  # (n_au, 2, D) or None

    def __len__(self) -> int:
        return len(self.features)

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def __getitem__(self, i: int) -> LabeledSample:
        return LabeledSample(self.features[i], self.labels[i], self.clean_labels[i])

    def subset(self, idx) -> "SyntheticDataset":
        idx = np.asarray(idx)
        return SyntheticDataset(
            self.features[idx], self.labels[idx], self.clean_labels[idx],
            spec=self.spec, prototypes=self.prototypes,
        )

    def empirical_rates(self, clip: bool = True) -> np.ndarray:
        """Observed per-label activation frequency, clipped into (0, 1)."""
        r = self.labels.mean(axis=0)
        if clip:
            lo = 1.0 / (2.0 * max(len(self), 1))
            r = np.clip(r, lo, 1.0 - lo)
        return r


def generate(spec: GeneratorSpec) -> SyntheticDataset:
    """Generate a dataset deterministically from its spec.

    Draw order is fixed: prototypes (label-major, value 0 then 1), then the
    clean label matrix, then feature noise, then the flip mask. Features are
    built from the clean labels; flips touch only the observed labels.
    """
    rng = RngStream(spec.seed)
    protos = rng.normal(size=(spec.n_au, 2, spec.feature_dim))
    norms = np.linalg.norm(protos, axis=2, keepdims=True)
    protos = spec.prototype_scale * protos / norms

    rates = np.asarray(spec.rates)
    clean = rng.bernoulli(rates[None, :], size=(spec.n_samples, spec.n_au))
    noise = rng.normal(0.0, spec.noise_sigma, size=(spec.n_samples, spec.feature_dim))
    base = protos[:, 0, :].sum(axis=0)
    delta = protos[:, 1, :] - protos[:, 0, :]
    features = base + clean.astype(np.float64) @ delta + noise

    flips = rng.bernoulli(spec.flip_rate, size=(spec.n_samples, spec.n_au))
    labels = np.bitwise_xor(clean, flips)
    return SyntheticDataset(features, labels, clean, spec=spec, prototypes=protos)


def split(dataset: SyntheticDataset, train_fraction: float, seed: int):
    """Disjoint, exhaustive, seeded shuffle split into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError("train_fraction must lie strictly in (0, 1)")
    n = len(dataset)
    order = RngStream(seed).permutation(n)
    n_train = int(math.floor(train_fraction * n + 0.5))
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


# ----------------------------------------------------------------------
# File format: CSV with header f0..f{D-1},au0..,clean0.., floats at 9
# significant digits, plus a JSON sidecar with the full GeneratorSpec.
# ----------------------------------------------------------------------

def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def save_csv(dataset: SyntheticDataset, csv_path) -> Path:
    p = Path(csv_path)
    d, m = dataset.feature_dim, dataset.n_labels
    header = (
        [f"f{j}" for j in range(d)]
        + [f"au{j}" for j in range(m)]
        + [f"clean{j}" for j in range(m)]
    )
    lines = [",".join(header)]
    for i in range(len(dataset)):
        row = [f"{v:.9g}" for v in dataset.features[i]]
        row += [str(int(v)) for v in dataset.labels[i]]
        row += [str(int(v)) for v in dataset.clean_labels[i]]
        lines.append(",".join(row))
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if dataset.spec is not None:
        meta = {"generator_spec": dataset.spec.to_dict(), "seed": dataset.spec.seed}
        sidecar_path(p).write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return p


def load_csv(csv_path) -> SyntheticDataset:
    p = Path(csv_path)
    with p.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    d = sum(1 for c in header if c.startswith("f"))
    m = sum(1 for c in header if c.startswith("au"))
    data = np.asarray(rows, dtype=np.float64)
    features = data[:, :d]
    labels = data[:, d:d + m].astype(np.int64)
    clean = data[:, d + m:d + 2 * m].astype(np.int64)
    spec = None
    side = sidecar_path(p)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        spec = GeneratorSpec.from_dict(meta["generator_spec"])
    return SyntheticDataset(features, labels, clean, spec=spec)
