"""Small deterministic feed-forward encoder with exact backpropagation.

One tanh trunk layer feeds independent linear heads, one per label, whose
outputs are optionally L2-normalized onto the unit sphere. The smooth
nonlinearity keeps finite-difference gradient checks clean everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, ContractViolationError, DegenerateInputError
from .mathops import NORM_EPS
from .rng import RngStream

CHECKPOINT_FORMAT = "aunce-encoder"
CHECKPOINT_VERSION = 1


@dataclass
class EncoderParams:
    """Trunk + per-label head weights. ``normalize`` is part of the model."""

    w1: np.ndarray       # (hidden, feature_dim)
    b1: np.ndarray       # (hidden,)
    head_w: np.ndarray   # (n_labels, embed_dim, hidden)
    head_b: np.ndarray   # (n_labels, embed_dim)
    normalize: bool
    seed: int

    @property
    def feature_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def n_labels(self) -> int:
        return self.head_w.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.head_w.shape[1]

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in fixed order (shared with EncoderGrads)."""
        return [self.w1, self.b1, self.head_w, self.head_b]

    def param_count(self) -> int:
        return sum(a.size for a in self.arrays())

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            self.w1.copy(), self.b1.copy(), self.head_w.copy(), self.head_b.copy(),
            self.normalize, self.seed,
        )

    def equals_bitwise(self, other: "EncoderParams") -> bool:
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.arrays(), other.arrays())
        )


@dataclass
class EncoderGrads:
    w1: np.ndarray
    b1: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.head_w, self.head_b]


def zero_grads(params: EncoderParams) -> EncoderGrads:
    return EncoderGrads(*[np.zeros_like(a) for a in params.arrays()])


def init_encoder(
    seed: int,
    feature_dim: int,
    n_labels: int,
    hidden_dim: int = 128,
    embed_dim: int = 32,
    normalize: bool = True,
) -> EncoderParams:
    """Fan-in-scaled uniform init: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0."""
    for name, v in (("feature_dim", feature_dim), ("n_labels", n_labels),
                    ("hidden_dim", hidden_dim), ("embed_dim", embed_dim)):
        if int(v) < 1:
            raise ConfigurationError(f"{name} must be >= 1, got {v}")
    rng = RngStream(seed)
    lim1 = 1.0 / np.sqrt(feature_dim)
    w1 = rng.uniform(-lim1, lim1, size=(hidden_dim, feature_dim))
    lim2 = 1.0 / np.sqrt(hidden_dim)
    head_w = rng.uniform(-lim2, lim2, size=(n_labels, embed_dim, hidden_dim))
    return EncoderParams(
        w1=w1,
        b1=np.zeros(hidden_dim),
        head_w=head_w,
        head_b=np.zeros((n_labels, embed_dim)),
        normalize=bool(normalize),
        seed=int(seed),
    )


# ----------------------------------------------------------------------
# Forward / backward
# ----------------------------------------------------------------------

@dataclass
class ForwardCache:
    X: np.ndarray        # (n, feature_dim)
    h: np.ndarray        # (n, hidden)
    v: np.ndarray        # (n, n_labels, embed_dim) pre-normalization
    norms: np.ndarray | None  # (n, n_labels, 1) when normalizing


def forward_batch(params: EncoderParams, X) -> tuple[np.ndarray, ForwardCache]:
    """Embed a batch: returns ((n, n_labels, embed_dim), cache)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.feature_dim:
        raise ContractViolationError(
            f"expected features of shape (n, {params.feature_dim}), got {X.shape}"
        )
    h = np.tanh(X @ params.w1.T + params.b1)
    v = np.einsum("ldh,nh->nld", params.head_w, h) + params.head_b
    if params.normalize:
        norms = np.linalg.norm(v, axis=2, keepdims=True)
        if np.any(norms <= NORM_EPS):
            raise DegenerateInputError("encoder produced a near-zero embedding")
        e = v / norms
    else:
        norms = None
        e = v
    return e, ForwardCache(X=X, h=h, v=v, norms=norms)


def forward(params: EncoderParams, x) -> np.ndarray:
    """Embed one feature vector: (n_labels, embed_dim)."""
    e, _ = forward_batch(params, np.asarray(x, dtype=np.float64)[None, :])
    return e[0]


def backward_batch(
    params: EncoderParams, cache: ForwardCache, upstream: np.ndarray
) -> EncoderGrads:
    """Parameter gradients for upstream of shape (n, n_labels, embed_dim).

    Samples are reduced in fixed order so repeated runs are bitwise equal.
    The normalization map backpropagates as g -> (g - (g.e)e)/|v|.
    """
    g_e = np.asarray(upstream, dtype=np.float64)
    if g_e.shape != cache.v.shape:
        raise ContractViolationError(
            f"upstream shape {g_e.shape} does not match embeddings {cache.v.shape}"
        )
    if params.normalize:
        e = cache.v / cache.norms
        g_v = (g_e - np.sum(g_e * e, axis=2, keepdims=True) * e) / cache.norms
    else:
        g_v = g_e
    g_head_w = np.einsum("nld,nh->ldh", g_v, cache.h)
    g_head_b = g_v.sum(axis=0)
    g_h = np.einsum("ldh,nld->nh", params.head_w, g_v)
    g_pre = g_h * (1.0 - cache.h ** 2)
    g_w1 = g_pre.T @ cache.X
    g_b1 = g_pre.sum(axis=0)
    return EncoderGrads(w1=g_w1, b1=g_b1, head_w=g_head_w, head_b=g_head_b)


def backward(params: EncoderParams, x, upstream) -> EncoderGrads:
    """Single-sample convenience wrapper around the batch backward."""
    x = np.asarray(x, dtype=np.float64)
    _, cache = forward_batch(params, x[None, :])
    return backward_batch(params, cache, np.asarray(upstream, dtype=np.float64)[None, :])


# ----------------------------------------------------------------------
# Checkpoints: versioned JSON; floats survive the round trip bitwise.
# ----------------------------------------------------------------------

def save_checkpoint(params: EncoderParams, path) -> Path:
    p = Path(path)
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": {
            "feature_dim": params.feature_dim,
            "hidden_dim": params.hidden_dim,
            "n_labels": params.n_labels,
            "embed_dim": params.embed_dim,
        },
        "seed": params.seed,
        "normalize": params.normalize,
        "arrays": {
            "w1": params.w1.tolist(),
            "b1": params.b1.tolist(),
            "head_w": params.head_w.tolist(),
            "head_b": params.head_b.tolist(),
        },
    }
    p.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
    return p


def load_checkpoint(path) -> EncoderParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigurationError(f"not an encoder checkpoint: {path}")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {doc.get('version')}")
    arr = doc["arrays"]
    return EncoderParams(
        w1=np.asarray(arr["w1"], dtype=np.float64),
        b1=np.asarray(arr["b1"], dtype=np.float64),
        head_w=np.asarray(arr["head_w"], dtype=np.float64),
        head_b=np.asarray(arr["head_b"], dtype=np.float64),
        normalize=bool(doc["normalize"]),
        seed=int(doc["seed"]),
    )
