"""Informational micro-benchmark of the two loss paths.

Reports wall-clock cost per batch of the contrastive loss (one positive
plus N re-weighted negatives per label) against the per-label
cross-entropy path. Figures are hardware-bound; nothing is asserted.
"""

from __future__ import annotations

import time

import numpy as np

from .config import AunceConfig
from .losses import AuWeights, au_weights, aunce_loss, wce_loss_and_grad
from .rng import RngStream


def loss_benchmark(
    n_labels: int = 12,
    batch_size: int = 32,
    embed_dim: int = 32,
    n_negatives: int = 16,
    repeats: int = 20,
    seed: int = 0,
) -> dict:
    """Time both loss paths over ``repeats`` synthetic batches."""
    rng = RngStream(seed)
    cfg = AunceConfig()
    weights = au_weights(rng.uniform(0.1, 0.9, size=n_labels))

    def unit(shape):
        v = rng.normal(size=shape)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    anchors = unit((batch_size, n_labels, embed_dim))
    positives = unit((batch_size, n_labels, embed_dim))
    negatives = unit((batch_size, n_labels, n_negatives, embed_dim))
    betas = np.full(n_labels, 1.2)

    t0 = time.perf_counter()
    for _ in range(repeats):
        for b in range(batch_size):
            aunce_loss(
                anchors[b],
                [positives[b, i] for i in range(n_labels)],
                [negatives[b, i] for i in range(n_labels)],
                betas, cfg, weights,
            )
    aunce_per_batch = (time.perf_counter() - t0) / repeats

    y = rng.bernoulli(0.5, size=(batch_size, n_labels)).astype(np.float64)
    proba = rng.uniform(0.05, 0.95, size=(batch_size, n_labels))
    t0 = time.perf_counter()
    for _ in range(repeats):
        for b in range(batch_size):
            wce_loss_and_grad(y[b], proba[b], weights)
    wce_per_batch = (time.perf_counter() - t0) / repeats

    return {
        "n_labels": n_labels,
        "batch_size": batch_size,
        "embed_dim": embed_dim,
        "n_negatives": n_negatives,
        "repeats": repeats,
        "aunce_seconds_per_batch": aunce_per_batch,
        "wce_seconds_per_batch": wce_per_batch,
    }
