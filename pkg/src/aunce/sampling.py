"""Per-label positive/negative pair construction within a batch.

For a given anchor and label, positives are the other batch members holding
the anchor's value for that label and negatives are the members holding the
opposite value. The positive actually contrasted against is drawn from four
kinds: the most similar candidate, an augmented view of the anchor itself,
the (re-normalized) mean of all candidates, or, as a diagnostic, the least
similar candidate. Labels with no negatives in the batch are skipped;
labels with no positive candidates fall back to the augmented view.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import AugmentConfig, AunceConfig
from .exceptions import ConfigurationError
from .mathops import l2_normalize
from .rng import RngStream
from .validation import check_open_unit


class PositiveKind(Enum):
    HIGHEST_SIM = "highest_sim"
    AUGMENTED = "augmented"
    MIXTURE = "mixture"
    LOWEST_SIM = "lowest_sim"


@dataclass
class PositiveChoice:
    kind: PositiveKind
    embedding: np.ndarray
    candidate_index: int | None  # position in the candidate list, where applicable
    used_fallback: bool


def select_positive(
    rng: RngStream,
    probs,
    anchor_emb: np.ndarray,
    candidate_embs: np.ndarray,
    augmented_emb: np.ndarray,
    normalize: bool = True,
) -> PositiveChoice:
    """Draw one positive embedding for an anchor.

    A single uniform draw picks the branch: u <= p1 selects the candidate
    with the highest inner product to the anchor (ties to the lowest index);
    the next p2 band returns the augmented view; the next p3 band returns
    the candidate mean (re-normalized when ``normalize``); the remainder
    selects the lowest-similarity candidate. Branches that need candidates
    fall back to the augmented view when none exist, flagged in the result.
    """
    p1, p2, p3, _ = probs
    candidates = np.atleast_2d(np.asarray(candidate_embs, dtype=np.float64))
    have_candidates = candidates.size > 0
    u = float(rng.uniform())

    if u <= p1:
        kind = PositiveKind.HIGHEST_SIM
    elif u <= p1 + p2:
        kind = PositiveKind.AUGMENTED
    elif u <= p1 + p2 + p3:
        kind = PositiveKind.MIXTURE
    else:
        kind = PositiveKind.LOWEST_SIM

    if kind is not PositiveKind.AUGMENTED and not have_candidates:
        return PositiveChoice(PositiveKind.AUGMENTED, np.array(augmented_emb), None, True)

    if kind is PositiveKind.AUGMENTED:
        return PositiveChoice(kind, np.array(augmented_emb), None, False)
    if kind is PositiveKind.MIXTURE:
        mean = candidates.mean(axis=0)
        emb = l2_normalize(mean) if normalize else mean
        return PositiveChoice(kind, emb, None, False)

    sims = candidates @ np.asarray(anchor_emb, dtype=np.float64)
    # np.argmax/argmin already break ties toward the lowest index
    idx = int(np.argmax(sims)) if kind is PositiveKind.HIGHEST_SIM else int(np.argmin(sims))
    return PositiveChoice(kind, np.array(candidates[idx]), idx, False)


def beta_for_anchor(label_value: int, rate: float, cfg: AunceConfig) -> float:
    """Re-weighting exponent for one anchor at one label.

    The label's minority value is the one occurring in under half the
    training set: the activated value when ``rate < 0.5``, the inactivated
    value otherwise (a rate of exactly 0.5 counts activated as minority).
    A majority-class anchor contrasts against minority negatives and gets
    ``beta_minority``; a minority-class anchor gets ``beta_majority``.
    """
    rate = check_open_unit(rate, "rate")
    if label_value not in (0, 1):
        raise ConfigurationError(f"label_value must be 0 or 1, got {label_value}")
    minority_value = 1 if rate <= 0.5 else 0
    anchor_is_minority = int(label_value) == minority_value
    return cfg.beta_majority if anchor_is_minority else cfg.beta_minority


def augment(features, rng: RngStream, aug_cfg: AugmentConfig = AugmentConfig()) -> np.ndarray:
    """Stochastic vector-domain augmentation of one feature vector.

    Gaussian jitter, then a global scale drawn from
    ``[scale_low, scale_high]``, then independent zero-masking of each
    coordinate with probability ``mask_fraction``. Dimension is preserved.
    """
    x = np.asarray(features, dtype=np.float64)
    out = x + rng.normal(0.0, 1.0, size=x.shape) * aug_cfg.noise_sigma
    out = out * float(rng.uniform(aug_cfg.scale_low, aug_cfg.scale_high))
    keep = rng.uniform(size=x.shape) >= aug_cfg.mask_fraction
    return out * keep


@dataclass
class LabelPlan:
    """Pairing decision for one label of one anchor."""

    label_index: int
    beta: float
    skipped: bool
    kind: PositiveKind | None = None
    positive: np.ndarray | None = None
    positive_batch_index: int | None = None      # batch index, single-candidate kinds
    candidate_batch_indices: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    negative_batch_indices: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    used_fallback: bool = False


@dataclass
class PairPlan:
    """All per-label pairing decisions for one anchor within a batch."""

    anchor_index: int
    labels: list[LabelPlan]

    @property
    def n_skipped(self) -> int:
        return sum(1 for lp in self.labels if lp.skipped)

    @property
    def n_fallbacks(self) -> int:
        return sum(1 for lp in self.labels if lp.used_fallback)


def build_pair_plan(
    labels: np.ndarray,
    embeddings: np.ndarray,
    anchor_index: int,
    rates,
    cfg: AunceConfig,
    rng: RngStream,
    augmented_embeddings: np.ndarray,
) -> PairPlan:
    """Construct the per-label pairing plan for one anchor.

    labels : (batch, n_labels) 0/1 matrix.
    embeddings : (batch, n_labels, d) per-label embeddings for the batch.
    augmented_embeddings : (n_labels, d) embeddings of the anchor's
        augmented view, used by the augmented kind and the fallback.

    Per label, candidates share the anchor's value (anchor excluded) and
    negatives hold the opposite value. Labels with no negatives are
    skipped; the positive draw is only consumed for non-skipped labels.
    """
    labels = np.asarray(labels)
    batch_size, n_labels = labels.shape
    if batch_size < 2:
        raise ConfigurationError(f"batch must hold at least 2 samples, got {batch_size}")
    if not 0 <= anchor_index < batch_size:
        raise ConfigurationError(f"anchor_index {anchor_index} outside batch of {batch_size}")
    rates = np.asarray(rates, dtype=np.float64)
    if rates.shape != (n_labels,):
        raise ConfigurationError("rates misaligned with label count")

    plans: list[LabelPlan] = []
    indices = np.arange(batch_size)
    for i in range(n_labels):
        anchor_value = int(labels[anchor_index, i])
        same = labels[:, i] == anchor_value
        candidates = indices[same & (indices != anchor_index)]
        negatives = indices[~same]
        beta = beta_for_anchor(anchor_value, float(rates[i]), cfg)

        if negatives.size == 0:
            plans.append(LabelPlan(label_index=i, beta=beta, skipped=True,
                                   candidate_batch_indices=candidates))
            continue

        choice = select_positive(
            rng,
            cfg.probs,
            embeddings[anchor_index, i],
            embeddings[candidates, i] if candidates.size else np.empty((0, embeddings.shape[2])),
            augmented_embeddings[i],
            normalize=cfg.normalize,
        )
        batch_pos = (
            int(candidates[choice.candidate_index])
            if choice.candidate_index is not None
            else None
        )
        plans.append(
            LabelPlan(
                label_index=i,
                beta=beta,
                skipped=False,
                kind=choice.kind,
                positive=choice.embedding,
                positive_batch_index=batch_pos,
                candidate_batch_indices=candidates,
                negative_batch_indices=negatives,
                used_fallback=choice.used_fallback,
            )
        )
    return PairPlan(anchor_index=anchor_index, labels=plans)
