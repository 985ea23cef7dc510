"""Loss functions and their analytic gradients.

Three pieces:

* occurrence-weighted cross-entropy for the linear-evaluation stage,
* the weighted contrastive loss with power-law negative re-weighting
  (one term per label, averaged with the occurrence weights),
* the negative-gradient ratio diagnostic whose entropy shrinks as the
  re-weighting exponent grows.

The contrastive term for one label, with positive similarity
``s+ = exp(u+)`` and negatives ``s-_j = exp(u-_j)`` (where ``u = dot / tau``),
is

    -log( s+ / (s+ + sum_j (s-_j)^(beta+1)) )

evaluated in log space: logits ``[u+, (beta+1) u-_1, ...]`` go through a
max-shifted log-sum-exp, so nothing overflows even with unnormalized
embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import AunceConfig
from .exceptions import (
    ConfigurationError,
    ContractViolationError,
    DegenerateInputError,
    EmptyBatchError,
)
from .mathops import softmax
from .validation import as_vector, check_positive, check_rates


# ----------------------------------------------------------------------
# Occurrence weights
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AuWeights:
    """Per-label loss weights derived from occurrence frequencies.

    ``w_i = (1/r_i) * n / sum_k (1/r_k)`` so rare labels weigh more and
    the weights always sum to the number of labels.
    """

    w: np.ndarray
    rates: np.ndarray

    @property
    def n_labels(self) -> int:
        return self.w.shape[0]

    @staticmethod
    def uniform(n_labels: int) -> "AuWeights":
        """All-ones weights (equal rates); the weighting-off ablation arm."""
        return au_weights(np.full(n_labels, 0.5))


def au_weights(rates) -> AuWeights:
    """Build occurrence weights from per-label frequencies in (0, 1)."""
    r = check_rates(rates)
    inv = 1.0 / r
    w = inv * r.shape[0] / np.sum(inv)
    return AuWeights(w=w, rates=r)


# ----------------------------------------------------------------------
# Weighted cross-entropy
# ----------------------------------------------------------------------

def wce_loss(y, yhat, weights: AuWeights, eps: float = 1e-7) -> float:
    """Occurrence-weighted binary cross-entropy, averaged over labels.

    Probabilities are clamped into ``[eps, 1-eps]`` before the logs.
    """
    value, _ = wce_loss_and_grad(y, yhat, weights, eps)
    return value


def wce_loss_and_grad(y, yhat, weights: AuWeights, eps: float = 1e-7):
    """Loss value plus its exact gradient with respect to ``yhat``.

    The gradient is taken at the clamped probabilities; it is zero for
    entries the clamp saturates.
    """
    y = as_vector(np.asarray(y, dtype=np.float64), "y")
    p = as_vector(yhat, "yhat")
    if y.shape != p.shape or y.shape != weights.w.shape:
        raise ContractViolationError(
            f"wce_loss: length mismatch y={y.shape}, yhat={p.shape}, "
            f"w={weights.w.shape}"
        )
    n = y.shape[0]
    inside = (p > eps) & (p < 1.0 - eps)
    pc = np.clip(p, eps, 1.0 - eps)
    per_label = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    value = float(np.sum(weights.w * per_label) / n)
    grad = -(weights.w / n) * (y / pc - (1.0 - y) / (1.0 - pc))
    grad = np.where(inside, grad, 0.0)
    return value, grad


# ----------------------------------------------------------------------
# Contrastive term (one label)
# ----------------------------------------------------------------------

@dataclass
class TermGrads:
    anchor: np.ndarray
    positive: np.ndarray
    negatives: np.ndarray  # shape (N, d)


def aunce_term(anchor, positive, negatives, beta: float, tau: float):
    """One label's contrastive term and its exact embedding gradients.

    Returns ``(value, TermGrads)``. The value is strictly positive and
    decreases toward 0 as the positive similarity dominates every
    re-weighted negative.
    """
    tau = check_positive(tau, "tau")
    beta = check_positive(beta, "beta")
    a = as_vector(anchor, "anchor")
    pos = as_vector(positive, "positive")
    negs = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    if negs.size == 0:
        raise DegenerateInputError("aunce_term requires at least one negative")
    if pos.shape != a.shape or negs.shape[1] != a.shape[0]:
        raise ContractViolationError(
            f"aunce_term: dimension mismatch anchor={a.shape}, "
            f"positive={pos.shape}, negatives={negs.shape}"
        )

    u_pos = float(a @ pos) / tau
    u_neg = (negs @ a) / tau
    logits = np.concatenate(([u_pos], (beta + 1.0) * u_neg))
    p = softmax(logits)  # p[0] belongs to the positive logit
    # value = log_sum_exp(logits) - u_pos, rewritten through the softmax
    value = float(-np.log(p[0]))

    # d value / d u_pos = p0 - 1 ; d value / d u_neg_j = (beta+1) p_j
    d_upos = p[0] - 1.0
    d_uneg = (beta + 1.0) * p[1:]

    grad_anchor = (d_upos * pos + d_uneg @ negs) / tau
    grad_positive = (d_upos / tau) * a
    grad_negatives = np.outer(d_uneg / tau, a)
    return value, TermGrads(grad_anchor, grad_positive, grad_negatives)


def gradient_ratio_profile(anchor, negatives, beta: float, tau: float) -> np.ndarray:
    """Per-negative share of the gradient magnitude (sums to 1).

    This is the Boltzmann-type distribution ``(s-_j)^beta / sum_k (s-_k)^beta``
    over the negatives; larger ``beta`` concentrates it on the most similar
    (hardest) negatives.
    """
    tau = check_positive(tau, "tau")
    a = as_vector(anchor, "anchor")
    negs = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    if negs.size == 0:
        raise DegenerateInputError("gradient_ratio_profile requires negatives")
    if negs.shape[1] != a.shape[0]:
        raise ContractViolationError("gradient_ratio_profile: dimension mismatch")
    u_neg = (negs @ a) / tau
    return softmax(beta * u_neg)


# ----------------------------------------------------------------------
# Full per-anchor loss (all labels)
# ----------------------------------------------------------------------

@dataclass
class LossOutput:
    """Weighted multi-label contrastive loss for one anchor.

    ``value`` equals ``mean_i(w_i * per_label_i)`` with skipped labels
    contributing zero. Gradient collections are aligned with the inputs
    and already include the ``w_i / n`` scaling; entries for skipped
    labels are zero (anchor) or None (positive/negatives).
    """

    value: float
    per_label: np.ndarray
    skipped: np.ndarray
    grad_anchor: np.ndarray            # (n_labels, d)
    grad_positive: list                # per label: (d,) or None
    grad_negatives: list               # per label: (N_i, d) or None

    @property
    def n_skipped(self) -> int:
        return int(np.sum(self.skipped))


def aunce_loss(
    anchor_set,
    positives,
    negative_sets,
    betas,
    cfg: AunceConfig,
    weights: AuWeights,
) -> LossOutput:
    """Weighted average of per-label contrastive terms for one anchor.

    anchor_set : (n_labels, d) array, one embedding per label.
    positives : per label, a (d,) embedding or None to skip the label.
    negative_sets : per label, an (N_i, d) array; empty/None also skips.
    betas : per-label re-weighting exponents.

    A label is skipped (contributes zero, flagged in the output) when it has
    no usable positive or no negatives. Raises ``EmptyBatchError`` when every
    label is skipped.
    """
    anchors = np.asarray(anchor_set, dtype=np.float64)
    n_labels = anchors.shape[0]
    if not (len(positives) == len(negative_sets) == n_labels):
        raise ContractViolationError("aunce_loss: per-label structures misaligned")
    betas = np.asarray(betas, dtype=np.float64)
    if betas.shape != (n_labels,):
        raise ContractViolationError("aunce_loss: betas misaligned")
    if weights.n_labels != n_labels:
        raise ConfigurationError(
            f"weights cover {weights.n_labels} labels, loss has {n_labels}"
        )

    per_label = np.zeros(n_labels)
    skipped = np.zeros(n_labels, dtype=bool)
    grad_anchor = np.zeros_like(anchors)
    grad_positive: list = [None] * n_labels
    grad_negatives: list = [None] * n_labels

    for i in range(n_labels):
        negs = negative_sets[i]
        if positives[i] is None or negs is None or len(negs) == 0:
            skipped[i] = True
            continue
        value, grads = aunce_term(
            anchors[i], positives[i], negs, float(betas[i]), cfg.tau
        )
        scale = weights.w[i] / n_labels
        per_label[i] = value
        grad_anchor[i] = scale * grads.anchor
        grad_positive[i] = scale * grads.positive
        grad_negatives[i] = scale * grads.negatives

    if bool(np.all(skipped)):
        raise EmptyBatchError("every label was skipped; no contrastive pairs")

    value = float(np.sum(weights.w * per_label) / n_labels)
    return LossOutput(
        value=value,
        per_label=per_label,
        skipped=skipped,
        grad_anchor=grad_anchor,
        grad_positive=grad_positive,
        grad_negatives=grad_negatives,
    )
