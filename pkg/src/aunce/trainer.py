"""Two-stage training: contrastive pretraining, then frozen-encoder linear evaluation.

Stage 1 optimizes the encoder with the weighted contrastive loss; every
batch member serves as anchor once per batch and gradients flow into all
embeddings a pair plan touches (anchor, chosen positive, mixture
candidates, augmented view, negatives). Stage 2 freezes the encoder and
fits one logistic unit per label on its embeddings with the weighted
cross-entropy loss. A joint end-to-end cross-entropy arm exists as the
comparison baseline.

Training is deterministic given (config, seed): shuffles, augmentations
and pair plans all draw from child streams keyed by (epoch, batch,
sample), and gradient reduction order is fixed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import AugmentConfig, AunceConfig
from .encoder import EncoderParams, backward_batch, forward_batch
from .exceptions import ConfigurationError, EmptyBatchError, NumericFailureError
from .losses import AuWeights, au_weights, aunce_loss
from .mathops import l2_normalize
from .metrics import MetricsReport
from .optim import AdamW
from .rng import RngStream
from .sampling import PositiveKind, augment, build_pair_plan

# child-stream tags
_K_SHUFFLE, _K_AUGMENT, _K_PLAN = 0, 1, 2


@dataclass
class TrainRecord:
    stage: str
    epoch: int
    mean_loss: float
    n_batches: int
    skipped_labels: int = 0
    fallback_positives: int = 0
    skipped_anchors: int = 0
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "stage": self.stage,
            "epoch": self.epoch,
            "mean_loss": self.mean_loss,
            "n_batches": self.n_batches,
            "skipped_labels": self.skipped_labels,
            "fallback_positives": self.fallback_positives,
            "skipped_anchors": self.skipped_anchors,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class TrainRun:
    """Run log: immutable config snapshot plus per-epoch records.

    Wall time is kept on the in-memory records but excluded from
    serialization, so rerunning an identical (config, seed) pair produces
    byte-identical output files.
    """

    config: dict
    seed: int
    records: list[TrainRecord] = field(default_factory=list)
    aborted: dict | None = None

    def serializable_records(self) -> list[dict]:
        return [r.to_dict() for r in self.records]

    def summary(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "epochs_completed": len(self.records),
            "final_mean_loss": self.records[-1].mean_loss if self.records else None,
            "aborted": self.aborted,
        }


@dataclass
class LinearHead:
    """One logistic unit per label on that label's embedding."""

    A: np.ndarray  # (n_labels, embed_dim)
    b: np.ndarray  # (n_labels,)

    @staticmethod
    def zeros(n_labels: int, embed_dim: int) -> "LinearHead":
        return LinearHead(A=np.zeros((n_labels, embed_dim)), b=np.zeros(n_labels))

    def logits(self, embeddings: np.ndarray) -> np.ndarray:
        return np.einsum("nld,ld->nl", embeddings, self.A) + self.b

    def proba(self, embeddings: np.ndarray) -> np.ndarray:
        z = self.logits(embeddings)
        return 1.0 / (1.0 + np.exp(-z))


def predict_proba(params: EncoderParams, head: LinearHead, X) -> np.ndarray:
    e, _ = forward_batch(params, X)
    return head.proba(e)


def evaluate(params, head, dataset, threshold: float = 0.5,
             on_clean: bool = True) -> MetricsReport:
    """Score thresholded predictions; by default against the pre-flip truth."""
    proba = predict_proba(params, head, dataset.features)
    preds = (proba >= threshold).astype(np.int64)
    target = dataset.clean_labels if on_clean else dataset.labels
    return MetricsReport.from_predictions(preds, target)


# ----------------------------------------------------------------------
# Stage 1: contrastive pretraining
# ----------------------------------------------------------------------

def _check_finite_loss(value: float, run: TrainRun, stage: str, epoch: int, batch: int):
    if not np.isfinite(value):
        run.aborted = {"stage": stage, "epoch": epoch, "batch": batch, "loss": float(value)}
        raise NumericFailureError(
            f"non-finite loss {value} at {stage} epoch {epoch} batch {batch}",
            diagnostics=run.aborted,
        )


def route_pair_gradients(plan, loss_out, E, cfg: AunceConfig,
                         upstream: np.ndarray, upstream_aug: np.ndarray) -> None:
    """Scatter one anchor's loss gradients into the batch upstream buffers.

    Anchor gradients land on the anchor's own rows; positive gradients go to
    the chosen candidate, to the augmented view's buffer, or (for the
    mixture kind) through the mean and optional re-normalization onto every
    candidate; negative gradients go to the negative rows.
    """
    a = plan.anchor_index
    upstream[a] += loss_out.grad_anchor
    for lp, g_pos, g_negs in zip(plan.labels, loss_out.grad_positive,
                                 loss_out.grad_negatives):
        if lp.skipped:
            continue
        i = lp.label_index
        if lp.kind is PositiveKind.AUGMENTED:
            upstream_aug[a, i] += g_pos
        elif lp.kind is PositiveKind.MIXTURE:
            cands = lp.candidate_batch_indices
            if cfg.normalize:
                m = E[cands, i].mean(axis=0)
                norm = np.linalg.norm(m)
                ehat = m / norm
                g_m = (g_pos - (g_pos @ ehat) * ehat) / norm
            else:
                g_m = g_pos
            upstream[cands, i] += g_m / cands.size
        else:
            upstream[lp.positive_batch_index, i] += g_pos
        upstream[lp.negative_batch_indices, i] += g_negs


def loss_inputs_from_plan(plan, E, Ea_anchor, cfg: AunceConfig):
    """Per-label (positives, negative sets, betas) for one anchor's plan.

    Positive embeddings are re-derived from the current batch embeddings,
    so the same plan can be re-evaluated under perturbed parameters.
    """
    positives, neg_sets, betas = [], [], []
    for lp in plan.labels:
        betas.append(lp.beta)
        if lp.skipped:
            positives.append(None)
            neg_sets.append(None)
            continue
        i = lp.label_index
        if lp.kind is PositiveKind.AUGMENTED:
            pos = Ea_anchor[i]
        elif lp.kind is PositiveKind.MIXTURE:
            m = E[lp.candidate_batch_indices, i].mean(axis=0)
            pos = l2_normalize(m) if cfg.normalize else m
        else:
            pos = E[lp.positive_batch_index, i]
        positives.append(pos)
        neg_sets.append(E[lp.negative_batch_indices, i])
    return positives, neg_sets, betas


def pretrain(
    dataset,
    encoder_init: EncoderParams,
    cfg: AunceConfig,
    *,
    epochs: int,
    batch_size: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
    weights: AuWeights | None = None,
    rates=None,
    aug_cfg: AugmentConfig = AugmentConfig(),
) -> tuple[EncoderParams, TrainRun]:
    """Optimize the encoder with the weighted contrastive loss.

    Per epoch the dataset is reshuffled (seeded); trailing batches smaller
    than 2 are dropped since they cannot host in-batch pairs. Occurrence
    rates default to the observed training frequencies and drive both the
    label weights and the per-anchor exponent policy.
    """
    if batch_size < 2:
        raise ConfigurationError("batch_size must be >= 2 for in-batch pairs")
    if len(dataset) == 0:
        raise ConfigurationError("dataset is empty")
    if rates is None:
        rates = dataset.empirical_rates()
    rates = np.asarray(rates, dtype=np.float64)
    if weights is None:
        weights = au_weights(rates)

    params = encoder_init.copy()
    opt = AdamW(lr=lr)
    root = RngStream(seed)
    run = TrainRun(
        config={
            "stage": "pretrain", "epochs": epochs, "batch_size": batch_size,
            "lr": lr, "cfg": cfg.to_dict(), "aug": aug_cfg.to_dict(),
            "rates": [float(r) for r in rates],
        },
        seed=seed,
    )

    n = len(dataset)
    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = root.child(_K_SHUFFLE, epoch).permutation(n)
        batch_losses = []
        skipped_labels = fallbacks = skipped_anchors = 0

        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start:start + batch_size]
            if idx.size < 2:
                continue
            X = dataset.features[idx]
            Y = dataset.labels[idx]
            E, cache = forward_batch(params, X)

            arng = root.child(_K_AUGMENT, epoch, b)
            Xa = np.stack([
                augment(X[j], arng.child(j), aug_cfg) for j in range(idx.size)
            ])
            Ea, cache_a = forward_batch(params, Xa)

            upstream = np.zeros_like(E)
            upstream_aug = np.zeros_like(Ea)
            anchor_losses = []

            for a in range(idx.size):
                plan = build_pair_plan(
                    Y, E, a, rates, cfg, root.child(_K_PLAN, epoch, b, a), Ea[a]
                )
                skipped_labels += plan.n_skipped
                fallbacks += plan.n_fallbacks
                positives, neg_sets, betas = loss_inputs_from_plan(plan, E, Ea[a], cfg)
                try:
                    out = aunce_loss(E[a], positives, neg_sets, betas, cfg, weights)
                except EmptyBatchError:
                    skipped_anchors += 1
                    continue
                anchor_losses.append(out.value)
                route_pair_gradients(plan, out, E, cfg, upstream, upstream_aug)

            if not anchor_losses:
                continue
            batch_loss = float(np.mean(anchor_losses))
            _check_finite_loss(batch_loss, run, "pretrain", epoch, b)
            scale = 1.0 / len(anchor_losses)

            grads = backward_batch(params, cache, upstream * scale)
            if np.any(upstream_aug):
                g_aug = backward_batch(params, cache_a, upstream_aug * scale)
                for g, ga in zip(grads.arrays(), g_aug.arrays()):
                    g += ga
            opt.step(params.arrays(), grads.arrays())
            batch_losses.append(batch_loss)

        run.records.append(TrainRecord(
            stage="pretrain",
            epoch=epoch,
            mean_loss=float(np.mean(batch_losses)) if batch_losses else float("nan"),
            n_batches=len(batch_losses),
            skipped_labels=skipped_labels,
            fallback_positives=fallbacks,
            skipped_anchors=skipped_anchors,
            wall_time=time.perf_counter() - t0,
        ))
    return params, run


# ----------------------------------------------------------------------
# Stage 2: frozen-encoder linear evaluation
# ----------------------------------------------------------------------

def _wce_batch(y: np.ndarray, proba: np.ndarray, w: np.ndarray, eps: float) -> float:
    pc = np.clip(proba, eps, 1.0 - eps)
    per = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    return float(np.mean(np.sum(w * per, axis=1) / y.shape[1]))


def linear_eval(
    frozen: EncoderParams,
    train,
    test,
    weights: AuWeights | None = None,
    *,
    epochs: int = 100,
    lr: float = 1e-2,
    seed: int = 0,
    batch_size: int | None = None,
    threshold: float = 0.5,
    eval_on_clean: bool = True,
    eps: float = 1e-7,
) -> tuple[LinearHead, MetricsReport, TrainRun]:
    """Train per-label logistic units on frozen embeddings; score on ``test``.

    The gradient is taken in logit form, (w_i/n) * (p - y), which equals the
    exact cross-entropy gradient and stays stable when sigmoids saturate.
    The encoder is asserted bitwise unchanged at the end. ``batch_size``
    of None means full-batch updates; ``seed`` only matters when
    mini-batching.
    """
    if weights is None:
        weights = au_weights(train.empirical_rates())
    before = frozen.copy()

    E_train, _ = forward_batch(frozen, train.features)
    y = train.labels.astype(np.float64)
    n, n_labels = y.shape
    head = LinearHead.zeros(n_labels, frozen.embed_dim)
    opt = AdamW(lr=lr)
    root = RngStream(seed)
    run = TrainRun(
        config={"stage": "linear_eval", "epochs": epochs, "lr": lr,
                "batch_size": batch_size, "threshold": threshold},
        seed=seed,
    )

    for epoch in range(epochs):
        t0 = time.perf_counter()
        if batch_size is None:
            slices = [np.arange(n)]
        else:
            order = root.child(_K_SHUFFLE, epoch).permutation(n)
            slices = [order[s:s + batch_size] for s in range(0, n, batch_size)]
        losses = []
        for b, idx in enumerate(slices):
            Eb, yb = E_train[idx], y[idx]
            proba = head.proba(Eb)
            value = _wce_batch(yb, proba, weights.w, eps)
            _check_finite_loss(value, run, "linear_eval", epoch, b)
            dz = (weights.w / n_labels) * (proba - yb) / idx.size
            gA = np.einsum("nl,nld->ld", dz, Eb)
            gb = dz.sum(axis=0)
            opt.step([head.A, head.b], [gA, gb])
            losses.append(value)
        run.records.append(TrainRecord(
            stage="linear_eval", epoch=epoch,
            mean_loss=float(np.mean(losses)), n_batches=len(losses),
            wall_time=time.perf_counter() - t0,
        ))

    assert frozen.equals_bitwise(before), "linear_eval mutated the frozen encoder"
    report = evaluate(frozen, head, test, threshold=threshold, on_clean=eval_on_clean)
    return head, report, run


# ----------------------------------------------------------------------
# End-to-end cross-entropy baseline (no contrastive stage)
# ----------------------------------------------------------------------

def baseline_e2e(
    train,
    test,
    encoder_init: EncoderParams,
    weights: AuWeights | None = None,
    *,
    epochs: int,
    batch_size: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
    threshold: float = 0.5,
    eval_on_clean: bool = True,
    eps: float = 1e-7,
) -> tuple[MetricsReport, TrainRun]:
    """Train encoder and linear head jointly with weighted cross-entropy."""
    if len(train) == 0:
        raise ConfigurationError("dataset is empty")
    if weights is None:
        weights = au_weights(train.empirical_rates())
    params = encoder_init.copy()
    head = LinearHead.zeros(train.n_labels, params.embed_dim)
    opt = AdamW(lr=lr)
    root = RngStream(seed)
    run = TrainRun(
        config={"stage": "baseline_e2e", "epochs": epochs,
                "batch_size": batch_size, "lr": lr, "threshold": threshold},
        seed=seed,
    )

    n = len(train)
    y_all = train.labels.astype(np.float64)
    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = root.child(_K_SHUFFLE, epoch).permutation(n)
        losses = []
        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start:start + batch_size]
            X, yb = train.features[idx], y_all[idx]
            E, cache = forward_batch(params, X)
            proba = head.proba(E)
            value = _wce_batch(yb, proba, weights.w, eps)
            _check_finite_loss(value, run, "baseline_e2e", epoch, b)
            dz = (weights.w / train.n_labels) * (proba - yb) / idx.size
            gA = np.einsum("nl,nld->ld", dz, E)
            gb = dz.sum(axis=0)
            upstream = dz[:, :, None] * head.A[None, :, :]
            enc_grads = backward_batch(params, cache, upstream)
            opt.step(params.arrays() + [head.A, head.b],
                     enc_grads.arrays() + [gA, gb])
            losses.append(value)
        run.records.append(TrainRecord(
            stage="baseline_e2e", epoch=epoch,
            mean_loss=float(np.mean(losses)), n_batches=len(losses),
            wall_time=time.perf_counter() - t0,
        ))

    report = evaluate(params, head, test, threshold=threshold, on_clean=eval_on_clean)
    return report, run
