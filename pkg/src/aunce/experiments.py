"""Ablation and sweep experiments over the synthetic fixtures.

The ablation grid mirrors the standard component study: model A is the
plain contrastive baseline (highest-similarity positives only, uniform
label weights, uniform exponent), B adds occurrence weights, C adds the
positive-sampling mixture on top of B, D adds negative re-weighting on
top of B, and E enables everything.

"NS off" means both exponents pinned to 1: at beta=1 the per-negative
gradient profile coincides with the unweighted loss's softmax, so the
policy is genuinely neutral while staying inside the beta > 0 domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import AunceConfig
from .encoder import init_encoder
from .losses import AuWeights, au_weights
from .metrics import MetricsReport
from .synthdata import SyntheticDataset, split
from .trainer import linear_eval, pretrain

HIGHEST_SIM_ONLY = (1.0, 0.0, 0.0, 0.0)
NEUTRAL_BETA = 1.0

#: Positive-probability rows of the sweep grid (p1, p2, p3, p4).
PROBS_GRID = [
    (1.0, 0.0, 0.0, 0.0),
    (0.0, 1.0, 0.0, 0.0),
    (0.0, 0.0, 1.0, 0.0),
    (0.0, 0.0, 0.0, 1.0),
    (0.1, 0.1, 0.8, 0.0),
    (0.15, 0.15, 0.7, 0.0),
    (0.2, 0.2, 0.6, 0.0),
    (0.25, 0.25, 0.5, 0.0),
    (0.3, 0.3, 0.4, 0.0),
    (0.4, 0.4, 0.2, 0.0),
]

#: Exponent rows: minority swept at fixed 0.4, then majority swept at fixed 1.2.
BETA_GRID = (
    [(m, 0.4) for m in (0.8, 1.0, 1.2, 1.4, 1.6, 1.8)]
    + [(1.2, m) for m in (0.2, 0.6, 0.8, 1.0, 1.2)]
)


@dataclass(frozen=True)
class AblationSwitches:
    use_wi: bool
    use_ps: bool
    use_ns: bool


ABLATION_MODELS: dict[str, AblationSwitches] = {
    "A": AblationSwitches(False, False, False),
    "B": AblationSwitches(True, False, False),
    "C": AblationSwitches(True, True, False),
    "D": AblationSwitches(True, False, True),
    "E": AblationSwitches(True, True, True),
}


@dataclass(frozen=True)
class TrainerSettings:
    """Desk-scale trainer knobs shared by every experiment arm."""

    hidden_dim: int = 64
    embed_dim: int = 16
    pretrain_epochs: int = 15
    linear_epochs: int = 80
    batch_size: int = 32
    pretrain_lr: float = 1e-3
    linear_lr: float = 5e-2
    train_fraction: float = 0.8
    threshold: float = 0.5
    eval_on_clean: bool = True

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


def resolve_model(switches: AblationSwitches, base: AunceConfig) -> AunceConfig:
    """Rewrite the loss config according to the ablation switches."""
    cfg = base
    if not switches.use_ps:
        cfg = cfg.replace(probs=HIGHEST_SIM_ONLY)
    if not switches.use_ns:
        cfg = cfg.replace(beta_minority=NEUTRAL_BETA, beta_majority=NEUTRAL_BETA)
    return cfg


def run_pipeline(
    train: SyntheticDataset,
    test: SyntheticDataset,
    cfg: AunceConfig,
    settings: TrainerSettings,
    seed: int,
    use_wi: bool = True,
) -> MetricsReport:
    """One pretrain + linear-eval run; returns the test metrics."""
    rates = train.empirical_rates()
    weights = au_weights(rates) if use_wi else AuWeights.uniform(train.n_labels)
    encoder0 = init_encoder(
        seed, train.feature_dim, train.n_labels,
        hidden_dim=settings.hidden_dim, embed_dim=settings.embed_dim,
        normalize=cfg.normalize,
    )
    params, _ = pretrain(
        train, encoder0, cfg,
        epochs=settings.pretrain_epochs, batch_size=settings.batch_size,
        lr=settings.pretrain_lr, seed=seed, weights=weights, rates=rates,
    )
    _, report, _ = linear_eval(
        params, train, test, weights,
        epochs=settings.linear_epochs, lr=settings.linear_lr, seed=seed,
        threshold=settings.threshold, eval_on_clean=settings.eval_on_clean,
    )
    return report


@dataclass
class ExperimentRow:
    arm: str
    seed: int
    report: MetricsReport
    params: dict

    def to_dict(self) -> dict:
        d = {"arm": self.arm, "seed": self.seed}
        d.update(self.params)
        d.update(self.report.to_dict())
        return d


def _mean_sd(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def summarize(rows: list[ExperimentRow]) -> dict:
    """Per-arm mean and sd for the three aggregate metrics."""
    arms: dict[str, dict] = {}
    for arm in sorted({r.arm for r in rows}):
        sub = [r for r in rows if r.arm == arm]
        entry = {"n_runs": len(sub)}
        for metric in ("f1_macro", "f1_micro", "accuracy"):
            mean, sd = _mean_sd([getattr(r.report, metric) for r in sub])
            entry[f"{metric}_mean"] = mean
            entry[f"{metric}_sd"] = sd
        per_label = np.asarray([r.report.per_label_f1 for r in sub])
        entry["per_label_f1_mean"] = [float(x) for x in per_label.mean(axis=0)]
        arms[arm] = entry
    return arms


def run_ablation(
    dataset: SyntheticDataset,
    base_cfg: AunceConfig,
    settings: TrainerSettings,
    seeds,
) -> list[ExperimentRow]:
    """Run models A-E for every seed; split is re-drawn per seed."""
    rows = []
    for seed in seeds:
        train, test = split(dataset, settings.train_fraction, seed)
        for name, switches in ABLATION_MODELS.items():
            cfg = resolve_model(switches, base_cfg)
            report = run_pipeline(train, test, cfg, settings, seed,
                                  use_wi=switches.use_wi)
            rows.append(ExperimentRow(
                arm=name, seed=seed, report=report,
                params={"use_wi": switches.use_wi, "use_ps": switches.use_ps,
                        "use_ns": switches.use_ns},
            ))
    return rows


def run_probs_sweep(
    dataset: SyntheticDataset,
    base_cfg: AunceConfig,
    settings: TrainerSettings,
    seeds,
    grid=None,
) -> list[ExperimentRow]:
    rows = []
    grid = PROBS_GRID if grid is None else grid
    for seed in seeds:
        train, test = split(dataset, settings.train_fraction, seed)
        for probs in grid:
            cfg = base_cfg.replace(probs=tuple(probs))
            report = run_pipeline(train, test, cfg, settings, seed)
            rows.append(ExperimentRow(
                arm="p" + ",".join(f"{p:g}" for p in probs), seed=seed,
                report=report,
                params={"p1": probs[0], "p2": probs[1], "p3": probs[2], "p4": probs[3]},
            ))
    return rows


def run_beta_sweep(
    dataset: SyntheticDataset,
    base_cfg: AunceConfig,
    settings: TrainerSettings,
    seeds,
    grid=None,
) -> list[ExperimentRow]:
    rows = []
    grid = BETA_GRID if grid is None else grid
    for seed in seeds:
        train, test = split(dataset, settings.train_fraction, seed)
        for b_min, b_maj in grid:
            cfg = base_cfg.replace(beta_minority=b_min, beta_majority=b_maj)
            report = run_pipeline(train, test, cfg, settings, seed)
            rows.append(ExperimentRow(
                arm=f"beta{b_min:g}/{b_maj:g}", seed=seed, report=report,
                params={"beta_minority": b_min, "beta_majority": b_maj},
            ))
    return rows


def rows_to_csv(rows: list[ExperimentRow]) -> str:
    """Deterministic CSV rendering of experiment rows."""
    if not rows:
        return ""
    dicts = [r.to_dict() for r in rows]
    header = list(dicts[0].keys())
    lines = [",".join(header)]
    for d in dicts:
        cells = []
        for k in header:
            v = d[k]
            if isinstance(v, float):
                cells.append(repr(v))
            elif isinstance(v, list):
                cells.append(";".join(repr(float(x)) for x in v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
