"""Experiment command line.

Subcommands: generate, pretrain, linear-eval, baseline, ablation, sweep,
gradcheck. Settings resolve in three layers: built-in defaults, then the
optional JSON --config file, then explicit flags. Every command writes the
fully resolved configuration to ``<out>/resolved_config.json`` before doing
any work, and all CSV/JSON outputs are byte-identical across reruns with
the same configuration and seed (wall-clock timings go to a separate
``timing.log``).

Exit codes: 0 success, 2 validation/configuration error, 3 I/O error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import AunceConfig
from .encoder import init_encoder, load_checkpoint, save_checkpoint
from .exceptions import AunceError, NumericFailureError
from .experiments import (
    TrainerSettings,
    rows_to_csv,
    run_ablation,
    run_beta_sweep,
    run_probs_sweep,
    summarize,
)
from .gradcheck import grad_check
from .losses import aunce_term, wce_loss_and_grad, au_weights
from .rng import RngStream
from .synthdata import RATE_PRESETS, GeneratorSpec, generate, load_csv, save_csv, split
from .trainer import baseline_e2e, linear_eval, pretrain

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


# ----------------------------------------------------------------------
# plumbing
# ----------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _resolve(defaults: dict, config_path, args: argparse.Namespace) -> dict:
    """defaults < config file < explicitly passed flags."""
    resolved = dict(defaults)
    if config_path:
        p = Path(config_path)
        if not p.exists():
            raise FileNotFoundError(f"config file not found: {p}")
        file_values = json.loads(p.read_text(encoding="utf-8"))
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise AunceError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_values)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _prepare_out(out: str, resolved: dict, command: str) -> Path:
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "resolved_config.json", {"command": command, **resolved})
    return outdir


def _load_dataset(path: str):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"dataset not found: {p}")
    return load_csv(p)


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x != ""]


def _parse_seeds(text) -> list[int]:
    return [int(x) for x in str(text).split(",") if x != ""]


def _write_run(outdir: Path, run, name: str = "trainrun") -> None:
    lines = [json.dumps(r, sort_keys=True) for r in run.serializable_records()]
    (outdir / f"{name}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_json(outdir / f"{name}_summary.json", run.summary())
    timing = [f"epoch {r.epoch}: {r.wall_time:.6f}s" for r in run.records]
    (outdir / "timing.log").write_text("\n".join(timing) + "\n", encoding="utf-8")


def _write_metrics(outdir: Path, report, name: str = "metrics") -> None:
    _write_json(outdir / f"{name}.json", report.to_dict())
    csv = ",".join(report.csv_header()) + "\n" + ",".join(report.csv_row()) + "\n"
    (outdir / f"{name}.csv").write_text(csv, encoding="utf-8")


def _loss_config(r: dict) -> AunceConfig:
    return AunceConfig(
        tau=r["tau"],
        beta_minority=r["beta_minority"],
        beta_majority=r["beta_majority"],
        probs=tuple(r["probs"]) if not isinstance(r["probs"], str)
        else tuple(_parse_floats(r["probs"])),
        normalize=r["normalize"],
    )


_LOSS_DEFAULTS = {
    "tau": 0.5,
    "beta_minority": 1.2,
    "beta_majority": 0.4,
    "probs": [0.15, 0.15, 0.7, 0.0],
    "normalize": True,
}


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_generate(args) -> int:
    defaults = {
        "preset": None, "rates": None, "feature_dim": 64, "n_samples": 2000,
        "noise_sigma": 0.5, "flip_rate": 0.0, "prototype_scale": 1.0, "seed": 0,
    }
    r = _resolve(defaults, args.config, args)
    if r["preset"] is not None:
        if r["preset"] not in RATE_PRESETS:
            raise AunceError(
                f"unknown preset {r['preset']!r}; choose from {sorted(RATE_PRESETS)}"
            )
        rates = RATE_PRESETS[r["preset"]]
    elif r["rates"] is not None:
        rates = _parse_floats(r["rates"]) if isinstance(r["rates"], str) else r["rates"]
    else:
        raise AunceError("either --preset or --rates is required")
    if int(r["n_samples"]) < 1:
        raise AunceError("n_samples must be >= 1")
    r["rates"] = [float(x) for x in rates]

    outdir = _prepare_out(args.out, r, "generate")
    spec = GeneratorSpec(
        n_au=len(rates), rates=tuple(rates), n_samples=int(r["n_samples"]),
        seed=int(r["seed"]), feature_dim=int(r["feature_dim"]),
        prototype_scale=float(r["prototype_scale"]),
        noise_sigma=float(r["noise_sigma"]), flip_rate=float(r["flip_rate"]),
    )
    path = save_csv(generate(spec), outdir / "dataset.csv")
    print(f"wrote {path}")
    return EXIT_OK


_TRAIN_DEFAULTS = {
    **_LOSS_DEFAULTS,
    "epochs": 60, "batch_size": 32, "lr": 1e-3, "hidden_dim": 128,
    "embed_dim": 32, "seed": 0, "train_fraction": 0.8, "split_seed": None,
}


def _split_train_test(data, r: dict):
    split_seed = r["split_seed"] if r["split_seed"] is not None else r["seed"]
    return split(data, float(r["train_fraction"]), int(split_seed))


def cmd_pretrain(args) -> int:
    r = _resolve(_TRAIN_DEFAULTS, args.config, args)
    data = _load_dataset(args.data)
    outdir = _prepare_out(args.out, {**r, "data": str(args.data)}, "pretrain")
    train, _ = _split_train_test(data, r)
    cfg = _loss_config(r)
    encoder0 = init_encoder(
        int(r["seed"]), train.feature_dim, train.n_labels,
        hidden_dim=int(r["hidden_dim"]), embed_dim=int(r["embed_dim"]),
        normalize=cfg.normalize,
    )
    params, run = pretrain(
        train, encoder0, cfg, epochs=int(r["epochs"]),
        batch_size=int(r["batch_size"]), lr=float(r["lr"]), seed=int(r["seed"]),
    )
    save_checkpoint(params, outdir / "encoder.json")
    _write_run(outdir, run)
    print(f"pretrained {run.config['epochs']} epochs; "
          f"final loss {run.records[-1].mean_loss:.6f}" if run.records else "no epochs run")
    return EXIT_OK


_LINEAR_DEFAULTS = {
    "epochs": 100, "lr": 1e-2, "threshold": 0.5, "seed": 0,
    "train_fraction": 0.8, "split_seed": None, "eval_on_clean": True,
}


def cmd_linear_eval(args) -> int:
    r = _resolve(_LINEAR_DEFAULTS, args.config, args)
    data = _load_dataset(args.data)
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise FileNotFoundError(f"checkpoint not found: {ckpt}")
    outdir = _prepare_out(
        args.out, {**r, "data": str(args.data), "checkpoint": str(ckpt)}, "linear-eval"
    )
    params = load_checkpoint(ckpt)
    train, test = _split_train_test(data, r)
    head, report, run = linear_eval(
        params, train, test, epochs=int(r["epochs"]), lr=float(r["lr"]),
        seed=int(r["seed"]), threshold=float(r["threshold"]),
        eval_on_clean=bool(r["eval_on_clean"]),
    )
    _write_json(outdir / "head.json", {"A": head.A.tolist(), "b": head.b.tolist()})
    _write_metrics(outdir, report)
    _write_run(outdir, run)
    print(f"f1_macro={report.f1_macro:.4f} f1_micro={report.f1_micro:.4f} "
          f"accuracy={report.accuracy:.4f}")
    return EXIT_OK


_BASELINE_DEFAULTS = {
    "epochs": 60, "batch_size": 32, "lr": 1e-3, "hidden_dim": 128,
    "embed_dim": 32, "threshold": 0.5, "seed": 0, "train_fraction": 0.8,
    "split_seed": None, "eval_on_clean": True, "normalize": True,
}


def cmd_baseline(args) -> int:
    r = _resolve(_BASELINE_DEFAULTS, args.config, args)
    data = _load_dataset(args.data)
    outdir = _prepare_out(args.out, {**r, "data": str(args.data)}, "baseline")
    train, test = _split_train_test(data, r)
    encoder0 = init_encoder(
        int(r["seed"]), train.feature_dim, train.n_labels,
        hidden_dim=int(r["hidden_dim"]), embed_dim=int(r["embed_dim"]),
        normalize=bool(r["normalize"]),
    )
    report, run = baseline_e2e(
        train, test, encoder0, epochs=int(r["epochs"]),
        batch_size=int(r["batch_size"]), lr=float(r["lr"]), seed=int(r["seed"]),
        threshold=float(r["threshold"]), eval_on_clean=bool(r["eval_on_clean"]),
    )
    _write_metrics(outdir, report)
    _write_run(outdir, run)
    print(f"f1_macro={report.f1_macro:.4f} f1_micro={report.f1_micro:.4f} "
          f"accuracy={report.accuracy:.4f}")
    return EXIT_OK


_EXPERIMENT_DEFAULTS = {
    **_LOSS_DEFAULTS,
    "seeds": [0, 1, 2, 3, 4],
    "hidden_dim": 64, "embed_dim": 16, "pretrain_epochs": 15,
    "linear_epochs": 80, "batch_size": 32, "pretrain_lr": 1e-3,
    "linear_lr": 5e-2, "train_fraction": 0.8, "threshold": 0.5,
    "eval_on_clean": True,
}


def _experiment_settings(r: dict) -> TrainerSettings:
    return TrainerSettings(
        hidden_dim=int(r["hidden_dim"]), embed_dim=int(r["embed_dim"]),
        pretrain_epochs=int(r["pretrain_epochs"]),
        linear_epochs=int(r["linear_epochs"]), batch_size=int(r["batch_size"]),
        pretrain_lr=float(r["pretrain_lr"]), linear_lr=float(r["linear_lr"]),
        train_fraction=float(r["train_fraction"]),
        threshold=float(r["threshold"]), eval_on_clean=bool(r["eval_on_clean"]),
    )


def _run_grid(args, kind: str) -> int:
    r = _resolve(_EXPERIMENT_DEFAULTS, args.config, args)
    if isinstance(r["seeds"], str):
        r["seeds"] = _parse_seeds(r["seeds"])
    data = _load_dataset(args.data)
    outdir = _prepare_out(args.out, {**r, "data": str(args.data), "grid": kind}, kind)
    cfg = _loss_config(r)
    settings = _experiment_settings(r)
    if kind == "ablation":
        rows = run_ablation(data, cfg, settings, r["seeds"])
    elif kind == "sweep-probs":
        rows = run_probs_sweep(data, cfg, settings, r["seeds"])
    else:
        rows = run_beta_sweep(data, cfg, settings, r["seeds"])
    name = "ablation" if kind == "ablation" else "sweep"
    (outdir / f"{name}.csv").write_text(rows_to_csv(rows), encoding="utf-8")
    _write_json(outdir / f"{name}_summary.json", summarize(rows))
    for arm, entry in summarize(rows).items():
        print(f"{arm}: f1_macro={entry['f1_macro_mean']:.4f}"
              f" (+/- {entry['f1_macro_sd']:.4f})")
    return EXIT_OK


def cmd_ablation(args) -> int:
    return _run_grid(args, "ablation")


def cmd_sweep(args) -> int:
    return _run_grid(args, "sweep-probs" if args.axis == "probs" else "sweep-beta")


def cmd_gradcheck(args) -> int:
    defaults = {"seed": 0, "trials": 100, "h": 1e-6, "tol": 1e-6}
    r = _resolve(defaults, args.config, args)
    if int(r["trials"]) < 1:
        raise AunceError("trials must be >= 1")
    outdir = _prepare_out(args.out, {**r, "inject_fault": args.inject_fault}, "gradcheck")

    rng = RngStream(int(r["seed"]))
    sign = -1.0 if args.inject_fault else 1.0
    worst = 0.0
    for t in range(int(r["trials"])):
        trng = rng.child(t)
        d = int(trng.integers(2, 33))
        n_neg = int(trng.integers(1, 17))
        beta = float(trng.uniform(0.3, 2.0))
        tau = float(trng.uniform(0.3, 1.0))

        def unit(shape):
            v = trng.normal(size=shape)
            return v / np.linalg.norm(v, axis=-1, keepdims=True)

        anchor, pos = unit(d), unit(d)
        negs = unit((n_neg, d))

        def term_op(inputs):
            a, p, ns = inputs
            value, grads = aunce_term(a, p, ns, beta, tau)
            return value, [sign * grads.anchor, sign * grads.positive,
                           sign * grads.negatives]

        rep = grad_check(term_op, [anchor, pos, negs], h=float(r["h"]), tol=float(r["tol"]))
        worst = max(worst, rep.max_rel_error)

        n_lab = int(trng.integers(1, 7))
        w = au_weights(trng.uniform(0.1, 0.9, size=n_lab))
        yv = trng.bernoulli(0.5, size=n_lab).astype(np.float64)
        ph = trng.uniform(0.05, 0.95, size=n_lab)

        def wce_op(inputs):
            value, grad = wce_loss_and_grad(yv, inputs[0], w)
            return value, [sign * grad]

        rep = grad_check(wce_op, [ph], h=float(r["h"]), tol=float(r["tol"]))
        worst = max(worst, rep.max_rel_error)

    passed = worst < float(r["tol"])
    _write_json(outdir / "gradcheck.json", {
        "trials": int(r["trials"]), "max_rel_error": worst,
        "tol": float(r["tol"]), "passed": passed,
    })
    print(f"{'PASS' if passed else 'FAIL'}: max relative error {worst:.3e} "
          f"over {r['trials']} trials (tol {r['tol']:g})")
    return EXIT_OK if passed else EXIT_NUMERIC


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, with_seed: bool = True):
    p.add_argument("--config", default=None, help="JSON settings file")
    p.add_argument("--out", required=True, help="output directory")
    if with_seed:
        p.add_argument("--seed", type=int, default=None)


def _add_norm_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--normalize", dest="normalize", action="store_const", const=True,
                   default=None)
    g.add_argument("--no-normalize", dest="normalize", action="store_const", const=False)


def _add_loss_flags(p: argparse.ArgumentParser):
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--beta-minority", dest="beta_minority", type=float, default=None)
    p.add_argument("--beta-majority", dest="beta_majority", type=float, default=None)
    p.add_argument("--probs", default=None, help="p1,p2,p3,p4")
    _add_norm_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aunce",
        description="Contrastive multi-label training experiments "
                    "(exit codes: 0 ok, 2 validation, 3 I/O, 4 numeric)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _add_common(p)
    p.add_argument("--preset", default=None, choices=sorted(RATE_PRESETS))
    p.add_argument("--rates", default=None, help="comma-separated rates in (0,1)")
    p.add_argument("--feature-dim", dest="feature_dim", type=int, default=None)
    p.add_argument("--n-samples", dest="n_samples", type=int, default=None)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=None)
    p.add_argument("--flip-rate", dest="flip_rate", type=float, default=None)
    p.add_argument("--prototype-scale", dest="prototype_scale", type=float, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pretrain", help="stage 1: contrastive pretraining")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    p.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    _add_loss_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("linear-eval", help="stage 2: frozen-encoder linear probe")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    p.set_defaults(func=cmd_linear_eval)

    p = sub.add_parser("baseline", help="end-to-end cross-entropy arm")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    p.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    p.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    _add_norm_flags(p)
    p.set_defaults(func=cmd_baseline)

    for name, help_text in (("ablation", "models A-E over a seed list"),
                            ("sweep", "hyperparameter grid over one axis")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p, with_seed=False)
        p.add_argument("--data", required=True)
        p.add_argument("--seeds", default=None, help="comma-separated seed list")
        p.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int, default=None)
        p.add_argument("--linear-epochs", dest="linear_epochs", type=int, default=None)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
        p.add_argument("--pretrain-lr", dest="pretrain_lr", type=float, default=None)
        p.add_argument("--linear-lr", dest="linear_lr", type=float, default=None)
        p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
        p.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
        p.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
        _add_loss_flags(p)
        if name == "sweep":
            p.add_argument("--axis", required=True, choices=("probs", "beta"))
            p.set_defaults(func=cmd_sweep)
        else:
            p.set_defaults(func=cmd_ablation)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suites")
    _add_common(p)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--inject-fault", dest="inject_fault", action="store_true",
                   help="self-test: flip gradient signs, must FAIL")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericFailureError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except (AunceError, ValueError) as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
