"""Command-line interface.

Subcommands: ``fit``, ``eval``, ``sweep``, ``bench``, ``analyze``, ``synth``.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
``CRCLASSIFY_VERBOSITY`` (0/1/2) controls logging on stderr and nothing else.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import build_tie_scenario
from .data import (
    Dataset,
    load_csv,
    save_csv,
    synthetic_subspaces,
    write_manifest,
)
from .errors import (
    DegenerateSum,
    DimensionMismatch,
    EmptyDataset,
    InfeasibleGeometry,
    InvalidSparsity,
    ParseError,
    SingularGram,
    ZeroSample,
    ZeroVector,
)
from .harness import (
    CLASSIFIER_NAMES,
    ExperimentConfig,
    PRESETS,
    bench_timing,
    emit_plots,
    evaluate,
    fit,
    sweep,
    write_report,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

log = logging.getLogger("crclassify")


class _UsageError(Exception):
    """Flag combinations argparse cannot express (e.g. --data vs --config)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _count_or_fraction(text: str) -> int | float:
    value = float(text)
    if value.is_integer() and "." not in text:
        return int(value)
    return value


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _classifier_list(text: str) -> tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    for name in names:
        if name not in CLASSIFIER_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown classifier {name!r}; choose from {', '.join(CLASSIFIER_NAMES)}"
            )
    return names


def _add_model_flags(parser):
    parser.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        help="hyperparameter profile (sets --ridge-lambda and --k defaults)",
    )
    parser.add_argument("--ridge-lambda", type=_nonneg_float, default=None)
    parser.add_argument("--k", type=_positive_int, default=None, help="sparsity budget")


def _add_eval_flags(parser):
    parser.add_argument("--data", help="dataset CSV (label,f0,f1,...)")
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    _add_model_flags(parser)
    parser.add_argument("--classifiers", type=_classifier_list, default=None)
    parser.add_argument("--lambda1", type=_nonneg_float, default=None)
    parser.add_argument(
        "--train-per-class",
        type=_count_or_fraction,
        default=None,
        help="samples per class for training (integer) or fraction in (0,1)",
    )
    parser.add_argument("--trials", type=_positive_int, default=None)
    parser.add_argument("--delta-grid", type=_float_list, default=None)
    parser.add_argument("--normalize-residuals", action="store_true", default=None)
    parser.add_argument("--outdir", default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="crclassify", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[], help="fit a model and summarize it")
    p.add_argument("--data", required=True)
    _add_model_flags(p)
    p.add_argument("--train-per-class", type=_count_or_fraction, default=None)
    p.add_argument("--seed", type=_seed, default=0, help="split seed when --train-per-class is given")
    p.add_argument("--out", help="write projection/gram arrays to this .npz")

    p = sub.add_parser("eval", help="repeated-trial benchmark")
    _add_eval_flags(p)
    p.add_argument("--seed", type=_seed, required=True)

    p = sub.add_parser("sweep", help="two-stage lambda/k search")
    _add_eval_flags(p)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--lambda-grid", type=_float_list, required=True)
    p.add_argument("--k-grid", type=_int_list, required=True)

    p = sub.add_parser("bench", help="single-thread per-sample timing")
    p.add_argument("--data", help="dataset CSV; omit to use a synthetic benchmark set")
    p.add_argument("--classes", type=_positive_int, default=100)
    p.add_argument("--n-per-class", type=_positive_int, default=20)
    p.add_argument("--m", type=_positive_int, default=500)
    p.add_argument("--dim", type=_positive_int, default=5)
    p.add_argument("--sigma", type=_nonneg_float, default=0.05)
    p.add_argument("--test-per-class", type=_positive_int, default=1)
    _add_model_flags(p)
    p.add_argument("--train-per-class", type=_count_or_fraction, default=None)
    p.add_argument(
        "--classifiers", type=_classifier_list, default=("crc-rls", "sa-crc")
    )
    p.add_argument("--repetitions", type=_positive_int, default=30)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--outdir", default=None)

    p = sub.add_parser("analyze", help="diagnostics")
    what = p.add_subparsers(dest="analysis", required=True)

    tie = what.add_parser("tie", help="build a residual-tie geometry")
    tie.add_argument("--m", type=_positive_int, default=8)
    tie.add_argument("--seed", type=_seed, default=0)
    tie.add_argument("--asymmetry", type=float, default=0.0)
    tie.add_argument("--ridge-lambda", type=_nonneg_float, default=1e-6)

    curves = what.add_parser("curves", help="sparsity curves and margin stats")
    _add_eval_flags(curves)
    curves.add_argument("--seed", type=_seed, required=True)

    p = sub.add_parser("synth", help="generate a synthetic subspace dataset")
    p.add_argument("--classes", type=_positive_int, default=10)
    p.add_argument("--n-per-class", type=_positive_int, default=40)
    p.add_argument("--m", type=_positive_int, default=50)
    p.add_argument("--dim", type=_positive_int, default=5)
    p.add_argument("--sigma", type=_nonneg_float, default=0.05)
    p.add_argument("--overlap", type=_nonneg_float, default=0.0)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", action="store_true", help="also write a manifest JSON")

    return parser


def _build_config(args) -> ExperimentConfig:
    base: dict = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
        ExperimentConfig.from_dict(base)  # validate keys before overriding
    if args.preset:
        base.setdefault("ridge_lambda", PRESETS[args.preset]["ridge_lambda"])
        base.setdefault("sparsity", PRESETS[args.preset]["sparsity"])

    overrides = {
        "dataset": getattr(args, "data", None),
        "ridge_lambda": args.ridge_lambda,
        "sparsity": args.k,
        "classifiers": getattr(args, "classifiers", None),
        "lambda1": getattr(args, "lambda1", None),
        "per_class_train": getattr(args, "train_per_class", None),
        "trials": getattr(args, "trials", None),
        "seed": getattr(args, "seed", None),
        "delta_grid": getattr(args, "delta_grid", None),
        "outdir": getattr(args, "outdir", None),
        "normalize_residuals": getattr(args, "normalize_residuals", None),
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if not base.get("dataset"):
        raise _UsageError("a dataset is required: pass --data or a --config with one")
    return ExperimentConfig.from_dict(base)


def _accuracy_table(report: dict) -> str:
    rows = [f"{'classifier':<16} {'mean acc':>9} {'std':>9} {'failed':>7}"]
    for name, res in sorted(report["results"].items()):
        std = res["std_accuracy"]
        rows.append(
            f"{name:<16} {res['mean_accuracy']:>9.4f} "
            f"{std if std is None else format(std, '.4f')!s:>9} "
            f"{sum(res['per_trial_failed']):>7}"
        )
    return "\n".join(rows)


def _split_dataset_for_fit(args) -> Dataset:
    dataset = load_csv(args.data)
    if args.train_per_class is None:
        return dataset
    from .data import SplitSpec, split

    train, _ = split(dataset, SplitSpec(args.train_per_class, args.seed))
    return train


def _cmd_fit(args) -> int:
    preset = PRESETS.get(args.preset, {})
    lam = args.ridge_lambda if args.ridge_lambda is not None else preset.get("ridge_lambda", 0.003)
    k = args.k if args.k is not None else preset.get("sparsity", 50)
    train = _split_dataset_for_fit(args)
    start = time.perf_counter()
    model = fit(train, lam, k)
    seconds = time.perf_counter() - start
    summary = {
        "feature_dim": model.dictionary.feature_dim,
        "atom_count": model.dictionary.size,
        "class_count": model.dictionary.class_count,
        "ridge_lambda": model.ridge_lambda,
        "sparsity": model.sparsity,
        "fit_seconds": seconds,
    }
    if args.out:
        np.savez(
            args.out,
            dictionary=model.dictionary.data,
            projection=model.projection,
            gram=model.gram,
            label_matrix=model.label_matrix.matrix,
            class_labels=np.asarray(model.class_labels, dtype=object),
            class_sizes=np.asarray(model.dictionary.partition.sizes),
            ridge_lambda=model.ridge_lambda,
            sparsity=model.sparsity,
        )
        summary["saved"] = args.out
    print(json.dumps(summary, sort_keys=True, indent=2))
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = _build_config(args)
    report, timing = evaluate(config)
    print(_accuracy_table(report))
    if config.outdir:
        outdir = Path(config.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        write_report(report, outdir / "report.json")
        write_report(timing, outdir / "timing.json")
        emit_plots(report, outdir)
        log.info("wrote %s", outdir / "report.json")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _build_config(args)
    report = sweep(config, args.lambda_grid, args.k_grid)
    rec = report["recommended"]
    print(
        f"recommended: ridge_lambda={rec['ridge_lambda']} "
        f"sparsity={rec['sparsity']} mean_accuracy={rec['mean_accuracy']:.4f}"
    )
    if config.outdir:
        outdir = Path(config.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        write_report(report, outdir / "sweep.json")
        emit_plots(report, outdir)
    return EXIT_OK


def _cmd_bench(args) -> int:
    preset = PRESETS.get(args.preset, {})
    lam = args.ridge_lambda if args.ridge_lambda is not None else preset.get("ridge_lambda", 0.003)
    k = args.k if args.k is not None else preset.get("sparsity", 50)
    if args.data:
        dataset = load_csv(args.data)
        per_class = args.train_per_class if args.train_per_class is not None else 0.5
    else:
        dataset = synthetic_subspaces(
            args.classes,
            args.n_per_class + args.test_per_class,
            args.m,
            args.dim,
            args.sigma,
            0.0,
            args.seed,
        )
        per_class = args.n_per_class
    from .data import SplitSpec, split

    train, test = split(dataset, SplitSpec(per_class, args.seed))
    model = fit(train, lam, k)
    table = bench_timing(model, test, args.repetitions, tuple(args.classifiers))
    for name in args.classifiers:
        stats = table["classifiers"][name]
        print(
            f"{name:<16} median {stats['median_seconds_per_sample'] * 1e3:8.3f} ms  "
            f"mean {stats['mean_seconds_per_sample'] * 1e3:8.3f} ms"
        )
    if args.outdir:
        outdir = Path(args.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        write_report(table, outdir / "timing.json")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    if args.analysis == "tie":
        _, _, report = build_tie_scenario(
            args.m, args.seed, asymmetry=args.asymmetry, ridge_lambda=args.ridge_lambda
        )
        print(json.dumps(dataclasses.asdict(report), sort_keys=True, indent=2))
        return EXIT_OK

    config = _build_config(args)
    if not config.delta_grid:
        config = dataclasses.replace(
            config, delta_grid=tuple(np.logspace(-6, -1, 11))
        )
    report, _ = evaluate(config)
    diag = report["diagnostics"]
    kinds = sorted(diag["mean_effective_sparsity"])
    print(f"{'delta':>12} " + " ".join(f"{kind:>10}" for kind in kinds))
    for i, delta in enumerate(diag["delta_grid"]):
        row = " ".join(
            f"{diag['mean_effective_sparsity'][kind][i]:>10.2f}" for kind in kinds
        )
        print(f"{delta:>12.2e} {row}")
    if config.outdir:
        outdir = Path(config.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        write_report(report, outdir / "report.json")
        emit_plots(report, outdir)
    return EXIT_OK


def _cmd_synth(args) -> int:
    dataset = synthetic_subspaces(
        args.classes, args.n_per_class, args.m, args.dim, args.sigma, args.overlap, args.seed
    )
    save_csv(dataset, args.out)
    summary = {
        "out": args.out,
        "feature_dim": dataset.feature_dim,
        "sample_count": dataset.sample_count,
        "classes": len(dataset.class_labels),
    }
    if args.manifest:
        summary["manifest"] = str(write_manifest(args.out))
    print(json.dumps(summary, sort_keys=True, indent=2))
    return EXIT_OK


_COMMANDS = {
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
    "analyze": _cmd_analyze,
    "synth": _cmd_synth,
}

_DATA_ERRORS = (
    ParseError,
    EmptyDataset,
    ZeroSample,
    ZeroVector,
    DimensionMismatch,
    InvalidSparsity,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    PermissionError,
    json.JSONDecodeError,
    ValueError,
)

_NUMERIC_ERRORS = (SingularGram, DegenerateSum, InfeasibleGeometry)


def main(argv=None) -> int:
    verbosity = os.environ.get("CRCLASSIFY_VERBOSITY", "0")
    level = {"0": logging.WARNING, "1": logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(message)s")

    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"crclassify: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"crclassify: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"crclassify: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
