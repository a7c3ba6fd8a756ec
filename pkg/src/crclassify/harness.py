"""Benchmark engine: model fitting, repeated-trial evaluation, the two-stage
hyperparameter sweep, single-thread timing runs and report emission.

Reports are a pure function of the experiment configuration (seeds
included): rerunning a config byte-reproduces ``report.json``.  Wall-clock
measurements are inherently unstable, so they are kept out of the canonical
report and written to a separate timing table.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import median

import numpy as np
from threadpoolctl import threadpool_limits

from .analysis import decision_margin_check, sparsity_curve
from .classify import (
    classify_crc_rls,
    classify_omp_residual,
    classify_sa_crc,
    classify_src,
)
from .data import Dataset, SplitSpec, load_csv, normalize_columns, split
from .errors import DegenerateSum, EmptyDataset, NoConvergence
from .model import (
    Dictionary,
    FittedModel,
    build_label_matrix,
    partition_from_sample_labels,
)
from .solvers import RidgeProjection, build_projection, omp, rls_code

REPORT_SCHEMA_VERSION = 1

CLASSIFIER_NAMES = (
    "residual",
    "src",
    "crc-rls",
    "sa-crc",
    "sa-crc-rls-only",
    "sa-crc-omp-only",
)

#: Hyperparameter profiles for the three feature families the method is
#: normally run on; sparsity 50 throughout.
PRESETS = {
    "face": {"ridge_lambda": 0.003, "sparsity": 50},
    "object": {"ridge_lambda": 1.0, "sparsity": 50},
    "action": {"ridge_lambda": 0.01, "sparsity": 50},
}

#: Test samples per trial used for the optional sparsity diagnostics.
DIAGNOSTIC_SAMPLE_LIMIT = 50


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an evaluation run depends on.

    ``dataset`` is a CSV path (callers holding an in-memory
    :class:`Dataset` pass it to :func:`evaluate` directly and may leave this
    empty).  ``delta_grid`` switches on sparsity/margin diagnostics.
    """

    dataset: str = ""
    classifiers: tuple[str, ...] = ("sa-crc",)
    ridge_lambda: float = 0.003
    sparsity: int = 50
    lambda1: float = 0.01
    per_class_train: int | float = 0.5
    trials: int = 1
    seed: int = 0
    delta_grid: tuple[float, ...] = ()
    outdir: str = ""
    normalize_residuals: bool = False
    # labeling needs far less coefficient precision than objective studies,
    # so the benchmark default is looser than lasso_code's 1e-6
    src_tol: float = 1e-4
    src_max_iter: int = 10000

    def __post_init__(self):
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(
            self, "delta_grid", tuple(float(d) for d in self.delta_grid)
        )
        unknown = [c for c in self.classifiers if c not in CLASSIFIER_NAMES]
        if unknown:
            raise ValueError(
                f"unknown classifiers {unknown}; choose from {CLASSIFIER_NAMES}"
            )
        if not self.classifiers:
            raise ValueError("select at least one classifier")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be nonnegative")
        if self.sparsity < 1:
            raise ValueError("sparsity must be at least 1")
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "classifiers": list(self.classifiers),
            "ridge_lambda": float(self.ridge_lambda),
            "sparsity": int(self.sparsity),
            "lambda1": float(self.lambda1),
            "per_class_train": self.per_class_train,
            "trials": int(self.trials),
            "seed": int(self.seed),
            "delta_grid": [float(d) for d in self.delta_grid],
            "normalize_residuals": bool(self.normalize_residuals),
            "src_tol": float(self.src_tol),
            "src_max_iter": int(self.src_max_iter),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**raw)


def fit(train: Dataset, ridge_lambda: float, sparsity: int) -> FittedModel:
    """Normalize, group classes contiguously, precompute projection and Gram."""
    normalized = normalize_columns(train)
    partition, order = partition_from_sample_labels(normalized.labels)
    dictionary = Dictionary(normalized.features[:, order], partition)
    gram = dictionary.data.T @ dictionary.data
    projection = build_projection(dictionary, ridge_lambda, gram=gram)
    return FittedModel(
        dictionary=dictionary,
        projection=projection.matrix,
        label_matrix=build_label_matrix(partition),
        ridge_lambda=float(ridge_lambda),
        sparsity=int(sparsity),
        gram=gram,
    )


def classify_as(name: str, model: FittedModel, y, config: ExperimentConfig):
    """Dispatch one test sample to a configured classifier."""
    if name == "residual":
        return classify_omp_residual(model, y)
    if name == "crc-rls":
        return classify_crc_rls(
            model, y, normalize_residuals=config.normalize_residuals
        )
    if name == "src":
        return classify_src(
            model, y, config.lambda1, config.src_tol, config.src_max_iter
        )
    if name == "sa-crc":
        return classify_sa_crc(model, y)
    if name == "sa-crc-rls-only":
        return classify_sa_crc(model, y, use_sparse=False)
    if name == "sa-crc-omp-only":
        return classify_sa_crc(model, y, use_dense=False)
    raise ValueError(f"unknown classifier {name!r}")


def _diagnostics(model: FittedModel, test: Dataset, config: ExperimentConfig) -> dict:
    """Sparsity curves, a coefficient trace and margin stats on one model."""
    deltas = np.asarray(config.delta_grid, dtype=np.float64)
    count = min(test.sample_count, DIAGNOSTIC_SAMPLE_LIMIT)
    sums = {kind: np.zeros(deltas.size) for kind in ("dense", "sparse", "augmented")}
    margin_hits = np.zeros(deltas.size)
    check_margin = model.dictionary.class_count >= 2
    projection = RidgeProjection(model.projection, model.ridge_lambda)
    trace = None

    for j in range(count):
        y = test.features[:, j]
        outcome = classify_sa_crc(model, y)
        dense = rls_code(projection, y)
        sparse, _ = omp(model.dictionary, y, model.sparsity, gram=model.gram)
        reps = {"dense": dense, "sparse": sparse, "augmented": outcome.representation}
        for kind, rep in reps.items():
            sums[kind] += sparsity_curve(rep, deltas).counts
        if check_margin:
            for d_idx, delta in enumerate(deltas):
                if delta <= 0.0:
                    continue
                report = decision_margin_check(
                    outcome.scores,
                    outcome.representation,
                    model.dictionary.partition,
                    delta,
                )
                margin_hits[d_idx] += 1.0 if report.satisfied else 0.0
        if trace is None:
            trace = {
                kind: [float(v) for v in rep.coefficients] for kind, rep in reps.items()
            }

    return {
        "delta_grid": [float(d) for d in deltas],
        "samples_used": int(count),
        "mean_effective_sparsity": {
            kind: [float(v) for v in sums[kind] / count] for kind in sums
        },
        "margin_satisfied_fraction": [
            float(margin_hits[i] / count) if check_margin and deltas[i] > 0.0 else None
            for i in range(deltas.size)
        ],
        "coefficient_trace": trace,
    }


def evaluate(
    config: ExperimentConfig, dataset: Dataset | None = None
) -> tuple[dict, dict]:
    """Repeated-trial benchmark; returns (report, timing).

    Each trial draws a fresh stratified split, fits one model and classifies
    every test sample with every selected classifier.  Samples failing with
    :class:`DegenerateSum` are counted as failures, never silently dropped:
    correct + incorrect + failed equals the test-set size.  The report is
    deterministic; all wall-clock numbers live in the timing table.
    """
    if dataset is None:
        dataset = load_csv(config.dataset)
    class_labels = dataset.class_labels
    label_index = {label: i for i, label in enumerate(class_labels)}
    spec = SplitSpec(config.per_class_train, config.seed, config.trials)

    accuracy = {name: [] for name in config.classifiers}
    failed = {name: [] for name in config.classifiers}
    nonconverged = {name: [] for name in config.classifiers}
    confusion = {
        name: np.zeros((len(class_labels), len(class_labels)), dtype=np.int64)
        for name in config.classifiers
    }
    classify_seconds = {name: [] for name in config.classifiers}
    fit_seconds = []
    diagnostics = None

    for trial in range(config.trials):
        train, test = split(dataset, spec, trial)
        start = time.perf_counter()
        model = fit(train, config.ridge_lambda, config.sparsity)
        fit_seconds.append(time.perf_counter() - start)

        for name in config.classifiers:
            correct = 0
            failures = 0
            unconverged = 0
            for j in range(test.sample_count):
                try:
                    # solver nonconvergence is accounted for in the report,
                    # not spread over stderr once per sample
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", NoConvergence)
                        outcome = classify_as(name, model, test.features[:, j], config)
                except DegenerateSum:
                    failures += 1
                    continue
                classify_seconds[name].append(outcome.seconds)
                unconverged += 1 if outcome.notes else 0
                if outcome.label == test.labels[j]:
                    correct += 1
                confusion[name][
                    label_index[test.labels[j]], label_index[outcome.label]
                ] += 1
            accuracy[name].append(correct / test.sample_count)
            failed[name].append(failures)
            nonconverged[name].append(unconverged)

        if trial == 0 and config.delta_grid:
            diagnostics = _diagnostics(model, test, config)

    results = {}
    for name in config.classifiers:
        acc = accuracy[name]
        results[name] = {
            "per_trial_accuracy": [float(a) for a in acc],
            "mean_accuracy": float(np.mean(acc)),
            "std_accuracy": float(np.std(acc, ddof=1)) if len(acc) >= 2 else None,
            "per_trial_failed": [int(f) for f in failed[name]],
            "per_trial_nonconverged": [int(u) for u in nonconverged[name]],
            "confusion": confusion[name].tolist(),
        }

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "evaluation",
        "config": config.to_dict(),
        "class_labels": list(class_labels),
        "results": results,
    }
    if diagnostics is not None:
        report["diagnostics"] = diagnostics

    timing = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "timing",
        "fit_seconds_per_trial": fit_seconds,
        "classifiers": {
            name: {
                "samples": len(classify_seconds[name]),
                "mean_seconds_per_sample": (
                    float(np.mean(classify_seconds[name]))
                    if classify_seconds[name]
                    else None
                ),
            }
            for name in config.classifiers
        },
    }
    return report, timing


def _mean_accuracy(config: ExperimentConfig, dataset, name: str) -> float:
    report, _ = evaluate(replace(config, classifiers=(name,)), dataset)
    return report["results"][name]["mean_accuracy"]


def _neighborhood(grid: tuple, index: int) -> list:
    lo, hi = max(0, index - 1), min(len(grid) - 1, index + 1)
    return list(grid[lo : hi + 1])


def sweep(
    config: ExperimentConfig,
    lambda_grid,
    k_grid,
    dataset: Dataset | None = None,
) -> dict:
    """Two-stage hyperparameter search with local refinement.

    Stage 1 tunes lambda with the sparse code switched off (pooled labels of
    the ridge code alone); stage 2 fixes the winning lambda and tunes the
    sparsity budget with the full classifier; stage 3 picks the best of the
    3x3 neighboring grid points around the stage-1/2 winner.  Every
    evaluation is logged in the report's ``evaluations`` list.
    """
    lambda_grid = tuple(float(l) for l in lambda_grid)
    k_grid = tuple(int(k) for k in k_grid)
    if not lambda_grid or not k_grid:
        raise ValueError("lambda_grid and k_grid must be non-empty")
    if dataset is None:
        dataset = load_csv(config.dataset)

    evaluations = []
    cache: dict[tuple, float] = {}

    def measure(stage: str, name: str, lam: float, k: int) -> float:
        key = (name, lam, k)
        if key not in cache:
            cache[key] = _mean_accuracy(
                replace(config, ridge_lambda=lam, sparsity=k), dataset, name
            )
        evaluations.append(
            {
                "stage": stage,
                "classifier": name,
                "ridge_lambda": lam,
                "sparsity": k,
                "mean_accuracy": cache[key],
            }
        )
        return cache[key]

    # stage 1 never runs the pursuit, so any valid budget works; the smallest
    # grid entry keeps the config legal on small dictionaries
    stage1_k = min(k_grid)
    stage1 = [
        {"ridge_lambda": lam, "mean_accuracy": measure("stage1", "sa-crc-rls-only", lam, stage1_k)}
        for lam in lambda_grid
    ]
    best_l = int(np.argmax([row["mean_accuracy"] for row in stage1]))
    lambda_star = lambda_grid[best_l]

    stage2 = [
        {"sparsity": k, "mean_accuracy": measure("stage2", "sa-crc", lambda_star, k)}
        for k in k_grid
    ]
    best_k = int(np.argmax([row["mean_accuracy"] for row in stage2]))
    k_star = k_grid[best_k]

    stage3 = []
    for lam in _neighborhood(lambda_grid, best_l):
        for k in _neighborhood(k_grid, best_k):
            stage3.append(
                {
                    "ridge_lambda": lam,
                    "sparsity": k,
                    "mean_accuracy": measure("stage3", "sa-crc", lam, k),
                }
            )
    best = max(range(len(stage3)), key=lambda i: stage3[i]["mean_accuracy"])

    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "sweep",
        "config": config.to_dict(),
        "lambda_grid": list(lambda_grid),
        "k_grid": list(k_grid),
        "stage1": stage1,
        "stage2": stage2,
        "stage3": stage3,
        "recommended": dict(stage3[best]),
        "evaluations": evaluations,
    }


def bench_timing(
    model: FittedModel,
    test: Dataset,
    repetitions: int = 30,
    classifiers: tuple[str, ...] = ("crc-rls", "sa-crc"),
    config: ExperimentConfig | None = None,
) -> dict:
    """Median/mean per-sample classify time per classifier, single-threaded.

    Runs one warm pass, then times ``repetitions`` sequential passes over
    the whole test set, dividing by the sample count.  Fit time is not
    included.  BLAS threading is pinned to one thread so numbers are
    comparable across classifiers and machines.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    if test.sample_count < 1:
        raise EmptyDataset("timing needs at least one test sample")
    if config is None:
        config = ExperimentConfig(
            classifiers=classifiers,
            ridge_lambda=model.ridge_lambda,
            sparsity=model.sparsity,
        )

    table = {}
    with threadpool_limits(limits=1), warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergence)
        for name in classifiers:
            for j in range(test.sample_count):  # warm pass
                classify_as(name, model, test.features[:, j], config)
            per_rep = []
            for _ in range(repetitions):
                start = time.perf_counter()
                for j in range(test.sample_count):
                    classify_as(name, model, test.features[:, j], config)
                per_rep.append((time.perf_counter() - start) / test.sample_count)
            table[name] = {
                "median_seconds_per_sample": float(median(per_rep)),
                "mean_seconds_per_sample": float(np.mean(per_rep)),
            }

    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "timing",
        "atom_count": int(model.dictionary.size),
        "class_count": int(model.dictionary.class_count),
        "feature_dim": int(model.dictionary.feature_dim),
        "test_samples": int(test.sample_count),
        "repetitions": int(repetitions),
        "classifiers": table,
    }


def write_report(report: dict, path) -> Path:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    path = Path(path)
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return path


def emit_plots(report: dict, outdir) -> list[Path]:
    """Write plot-data CSVs for whatever the report contains.

    Evaluation reports with diagnostics yield ``sparsity_curves.csv``
    (kind, delta, mean count) and ``coefficient_traces.csv`` (atom index,
    one column per representation kind); sweep reports yield
    ``sweep_tables.csv`` (stage, lambda, sparsity, mean accuracy).  Reports
    with nothing to plot produce no files.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    diagnostics = report.get("diagnostics")
    if diagnostics:
        curves = outdir / "sparsity_curves.csv"
        with curves.open("w") as fh:
            fh.write("kind,delta,mean_count\n")
            for kind, counts in sorted(
                diagnostics["mean_effective_sparsity"].items()
            ):
                for delta, count in zip(diagnostics["delta_grid"], counts):
                    fh.write(f"{kind},{delta!r},{count!r}\n")
        written.append(curves)

        trace = diagnostics.get("coefficient_trace")
        if trace:
            traces = outdir / "coefficient_traces.csv"
            with traces.open("w") as fh:
                fh.write("index,dense,sparse,augmented\n")
                for i, (dn, sp, au) in enumerate(
                    zip(trace["dense"], trace["sparse"], trace["augmented"])
                ):
                    fh.write(f"{i},{dn!r},{sp!r},{au!r}\n")
            written.append(traces)

    if report.get("kind") == "sweep":
        tables = outdir / "sweep_tables.csv"
        with tables.open("w") as fh:
            fh.write("stage,classifier,ridge_lambda,sparsity,mean_accuracy\n")
            for row in report["evaluations"]:
                fh.write(
                    f"{row['stage']},{row['classifier']},{row['ridge_lambda']!r},"
                    f"{row['sparsity']},{row['mean_accuracy']!r}\n"
                )
        written.append(tables)

    return written
