"""Collaborative-representation classifiers with sparsity augmentation.

Library layout: :mod:`~crclassify.model` holds the domain types,
:mod:`~crclassify.solvers` the coding engines (ridge, greedy pursuit, l1),
:mod:`~crclassify.classify` the four classifiers, :mod:`~crclassify.analysis`
the sparsity/geometry diagnostics, :mod:`~crclassify.data` ingestion and
synthetic datasets, and :mod:`~crclassify.harness` the benchmark engine
behind the ``crclassify`` command.
"""

from .errors import (
    DegenerateSum,
    DimensionMismatch,
    EmptyDataset,
    InfeasibleGeometry,
    InvalidSparsity,
    NoConvergence,
    ParseError,
    SingularGram,
    ZeroSample,
    ZeroVector,
)
from .model import (
    ClassPartition,
    Dictionary,
    FittedModel,
    LabelMatrix,
    Representation,
    build_label_matrix,
    partition_from_sample_labels,
)
from .solvers import (
    PursuitTrace,
    RidgeProjection,
    build_projection,
    lasso_code,
    omp,
    rls_code,
)
from .classify import (
    ClassificationOutcome,
    augment,
    class_residuals,
    classify_crc_rls,
    classify_omp_residual,
    classify_residual,
    classify_sa_crc,
    classify_src,
    pooled_label,
)
from .analysis import (
    EnergyProfile,
    MarginReport,
    ResidualDecomposition,
    SparsityCurve,
    TieScenarioReport,
    build_tie_scenario,
    decision_margin_check,
    effective_sparsity,
    energy_profile,
    residual_decomposition,
    sparsity_curve,
)
from .data import (
    Dataset,
    SplitSpec,
    load_csv,
    load_manifest,
    normalize_columns,
    random_projection,
    save_csv,
    split,
    synthetic_subspaces,
    write_manifest,
)
from .harness import (
    ExperimentConfig,
    PRESETS,
    bench_timing,
    emit_plots,
    evaluate,
    fit,
    sweep,
    write_report,
)
from .rng import generator

__version__ = "0.1.0"

__all__ = [
    "ClassPartition",
    "ClassificationOutcome",
    "Dataset",
    "DegenerateSum",
    "Dictionary",
    "DimensionMismatch",
    "EmptyDataset",
    "EnergyProfile",
    "ExperimentConfig",
    "FittedModel",
    "InfeasibleGeometry",
    "InvalidSparsity",
    "LabelMatrix",
    "MarginReport",
    "NoConvergence",
    "PRESETS",
    "ParseError",
    "PursuitTrace",
    "Representation",
    "ResidualDecomposition",
    "RidgeProjection",
    "SingularGram",
    "SparsityCurve",
    "SplitSpec",
    "TieScenarioReport",
    "ZeroSample",
    "ZeroVector",
    "augment",
    "bench_timing",
    "build_label_matrix",
    "build_projection",
    "build_tie_scenario",
    "class_residuals",
    "classify_crc_rls",
    "classify_omp_residual",
    "classify_residual",
    "classify_sa_crc",
    "classify_src",
    "decision_margin_check",
    "effective_sparsity",
    "emit_plots",
    "energy_profile",
    "evaluate",
    "fit",
    "generator",
    "lasso_code",
    "load_csv",
    "load_manifest",
    "normalize_columns",
    "omp",
    "partition_from_sample_labels",
    "pooled_label",
    "random_projection",
    "residual_decomposition",
    "rls_code",
    "save_csv",
    "sparsity_curve",
    "split",
    "sweep",
    "synthetic_subspaces",
    "write_manifest",
    "write_report",
]
