"""The four classifiers: residual baseline (pursuit code), SRC, CRC-RLS and
the sparsity-augmented pooled classifier.

Residual classifiers label by the smallest class-wise reconstruction error.
The augmented classifier never touches residuals: it normalizes the sum of
the sparse and dense codes and pools coefficients per class with the label
matrix, labeling by the largest pooled sum.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSum, DimensionMismatch
from .model import (
    AUGMENTED,
    DENSE,
    SPARSE,
    Dictionary,
    FittedModel,
    LabelMatrix,
    Representation,
    sparse_representation,
)
from .solvers import lasso_code, omp, rls_code

#: ||alpha_hat + alpha_check|| below this cannot be normalized.
DEGENERATE_SUM_TOL = 1e-14

RESIDUAL_MODE = "residual"
POOLED_MODE = "pooled"


@dataclass(frozen=True)
class ClassificationOutcome:
    """Label plus the evidence that produced it.

    ``scores`` holds per-class residuals (``mode == "residual"``, smaller is
    better) or pooled coefficient sums (``mode == "pooled"``, larger is
    better); the label always corresponds to the winning score with ties
    broken toward the lowest class index.  ``seconds`` measures only the
    classify call, not model fitting.
    """

    label: str
    scores: np.ndarray
    mode: str
    representation: Representation
    class_labels: tuple[str, ...]
    seconds: float = 0.0
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if self.mode not in (RESIDUAL_MODE, POOLED_MODE):
            raise ValueError(f"unknown outcome mode {self.mode!r}")
        if scores.shape != (len(self.class_labels),):
            raise DimensionMismatch("need exactly one score per class")
        pick = np.argmin(scores) if self.mode == RESIDUAL_MODE else np.argmax(scores)
        if self.label != self.class_labels[pick]:
            raise ValueError("label does not match the winning score")
        scores = np.ascontiguousarray(scores)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def label_index(self) -> int:
        return self.class_labels.index(self.label)


def class_residuals(
    dictionary: Dictionary, alpha: Representation, y: np.ndarray
) -> np.ndarray:
    """r_i = ||y - Phi_i alpha_i||_2 using only class i's columns and
    coefficients."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (dictionary.feature_dim,):
        raise DimensionMismatch(
            f"sample has shape {y.shape}, expected ({dictionary.feature_dim},)"
        )
    if alpha.size != dictionary.size:
        raise DimensionMismatch(
            f"representation has {alpha.size} coefficients for {dictionary.size} atoms"
        )
    coef = alpha.coefficients
    out = np.empty(dictionary.class_count)
    for i, sl in dictionary.partition.ranges():
        out[i] = np.linalg.norm(y - dictionary.data[:, sl] @ coef[sl])
    return out


def _residual_outcome(model, alpha, y, seconds, notes=(), *, normalize=False):
    residuals = class_residuals(model.dictionary, alpha, y)
    if normalize:
        scores = np.empty_like(residuals)
        for i, sl in model.dictionary.partition.ranges():
            norm = np.linalg.norm(alpha.coefficients[sl])
            # a class with no coefficient mass cannot win the normalized rule
            scores[i] = residuals[i] / norm if norm > 0.0 else np.inf
    else:
        scores = residuals
    pick = int(np.argmin(scores))
    return ClassificationOutcome(
        label=model.class_labels[pick],
        scores=scores,
        mode=RESIDUAL_MODE,
        representation=alpha,
        class_labels=model.class_labels,
        seconds=seconds,
        notes=tuple(notes),
    )


def classify_residual(
    model: FittedModel, alpha: Representation, y: np.ndarray
) -> ClassificationOutcome:
    """Label an externally computed representation by smallest class residual."""
    start = time.perf_counter()
    residuals = class_residuals(model.dictionary, alpha, y)
    pick = int(np.argmin(residuals))
    return ClassificationOutcome(
        label=model.class_labels[pick],
        scores=residuals,
        mode=RESIDUAL_MODE,
        representation=alpha,
        class_labels=model.class_labels,
        seconds=time.perf_counter() - start,
    )


def classify_crc_rls(
    model: FittedModel, y: np.ndarray, *, normalize_residuals: bool = False
) -> ClassificationOutcome:
    """Ridge code followed by smallest class residual.

    ``normalize_residuals`` divides each residual by the l2 norm of the
    class's coefficient block, the weighting used in the original CRC-RLS
    description; the default is the plain residual rule.
    """
    start = time.perf_counter()
    alpha = rls_code_from_model(model, y)
    return _residual_outcome(
        model, alpha, np.asarray(y, dtype=np.float64),
        time.perf_counter() - start, normalize=normalize_residuals,
    )


def rls_code_from_model(model: FittedModel, y: np.ndarray) -> Representation:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (model.dictionary.feature_dim,):
        raise DimensionMismatch(
            f"sample has shape {y.shape}, expected ({model.dictionary.feature_dim},)"
        )
    return Representation(model.projection @ y, DENSE)


def classify_src(
    model: FittedModel,
    y: np.ndarray,
    lambda1: float,
    tol: float = 1e-6,
    max_iter: int = 10000,
) -> ClassificationOutcome:
    """l1 code followed by smallest class residual.

    The sample is scaled to unit l2 norm before solving so that the label is
    invariant to positive rescaling of ``y`` (the l1 penalty is not scale
    equivariant); residuals are reported at the original scale.  A solver
    :class:`NoConvergence` warning is re-raised and recorded in the outcome
    notes.
    """
    start = time.perf_counter()
    y = np.asarray(y, dtype=np.float64)
    norm = float(np.linalg.norm(y))
    unit = y / norm if norm > 0.0 else y
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        alpha_unit = lasso_code(model.dictionary, unit, lambda1, tol, max_iter)
    notes = tuple(str(w.message) for w in caught)
    scaled = alpha_unit.coefficients * norm if norm > 0.0 else alpha_unit.coefficients
    alpha = sparse_representation(scaled, np.flatnonzero(scaled))
    outcome = _residual_outcome(model, alpha, y, time.perf_counter() - start, notes)
    for w in caught:
        warnings.warn_explicit(
            w.message, w.category, w.filename, w.lineno
        )
    return outcome


def classify_omp_residual(model: FittedModel, y: np.ndarray) -> ClassificationOutcome:
    """Pursuit code followed by smallest class residual (the sparse baseline)."""
    start = time.perf_counter()
    alpha, _ = omp(model.dictionary, y, model.sparsity, gram=model.gram)
    return _residual_outcome(
        model, alpha, np.asarray(y, dtype=np.float64), time.perf_counter() - start
    )


def augment(alpha_hat: Representation, alpha_check: Representation) -> Representation:
    """Unit-normalized sum of the sparse and dense codes."""
    if alpha_hat.kind != SPARSE:
        raise ValueError(f"first argument must be a sparse code, got {alpha_hat.kind}")
    if alpha_check.kind != DENSE:
        raise ValueError(f"second argument must be a dense code, got {alpha_check.kind}")
    if alpha_hat.size != alpha_check.size:
        raise DimensionMismatch(
            f"codes have {alpha_hat.size} and {alpha_check.size} coefficients"
        )
    combined = alpha_hat.coefficients + alpha_check.coefficients
    norm = float(np.linalg.norm(combined))
    if norm < DEGENERATE_SUM_TOL:
        raise DegenerateSum(
            f"combined code has norm {norm:.3e}; the sample carries no class evidence"
        )
    return Representation(combined / norm, AUGMENTED)


def pooled_label(
    label_matrix: LabelMatrix, alpha_aug: Representation
) -> tuple[str, np.ndarray]:
    """q_i = sum of class i's coefficients; label = argmax, ties to lowest index.

    Classes are contiguous in the partition, so each pooled sum reduces one
    slice of the coefficient vector.  The value equals the matrix product
    L @ alpha, and the reduction order is numpy's pairwise sum over the
    class's coefficient sequence, so summing the same entries selected by a
    label-matrix row reproduces it bit for bit.  When every class has the
    same size the slices become the rows of a reshape and one row-wise
    reduction replaces the loop; the inner reduction order per row is
    unchanged, so both paths produce identical bits.
    """
    if alpha_aug.size != label_matrix.size:
        raise DimensionMismatch(
            f"representation has {alpha_aug.size} coefficients for "
            f"{label_matrix.size} columns"
        )
    coef = alpha_aug.coefficients
    sizes = label_matrix.partition.sizes
    if all(n == sizes[0] for n in sizes):
        q = coef.reshape(len(sizes), sizes[0]).sum(axis=1)
    else:
        q = np.empty(label_matrix.class_count)
        for i, sl in label_matrix.partition.ranges():
            q[i] = coef[sl].sum()
    pick = int(np.argmax(q))
    return label_matrix.partition.labels[pick], q


def classify_sa_crc(
    model: FittedModel,
    y: np.ndarray,
    *,
    use_dense: bool = True,
    use_sparse: bool = True,
) -> ClassificationOutcome:
    """Sparsity-augmented classification: ridge code + pursuit code, summed,
    normalized, pooled per class.

    Labeling is a single pooled reduction over the augmented code; no
    class-wise reconstruction residual is ever computed.  The ablation flags
    zero out one ingredient: ``use_sparse=False`` pools the normalized ridge
    code alone, ``use_dense=False`` the normalized pursuit code alone.

    Raises :class:`DegenerateSum` when both ingredients vanish (zero test
    sample); callers counting accuracy should record that sample as a
    failure rather than a label.
    """
    start = time.perf_counter()
    y = np.asarray(y, dtype=np.float64)
    n = model.dictionary.size
    if use_dense:
        alpha_check = rls_code_from_model(model, y)
    else:
        alpha_check = Representation(np.zeros(n), DENSE)
    if use_sparse:
        alpha_hat, _ = omp(model.dictionary, y, model.sparsity, gram=model.gram)
    else:
        alpha_hat = sparse_representation(np.zeros(n), ())
    alpha_aug = augment(alpha_hat, alpha_check)
    label, q = pooled_label(model.label_matrix, alpha_aug)
    return ClassificationOutcome(
        label=label,
        scores=q,
        mode=POOLED_MODE,
        representation=alpha_aug,
        class_labels=model.class_labels,
        seconds=time.perf_counter() - start,
    )
