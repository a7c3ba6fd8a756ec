"""Core domain types: class partitions, dictionaries, label matrices,
representations and fitted models.

All types are immutable after construction (arrays are marked read-only), so
instances can be shared freely across threads.  No algorithms live here; the
coding engines are in :mod:`crclassify.solvers` and the classifiers in
:mod:`crclassify.classify`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSparsity, ZeroSample

#: Tolerance for the unit-norm column invariant of a dictionary.
UNIT_NORM_TOL = 1e-10

#: Tolerance for the unit-norm invariant of an augmented representation.
AUGMENTED_NORM_TOL = 1e-10

#: Relative tolerance for the normal-equation identity of a cached projection.
PROJECTION_IDENTITY_RTOL = 1e-8


def _freeze(array: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=np.float64)
    if out is array:
        out = array.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ClassPartition:
    """Contiguous column layout of classes inside a dictionary.

    ``labels[i]`` identifies the i-th class and ``sizes[i]`` is the number of
    columns it owns.  Class ``i`` occupies columns
    ``offsets[i] .. offsets[i] + sizes[i]``; the ranges are disjoint and cover
    ``0 .. total`` by construction.
    """

    labels: tuple[str, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("a partition needs at least one class")
        if len(self.labels) != len(self.sizes):
            raise ValueError("labels and sizes must have equal length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("class labels must be unique")
        if any(int(n) != n or n < 1 for n in self.sizes):
            raise ValueError("every class needs a positive number of columns")
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))

    @property
    def class_count(self) -> int:
        return len(self.labels)

    @property
    def total(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Start index of each class block (strictly increasing)."""
        out, acc = [], 0
        for n in self.sizes:
            out.append(acc)
            acc += n
        return tuple(out)

    def slice_of(self, class_index: int) -> slice:
        start = self.offsets[class_index]
        return slice(start, start + self.sizes[class_index])

    def ranges(self) -> Iterator[tuple[int, slice]]:
        start = 0
        for i, n in enumerate(self.sizes):
            yield i, slice(start, start + n)
            start += n

    def index_of(self, label: str) -> int:
        return self.labels.index(label)


def partition_from_sample_labels(
    sample_labels: Sequence[str],
) -> tuple[ClassPartition, np.ndarray]:
    """Build a partition from per-sample labels in arbitrary order.

    Classes are numbered in first-appearance order.  Returns the partition
    together with the column permutation ``order`` such that indexing the
    original samples with ``order`` groups each class contiguously.
    """
    if len(sample_labels) == 0:
        raise ValueError("no samples")
    seen: dict[str, list[int]] = {}
    for j, lab in enumerate(sample_labels):
        seen.setdefault(str(lab), []).append(j)
    labels = tuple(seen.keys())
    sizes = tuple(len(v) for v in seen.values())
    order = np.concatenate([np.asarray(v, dtype=np.intp) for v in seen.values()])
    return ClassPartition(labels, sizes), order


@dataclass(frozen=True)
class Dictionary:
    """Unit-norm training samples, one per column, grouped by class.

    Construction rejects any column whose l2 norm deviates from 1 by more
    than :data:`UNIT_NORM_TOL`.  Use :meth:`from_data` with
    ``normalize=True`` to rescale columns instead; silent normalization is
    deliberately not offered so that malformed data surfaces early.
    """

    data: np.ndarray
    partition: ClassPartition

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionMismatch(f"dictionary data must be 2-D, got ndim={data.ndim}")
        m, n = data.shape
        if m < 1 or n < 1:
            raise DimensionMismatch("dictionary must have at least one row and one column")
        if n != self.partition.total:
            raise DimensionMismatch(
                f"partition covers {self.partition.total} columns but data has {n}"
            )
        norms = np.linalg.norm(data, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise ValueError(
                f"column {bad[0]} has norm {norms[bad[0]]:.12g}; "
                "columns must be unit-norm (or pass normalize=True to from_data)"
            )
        object.__setattr__(self, "data", _freeze(data))

    @classmethod
    def from_data(
        cls, data: np.ndarray, partition: ClassPartition, *, normalize: bool = False
    ) -> "Dictionary":
        data = np.asarray(data, dtype=np.float64)
        if normalize and data.ndim == 2:
            norms = np.linalg.norm(data, axis=0)
            zero = np.flatnonzero(norms == 0.0)
            if zero.size:
                raise ZeroSample(f"column {zero[0]} is zero and cannot be normalized")
            data = data / norms
        return cls(data, partition)

    @property
    def feature_dim(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> int:
        """Number of atoms N."""
        return self.data.shape[1]

    @property
    def class_count(self) -> int:
        return self.partition.class_count

    def class_block(self, class_index: int) -> np.ndarray:
        """View of the columns belonging to one class."""
        return self.data[:, self.partition.slice_of(class_index)]


@dataclass(frozen=True)
class LabelMatrix:
    """Binary class-indicator matrix with one row per class.

    Row ``i`` holds ones exactly at the columns of class ``i``; every column
    carries exactly one 1 because classes are disjoint.  The partition is kept
    alongside the dense matrix so that pooling can run over contiguous
    ranges.
    """

    matrix: np.ndarray
    partition: ClassPartition

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        c, n = self.partition.class_count, self.partition.total
        if mat.shape != (c, n):
            raise DimensionMismatch(f"label matrix must be {c}x{n}, got {mat.shape}")
        if not np.all((mat == 0.0) | (mat == 1.0)):
            raise ValueError("label matrix entries must be 0 or 1")
        if not np.all(mat.sum(axis=0) == 1.0):
            raise ValueError("every column must belong to exactly one class")
        for i, sl in self.partition.ranges():
            row = mat[i]
            if not (np.all(row[sl] == 1.0) and row.sum() == self.partition.sizes[i]):
                raise ValueError(f"row {i} does not match the partition layout")
        object.__setattr__(self, "matrix", _freeze(mat))

    @property
    def class_count(self) -> int:
        return self.partition.class_count

    @property
    def size(self) -> int:
        return self.partition.total


def build_label_matrix(partition: ClassPartition) -> LabelMatrix:
    """Construct the class-indicator matrix implied by a partition."""
    mat = np.zeros((partition.class_count, partition.total))
    for i, sl in partition.ranges():
        mat[i, sl] = 1.0
    return LabelMatrix(mat, partition)


DENSE = "dense"
SPARSE = "sparse"
AUGMENTED = "augmented"


@dataclass(frozen=True)
class Representation:
    """Coefficient vector of a test sample over the dictionary atoms.

    ``kind`` records how the vector was produced: ``dense`` (ridge code),
    ``sparse`` (pursuit code; ``support`` lists the nonzero positions) or
    ``augmented`` (unit-norm combination of the two).
    """

    coefficients: np.ndarray
    kind: str
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if coef.ndim != 1:
            raise DimensionMismatch("coefficients must be a vector")
        if self.kind not in (DENSE, SPARSE, AUGMENTED):
            raise ValueError(f"unknown representation kind {self.kind!r}")
        if self.kind == SPARSE:
            if self.support is None:
                raise ValueError("sparse representations must carry their support")
            support = tuple(int(j) for j in self.support)
            nz = np.flatnonzero(coef)
            if sorted(support) != sorted(nz.tolist()):
                raise ValueError("support must list exactly the nonzero coefficients")
            object.__setattr__(self, "support", support)
        else:
            if self.support is not None:
                raise ValueError(f"{self.kind} representations carry no support")
        if self.kind == AUGMENTED:
            norm = np.linalg.norm(coef)
            if abs(norm - 1.0) > AUGMENTED_NORM_TOL:
                raise ValueError(f"augmented representation has norm {norm:.12g}, expected 1")
        object.__setattr__(self, "coefficients", _freeze(coef))

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]

    @property
    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.coefficients))


def sparse_representation(coefficients: np.ndarray, selected: Sequence[int]) -> Representation:
    """Sparse representation over ``selected`` atoms.

    Atoms whose coefficient came out exactly 0.0 are dropped from the stored
    support so that the nonzero-count invariant holds; the raw selection
    order lives in the pursuit trace, not here.
    """
    coef = np.asarray(coefficients, dtype=np.float64)
    support = tuple(int(j) for j in selected if coef[int(j)] != 0.0)
    return Representation(coef, SPARSE, support)


# Deterministic probe directions for the fitted-model identity check below.
def _probe_vectors(m: int) -> np.ndarray:
    probes = np.ones((3, m))
    probes[1, ::2] = -1.0
    probes[2] = np.linspace(-1.0, 1.0, m) if m > 1 else 1.0
    return probes / np.linalg.norm(probes, axis=1, keepdims=True)


@dataclass(frozen=True)
class FittedModel:
    """Dictionary plus everything cached for classification.

    ``projection`` is the N x m ridge operator mapping a test sample to its
    dense code; it must satisfy the normal-equation identity
    ``(G + lambda I) P = Phi^T`` for the dictionary's Gram matrix G.  The
    constructor spot-checks the identity on fixed probe directions (relative
    tolerance :data:`PROJECTION_IDENTITY_RTOL`) to catch mismatched
    dictionary/projection pairs; the solver performing the full dense check
    is :func:`crclassify.solvers.build_projection`.

    ``gram`` optionally caches ``Phi^T Phi`` so pursuit can run in the
    faster Gram-domain mode when many samples are classified against one
    model.
    """

    dictionary: Dictionary
    projection: np.ndarray
    label_matrix: LabelMatrix
    ridge_lambda: float
    sparsity: int
    gram: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m, n = self.dictionary.data.shape
        proj = np.asarray(self.projection, dtype=np.float64)
        if proj.shape != (n, m):
            raise DimensionMismatch(f"projection must be {n}x{m}, got {proj.shape}")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be nonnegative")
        if not 1 <= self.sparsity <= n:
            raise InvalidSparsity(f"sparsity must lie in [1, {n}], got {self.sparsity}")
        if self.label_matrix.partition is not self.dictionary.partition and (
            self.label_matrix.partition != self.dictionary.partition
        ):
            raise DimensionMismatch("label matrix and dictionary disagree on the partition")
        phi = self.dictionary.data
        for v in _probe_vectors(m):
            pv = proj @ v
            lhs = phi.T @ (phi @ pv) + self.ridge_lambda * pv
            rhs = phi.T @ v
            scale = max(1.0, float(np.linalg.norm(rhs)))
            if np.linalg.norm(lhs - rhs) > PROJECTION_IDENTITY_RTOL * scale:
                raise ValueError(
                    "projection fails the normal-equation identity for this dictionary"
                )
        object.__setattr__(self, "projection", _freeze(proj))
        if self.gram is not None:
            gram = np.asarray(self.gram, dtype=np.float64)
            if gram.shape != (n, n):
                raise DimensionMismatch(f"gram cache must be {n}x{n}, got {gram.shape}")
            object.__setattr__(self, "gram", _freeze(gram))

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.dictionary.partition.labels
