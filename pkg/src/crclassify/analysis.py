"""Diagnostics for representation quality and the pooled-label decision rule.

Covers coefficient energy profiles, effective-sparsity counts and curves,
the class-wise residual decomposition identity, the worst-case pooled-margin
condition, and a constructor for the residual-tie geometry that motivates
augmenting the dense code with a sparse one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import class_residuals
from .errors import DimensionMismatch, InfeasibleGeometry, ZeroVector
from .model import ClassPartition, Dictionary, Representation
from .rng import STREAM_TIE_SCENARIO, generator
from .solvers import build_projection, omp, rls_code


@dataclass(frozen=True)
class EnergyProfile:
    """Per-coefficient share of the squared l2 mass of a code.

    ``energies[n]`` is alpha_n^2 / ||alpha||_2^2, so entries lie in [0, 1]
    and sum to 1 for any nonzero code.
    """

    energies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        if e.ndim != 1:
            raise DimensionMismatch("energies must be a vector")
        if e.size == 0:
            raise ValueError("empty energy profile")
        if np.any(e < 0.0) or np.any(e > 1.0):
            raise ValueError("energies must lie in [0, 1]")
        if abs(float(e.sum()) - 1.0) > 1e-10:
            raise ValueError(f"energies sum to {e.sum()!r}, expected 1")
        e = np.ascontiguousarray(e)
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @property
    def size(self) -> int:
        return self.energies.shape[0]


@dataclass(frozen=True)
class SparsityCurve:
    """Effective sparsity |{n : energy_n > delta}| over an increasing delta grid."""

    deltas: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=np.float64)
        c = np.asarray(self.counts, dtype=np.intp)
        if d.ndim != 1 or d.shape != c.shape:
            raise DimensionMismatch("deltas and counts must be matching vectors")
        if d.size == 0:
            raise ValueError("empty delta grid")
        if np.any(np.diff(d) <= 0.0):
            raise ValueError("delta grid must be strictly increasing")
        if np.any(np.diff(c) > 0):
            raise ValueError("counts must be non-increasing in delta")
        for name, arr in (("deltas", d), ("counts", c)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class ResidualDecomposition:
    """Error anatomy of one class's reconstruction.

    ``epsilon`` is the total error y - Phi alpha, ``xi`` the class component
    Phi_i alpha_i, ``xi_bar`` the other-classes component Phi alpha - xi, and
    ``epsilon_class`` the class-specific error y - Phi_i alpha_i.  The vector
    identity epsilon_class = epsilon + xi_bar holds exactly; when alpha is an
    unregularized least-squares code, epsilon is orthogonal to the column
    space and the norms satisfy
    ||epsilon_class||^2 = ||epsilon||^2 + ||xi_bar||^2.
    """

    class_index: int
    epsilon: np.ndarray
    xi: np.ndarray
    xi_bar: np.ndarray
    epsilon_class: np.ndarray

    def __post_init__(self):
        shape = self.epsilon.shape
        for name in ("xi", "xi_bar", "epsilon_class"):
            if getattr(self, name).shape != shape:
                raise DimensionMismatch("decomposition vectors must share one shape")
        if not np.array_equal(self.epsilon_class, self.epsilon + self.xi_bar):
            raise ValueError("epsilon_class must equal epsilon + xi_bar exactly")


def energy_profile(alpha: Representation) -> EnergyProfile:
    """Squared coefficients normalized by the squared l2 norm."""
    squares = alpha.coefficients ** 2
    total = float(squares.sum())
    if total == 0.0:
        raise ZeroVector("cannot profile an all-zero representation")
    return EnergyProfile(squares / total)


def effective_sparsity(alpha: Representation, delta: float) -> int:
    """Number of coefficients whose energy strictly exceeds ``delta``.

    At delta = 0 this is the l0 count; a coefficient whose energy lands
    exactly on ``delta`` is not counted.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    profile = energy_profile(alpha)
    return int(np.count_nonzero(profile.energies > delta))


def sparsity_curve(alpha: Representation, delta_grid) -> SparsityCurve:
    """Effective sparsity evaluated over a strictly increasing delta grid."""
    deltas = np.asarray(delta_grid, dtype=np.float64)
    profile = energy_profile(alpha)
    counts = np.count_nonzero(profile.energies[None, :] > deltas[:, None], axis=1)
    return SparsityCurve(deltas, counts)


@dataclass(frozen=True)
class MarginReport:
    """Outcome of the worst-case pooled-margin condition.

    ``sigma_a`` and ``sigma_b`` are the largest and second-largest pooled
    sums; ``n_a``/``n_b`` count the coefficients of those two classes whose
    energy is strictly below ``delta``.  The condition holds when
    sigma_a - sigma_b > 2 sqrt(delta) (n_b - n_a).
    """

    class_a: str
    class_b: str
    sigma_a: float
    sigma_b: float
    n_a: int
    n_b: int
    delta: float
    threshold: float
    satisfied: bool


def decision_margin_check(
    q: np.ndarray,
    alpha_aug: Representation,
    partition: ClassPartition,
    delta: float,
) -> MarginReport:
    """Check sigma_a - sigma_b > 2 sqrt(delta) (n_b - n_a) for the top two classes."""
    q = np.asarray(q, dtype=np.float64)
    if partition.class_count < 2:
        raise ValueError("margin check needs at least two classes")
    if q.shape != (partition.class_count,):
        raise DimensionMismatch("need one pooled sum per class")
    if alpha_aug.size != partition.total:
        raise DimensionMismatch("representation does not match the partition")
    if delta <= 0:
        raise ValueError("delta must be positive")

    order = np.argsort(-q, kind="stable")
    a, b = int(order[0]), int(order[1])
    energies = energy_profile(alpha_aug).energies
    n_a = int(np.count_nonzero(energies[partition.slice_of(a)] < delta))
    n_b = int(np.count_nonzero(energies[partition.slice_of(b)] < delta))
    threshold = 2.0 * np.sqrt(delta) * (n_b - n_a)
    return MarginReport(
        class_a=partition.labels[a],
        class_b=partition.labels[b],
        sigma_a=float(q[a]),
        sigma_b=float(q[b]),
        n_a=n_a,
        n_b=n_b,
        delta=float(delta),
        threshold=float(threshold),
        satisfied=bool(float(q[a]) - float(q[b]) > threshold),
    )


def residual_decomposition(
    dictionary: Dictionary, alpha: Representation, y: np.ndarray, class_index: int
) -> ResidualDecomposition:
    """Split the reconstruction error of ``y`` around one class's contribution.

    The class-specific error is formed as epsilon + xi_bar, which equals
    y - Phi_i alpha_i identically, so the decomposition identity is exact by
    construction rather than up to rounding.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (dictionary.feature_dim,):
        raise DimensionMismatch(
            f"sample has shape {y.shape}, expected ({dictionary.feature_dim},)"
        )
    if alpha.size != dictionary.size:
        raise DimensionMismatch(
            f"representation has {alpha.size} coefficients for {dictionary.size} atoms"
        )
    if not 0 <= class_index < dictionary.class_count:
        raise IndexError(f"class index {class_index} out of range")

    reconstruction = dictionary.data @ alpha.coefficients
    sl = dictionary.partition.slice_of(class_index)
    xi = dictionary.data[:, sl] @ alpha.coefficients[sl]
    xi_bar = reconstruction - xi
    epsilon = y - reconstruction
    return ResidualDecomposition(
        class_index=int(class_index),
        epsilon=epsilon,
        xi=xi,
        xi_bar=xi_bar,
        epsilon_class=epsilon + xi_bar,
    )


@dataclass(frozen=True)
class TieScenarioReport:
    """Measurements from one residual-tie construction.

    ``dense_residuals`` holds the two class residuals of the ridge code
    (equal up to rounding when ``asymmetry`` is 0).  ``omp_support_sizes``
    counts the joint pursuit code's atoms per class;
    ``atoms_to_match_residual`` counts, per class, how many of its own atoms
    a class-restricted pursuit needs before its residual drops to the tied
    level, and ``fewer_atom_class`` names the class needing fewer.
    """

    class_labels: tuple[str, str]
    dense_residuals: tuple[float, float]
    residual_gap: float
    omp_support_sizes: tuple[int, int]
    atoms_to_match_residual: tuple[int, int]
    fewer_atom_class: str
    ridge_lambda: float
    asymmetry: float


def build_tie_scenario(
    m: int,
    seed: int,
    *,
    asymmetry: float = 0.0,
    ridge_lambda: float = 1e-6,
) -> tuple[Dictionary, np.ndarray, TieScenarioReport]:
    """Two classes whose dense-code residuals tie while their sparse costs differ.

    Class ``pair`` holds two atoms placed mirror-symmetrically about a
    direction u, class ``single`` holds the atom u itself; the test sample
    lies along u plus a component outside the atoms' span.  For the
    symmetric geometry the ridge code reconstructs the same vector from
    either class for every lambda, so the two class residuals are equal up
    to rounding, yet pursuit reaches that residual with a single atom.
    Positive ``asymmetry`` tilts the pair (angle pi/4 + asymmetry), which
    strictly favors ``single`` and removes the tie.
    """
    if m < 3:
        raise InfeasibleGeometry(
            f"need at least 3 ambient dimensions to place the tie, got {m}"
        )
    rng = generator(seed, STREAM_TIE_SCENARIO)

    # seeded orthonormal frame (u, v, w); sign-fix the QR for determinism
    basis, r = np.linalg.qr(rng.standard_normal((m, 3)))
    basis = basis * np.sign(np.diag(r))
    u, v, w = basis.T

    theta = np.pi / 4.0 + asymmetry
    atoms = np.column_stack(
        [
            np.cos(theta) * u + np.sin(theta) * v,
            np.cos(theta) * u - np.sin(theta) * v,
            u,
        ]
    )
    partition = ClassPartition(("pair", "single"), (2, 1))
    dictionary = Dictionary(atoms, partition)

    # sample along u with an off-span component, so no class fits it exactly
    c = rng.uniform(0.5, 2.0)
    d = c * rng.uniform(0.1, 0.5)
    y = c * u + d * w

    dense = rls_code(build_projection(dictionary, ridge_lambda), y)
    residuals = class_residuals(dictionary, dense, y)

    sparse, _ = omp(dictionary, y, 2)
    sizes = tuple(
        int(np.count_nonzero(sparse.coefficients[sl] != 0.0))
        for _, sl in partition.ranges()
    )

    # atoms each class needs on its own to reach the tied residual level
    target = float(residuals.max()) + 1e-9
    needed = []
    for i, sl in partition.ranges():
        block = dictionary.data[:, sl]
        sub = Dictionary(block, ClassPartition((partition.labels[i],), (block.shape[1],)))
        _, class_trace = omp(sub, y, block.shape[1])
        hits = [t for t, r in enumerate(class_trace.residual_norms[1:], 1) if r <= target]
        needed.append(hits[0] if hits else block.shape[1])
    fewer = partition.labels[int(np.argmin(needed))]

    report = TieScenarioReport(
        class_labels=partition.labels,
        dense_residuals=(float(residuals[0]), float(residuals[1])),
        residual_gap=float(abs(residuals[0] - residuals[1])),
        omp_support_sizes=sizes,
        atoms_to_match_residual=(needed[0], needed[1]),
        fewer_atom_class=fewer,
        ridge_lambda=float(ridge_lambda),
        asymmetry=float(asymmetry),
    )
    return dictionary, y, report
