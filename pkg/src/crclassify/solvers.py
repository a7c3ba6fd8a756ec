"""Coding engines: closed-form ridge regression, orthogonal matching
pursuit, and an iterative-shrinkage l1 solver.

Each solver maps a test sample ``y`` to a coefficient vector over the
columns of a :class:`~crclassify.model.Dictionary`.  All functions are pure;
batch acceleration (the Gram-domain pursuit) must return the same result as
the plain path within 1e-8 and is selected only through the ``gram``
argument.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular, LinAlgError
from scipy.linalg.lapack import dtrtrs

from .errors import (
    DimensionMismatch,
    InvalidSparsity,
    NoConvergence,
    SingularGram,
)
from .model import DENSE, Dictionary, Representation, sparse_representation

#: Relative tolerance for the normal-equation residual of a fresh projection.
PROJECTION_BUILD_RTOL = 1e-8

#: Pursuit stops early once the residual norm falls below this.
RESIDUAL_EARLY_STOP = 1e-10

#: Correlations below ``tol * max(1, ||y||)`` count as numerically zero.
ZERO_CORRELATION_TOL = 1e-13

#: Absolute window within which competing |correlations| count as tied;
#: ties break toward the lowest atom index.
SELECTION_TIE_TOL = 1e-12

#: Power-iteration budget for the l1 solver's step size.
POWER_ITERATIONS = 100
POWER_TOL = 1e-6


@dataclass(frozen=True)
class RidgeProjection:
    """Precomputed ridge operator P with (Phi^T Phi + lambda I) P = Phi^T.

    Built once per dictionary by :func:`build_projection` and reused for
    every test sample; applying it is a single N x m matrix-vector product.
    """

    matrix: np.ndarray
    ridge_lambda: float

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise DimensionMismatch("projection matrix must be 2-D")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be nonnegative")
        mat = np.ascontiguousarray(mat)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def atom_count(self) -> int:
        return self.matrix.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class PursuitTrace:
    """Diagnostic record of one greedy pursuit run.

    ``selected_atoms`` lists atom indices in selection order (no duplicates).
    ``residual_norms[0]`` is the norm of ``y`` itself and entry ``t + 1`` the
    residual norm after iteration ``t``, so the sequence is non-increasing.
    ``degenerate`` is set when pursuit halted because every remaining
    correlation was numerically zero (e.g. ``y`` orthogonal to all atoms).
    """

    selected_atoms: tuple[int, ...]
    residual_norms: tuple[float, ...]
    degenerate: bool = False

    def __post_init__(self):
        sel = tuple(int(j) for j in self.selected_atoms)
        if len(set(sel)) != len(sel):
            raise ValueError("selected_atoms must not repeat")
        norms = tuple(float(v) for v in self.residual_norms)
        if len(norms) != len(sel) + 1:
            raise ValueError("need one residual norm per iteration plus the start")
        # Allow tiny float wiggle; genuine increases are a solver bug.
        for a, b in zip(norms, norms[1:]):
            if b > a + 1e-9 * max(1.0, a):
                raise ValueError(f"residual norms increased: {a} -> {b}")
        object.__setattr__(self, "selected_atoms", sel)
        object.__setattr__(self, "residual_norms", norms)

    @property
    def iterations(self) -> int:
        return len(self.selected_atoms)


def build_projection(
    dictionary: Dictionary, ridge_lambda: float, *, gram: np.ndarray | None = None
) -> RidgeProjection:
    """Solve (Phi^T Phi + lambda I) P = Phi^T for the dense-code operator P.

    Uses a Cholesky factorization of the shifted Gram matrix; there is no
    pseudo-inverse fallback, so a singular system (lambda = 0 with linearly
    dependent atoms) raises :class:`SingularGram`.  The result is verified
    against the normal equations before being returned.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    phi = dictionary.data
    n = dictionary.size
    if gram is None:
        gram = phi.T @ phi
    shifted = gram + ridge_lambda * np.eye(n)
    try:
        factor = cho_factor(shifted, lower=True)
        proj = cho_solve(factor, phi.T)
    except LinAlgError as exc:
        raise SingularGram(
            f"Phi^T Phi + {ridge_lambda} I is not positive definite; "
            "increase lambda or remove dependent atoms"
        ) from exc
    residual = shifted @ proj - phi.T
    scale = max(1.0, float(np.linalg.norm(phi.T)))
    if np.linalg.norm(residual) > PROJECTION_BUILD_RTOL * scale:
        raise SingularGram(
            "normal-equation solve is inaccurate; the shifted Gram matrix "
            "is numerically singular"
        )
    return RidgeProjection(proj, float(ridge_lambda))


def rls_code(projection: RidgeProjection, y: np.ndarray) -> Representation:
    """Dense ridge code: one matrix-vector product with the cached P."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (projection.feature_dim,):
        raise DimensionMismatch(
            f"sample has shape {y.shape}, expected ({projection.feature_dim},)"
        )
    return Representation(projection.matrix @ y, DENSE)


def _pick_atom(correlations: np.ndarray, available: np.ndarray) -> tuple[int, float]:
    """Largest |correlation| among available atoms; ties to the lowest index."""
    magnitudes = np.abs(correlations)
    magnitudes[~available] = -1.0
    best = float(magnitudes.max())
    # flatnonzero scans in index order, so [0] is the lowest tied index
    j = int(np.flatnonzero(magnitudes >= best - SELECTION_TIE_TOL)[0])
    return j, best


def _omp_plain(phi: np.ndarray, y: np.ndarray, k: int):
    m, n = phi.shape
    y_norm = float(np.linalg.norm(y))
    zero_tol = ZERO_CORRELATION_TOL * max(1.0, y_norm)

    selected: list[int] = []
    norms = [y_norm]
    coef = np.zeros(n)
    available = np.ones(n, dtype=bool)
    residual = y.copy()
    degenerate = False

    while len(selected) < k:
        corr = phi.T @ residual
        j, best = _pick_atom(corr, available)
        if best <= zero_tol:
            degenerate = True
            break
        trial = selected + [j]
        sub = phi[:, trial]
        try:
            factor = cho_factor(sub.T @ sub, lower=True)
        except LinAlgError:
            # atom j is numerically dependent on the current support; no
            # progress is possible in that direction
            break
        coef_s = cho_solve(factor, sub.T @ y)
        selected = trial
        available[j] = False
        residual = y - sub @ coef_s
        norms.append(float(np.linalg.norm(residual)))
        if norms[-1] < RESIDUAL_EARLY_STOP:
            break

    if selected:
        coef[selected] = coef_s
    return coef, selected, norms, degenerate


def _omp_gram(gram: np.ndarray, h0: np.ndarray, y_norm: float, k: int):
    """Gram-domain pursuit: no residual vector, progressive Cholesky.

    Maintains h = Phi^T r = h0 - G[S, :]^T alpha_S for atom selection and a
    forward-substitution vector z = L^-1 h0_S, which makes the residual a
    running sum: ||r||^2 = ||y||^2 - z.z.  Each iteration costs O(N s) with
    no allocation beyond the solves; this is the hot path when one model
    classifies many samples.
    """
    n = gram.shape[0]
    zero_tol = ZERO_CORRELATION_TOL * max(1.0, y_norm)

    selected: list[int] = []
    norms = [y_norm]
    coef = np.zeros(n)
    magnitudes = np.empty(n)
    gram_rows = np.empty((k, n))  # rows of G for the selected atoms
    chol = np.zeros((k, k))
    z = np.empty(k)
    h = h0
    res_sq = y_norm * y_norm
    degenerate = False
    coef_s = np.empty(0)

    while len(selected) < k:
        np.abs(h, out=magnitudes)
        if selected:
            magnitudes[selected] = -1.0
        best = float(magnitudes.max())
        if best <= zero_tol:
            degenerate = True
            break
        j = int(np.flatnonzero(magnitudes >= best - SELECTION_TIE_TOL)[0])

        s = len(selected)
        if s == 0:
            diag_sq = gram[j, j]
        else:
            w, info = dtrtrs(chol[:s, :s], gram_rows[:s, j], lower=1, trans=0)
            if info != 0:
                break
            chol[s, :s] = w
            diag_sq = gram[j, j] - w @ w
        if diag_sq <= 0.0:
            # atom numerically dependent on the current support
            break
        chol[s, s] = np.sqrt(diag_sq)
        z[s] = (h0[j] - chol[s, :s] @ z[:s]) / chol[s, s]
        res_sq = max(0.0, res_sq - z[s] * z[s])
        gram_rows[s] = gram[j]
        selected.append(j)
        s += 1

        coef_s, info = dtrtrs(chol[:s, :s], z[:s], lower=1, trans=1)
        if info != 0:  # pragma: no cover - diag_sq guard keeps L regular
            break
        norms.append(min(np.sqrt(res_sq), norms[-1]))
        if norms[-1] < RESIDUAL_EARLY_STOP or s == k:
            break
        h = h0 - coef_s @ gram_rows[:s]

    if selected:
        coef[selected] = coef_s
    return coef, selected, norms, degenerate


def omp(
    dictionary: Dictionary,
    y: np.ndarray,
    k: int,
    *,
    gram: np.ndarray | None = None,
) -> tuple[Representation, PursuitTrace]:
    """Greedy pursuit of at most ``k`` atoms by maximal |correlation|.

    Coefficients on the selected support are the least-squares fit, so the
    final residual is orthogonal to every selected atom.  Stops early when
    the residual norm drops below 1e-10 or no atom correlates with the
    residual; the trace records the selection order and residual norms.

    Passing a precomputed ``gram`` (Phi^T Phi) switches to the batch kernel,
    which avoids touching the residual vector; use it when classifying many
    samples against one dictionary.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (dictionary.feature_dim,):
        raise DimensionMismatch(
            f"sample has shape {y.shape}, expected ({dictionary.feature_dim},)"
        )
    if k < 1:
        raise InvalidSparsity(f"sparsity must be at least 1, got {k}")
    k = int(min(k, dictionary.size))

    if gram is None:
        coef, selected, norms, degenerate = _omp_plain(dictionary.data, y, k)
    else:
        if gram.shape != (dictionary.size, dictionary.size):
            raise DimensionMismatch("gram cache does not match the dictionary")
        h0 = dictionary.data.T @ y
        coef, selected, norms, degenerate = _omp_gram(
            gram, h0, float(np.linalg.norm(y)), k
        )
        if selected:
            # the Gram recurrence cannot resolve norms below sqrt(eps)*||y||;
            # pin the final entry to the directly computed residual
            exact = float(
                np.linalg.norm(y - dictionary.data[:, selected] @ coef[selected])
            )
            norms[-1] = exact
    return (
        sparse_representation(coef, selected),
        PursuitTrace(tuple(selected), tuple(norms), degenerate),
    )


def _largest_gram_eigenvalue(gram: np.ndarray) -> float:
    """Power-iteration estimate of the spectral norm of a PSD matrix."""
    n = gram.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    value = 0.0
    for _ in range(POWER_ITERATIONS):
        w = gram @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - value) <= POWER_TOL * max(1.0, norm):
            value = norm
            break
        value = norm
    return value


def _lasso_objective(alpha, gram_alpha, b, y_sq, lambda1):
    fit = y_sq - 2.0 * float(b @ alpha) + float(alpha @ gram_alpha)
    return max(fit, 0.0) + lambda1 * float(np.abs(alpha).sum())


def lasso_code(
    dictionary: Dictionary,
    y: np.ndarray,
    lambda1: float,
    tol: float = 1e-6,
    max_iter: int = 10000,
) -> Representation:
    """l1-regularized code minimizing ||y - Phi a||_2^2 + lambda1 ||a||_1.

    Iterative shrinkage-thresholding with constant step 1/L, L being the
    largest Gram eigenvalue (power-iteration estimate).  Convergence is
    declared when the subgradient-optimality residual falls below ``tol``;
    if ``max_iter`` is exhausted first, a :class:`NoConvergence` warning is
    emitted and the best iterate seen (lowest objective) is returned.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (dictionary.feature_dim,):
        raise DimensionMismatch(
            f"sample has shape {y.shape}, expected ({dictionary.feature_dim},)"
        )
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")

    phi = dictionary.data
    gram = phi.T @ phi
    b = phi.T @ y
    y_sq = float(y @ y)
    step = 1.0 / max(_largest_gram_eigenvalue(gram), 1e-12)
    half_l1 = lambda1 / 2.0  # threshold for the halved least-squares objective
    shrink = step * half_l1

    alpha = np.zeros(dictionary.size)
    gram_alpha = np.zeros_like(alpha)
    best_alpha = alpha
    best_objective = _lasso_objective(alpha, gram_alpha, b, y_sq, lambda1)
    converged = False

    for _ in range(max_iter):
        grad = gram_alpha - b
        on = alpha != 0.0
        violation = float(
            max(
                np.abs(grad[on] + half_l1 * np.sign(alpha[on])).max(initial=0.0),
                np.maximum(np.abs(grad[~on]) - half_l1, 0.0).max(initial=0.0),
            )
        )
        if violation <= tol:
            converged = True
            break
        moved = alpha - step * grad
        alpha = np.sign(moved) * np.maximum(np.abs(moved) - shrink, 0.0)
        gram_alpha = gram @ alpha
        objective = _lasso_objective(alpha, gram_alpha, b, y_sq, lambda1)
        if objective < best_objective:
            best_objective = objective
            best_alpha = alpha

    if not converged:
        warnings.warn(
            NoConvergence(
                f"l1 solver stopped after {max_iter} iterations with "
                f"optimality residual {violation:.3e} > {tol:.3e}"
            ),
            stacklevel=2,
        )
        alpha = best_alpha

    return sparse_representation(alpha, np.flatnonzero(alpha))
