"""Solver contracts: ridge closed form, greedy pursuit, l1 shrinkage."""

import warnings

import numpy as np
import pytest

from crclassify.errors import (
    DimensionMismatch,
    InvalidSparsity,
    NoConvergence,
    SingularGram,
)
from crclassify.model import ClassPartition, Dictionary
from crclassify.solvers import (
    RESIDUAL_EARLY_STOP,
    build_projection,
    lasso_code,
    omp,
    rls_code,
)

from conftest import random_dictionary, unit_columns


def test_projection_solves_normal_equations():
    """(Phi^T Phi + lambda I) P = Phi^T against a dense solve oracle."""
    rng = np.random.default_rng(10)
    for _ in range(25):
        m = int(rng.integers(4, 12))
        n = int(rng.integers(2, 10))
        lam = float(rng.uniform(1e-4, 2.0))
        d = Dictionary(unit_columns(rng, m, n), ClassPartition(("a",), (n,)))
        proj = build_projection(d, lam)
        shifted = d.data.T @ d.data + lam * np.eye(n)
        np.testing.assert_allclose(
            shifted @ proj.matrix, d.data.T, atol=1e-10, rtol=0
        )
        oracle = np.linalg.solve(shifted, d.data.T)
        np.testing.assert_allclose(proj.matrix, oracle, atol=1e-10, rtol=0)


def test_projection_gram_argument_changes_nothing():
    rng = np.random.default_rng(11)
    d = random_dictionary(rng, m=9, classes=3, per_class=3)
    gram = d.data.T @ d.data
    a = build_projection(d, 0.3)
    b = build_projection(d, 0.3, gram=gram)
    np.testing.assert_array_equal(a.matrix, b.matrix)


def test_projection_singular_without_ridge():
    """Duplicated atoms with lambda = 0 must raise, not silently pinv."""
    rng = np.random.default_rng(12)
    col = unit_columns(rng, 6, 1)
    d = Dictionary(np.hstack([col, col]), ClassPartition(("a",), (2,)))
    with pytest.raises(SingularGram):
        build_projection(d, 0.0)
    build_projection(d, 1e-3)  # any positive shift repairs it


def test_rls_code_is_the_ridge_minimizer():
    """Gradient of ||y - Phi a||^2 + lambda ||a||^2 vanishes at the code."""
    rng = np.random.default_rng(13)
    for _ in range(25):
        m = int(rng.integers(4, 12))
        n = int(rng.integers(2, 12))
        lam = float(rng.uniform(1e-3, 1.0))
        d = Dictionary(unit_columns(rng, m, n), ClassPartition(("a",), (n,)))
        proj = build_projection(d, lam)
        y = rng.standard_normal(m)
        alpha = rls_code(proj, y).coefficients
        grad = 2.0 * (d.data.T @ (d.data @ alpha - y) + lam * alpha)
        assert np.linalg.norm(grad) < 1e-10
    with pytest.raises(DimensionMismatch):
        rls_code(proj, np.zeros(m + 1))


def test_omp_recovers_single_atom_exactly():
    rng = np.random.default_rng(14)
    for _ in range(20):
        d = random_dictionary(rng, m=10, classes=2, per_class=5)
        j = int(rng.integers(10))
        scale = float(rng.uniform(0.5, 3.0))
        rep, trace = omp(d, scale * d.data[:, j], 3)
        assert trace.selected_atoms[0] == j
        assert rep.support == (j,)
        assert rep.coefficients[j] == pytest.approx(scale, abs=1e-12)
        assert trace.residual_norms[-1] < RESIDUAL_EARLY_STOP


def test_omp_residual_orthogonal_to_support():
    """Least-squares refit leaves the residual orthogonal to chosen atoms."""
    rng = np.random.default_rng(15)
    for _ in range(40):
        m = int(rng.integers(6, 16))
        n = int(rng.integers(4, 20))
        k = int(rng.integers(1, min(m, n) + 1))
        d = Dictionary(unit_columns(rng, m, n), ClassPartition(("a",), (n,)))
        y = rng.standard_normal(m)
        rep, trace = omp(d, y, k)
        assert len(rep.support) <= k
        residual = y - d.data @ rep.coefficients
        for j in trace.selected_atoms:
            assert abs(d.data[:, j] @ residual) < 1e-8
        drops = np.diff(trace.residual_norms)
        assert np.all(drops <= 1e-9)
        assert trace.residual_norms[-1] == pytest.approx(
            np.linalg.norm(residual), abs=1e-9
        )


def test_omp_gram_path_matches_plain_path():
    """The batch kernel must agree with the residual-space pursuit."""
    rng = np.random.default_rng(16)
    for _ in range(40):
        m = int(rng.integers(6, 16))
        n = int(rng.integers(4, 24))
        k = int(rng.integers(1, n + 1))
        d = Dictionary(unit_columns(rng, m, n), ClassPartition(("a",), (n,)))
        y = rng.standard_normal(m)
        plain_rep, plain_trace = omp(d, y, k)
        gram_rep, gram_trace = omp(d, y, k, gram=d.data.T @ d.data)
        assert gram_trace.selected_atoms == plain_trace.selected_atoms
        np.testing.assert_allclose(
            gram_rep.coefficients, plain_rep.coefficients, atol=1e-8, rtol=0
        )
        np.testing.assert_allclose(
            gram_trace.residual_norms, plain_trace.residual_norms, atol=1e-8, rtol=0
        )


def test_omp_tie_breaks_to_lowest_index():
    """Two identical atoms correlate identically; the lower index wins."""
    rng = np.random.default_rng(17)
    col = unit_columns(rng, 8, 1)
    others = unit_columns(rng, 8, 2)
    data = np.hstack([others[:, :1], col, col, others[:, 1:]])
    d = Dictionary(data, ClassPartition(("a",), (4,)))
    y = 2.0 * col[:, 0]
    for gram in (None, d.data.T @ d.data):
        rep, trace = omp(d, y, 4, gram=gram)
        assert trace.selected_atoms[0] == 1
        assert 2 not in trace.selected_atoms


def test_omp_zero_sample_is_degenerate():
    rng = np.random.default_rng(18)
    d = random_dictionary(rng, m=6, classes=2, per_class=3)
    for gram in (None, d.data.T @ d.data):
        rep, trace = omp(d, np.zeros(6), 3, gram=gram)
        assert trace.degenerate
        assert trace.selected_atoms == ()
        assert rep.nonzero_count == 0


def test_omp_clamps_budget_and_rejects_bad_input():
    rng = np.random.default_rng(19)
    d = random_dictionary(rng, m=12, classes=2, per_class=2)
    rep, trace = omp(d, rng.standard_normal(12), 99)  # k > N is clamped to N
    assert len(rep.support) <= d.size
    with pytest.raises(InvalidSparsity):
        omp(d, np.zeros(12), 0)
    with pytest.raises(DimensionMismatch):
        omp(d, np.zeros(5), 2)
    with pytest.raises(DimensionMismatch):
        omp(d, np.zeros(12), 2, gram=np.eye(3))


def test_lasso_large_penalty_gives_zero_code():
    """lambda1 >= 2 max|Phi^T y| makes 0 optimal for the l1 objective."""
    rng = np.random.default_rng(20)
    d = random_dictionary(rng, m=7, classes=2, per_class=3)
    y = rng.standard_normal(7)
    lam = 2.0 * float(np.abs(d.data.T @ y).max())
    rep = lasso_code(d, y, lam)
    assert rep.nonzero_count == 0
    assert rep.support == ()


def test_lasso_satisfies_subgradient_optimality():
    """At the solution: |Phi^T(Phi a - y)| <= lambda1/2 off-support and
    = lambda1/2 (opposing sign) on-support, within tolerance."""
    rng = np.random.default_rng(21)
    for _ in range(15):
        m = int(rng.integers(5, 10))
        n = int(rng.integers(3, 12))
        d = Dictionary(unit_columns(rng, m, n), ClassPartition(("a",), (n,)))
        y = rng.standard_normal(m)
        lam = float(rng.uniform(0.05, 0.5))
        rep = lasso_code(d, y, lam, tol=1e-8)
        grad = d.data.T @ (d.data @ rep.coefficients - y)
        on = rep.coefficients != 0.0
        if on.any():
            assert np.abs(grad[on] + 0.5 * lam * np.sign(rep.coefficients[on])).max() < 1e-6
        if (~on).any():
            assert np.abs(grad[~on]).max() <= 0.5 * lam + 1e-6


def test_lasso_warns_and_returns_best_iterate_when_starved():
    rng = np.random.default_rng(22)
    d = random_dictionary(rng, m=8, classes=2, per_class=4)
    y = rng.standard_normal(8)
    with pytest.warns(NoConvergence):
        rep = lasso_code(d, y, 0.01, tol=1e-14, max_iter=3)
    # starving the solver must not hand back garbage: objective no worse
    # than the zero code it started from
    def objective(a):
        return float(np.sum((y - d.data @ a) ** 2) + 0.01 * np.abs(a).sum())

    assert objective(rep.coefficients) <= objective(np.zeros(8)) + 1e-12
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lasso_code(d, y, 0.01, tol=1e-8)  # enough budget: no warning
