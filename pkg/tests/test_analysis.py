"""Diagnostics: energy profiles, sparsity curves, the residual
decomposition identity, margin checks and the residual-tie geometry."""

import numpy as np
import pytest

from crclassify.analysis import (
    MarginReport,
    SparsityCurve,
    build_tie_scenario,
    decision_margin_check,
    effective_sparsity,
    energy_profile,
    residual_decomposition,
    sparsity_curve,
)
from crclassify.classify import class_residuals, classify_crc_rls, classify_sa_crc
from crclassify.errors import InfeasibleGeometry, ZeroVector
from crclassify.model import (
    AUGMENTED,
    DENSE,
    ClassPartition,
    Representation,
    build_label_matrix,
    FittedModel,
)
from crclassify.solvers import build_projection

from conftest import random_dictionary


def test_energy_profile_normalizes_squares():
    rng = np.random.default_rng(40)
    for _ in range(20):
        v = rng.standard_normal(int(rng.integers(1, 30)))
        if not v.any():
            continue
        prof = energy_profile(Representation(v, DENSE))
        np.testing.assert_allclose(prof.energies, v**2 / np.sum(v**2), rtol=1e-12)
        assert prof.energies.sum() == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ZeroVector):
        energy_profile(Representation(np.zeros(4), DENSE))


def test_effective_sparsity_strict_threshold():
    """A coefficient whose energy equals delta exactly is not counted."""
    rep = Representation(np.array([1.0, 1.0, 1.0, 1.0]), DENSE)  # energies 0.25
    assert effective_sparsity(rep, 0.0) == 4
    assert effective_sparsity(rep, 0.2) == 4
    assert effective_sparsity(rep, 0.25) == 0
    halves = Representation(np.array([1.0, -1.0]), DENSE)  # energies 0.5
    assert effective_sparsity(halves, 0.25) == 2
    assert effective_sparsity(halves, 0.5) == 0
    with pytest.raises(ValueError):
        effective_sparsity(rep, -0.1)


def test_sparsity_curve_matches_pointwise_counts():
    rng = np.random.default_rng(41)
    grid = np.logspace(-6, -0.5, 12)
    for _ in range(10):
        rep = Representation(rng.standard_normal(40), DENSE)
        curve = sparsity_curve(rep, grid)
        for delta, count in zip(curve.deltas, curve.counts):
            assert count == effective_sparsity(rep, float(delta))
        assert np.all(np.diff(curve.counts) <= 0)
    with pytest.raises(ValueError):
        SparsityCurve(np.array([0.1, 0.1]), np.array([2, 1]))
    with pytest.raises(ValueError):
        SparsityCurve(np.array([0.1, 0.2]), np.array([1, 2]))


def test_residual_decomposition_identity_exact():
    """epsilon_class = epsilon + xi_bar holds bitwise by construction, and
    the pieces match directly computed reconstructions."""
    rng = np.random.default_rng(42)
    for _ in range(20):
        d = random_dictionary(rng, m=9, classes=3, per_class=3)
        alpha = Representation(rng.standard_normal(d.size), DENSE)
        y = rng.standard_normal(9)
        i = int(rng.integers(3))
        dec = residual_decomposition(d, alpha, y, i)
        np.testing.assert_array_equal(dec.epsilon_class, dec.epsilon + dec.xi_bar)
        sl = d.partition.slice_of(i)
        np.testing.assert_allclose(
            dec.xi, d.data[:, sl] @ alpha.coefficients[sl], rtol=0, atol=1e-14
        )
        np.testing.assert_allclose(
            dec.epsilon, y - d.data @ alpha.coefficients, rtol=0, atol=1e-14
        )
        # the class residual the classifiers report is ||epsilon_class||
        assert np.linalg.norm(dec.epsilon_class) == pytest.approx(
            class_residuals(d, alpha, y)[i], rel=1e-12
        )
    with pytest.raises(IndexError):
        residual_decomposition(d, alpha, y, 3)


def test_margin_check_counts_and_threshold():
    part = ClassPartition(("a", "b", "c"), (2, 2, 2))
    # energies: class a has two large coefficients, class b two tiny ones
    v = np.array([0.7, 0.7, 1e-4, 1e-4, 0.1, 0.05])
    v = v / np.linalg.norm(v)
    rep = Representation(v, AUGMENTED)
    q = np.array([1.4, 0.2, 0.15])
    delta = 1e-6
    report = decision_margin_check(q, rep, part, delta)
    assert (report.class_a, report.class_b) == ("a", "b")
    energies = rep.coefficients**2
    assert report.n_a == int(np.sum(energies[:2] < delta))
    assert report.n_b == int(np.sum(energies[2:4] < delta))
    assert report.threshold == pytest.approx(
        2.0 * np.sqrt(delta) * (report.n_b - report.n_a)
    )
    assert report.satisfied == (report.sigma_a - report.sigma_b > report.threshold)
    assert report.satisfied
    # push the second class to within the bound: 0 coefficients below delta
    # for b and 2 for a flips the threshold sign in a's favor regardless
    report2 = decision_margin_check(np.array([0.2, 0.1999, 0.0]), rep, part, 0.9)
    assert isinstance(report2, MarginReport)
    with pytest.raises(ValueError):
        decision_margin_check(q, rep, part, 0.0)
    with pytest.raises(ValueError):
        decision_margin_check(
            q[:2], rep, ClassPartition(("a",), (6,)), delta
        )


def test_tie_scenario_residuals_tie_and_pursuit_breaks_it():
    """Mirror-symmetric classes fool the dense residual rule: residuals
    coincide, yet one class reaches that error with a single atom."""
    for seed in range(8):
        dictionary, y, report = build_tie_scenario(6, seed)
        assert report.residual_gap < 1e-9
        assert report.atoms_to_match_residual == (2, 1)
        assert report.fewer_atom_class == "single"
        # the pooled classifier picks the economical class on the nose
        lam = report.ridge_lambda
        model = FittedModel(
            dictionary,
            build_projection(dictionary, lam).matrix,
            build_label_matrix(dictionary.partition),
            lam,
            2,
        )
        assert classify_sa_crc(model, y).label == "single"


def test_tie_scenario_asymmetry_restores_agreement():
    """Tilting the pair away from the mirror makes both rules agree."""
    for seed in range(5):
        dictionary, y, report = build_tie_scenario(7, seed, asymmetry=0.05)
        assert report.residual_gap > 1e-6
        r_pair, r_single = report.dense_residuals
        assert r_single < r_pair
        lam = report.ridge_lambda
        model = FittedModel(
            dictionary,
            build_projection(dictionary, lam).matrix,
            build_label_matrix(dictionary.partition),
            lam,
            2,
        )
        assert classify_crc_rls(model, y).label == "single"
        assert classify_sa_crc(model, y).label == "single"


def test_tie_scenario_needs_three_dimensions():
    with pytest.raises(InfeasibleGeometry):
        build_tie_scenario(2, 0)


def test_tie_scenario_is_seed_deterministic():
    d1, y1, r1 = build_tie_scenario(5, 123)
    d2, y2, r2 = build_tie_scenario(5, 123)
    np.testing.assert_array_equal(d1.data, d2.data)
    np.testing.assert_array_equal(y1, y2)
    assert r1 == r2
