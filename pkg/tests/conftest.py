"""Shared builders for the test suite.

Everything is seeded; no test depends on global RNG state.
"""

import numpy as np
import pytest

from crclassify.data import SplitSpec, split, synthetic_subspaces
from crclassify.harness import fit
from crclassify.model import ClassPartition, Dictionary


def unit_columns(rng, m, n):
    """Random matrix with unit-norm columns (a valid dictionary block)."""
    block = rng.standard_normal((m, n))
    return block / np.linalg.norm(block, axis=0)


def random_dictionary(rng, m=8, classes=3, per_class=4):
    """Well-conditioned random dictionary with equal class blocks."""
    part = ClassPartition(
        tuple(f"c{i}" for i in range(classes)), (per_class,) * classes
    )
    return Dictionary(unit_columns(rng, m, classes * per_class), part)


@pytest.fixture(scope="session")
def toy_split():
    """Easy, well-separated synthetic classes: 5 classes, 8 train / 4 test."""
    ds = synthetic_subspaces(5, 12, 30, 3, 0.02, 0.0, 11)
    return split(ds, SplitSpec(8, 11))


@pytest.fixture(scope="session")
def toy_model(toy_split):
    train, _ = toy_split
    return fit(train, 0.01, 6)
