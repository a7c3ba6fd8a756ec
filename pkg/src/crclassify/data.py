"""Dataset ingestion, normalization, random-projection features, stratified
splits and synthetic subspace data.

Datasets hold samples as columns.  On disk the layout is the usual tabular
one (rows are samples) with header ``label,f0,f1,...``; ingestion transposes.
Every random draw goes through :mod:`crclassify.rng`, so outputs are a pure
function of (inputs, seed).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, ParseError, ZeroSample
from .rng import STREAM_PROJECTION, STREAM_SPLIT, STREAM_SYNTH, generator

MANIFEST_SCHEMA_VERSION = 1

#: Columns whose norm is already within this of 1 are left untouched by
#: normalize_columns, making it idempotent bit for bit.
NORM_SNAP_TOL = 1e-12

#: Halo-to-dominant-coordinate ratio in synthetic_subspaces; small enough
#: that a sample's nearest atoms are the ones sharing its dominant basis
#: direction, large enough that those neighbors still disagree.
HALO_SCALE = 0.25


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (m x n, samples as columns) with per-sample labels."""

    features: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if feats.shape[0] < 1:
            raise EmptyDataset("dataset has no feature dimensions")
        if feats.shape[1] < 1:
            raise EmptyDataset("dataset has no samples")
        labels = tuple(str(l) for l in self.labels)
        if len(labels) != feats.shape[1]:
            raise ValueError(
                f"{len(labels)} labels for {feats.shape[1]} samples"
            )
        feats = np.ascontiguousarray(feats)
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[0]

    @property
    def sample_count(self) -> int:
        return self.features.shape[1]

    @property
    def class_labels(self) -> tuple[str, ...]:
        """Distinct labels in first-appearance order."""
        return tuple(dict.fromkeys(self.labels))

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for l in self.labels:
            counts[l] = counts.get(l, 0) + 1
        return counts

    def class_indices(self, label: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.labels, dtype=object) == label)

    def take(self, indices: np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[:, idx], tuple(self.labels[i] for i in idx))


@dataclass(frozen=True)
class SplitSpec:
    """Per-class stratified split: ``per_class_train`` samples (or fraction)
    of every class go to training, the rest to test."""

    per_class_train: int | float
    seed: int
    trials: int = 1

    def __post_init__(self):
        p = self.per_class_train
        if isinstance(p, float) and not p.is_integer():
            if not 0.0 < p < 1.0:
                raise ValueError("fractional per_class_train must lie in (0, 1)")
        elif int(p) < 1:
            raise ValueError("per_class_train must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def resolve_count(self, class_size: int) -> int:
        p = self.per_class_train
        if isinstance(p, float) and not p.is_integer():
            return max(1, int(p * class_size))
        return int(p)


def load_csv(path) -> Dataset:
    """Read ``label,f0,f1,...`` rows into a column-major dataset.

    Classes keep first-appearance order.  Malformed rows raise
    :class:`ParseError` with 1-based row/column locations.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        if not header or header[0].strip() != "label":
            raise ParseError(
                f"{path}: first header column must be 'label'", row=1, column=1
            )
        width = len(header)
        if width < 2:
            raise EmptyDataset(f"{path} declares no feature columns")

        labels: list[str] = []
        rows: list[list[float]] = []
        for r, cells in enumerate(reader, start=2):
            if not cells:
                continue  # ignore blank lines
            if len(cells) != width:
                raise ParseError(
                    f"{path}: row has {len(cells)} fields, header has {width}",
                    row=r,
                )
            labels.append(cells[0])
            values = []
            for c, cell in enumerate(cells[1:], start=2):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric feature value {cell!r}",
                        row=r,
                        column=c,
                    ) from None
            rows.append(values)

    if not rows:
        raise EmptyDataset(f"{path} has a header but no samples")
    return Dataset(np.asarray(rows, dtype=np.float64).T, tuple(labels))


def save_csv(dataset: Dataset, path) -> Path:
    """Write the dataset in the loadable layout; floats round-trip exactly."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"f{i}" for i in range(dataset.feature_dim)])
        for j in range(dataset.sample_count):
            writer.writerow(
                [dataset.labels[j]] + [repr(float(v)) for v in dataset.features[:, j]]
            )
    return path


def write_manifest(csv_path, manifest_path=None) -> Path:
    """Manifest JSON beside a dataset file: path, class map, sha256 checksum."""
    csv_path = Path(csv_path)
    dataset = load_csv(csv_path)
    digest = hashlib.sha256(csv_path.read_bytes()).hexdigest()
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "path": csv_path.name,
        "sha256": digest,
        "feature_dim": dataset.feature_dim,
        "sample_count": dataset.sample_count,
        "classes": dataset.class_counts(),
    }
    manifest_path = (
        Path(manifest_path)
        if manifest_path is not None
        else csv_path.with_suffix(".manifest.json")
    )
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest_path


def load_manifest(manifest_path) -> dict:
    """Load a manifest and verify the referenced file's checksum."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest_path}: not valid JSON ({exc})") from None
    if not isinstance(manifest, dict) or "path" not in manifest or "sha256" not in manifest:
        raise ParseError(
            f"{manifest_path}: manifest needs 'path' and 'sha256' fields"
        )
    if manifest.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ParseError(
            f"{manifest_path}: unsupported manifest schema "
            f"{manifest.get('schema_version')!r}"
        )
    target = manifest_path.parent / manifest["path"]
    digest = hashlib.sha256(target.read_bytes()).hexdigest()
    if digest != manifest["sha256"]:
        raise ParseError(
            f"{target} does not match the manifest checksum (file changed?)"
        )
    return manifest


def normalize_columns(dataset: Dataset) -> Dataset:
    """Rescale every sample to unit l2 norm.

    Columns already within :data:`NORM_SNAP_TOL` of unit norm pass through
    unchanged, so applying this twice returns bit-identical features.
    """
    norms = np.linalg.norm(dataset.features, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroSample(f"sample {zero[0]} is identically zero")
    divisors = np.where(np.abs(norms - 1.0) <= NORM_SNAP_TOL, 1.0, norms)
    return Dataset(dataset.features / divisors, dataset.labels)


def random_projection(
    dataset: Dataset, d: int, seed: int, *, matrix: np.ndarray | None = None
) -> Dataset:
    """Replace features by R x with R a seeded d x m standard-normal matrix.

    ``matrix`` overrides the random draw (test hook); rows are not
    normalized, downstream pipelines unit-normalize samples anyway.
    """
    if d < 1:
        raise ValueError("projected dimension must be at least 1")
    if matrix is None:
        rng = generator(seed, STREAM_PROJECTION)
        matrix = rng.standard_normal((d, dataset.feature_dim))
    else:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (d, dataset.feature_dim):
            raise ValueError(
                f"projection matrix must be {d}x{dataset.feature_dim}, "
                f"got {matrix.shape}"
            )
    return Dataset(matrix @ dataset.features, dataset.labels)


def split(dataset: Dataset, spec: SplitSpec, trial: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded stratified split; disjoint and exhaustive per class.

    ``trial`` indexes an independent random stream, so repeated trials under
    one seed draw distinct permutations.
    """
    rng = generator(spec.seed, STREAM_SPLIT, index=trial)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for label in dataset.class_labels:
        members = dataset.class_indices(label)
        n_train = spec.resolve_count(members.size)
        if n_train >= members.size:
            raise ValueError(
                f"class {label!r} has {members.size} samples; "
                f"cannot reserve {n_train} for training and still test"
            )
        perm = rng.permutation(members.size)
        train_idx.append(np.sort(members[perm[:n_train]]))
        test_idx.append(np.sort(members[perm[n_train:]]))
    return dataset.take(np.concatenate(train_idx)), dataset.take(np.concatenate(test_idx))


def _orthonormal_columns(rng, m: int, count: int, anchor: np.ndarray | None) -> np.ndarray:
    """``count`` orthonormal directions, the first ones anchored if given."""
    fresh = count if anchor is None else count - anchor.shape[1]
    block = rng.standard_normal((m, fresh))
    stacked = block if anchor is None else np.hstack([anchor, block])
    q, r = np.linalg.qr(stacked)
    q = q * np.sign(np.diag(r))
    return q[:, :count]


def synthetic_subspaces(
    class_count: int,
    n_per_class: int,
    m: int,
    subspace_dim: int,
    noise_sigma: float,
    overlap: float,
    seed: int,
) -> Dataset:
    """Classes as unit-normalized noisy draws from low-dimensional subspaces.

    Class i's basis shares ``round(overlap * subspace_dim)`` leading
    directions with class i-1's, so ``overlap=0`` gives independent
    subspaces and ``overlap=1`` makes consecutive classes span the same one.

    Each sample concentrates on one basis direction plus a small
    folded-normal halo over all coordinates; dominant directions rotate
    through the basis so every class covers its subspace evenly. Two
    properties of recognition data follow: same-class samples correlate
    positively (all coordinates nonnegative; symmetric coordinates would
    cancel under signed pooling and no classifier ordering could be studied),
    and every sample lies close to the handful of training atoms sharing its
    dominant direction rather than equally far from all of them, so
    least-squares codes concentrate on a few atoms the way they do on real
    galleries instead of smearing energy over an entire class block.
    """
    if subspace_dim > m:
        raise ValueError(f"subspace dimension {subspace_dim} exceeds ambient {m}")
    if class_count < 1 or n_per_class < 1 or subspace_dim < 1:
        raise ValueError("class_count, n_per_class and subspace_dim must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")

    rng = generator(seed, STREAM_SYNTH)
    shared_count = int(round(overlap * subspace_dim))

    blocks = []
    labels = []
    basis = None
    repeats = (n_per_class + subspace_dim - 1) // subspace_dim
    dominant = np.tile(np.arange(subspace_dim), repeats)[:n_per_class]
    for i in range(class_count):
        anchor = None if basis is None or shared_count == 0 else basis[:, :shared_count]
        basis = _orthonormal_columns(rng, m, subspace_dim, anchor)
        coords = HALO_SCALE * np.abs(rng.standard_normal((subspace_dim, n_per_class)))
        coords[dominant, np.arange(n_per_class)] += 1.0
        samples = basis @ coords
        if noise_sigma > 0:
            samples = samples + noise_sigma * rng.standard_normal((m, n_per_class))
        norms = np.linalg.norm(samples, axis=0)
        if np.any(norms == 0.0):
            raise ZeroSample(f"class {i} drew a zero sample; change the seed")
        blocks.append(samples / norms)
        labels.extend([f"c{i}"] * n_per_class)

    return Dataset(np.hstack(blocks), tuple(labels))
