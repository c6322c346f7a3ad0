"""Synthetic datasets for the separability regimes, plus CSV I/O."""

import csv
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ConfigError, GenerationFailed, ParseError
from .geometry import pairwise_verdicts


@dataclass
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    class_names: Optional[List[str]] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.ndim != 2 or self.labels.shape != (self.points.shape[0],):
            raise ValueError("need one integer label per point")
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be nonnegative")

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def class_points(self, k):
        return self.points[self.labels == k]

    def classes(self):
        return [self.class_points(k) for k in range(self.n_classes)]

    def __eq__(self, other):
        return (
            isinstance(other, LabeledDataset)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )


def gen_xor() -> LabeledDataset:
    """Class 0 = {(0,0), (1,1)}, class 1 = {(0,1), (1,0)}."""
    return LabeledDataset([(0, 0), (1, 1), (0, 1), (1, 0)], [0, 0, 1, 1])


def _circle(count, radius, phase, jitter, rng):
    angles = phase + 2 * np.pi * np.arange(count) / count
    if jitter:
        angles = angles + rng.uniform(-jitter, jitter, size=count) * (np.pi / count)
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def gen_rings(
    n_inner: int = 8,
    n_outer: int = 8,
    r_inner: float = 1.0,
    r_outer: float = 3.0,
    include_center: bool = True,
    seed: int = 0,
    jitter: float = 0.0,
) -> LabeledDataset:
    """Class 0 on the inner circle, class 1 on the outer circle (plus the center).

    Points are equally spaced; ``jitter`` in [0, 1) perturbs each angle by up
    to that fraction of half the spacing.  Neither class is convexly separable
    from the other when the center is included.
    """
    if not (r_inner > 0 and r_outer > 0):
        raise ConfigError("radii must be positive")
    if r_inner >= r_outer:
        raise ConfigError(f"r_inner ({r_inner}) must be smaller than r_outer ({r_outer})")
    if n_inner < 3 or n_outer < 3:
        raise ConfigError("each ring needs at least 3 points")
    if not 0 <= jitter < 1:
        raise ConfigError("jitter must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    inner = _circle(n_inner, r_inner, 0.0, jitter, rng)
    outer = _circle(n_outer, r_outer, 0.0, jitter, rng)
    if include_center:
        outer = np.vstack([[0.0, 0.0], outer])
    points = np.vstack([inner, outer])
    labels = np.r_[np.zeros(len(inner), int), np.ones(len(outer), int)]
    return LabeledDataset(points, labels)


def gen_polytope_blobs(
    m: int = 3,
    n: int = 2,
    points_per_class: int = 20,
    separation: float = 4.0,
    seed: int = 0,
    max_attempts: int = 10,
) -> LabeledDataset:
    """``m`` uniform-ball blobs of unit radius whose centers are at least
    ``separation`` apart, verified pairwise mutually convex separable.

    A failed verification retries with the next seed offset.
    """
    if m < 2:
        raise ConfigError("need at least two classes")
    if separation <= 0 or n < 1 or points_per_class < 1:
        raise ConfigError("separation, dimension and class size must be positive")
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        centers = _spread_centers(rng, m, n, separation)
        if centers is None:
            continue
        blocks = []
        for c in centers:
            d = rng.normal(size=(points_per_class, n))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            r = rng.uniform(0, 1, size=(points_per_class, 1)) ** (1.0 / n)
            blocks.append(c + d * r)
        points = np.vstack(blocks)
        labels = np.repeat(np.arange(m), points_per_class)
        ds = LabeledDataset(points, labels)
        if pairwise_verdicts(ds.classes(), "mutual_convex").all():
            return ds
    raise GenerationFailed(f"no pairwise separable instance after {max_attempts} attempts")


def _spread_centers(rng, m, n, separation, tries=1000):
    box = separation * max(1.0, m ** (1.0 / n))
    centers = []
    for _ in range(tries):
        c = rng.uniform(-box, box, size=n)
        if all(np.linalg.norm(c - other) >= separation for other in centers):
            centers.append(c)
            if len(centers) == m:
                return np.array(centers)
    return None


def save_csv(dataset: LabeledDataset, path):
    """Write ``x1,...,xn,label`` rows; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(dataset.dim)] + ["label"])
        for point, label in zip(dataset.points, dataset.labels):
            writer.writerow([repr(float(v)) for v in point] + [int(label)])


def load_csv(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[-1] != "label":
        raise ParseError(f"{path}: line 1: last column must be 'label'")
    dim = len(header) - 1
    if dim < 1:
        raise ParseError(f"{path}: line 1: no coordinate columns")
    points, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise ParseError(f"{path}: line {lineno}: expected {dim + 1} fields, got {len(row)}")
        try:
            points.append([float(v) for v in row[:dim]])
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-numeric coordinate") from None
        try:
            label = int(row[dim])
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: label must be an integer") from None
        if label < 0:
            raise ParseError(f"{path}: line {lineno}: negative label")
        labels.append(label)
    if not points:
        raise ParseError(f"{path}: no data rows")
    return LabeledDataset(np.array(points), np.array(labels))
