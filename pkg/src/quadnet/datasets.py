"""Regression targets, synthetic 2-D clusters, and the Dataset container."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .core_math import Rng

X_RANGE = (-3.0, 13.0)
N_POINTS = 1600
N_TRAIN = 1072


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        if self.inputs.ndim == 1:
            self.inputs = self.inputs.reshape(-1, 1)
        self.targets = np.asarray(self.targets, dtype=float).ravel()
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets differ in length")
        both = np.concatenate([self.train_idx, self.test_idx])
        if not np.array_equal(np.sort(both), np.arange(len(self.targets))):
            raise ValueError("train/test split must partition the sample indices")

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def x_train(self):
        return self.inputs[self.train_idx]

    @property
    def y_train(self):
        return self.targets[self.train_idx]

    @property
    def x_test(self):
        return self.inputs[self.test_idx]

    @property
    def y_test(self):
        return self.targets[self.test_idx]

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.inputs, self.targets, self.train_idx, self.test_idx):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def to_csv(self) -> str:
        split = np.zeros(len(self), dtype=int)
        split[self.test_idx] = 1
        cols = [f"x{i}" for i in range(self.dim)]
        lines = [",".join(cols + ["y", "split"])]
        for row, y, s in zip(self.inputs, self.targets, split):
            vals = [f"{v:.6g}" for v in row] + [f"{y:.6g}", "test" if s else "train"]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def ground_truth(name: str, x):
    """Piecewise test functions; each branch owns the half-open interval as written."""
    x = np.asarray(x, dtype=float)
    if name == "f1":
        out = np.select(
            [x <= 0, x <= 3, x <= 5],
            [0.0, x, 3.0],
            default=-0.4 * x + 5.0,
        )
    elif name == "f2":
        # every branch is evaluated everywhere; unused ones may overflow
        with np.errstate(over="ignore"):
            out = np.select(
                [x <= 0, x <= 3, x <= 5],
                [0.0, x * x, 9.0],
                default=9.0 * np.exp(-(x - 5.0)),
            )
    else:
        raise ValueError(f"unknown ground truth {name!r}")
    return float(out) if out.ndim == 0 else out


def random_split(n: int, n_train: int, rng: Rng):
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def generate_regression_data(
    name: str,
    seed: int,
    n_points: int = N_POINTS,
    n_train: int = N_TRAIN,
    x_range: tuple[float, float] = X_RANGE,
    even_grid: bool = False,
) -> Dataset:
    """Uniform samples of ``ground_truth(name)`` on ``x_range`` with a random split."""
    rng = Rng(seed)
    lo, hi = x_range
    if even_grid:
        x = np.linspace(lo, hi, n_points)
    else:
        x = rng.uniform(lo, hi, n_points)
    y = ground_truth(name, x)
    train, test = random_split(n_points, n_train, rng)
    return Dataset(x.reshape(-1, 1), y, train, test, seed=seed, name=name)


@dataclass
class Blob:
    center: tuple[float, float]
    cov: tuple[tuple[float, float], tuple[float, float]]
    count: int
    label: int


@dataclass
class Annulus:
    center: tuple[float, float]
    r_inner: float
    r_outer: float
    count: int
    label: int


@dataclass
class ClusterSpec:
    parts: list = field(default_factory=list)
    train_fraction: float = 0.67


def two_blob_spec(separation: float = 10.0, count: int = 500) -> ClusterSpec:
    """Two unit-variance blobs ``separation`` standard deviations apart."""
    half = separation / 2.0
    eye = ((1.0, 0.0), (0.0, 1.0))
    return ClusterSpec([
        Blob((-half, 0.0), eye, count, 1),
        Blob((half, 0.0), eye, count, 0),
    ])


def subspecies_spec(
    core_count: int = 200,
    ring_count: int = 1800,
    core_std: float = 0.35,
    r_inner: float = 2.0,
    r_outer: float = 3.0,
) -> ClusterSpec:
    """Minority Gaussian core (label 1) inside a majority annulus (label 0)."""
    s2 = core_std * core_std
    return ClusterSpec([
        Blob((0.0, 0.0), ((s2, 0.0), (0.0, s2)), core_count, 1),
        Annulus((0.0, 0.0), r_inner, r_outer, ring_count, 0),
    ])


def generate_cluster_data(spec: ClusterSpec, seed: int) -> Dataset:
    rng = Rng(seed)
    xs, ys = [], []
    for part in spec.parts:
        if isinstance(part, Blob):
            chol = np.linalg.cholesky(np.asarray(part.cov, dtype=float))
            z = rng.gaussian(0.0, 1.0, (part.count, 2))
            pts = np.asarray(part.center) + z @ chol.T
        elif isinstance(part, Annulus):
            angle = rng.uniform(0.0, 2 * np.pi, part.count)
            # uniform in area
            r2 = rng.uniform(part.r_inner**2, part.r_outer**2, part.count)
            r = np.sqrt(r2)
            pts = np.asarray(part.center) + np.column_stack([r * np.cos(angle), r * np.sin(angle)])
        else:
            raise TypeError(f"unknown cluster part {part!r}")
        xs.append(pts)
        ys.append(np.full(part.count, float(part.label)))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    n_train = int(round(spec.train_fraction * len(y)))
    train, test = random_split(len(y), n_train, rng)
    return Dataset(x, y, train, test, seed=seed, name="clusters")
