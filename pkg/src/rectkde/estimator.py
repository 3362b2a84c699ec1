"""Kernel density estimators normalized by intrinsic or ambient dimension.

For samples ``X_1..X_n`` in ``R^D`` lying on a ``d``-dimensional set, the
intrinsic estimator is

    p_hat(x) = 1 / (n h^d) * sum_i K_d(|X_i - x| / h)

and the classical ambient estimator replaces ``d`` by ``D`` (kernel
normalized in ``R^D`` and ``h^D`` scaling).  Both average over the sample,
so when ``d == D`` the estimate is a probability density.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kernels import NormalizedKernel, normalize
from .spatial import DEFAULT_LEAF_SIZE, BruteForceIndex, KDTreeIndex, build_index

__all__ = [
    "Dataset",
    "Fixed",
    "RateSchedule",
    "bandwidth",
    "DensityEstimator",
    "build_estimator",
    "brute_force_density",
    "read_points_csv",
    "write_points_csv",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``(n, D)`` block of finite sample points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, order="C")
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError(f"dataset must be two-dimensional, got shape {pts.shape}")
        if pts.shape[0] == 0:
            raise ValueError("empty dataset")
        if pts.shape[1] == 0:
            raise ValueError("dataset points need at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("dataset contains non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class Fixed:
    """Constant bandwidth, independent of sample size."""

    h: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.h}")


@dataclass(frozen=True)
class RateSchedule:
    """``h_n = c * n^(-1/(d + 2m))``: balances an ``O(h^m)`` bias against ``O(1/(n h^d))`` variance."""

    c: float = 1.0
    d: int = 1
    m: float = 2.0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"bandwidth constant must be positive, got {self.c}")
        if self.d < 1:
            raise ValueError(f"intrinsic dimension must be >= 1, got {self.d}")
        if not self.m > 0:
            raise ValueError(f"tangent approximation order must be positive, got {self.m}")

    @property
    def exponent(self) -> float:
        return -1.0 / (self.d + 2.0 * self.m)


def bandwidth(rule: Fixed | RateSchedule, n: int) -> float:
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if isinstance(rule, Fixed):
        return float(rule.h)
    return float(rule.c * float(n) ** rule.exponent)


@dataclass(frozen=True, eq=False)
class DensityEstimator:
    """Immutable estimator over a dataset; build with :func:`build_estimator`."""

    dataset: Dataset
    kernel: NormalizedKernel
    h: float
    index: BruteForceIndex | KDTreeIndex = field(repr=False)
    ambient_kernel: NormalizedKernel = field(repr=False)

    @property
    def d(self) -> int:
        return self.kernel.d

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def D(self) -> int:
        return self.dataset.D

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.D:
            raise ValueError(f"query has dimension {x.shape[0]}, data has dimension {self.D}")
        if not np.all(np.isfinite(x)):
            raise ValueError("query point must be finite")
        return x

    def _kernel_sum(self, x: np.ndarray, kernel: NormalizedKernel) -> float:
        hits = self.index.radius_query(x, self.h)
        if hits.indices.size == 0:
            return 0.0
        vals = kernel.c_d * kernel.profile.raw(hits.distances / self.h)
        # exactly rounded, so the result does not depend on neighbor order
        return math.fsum(vals)

    def density_at(self, x) -> float:
        """Intrinsic estimate ``p_hat(x)``."""
        x = self._check_point(x)
        return self._kernel_sum(x, self.kernel) / (self.n * self.h**self.d)

    def ambient_density_at(self, x) -> float:
        """Classical estimate with the kernel normalized in the ambient dimension ``D``."""
        x = self._check_point(x)
        return self._kernel_sum(x, self.ambient_kernel) / (self.n * self.h**self.D)

    def density_batch(self, queries, threads: int = 1, ambient: bool = False) -> np.ndarray:
        """Evaluate many queries; the result does not depend on ``threads``."""
        q = np.asarray(queries, dtype=np.float64)
        if q.size == 0:
            return np.empty(0)
        if q.ndim == 1:
            q = q.reshape(1, -1) if self.D > 1 else q.reshape(-1, 1)
        if q.ndim != 2 or q.shape[1] != self.D:
            raise ValueError(f"queries must have shape (m, {self.D}), got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("queries must be finite")
        fn = self.ambient_density_at if ambient else self.density_at
        out = np.empty(q.shape[0])
        if threads <= 1 or q.shape[0] < 2:
            for i, x in enumerate(q):
                out[i] = fn(x)
            return out

        def run(lo_hi):
            lo, hi = lo_hi
            for i in range(lo, hi):
                out[i] = fn(q[i])

        bounds = np.linspace(0, q.shape[0], min(threads, q.shape[0]) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, zip(bounds[:-1], bounds[1:])))
        return out


def build_estimator(
    dataset: Dataset | np.ndarray,
    kernel: NormalizedKernel,
    rule: Fixed | RateSchedule,
    index_kind: str = "kdtree",
    leaf_size: int = DEFAULT_LEAF_SIZE,
) -> DensityEstimator:
    """Realize the bandwidth for ``n`` samples and index the data."""
    if not isinstance(dataset, Dataset):
        dataset = Dataset(dataset)
    if isinstance(rule, RateSchedule) and rule.d != kernel.d:
        raise ValueError(f"bandwidth rule uses d={rule.d} but kernel is normalized in d={kernel.d}")
    h = bandwidth(rule, dataset.n)
    index = build_index(dataset.points, kind=index_kind, leaf_size=leaf_size)
    ambient = kernel if kernel.d == dataset.D else normalize(kernel.profile, dataset.D)
    return DensityEstimator(dataset=dataset, kernel=kernel, h=h, index=index, ambient_kernel=ambient)


def brute_force_density(points, x, kernel: NormalizedKernel, h: float) -> float:
    """Direct ``O(n)`` evaluation without an index; reference for :meth:`DensityEstimator.density_at`."""
    pts = np.asarray(points, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    for row in pts:
        r = math.sqrt(sum((a - b) ** 2 for a, b in zip(row, x))) / h
        if r <= 1.0:
            total += kernel(r)
    return total / (len(pts) * h**kernel.d)


def read_points_csv(path: str | os.PathLike) -> np.ndarray:
    """Read headerless CSV with one point per row; ragged rows raise ``ValueError``."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    return np.asarray(rows, dtype=np.float64)


def write_points_csv(path: str | os.PathLike, points) -> None:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])
