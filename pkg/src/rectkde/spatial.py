"""Radius-limited neighbor search over a fixed point set.

Two interchangeable indexes answer closed-ball queries ``{i : |X_i - x| <= r}``:

* :class:`BruteForceIndex` scans every point and serves as the reference.
* :class:`KDTreeIndex` is an axis-aligned bucket tree with bounding boxes.

Both return neighbor indices in ascending order together with Euclidean
distances recomputed from the stored coordinates, so the two agree on
membership and on distances.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "Neighbors",
    "BruteForceIndex",
    "KDTreeIndex",
    "build_index",
    "INDEX_KINDS",
]

INDEX_KINDS = ("kdtree", "brute")
DEFAULT_LEAF_SIZE = 16

# Box pruning uses a relative slack so rounding in the bound can never drop a
# point sitting exactly on the query sphere.  Membership is decided afterwards
# on exact distances.
_PRUNE_SLACK = 1e-9


class Neighbors(NamedTuple):
    indices: np.ndarray
    distances: np.ndarray


def _row_distances(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    diff = rows - x
    return np.sqrt(np.sum(diff * diff, axis=1))


def _check_points(points) -> np.ndarray:
    pts = np.array(points, dtype=np.float64, order="C")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"points must be an (n, D) array, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise ValueError("cannot index an empty point set")
    if pts.shape[1] == 0:
        raise ValueError("points must have at least one coordinate")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    pts.setflags(write=False)
    return pts


class _IndexBase:
    kind: str
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def _check_query(self, x, r) -> tuple[np.ndarray, float]:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"query has dimension {x.shape[0]}, index has dimension {self.dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("query point must be finite")
        r = float(r)
        if not (r > 0.0 and np.isfinite(r)):
            raise ValueError(f"radius must be positive and finite, got {r}")
        return x, r


class BruteForceIndex(_IndexBase):
    """Reference index: every query scans all points."""

    kind = "brute"

    def __init__(self, points):
        self.points = _check_points(points)

    def radius_query(self, x, r) -> Neighbors:
        x, r = self._check_query(x, r)
        dist = _row_distances(self.points, x)
        idx = np.flatnonzero(dist <= r)
        return Neighbors(idx, dist[idx])


class KDTreeIndex(_IndexBase):
    """Bucket kd-tree splitting at the median of the widest coordinate.

    Nodes are kept in flat arrays.  Points are stored in tree order internally;
    ``perm`` maps tree order back to the caller's row numbers, which are the
    only indices ever returned.

    Parameters
    ----------
    points : array_like, shape (n, D)
    leaf_size : int
        Maximum number of points in a leaf bucket.
    """

    kind = "kdtree"

    def __init__(self, points, leaf_size: int = DEFAULT_LEAF_SIZE):
        if int(leaf_size) != leaf_size or leaf_size < 1:
            raise ValueError(f"leaf_size must be a positive integer, got {leaf_size!r}")
        self.points = _check_points(points)
        self.leaf_size = int(leaf_size)
        self._build()

    def _build(self) -> None:
        pts = self.points
        n = pts.shape[0]
        perm = np.arange(n)
        start, end, left, right, lo, hi = [], [], [], [], [], []

        def new_node(s: int, e: int) -> int:
            block = pts[perm[s:e]]
            start.append(s)
            end.append(e)
            left.append(-1)
            right.append(-1)
            lo.append(block.min(axis=0))
            hi.append(block.max(axis=0))
            return len(start) - 1

        stack = [new_node(0, n)]
        while stack:
            node = stack.pop()
            s, e = start[node], end[node]
            if e - s <= self.leaf_size:
                continue
            spread = hi[node] - lo[node]
            axis = int(np.argmax(spread))
            if spread[axis] == 0.0:
                continue  # all points coincide; keep as an oversized leaf
            mid = (e - s) // 2
            seg = perm[s:e]
            order = np.argpartition(pts[seg, axis], mid, kind="introselect")
            perm[s:e] = seg[order]
            lchild = new_node(s, s + mid)
            rchild = new_node(s + mid, e)
            left[node], right[node] = lchild, rchild
            stack.append(rchild)
            stack.append(lchild)

        self.perm = perm
        self._data = np.ascontiguousarray(pts[perm])
        self._start = np.asarray(start, dtype=np.intp)
        self._end = np.asarray(end, dtype=np.intp)
        self._left = np.asarray(left, dtype=np.intp)
        self._right = np.asarray(right, dtype=np.intp)
        self._lo = np.asarray(lo)
        self._hi = np.asarray(hi)
        for arr in (self.perm, self._data, self._lo, self._hi):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self._start)

    @property
    def depth(self) -> int:
        """Number of edges on the longest root-to-leaf path."""
        best = 0
        stack = [(0, 0)]
        while stack:
            node, depth = stack.pop()
            best = max(best, depth)
            if self._left[node] >= 0:
                stack.append((int(self._left[node]), depth + 1))
                stack.append((int(self._right[node]), depth + 1))
        return best

    def leaves(self) -> list[np.ndarray]:
        """Caller-order point indices held by each leaf."""
        return [
            self.perm[self._start[i] : self._end[i]]
            for i in range(self.n_nodes)
            if self._left[i] < 0
        ]

    def radius_query(self, x, r) -> Neighbors:
        x, r = self._check_query(x, r)
        bound = r * r * (1.0 + _PRUNE_SLACK)
        lo, hi = self._lo, self._hi
        left, right = self._left, self._right
        chunks = []
        stack = [0]
        while stack:
            node = stack.pop()
            gap = np.maximum(lo[node] - x, 0.0) + np.maximum(x - hi[node], 0.0)
            if gap @ gap > bound:
                continue
            if left[node] < 0:
                s, e = self._start[node], self._end[node]
                dist = _row_distances(self._data[s:e], x)
                keep = np.flatnonzero(dist <= r)
                if keep.size:
                    chunks.append((self.perm[s + keep], dist[keep]))
            else:
                stack.append(right[node])
                stack.append(left[node])
        if not chunks:
            return Neighbors(np.empty(0, dtype=np.intp), np.empty(0))
        idx = np.concatenate([c[0] for c in chunks])
        dist = np.concatenate([c[1] for c in chunks])
        order = np.argsort(idx, kind="stable")
        return Neighbors(idx[order], dist[order])


def build_index(points, kind: str = "kdtree", leaf_size: int = DEFAULT_LEAF_SIZE):
    """Build a radius-query index of the given kind (``"kdtree"`` or ``"brute"``)."""
    if kind == "kdtree":
        return KDTreeIndex(points, leaf_size=leaf_size)
    if kind == "brute":
        return BruteForceIndex(points)
    raise ValueError(f"unknown index kind {kind!r}; expected one of {INDEX_KINDS}")
