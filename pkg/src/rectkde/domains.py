"""Synthetic distributions on rectifiable sets with known densities.

Each model samples points on a ``d``-dimensional set in ``R^D`` and knows its
density with respect to ``d``-dimensional Hausdorff measure, the smooth
pieces (strata) passing through a point, and hence the tangent plane at
regular points.  These serve as ground truth for the experiment harness.

Where several strata meet, the density is the sum of the contributions of
every stratum containing the point.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy import special, stats

from .estimator import Dataset
from .kernels import unit_ball_volume, unit_sphere_area

__all__ = [
    "SUPPORT_TOL",
    "SingularPointError",
    "OffSupportError",
    "Stratum",
    "TangentFrame",
    "DomainModel",
    "SparseGaussian",
    "UniformSphere",
    "VonMisesFisherSphere",
    "SubspaceCross",
    "make_domain",
    "as_generator",
]

SUPPORT_TOL = 1e-9


class SingularPointError(ValueError):
    """Raised when no unique tangent plane exists at a point."""


class OffSupportError(ValueError):
    """Raised when a point is farther than :data:`SUPPORT_TOL` from the support."""


class Stratum(NamedTuple):
    """A smooth piece through a point: orthonormal tangent rows and its density contribution."""

    basis: np.ndarray
    density: float


@dataclass(frozen=True)
class TangentFrame:
    point: np.ndarray
    basis: np.ndarray  # (d, D), orthonormal rows


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _orthonormal_complement(x: np.ndarray) -> np.ndarray:
    """Rows spanning the orthogonal complement of ``x``, with a fixed sign convention."""
    _, _, vt = np.linalg.svd(x.reshape(1, -1))
    basis = vt[1:].copy()
    for row in basis:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return basis


def _random_directions(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((n, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


class DomainModel(ABC):
    """Ground-truth distribution on a rectifiable subset of ``R^D``."""

    D: int
    d: int

    @property
    @abstractmethod
    def domain_id(self) -> str: ...

    @abstractmethod
    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    @abstractmethod
    def support_distance(self, x: np.ndarray) -> float:
        """Euclidean distance from ``x`` to the support (0 on the support)."""

    @abstractmethod
    def _strata(self, x: np.ndarray) -> list[Stratum]: ...

    @abstractmethod
    def config(self) -> dict[str, Any]:
        """Parameters that reconstruct this model via :func:`make_domain`."""

    def sample(self, n: int, seed=None) -> Dataset:
        """``n`` i.i.d. draws; ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``."""
        if int(n) != n or n < 1:
            raise ValueError(f"sample size must be a positive integer, got {n!r}")
        return Dataset(self._draw(as_generator(seed), int(n)))

    def _on_support(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.D:
            raise ValueError(f"point has dimension {x.shape[0]}, domain has D={self.D}")
        dist = self.support_distance(x)
        if dist > SUPPORT_TOL:
            raise OffSupportError(f"point is {dist:.3g} away from the support of {self.domain_id}")
        return x

    def on_support(self, points, tol: float = SUPPORT_TOL) -> np.ndarray:
        """Boolean mask of rows within ``tol`` of the support."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.array([self.support_distance(p) <= tol for p in pts])

    def strata(self, x) -> list[Stratum]:
        """Smooth pieces containing ``x`` with their density contributions."""
        return self._strata(self._on_support(x))

    def exact_density(self, x) -> float:
        return float(sum(s.density for s in self.strata(x)))

    def exact_density_batch(self, points) -> np.ndarray:
        return np.array([self.exact_density(p) for p in np.atleast_2d(points)])

    def tangent_frame(self, x) -> TangentFrame:
        x = self._on_support(x)
        pieces = self._strata(x)
        if len(pieces) != 1:
            raise SingularPointError(
                f"singular point: {len(pieces)} strata of {self.domain_id} meet at x"
            )
        return TangentFrame(point=x, basis=pieces[0].basis)

    def singular_distance(self, x) -> float:
        """Distance from an on-support point to the set where strata meet (``inf`` if none)."""
        return math.inf

    def local_sample(self, x, radius: float, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """Weighted draws for integrating functions supported in ``B(x, radius)``.

        Returns ``(points, weights)`` with ``mean(weights * g(points))`` an
        unbiased estimate of ``E[g(X)]`` whenever ``g`` vanishes outside the
        ball.  The default is plain i.i.d. sampling with unit weights; models
        override it with localized, stratified schemes where the conditional
        law is tractable.
        """
        pts = self._draw(as_generator(rng), int(n))
        return pts, np.ones(len(pts))


@dataclass(frozen=True)
class SparseGaussian(DomainModel):
    """Standard ``d``-dimensional Gaussian on a uniformly chosen coordinate ``d``-plane of ``R^D``.

    The density of a ``d``-sparse point is ``exp(-|x|^2/2) / (C(D,d) (2 pi)^{d/2})``;
    points with fewer than ``d`` nonzeros lie on several planes and collect
    one such term per plane.
    """

    D: int
    d: int

    def __post_init__(self):
        if self.d < 1 or self.D < 1:
            raise ValueError("dimensions must be positive")
        if self.d > self.D:
            raise ValueError(f"intrinsic dimension d={self.d} exceeds ambient D={self.D}")

    @property
    def domain_id(self) -> str:
        return f"sparse_D{self.D}_d{self.d}"

    @property
    def n_patterns(self) -> int:
        return math.comb(self.D, self.d)

    def config(self):
        return {"kind": "sparse", "D": self.D, "d": self.d}

    def _draw(self, rng, n):
        cols = np.argsort(rng.random((n, self.D)), axis=1)[:, : self.d]
        pts = np.zeros((n, self.D))
        pts[np.arange(n)[:, None], cols] = rng.standard_normal((n, self.d))
        return pts

    def support_distance(self, x):
        a = np.sort(np.abs(x))
        return float(np.linalg.norm(a[: self.D - self.d]))

    def pattern_density(self, x) -> float:
        """Single-plane mixture term ``exp(-|x|^2/2) / (C(D,d) (2 pi)^{d/2})``."""
        x = np.asarray(x, dtype=np.float64)
        return math.exp(-0.5 * float(x @ x)) / (self.n_patterns * (2 * math.pi) ** (self.d / 2))

    def _support(self, x) -> np.ndarray:
        return np.flatnonzero(np.abs(x) > SUPPORT_TOL)

    def exact_density(self, x):
        x = self._on_support(x)
        k = self._support(x).size
        return math.comb(self.D - k, self.d - k) * self.pattern_density(x)

    def _strata(self, x):
        nz = self._support(x)
        taken = set(nz.tolist())
        free = [j for j in range(self.D) if j not in taken]
        term = self.pattern_density(x)
        out = []
        for extra in itertools.combinations(free, self.d - nz.size):
            cols = sorted(nz.tolist() + list(extra))
            out.append(Stratum(np.eye(self.D)[cols], term))
        return out

    def tangent_frame(self, x):
        x = self._on_support(x)
        nz = self._support(x)
        if nz.size < self.d:
            raise SingularPointError(
                f"singular point: x has {nz.size} nonzeros and lies on "
                f"{math.comb(self.D - nz.size, self.d - nz.size)} coordinate {self.d}-planes"
            )
        return TangentFrame(point=x, basis=np.eye(self.D)[nz])

    def singular_distance(self, x):
        x = self._on_support(x)
        nz = self._support(x)
        if nz.size < self.d:
            return 0.0
        return float(np.min(np.abs(x[nz])))


@dataclass(frozen=True)
class UniformSphere(DomainModel):
    """Uniform distribution on the unit sphere ``S^{D-1}`` in ``R^D`` (``d = D - 1``)."""

    D: int

    def __post_init__(self):
        if self.D < 2:
            raise ValueError(f"sphere needs ambient dimension >= 2, got {self.D}")

    @property
    def d(self) -> int:
        return self.D - 1

    @property
    def domain_id(self) -> str:
        return f"sphere_D{self.D}"

    def config(self):
        return {"kind": "sphere", "D": self.D}

    def _draw(self, rng, n):
        return _random_directions(rng, n, self.D)

    def support_distance(self, x):
        return abs(float(np.linalg.norm(x)) - 1.0)

    def _strata(self, x):
        return [Stratum(_orthonormal_complement(x), 1.0 / unit_sphere_area(self.D))]

    def local_sample(self, x, radius, n, rng):
        """Stratified draws from the spherical cap ``{y : |y - x| <= radius}``.

        On the sphere ``|y - x|^2 = 2 - 2 <x, y>``, so the cap is
        ``<x, y> >= t0`` and ``(1 + <x, y>) / 2`` is Beta((D-1)/2, (D-1)/2)
        under the uniform law.  The polar coordinate is drawn by inverse CDF
        from one uniform per equal-probability stratum of the cap; the
        azimuthal direction is uniform.  Every weight equals the cap mass.
        """
        rng = as_generator(rng)
        x = self._on_support(x)
        x = x / np.linalg.norm(x)
        n = int(n)
        a = (self.D - 1) / 2.0
        beta = stats.beta(a, a)
        t0 = 1.0 - 0.5 * float(radius) ** 2
        cap_mass = 1.0 if t0 <= -1.0 else float(beta.sf((1.0 + t0) / 2.0))
        u = (np.arange(n) + rng.random(n)) / n
        t = 2.0 * beta.isf(u * cap_mass) - 1.0
        t = np.clip(t, -1.0, 1.0)
        frame = _orthonormal_complement(x)
        w = _random_directions(rng, n, self.D - 1) @ frame
        pts = t[:, None] * x + np.sqrt(1.0 - t * t)[:, None] * w
        return pts, np.full(n, cap_mass)


@dataclass(frozen=True)
class VonMisesFisherSphere(DomainModel):
    """von Mises-Fisher distribution on ``S^{D-1}`` with mean direction ``mu`` and concentration ``kappa``."""

    D: int
    mu: tuple[float, ...]
    kappa: float

    def __post_init__(self):
        if self.D < 2:
            raise ValueError(f"sphere needs ambient dimension >= 2, got {self.D}")
        if not self.kappa >= 0:
            raise ValueError(f"concentration must be non-negative, got {self.kappa}")
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        if mu.shape[0] != self.D:
            raise ValueError(f"mean direction has length {mu.shape[0]}, expected {self.D}")
        norm = np.linalg.norm(mu)
        if not norm > 0:
            raise ValueError("mean direction must be nonzero")
        object.__setattr__(self, "mu", tuple(float(v) for v in mu / norm))

    @property
    def d(self) -> int:
        return self.D - 1

    @property
    def domain_id(self) -> str:
        return f"vmf_D{self.D}_k{self.kappa:g}"

    def config(self):
        return {"kind": "vmf", "D": self.D, "kappa": self.kappa, "mu": ",".join(map(repr, self.mu))}

    @property
    def _log_norm(self) -> float:
        if self.kappa == 0:
            return -math.log(unit_sphere_area(self.D))
        nu = self.D / 2.0 - 1.0
        k = self.kappa
        return nu * math.log(k) - (self.D / 2.0) * math.log(2 * math.pi) - math.log(special.ive(nu, k)) - k

    def _draw(self, rng, n):
        # Wood (1994) rejection sampler for the cosine to the mean direction
        mu = np.asarray(self.mu)
        m = self.D - 1
        k = self.kappa
        b = m / (math.sqrt(4.0 * k * k + m * m) + 2.0 * k)
        x0 = (1.0 - b) / (1.0 + b)
        c = k * x0 + m * math.log(1.0 - x0 * x0)
        w = np.empty(0)
        while w.size < n:
            need = n - w.size
            z = rng.beta(m / 2.0, m / 2.0, size=2 * need)
            u = rng.random(2 * need)
            cand = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
            ok = k * cand + m * np.log1p(-x0 * cand) - c >= np.log(u)
            w = np.concatenate([w, cand[ok]])
        w = w[:n]
        frame = _orthonormal_complement(mu)
        v = _random_directions(rng, n, m) @ frame
        return w[:, None] * mu + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * v

    def support_distance(self, x):
        return abs(float(np.linalg.norm(x)) - 1.0)

    def _strata(self, x):
        dens = math.exp(self._log_norm + self.kappa * float(np.dot(self.mu, x)))
        return [Stratum(_orthonormal_complement(x), dens)]


@dataclass(frozen=True, eq=False)
class SubspaceCross(DomainModel):
    """Mixture of uniform distributions on ``d``-balls of radius ``radius`` in linear subspaces.

    With two lines through the origin this is a rectifiable set that is not
    a manifold at the crossing.  ``bases`` holds one ``(d, D)`` spanning set
    per subspace (orthonormalized on construction); ``weights`` are mixture
    weights and are renormalized to sum to one.
    """

    D: int
    d: int
    bases: tuple = field(repr=False)
    weights: tuple[float, ...] = ()
    radius: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.d > self.D:
            raise ValueError(f"need 1 <= d <= D, got d={self.d}, D={self.D}")
        if not self.bases:
            raise ValueError("at least one subspace is required")
        ortho = []
        for b in self.bases:
            b = np.atleast_2d(np.asarray(b, dtype=np.float64))
            if b.shape != (self.d, self.D):
                raise ValueError(f"subspace basis must have shape ({self.d}, {self.D}), got {b.shape}")
            q, r = np.linalg.qr(b.T)
            if np.min(np.abs(np.diag(r))) < 1e-12:
                raise ValueError("subspace basis is rank deficient")
            q = q.T * np.sign(np.diag(r))[:, None]
            q.setflags(write=False)
            ortho.append(q)
        object.__setattr__(self, "bases", tuple(ortho))
        w = np.ones(len(ortho)) if not self.weights else np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(ortho),) or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be non-negative, one per subspace, and not all zero")
        object.__setattr__(self, "weights", tuple(float(v) for v in w / w.sum()))
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @classmethod
    def lines(cls, angles, weights=(), radius: float = 1.0) -> "SubspaceCross":
        """Lines through the origin of ``R^2`` at the given angles (radians)."""
        bases = [np.array([[math.cos(a), math.sin(a)]]) for a in angles]
        return cls(D=2, d=1, bases=tuple(bases), weights=tuple(weights), radius=radius)

    @property
    def domain_id(self) -> str:
        return f"cross_D{self.D}_d{self.d}_k{len(self.bases)}"

    def config(self):
        flat = ";".join(",".join(repr(float(v)) for v in b.ravel()) for b in self.bases)
        return {
            "kind": "cross",
            "D": self.D,
            "d": self.d,
            "bases": flat,
            "weights": ",".join(map(repr, self.weights)),
            "radius": self.radius,
        }

    @property
    def _piece_density(self) -> float:
        return 1.0 / (unit_ball_volume(self.d) * self.radius**self.d)

    def _draw(self, rng, n):
        comp = rng.choice(len(self.bases), size=n, p=np.asarray(self.weights))
        dirs = _random_directions(rng, n, self.d)
        rad = self.radius * rng.random(n) ** (1.0 / self.d)
        coeffs = dirs * rad[:, None]
        stacked = np.stack(self.bases)  # (k, d, D)
        return np.einsum("ni,nij->nj", coeffs, stacked[comp])

    def _piece_distance(self, x, basis) -> float:
        a = basis @ x
        perp = float(np.linalg.norm(x - a @ basis))
        over = max(float(np.linalg.norm(a)) - self.radius, 0.0)
        return math.hypot(perp, over)

    def support_distance(self, x):
        return min(self._piece_distance(x, b) for b in self.bases)

    def _strata(self, x):
        rho = self._piece_density
        return [
            Stratum(b, w * rho)
            for b, w in zip(self.bases, self.weights)
            if w > 0 and self._piece_distance(x, b) <= SUPPORT_TOL
        ]

    def singular_distance(self, x):
        x = self._on_support(x)
        here = [i for i, b in enumerate(self.bases) if self._piece_distance(x, b) <= SUPPORT_TOL]
        if len(here) > 1:
            return 0.0
        others = [b for i, b in enumerate(self.bases) if i not in here]
        if not others:
            return math.inf
        return min(self._piece_distance(x, b) for b in others)


def _floats(text) -> list[float]:
    if isinstance(text, str):
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    return [float(v) for v in text]


def make_domain(kind: str, **params) -> DomainModel:
    """Construct a domain from its config name and parameters.

    ``kind`` is one of ``sparse`` (``D``, ``d``), ``sphere`` (``D``),
    ``vmf`` (``D``, ``kappa``, optional ``mu``) or ``cross`` (``D``, ``d``,
    ``bases`` as ``;``-separated flattened rows, optional ``weights``,
    ``radius``; or ``angles`` for lines in the plane).
    """
    kind = kind.lower()
    if kind in ("sparse", "sparse_gaussian"):
        return SparseGaussian(D=int(params["D"]), d=int(params["d"]))
    if kind in ("sphere", "uniform_sphere"):
        return UniformSphere(D=int(params["D"]))
    if kind in ("vmf", "von_mises_fisher"):
        D = int(params["D"])
        mu = params.get("mu")
        mu = _floats(mu) if mu is not None else [0.0] * (D - 1) + [1.0]
        return VonMisesFisherSphere(D=D, mu=tuple(mu), kappa=float(params.get("kappa", 1.0)))
    if kind in ("cross", "subspace_cross"):
        weights = tuple(_floats(params["weights"])) if params.get("weights") else ()
        radius = float(params.get("radius", 1.0))
        if params.get("angles") is not None:
            return SubspaceCross.lines(_floats(params["angles"]), weights=weights, radius=radius)
        D, d = int(params["D"]), int(params["d"])
        bases = tuple(
            np.asarray(_floats(chunk)).reshape(d, D) for chunk in str(params["bases"]).split(";") if chunk
        )
        return SubspaceCross(D=D, d=d, bases=bases, weights=weights, radius=radius)
    raise ValueError(f"unknown domain kind {kind!r}; expected sparse, sphere, vmf or cross")
