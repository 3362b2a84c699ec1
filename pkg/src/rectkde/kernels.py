"""Compactly supported radial kernels normalized in an arbitrary dimension.

A kernel is described by a raw radial profile ``k0(r)`` that vanishes for
``r > 1``.  :func:`normalize` attaches the constant ``c_d`` that makes
``c_d * k0(|u|)`` integrate to one over ``R^d``, together with the squared
integral ``s_d`` used when predicting estimator variance.  The bandwidth is
never part of a kernel; scaling by ``1/h^d`` happens in the estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "KernelKind",
    "KernelProfile",
    "NormalizedKernel",
    "normalize",
    "evaluate",
    "get_kernel",
    "unit_ball_volume",
    "unit_sphere_area",
    "radial_integral",
]

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12


class KernelKind(str, Enum):
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"


def _truncated_gaussian(r: np.ndarray) -> np.ndarray:
    return np.where(r <= 1.0, np.exp(-0.5 * r * r), 0.0)


def _uniform(r: np.ndarray) -> np.ndarray:
    # discontinuous at r = 1; the convergence theory assumes continuity
    return np.where(r <= 1.0, 1.0, 0.0)


def _epanechnikov(r: np.ndarray) -> np.ndarray:
    return np.where(r <= 1.0, 1.0 - r * r, 0.0)


_PROFILES: dict[KernelKind, Callable[[np.ndarray], np.ndarray]] = {
    KernelKind.TRUNCATED_GAUSSIAN: _truncated_gaussian,
    KernelKind.UNIFORM: _uniform,
    KernelKind.EPANECHNIKOV: _epanechnikov,
}


@dataclass(frozen=True)
class KernelProfile:
    """Unnormalized radial profile ``k0`` supported on ``[0, 1]``."""

    kind: KernelKind

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))

    def raw(self, r):
        """Evaluate ``k0`` elementwise; ``r`` is assumed non-negative."""
        r = np.asarray(r, dtype=np.float64)
        return _PROFILES[self.kind](r)

    def raw_scalar(self, r: float) -> float:
        return float(_PROFILES[self.kind](np.float64(r)))


def unit_ball_volume(d: int) -> float:
    """Lebesgue volume of the unit ball in ``R^d``."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere ``S^{d-1}`` bounding the unit ball of ``R^d``."""
    return d * unit_ball_volume(d)


def radial_integral(f: Callable[[float], float], d: int) -> float:
    """Integral over ``R^d`` of the radial function ``u -> f(|u|)`` supported in the unit ball.

    The d-dimensional integral is reduced to ``S_{d-1} * int_0^1 r^{d-1} f(r) dr``
    and evaluated with adaptive Gauss-Kronrod quadrature.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    val, _ = integrate.quad(
        lambda r: r ** (d - 1) * f(r),
        0.0,
        1.0,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=200,
    )
    return unit_sphere_area(d) * val


@dataclass(frozen=True)
class NormalizedKernel:
    """Kernel ``K(r) = c_d * k0(r)`` with unit mass over ``R^d``.

    Attributes
    ----------
    profile : KernelProfile
    d : int
        Dimension the kernel is normalized in.
    c_d : float
        Normalization constant.
    s_d : float
        ``int_{R^d} K(|u|)^2 du``.
    """

    profile: KernelProfile
    d: int
    c_d: float
    s_d: float

    @property
    def kind(self) -> KernelKind:
        return self.profile.kind

    def __call__(self, r):
        return evaluate(self, r)


def normalize(profile: KernelProfile | str, d: int) -> NormalizedKernel:
    """Normalize ``profile`` so that it integrates to one over ``R^d``."""
    if isinstance(profile, (str, KernelKind)):
        profile = KernelProfile(KernelKind(profile))
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise ValueError(f"intrinsic dimension must be a positive integer, got {d!r}")
    d = int(d)
    mass = radial_integral(profile.raw_scalar, d)
    if not (math.isfinite(mass) and mass > 0.0):
        raise ValueError(f"radial integral of {profile.kind.value} in d={d} is {mass}; cannot normalize")
    c_d = 1.0 / mass
    s_d = c_d * c_d * radial_integral(lambda r: profile.raw_scalar(r) ** 2, d)
    if not (math.isfinite(s_d) and s_d > 0.0):
        raise ValueError(f"squared integral of {profile.kind.value} in d={d} is {s_d}")
    return NormalizedKernel(profile=profile, d=d, c_d=c_d, s_d=s_d)


def evaluate(kernel: NormalizedKernel, r):
    """``c_d * k0(r)``; exactly zero for ``r > 1``.

    Accepts a scalar or an array.  Negative, NaN or infinite radii raise ``ValueError``.
    """
    arr = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("kernel radius must be finite")
    if np.any(arr < 0.0):
        raise ValueError("kernel radius must be non-negative")
    out = kernel.c_d * kernel.profile.raw(arr)
    if out.ndim == 0:
        return float(out)
    return out


def get_kernel(name: str, d: int) -> NormalizedKernel:
    """Look up a kernel by its config name and normalize it in dimension ``d``."""
    try:
        kind = KernelKind(name)
    except ValueError:
        names = ", ".join(k.value for k in KernelKind)
        raise ValueError(f"unknown kernel {name!r}; expected one of: {names}") from None
    return normalize(KernelProfile(kind), d)
