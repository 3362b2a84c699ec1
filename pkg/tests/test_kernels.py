import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rectkde.kernels import (
    KernelKind,
    KernelProfile,
    evaluate,
    get_kernel,
    normalize,
    radial_integral,
    unit_ball_volume,
    unit_sphere_area,
)

ALL_KINDS = list(KernelKind)


def std_normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def uniform_in_ball(rng, n, d):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random(n)[:, None] ** (1.0 / d)


class TestGeometry:
    @pytest.mark.parametrize(
        "d, volume",
        [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2), (5, 8 * math.pi**2 / 15)],
    )
    def test_unit_ball_volume(self, d, volume):
        assert unit_ball_volume(d) == pytest.approx(volume, rel=1e-14)

    def test_sphere_area(self):
        assert unit_sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-14)
        assert unit_sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-14)

    @pytest.mark.parametrize("x, value", [(0.5, math.sqrt(math.pi)), (1.0, 1.0), (3.5, 15 * math.sqrt(math.pi) / 8), (10.0, 362880.0)])
    def test_gamma_accuracy(self, x, value):
        # stdlib gamma backs the ball volume; accurate well beyond 1e-13 on [0.5, 10]
        assert math.gamma(x) == pytest.approx(value, rel=1e-13)


class TestNormalize:
    def test_uniform_d2(self):
        assert normalize(KernelProfile("uniform"), 2).c_d == pytest.approx(1 / math.pi, rel=1e-12)

    def test_uniform_d3(self):
        assert normalize(KernelProfile("uniform"), 3).c_d == pytest.approx(3 / (4 * math.pi), rel=1e-12)

    def test_truncated_gaussian_d1(self):
        c1 = normalize(KernelProfile("truncated_gaussian"), 1).c_d
        oracle = 1 / (math.sqrt(2 * math.pi) * (2 * std_normal_cdf(1.0) - 1))
        assert c1 == pytest.approx(oracle, rel=1e-12)
        assert c1 == pytest.approx(0.5843685672568167, rel=1e-12)
        assert c1 == pytest.approx(0.58440, abs=1e-4)

    def test_truncated_gaussian_d3(self):
        # int_0^1 r^2 exp(-r^2/2) dr by parts: sqrt(2 pi)(F(1) - 1/2) - exp(-1/2)
        radial = math.sqrt(2 * math.pi) * (std_normal_cdf(1.0) - 0.5) - math.exp(-0.5)
        c3 = normalize(KernelProfile("truncated_gaussian"), 3).c_d
        assert c3 == pytest.approx(1 / (4 * math.pi * radial), rel=1e-10)
        assert c3 == pytest.approx(0.31946798038498336, rel=1e-10)

    @pytest.mark.parametrize("d", range(1, 7))
    def test_epanechnikov_closed_form(self, d):
        # int_0^1 r^{d-1} (1 - r^2) dr = 2 / (d (d + 2))
        expected = d * (d + 2) / (2 * unit_sphere_area(d))
        assert normalize("epanechnikov", d).c_d == pytest.approx(expected, rel=1e-12)

    def test_squared_integral_truncated_gaussian_d1(self):
        k = normalize("truncated_gaussian", 1)
        expected = k.c_d**2 * math.sqrt(math.pi) * math.erf(1.0)
        assert k.s_d == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
    def test_squared_integral_matches_radial_quadrature(self, kind, d):
        k = normalize(KernelProfile(kind), d)
        direct = radial_integral(lambda r: float(k(r)) ** 2, d)
        assert k.s_d == pytest.approx(direct, rel=1e-8)
        assert 0 < k.s_d < math.inf and 0 < k.c_d < math.inf

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
    def test_unit_mass_by_quadrature(self, kind, d):
        k = normalize(KernelProfile(kind), d)
        assert radial_integral(lambda r: float(k(r)), d) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5, 6])
    def test_unit_mass_by_monte_carlo(self, kind, d):
        rng = np.random.default_rng(1000 + d)
        k = normalize(KernelProfile(kind), d)
        u = uniform_in_ball(rng, 1_000_000, d)
        vals = unit_ball_volume(d) * k(np.linalg.norm(u, axis=1))
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - 1.0) <= 3 * max(se, 1e-15)

    def test_rejects_d0(self):
        with pytest.raises(ValueError):
            normalize("uniform", 0)

    def test_rejects_fractional_d(self):
        with pytest.raises(ValueError):
            normalize("uniform", 1.5)

    def test_underflowing_profile_rejected(self, monkeypatch):
        import rectkde.kernels as kmod

        monkeypatch.setitem(kmod._PROFILES, KernelKind.UNIFORM, lambda r: np.where(r <= 1, 0.0, 0.0))
        with pytest.raises(ValueError, match="cannot normalize"):
            normalize("uniform", 2)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_deterministic(self, kind):
        a = normalize(kind, 4)
        b = normalize(kind, 4)
        assert a.c_d == b.c_d and a.s_d == b.s_d

    def test_lookup_by_name(self):
        assert get_kernel("epanechnikov", 2).kind is KernelKind.EPANECHNIKOV
        with pytest.raises(ValueError, match="unknown kernel"):
            get_kernel("gaussian", 2)


class TestEvaluate:
    def test_uniform_constant_on_support(self):
        assert evaluate(normalize("uniform", 2), 0.5) == pytest.approx(1 / math.pi, rel=1e-12)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_zero_outside_support(self, kind):
        assert evaluate(normalize(kind, 3), 1.5) == 0.0
        assert evaluate(normalize(kind, 3), np.nextafter(1.0, 2.0)) == 0.0

    def test_truncated_gaussian_peak(self):
        k = normalize("truncated_gaussian", 1)
        assert evaluate(k, 0.0) == pytest.approx(0.5843685672568167, rel=1e-12)

    def test_boundary_is_in_support(self):
        assert evaluate(normalize("uniform", 1), 1.0) == pytest.approx(0.5, rel=1e-14)
        assert evaluate(normalize("epanechnikov", 1), 1.0) == 0.0

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -0.1])
    def test_rejects_bad_radius(self, bad):
        with pytest.raises(ValueError):
            evaluate(normalize("uniform", 1), bad)

    def test_vectorized(self):
        k = normalize("epanechnikov", 1)
        out = evaluate(k, np.array([0.0, 0.5, 2.0]))
        np.testing.assert_allclose(out, k.c_d * np.array([1.0, 0.75, 0.0]))

    @settings(max_examples=200, deadline=None)
    @given(
        kind=st.sampled_from(ALL_KINDS),
        d=st.integers(1, 6),
        r1=st.floats(0, 3, allow_nan=False),
        r2=st.floats(0, 3, allow_nan=False),
    )
    def test_monotone_non_increasing(self, kind, d, r1, r2):
        k = normalize(kind, d)
        lo, hi = sorted((r1, r2))
        assert evaluate(k, lo) >= evaluate(k, hi) >= 0.0
