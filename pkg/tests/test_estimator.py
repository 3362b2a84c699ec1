import math

import numpy as np
import scipy.integrate
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rectkde.domains import SparseGaussian
from rectkde.estimator import (
    Dataset,
    Fixed,
    RateSchedule,
    bandwidth,
    brute_force_density,
    build_estimator,
    read_points_csv,
    write_points_csv,
)
from rectkde.kernels import KernelKind, normalize


class TestBandwidth:
    def test_rate_schedule_d3(self):
        assert bandwidth(RateSchedule(1.0, 3, 2), 10_000) == pytest.approx(0.2682695795279726, rel=1e-14)

    def test_fixed_ignores_n(self):
        assert bandwidth(Fixed(0.3), 12345) == 0.3

    def test_single_sample(self):
        assert bandwidth(RateSchedule(1.0, 1, 2), 1) == 1.0

    def test_power_of_two(self):
        assert bandwidth(RateSchedule(1.0, 3, 2), 128) == 0.5

    def test_constant_scales(self):
        assert bandwidth(RateSchedule(2.5, 3, 2), 128) == pytest.approx(1.25)

    @pytest.mark.parametrize("n", [0, -5])
    def test_rejects_small_n(self, n):
        with pytest.raises(ValueError):
            bandwidth(Fixed(1.0), n)

    @pytest.mark.parametrize("h", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_fixed(self, h):
        with pytest.raises(ValueError):
            Fixed(h)

    @settings(max_examples=100, deadline=None)
    @given(n=st.integers(1, 10**7), d=st.integers(1, 10), m=st.floats(0.5, 4))
    def test_decreasing_in_n(self, n, d, m):
        rule = RateSchedule(1.0, d, m)
        assert bandwidth(rule, n + 1) < bandwidth(rule, n) <= 1.0


class TestBuild:
    def test_single_point(self):
        est = build_estimator(Dataset([[0.0, 0.0]]), normalize("uniform", 2), Fixed(0.5))
        assert est.h == 0.5 and est.n == 1 and est.D == 2

    def test_empty_dataset(self):
        with pytest.raises(ValueError, match="empty dataset"):
            Dataset(np.empty((0, 3)))

    def test_rate_h_is_exact(self):
        pts = np.zeros((128, 5))
        est = build_estimator(pts, normalize("truncated_gaussian", 3), RateSchedule(1.0, 3, 2))
        assert est.h == 0.5

    def test_rule_dimension_must_match_kernel(self):
        with pytest.raises(ValueError):
            build_estimator(np.zeros((4, 5)), normalize("uniform", 3), RateSchedule(1.0, 2, 2))

    def test_dataset_is_read_only(self):
        ds = Dataset([[1.0, 2.0]])
        with pytest.raises(ValueError):
            ds.points[0, 0] = 5.0

    def test_dataset_rejects_nan(self):
        with pytest.raises(ValueError):
            Dataset([[1.0, math.nan]])


class TestDensityAt:
    @pytest.fixture
    def single(self):
        return build_estimator(Dataset([[0.0, 0.0]]), normalize("uniform", 2), Fixed(0.5))

    @pytest.fixture
    def three(self):
        return build_estimator(Dataset([[0.0], [0.4], [3.0]]), normalize("uniform", 1), Fixed(0.5))

    def test_point_at_query(self, single):
        assert single.density_at([0.0, 0.0]) == pytest.approx(4 / math.pi, rel=1e-12)

    def test_far_query(self, single):
        assert single.density_at([2.0, 0.0]) == 0.0

    def test_three_points(self, three):
        assert three.density_at([0.0]) == pytest.approx(2 / 3, rel=1e-12)

    def test_wrong_dimension(self, single):
        with pytest.raises(ValueError, match="dimension"):
            single.density_at([0.0, 0.0, 0.0])

    def test_non_finite_query(self, single):
        with pytest.raises(ValueError):
            single.density_at([math.nan, 0.0])

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        D = int(rng.integers(1, 6))
        d = int(rng.integers(1, D + 1))
        kind = list(KernelKind)[seed % 3]
        n = int(rng.integers(1, 200))
        pts = rng.standard_normal((n, D))
        h = float(rng.uniform(0.2, 2.0))
        kernel = normalize(kind, d)
        est = build_estimator(pts, kernel, Fixed(h), index_kind="kdtree", leaf_size=int(rng.integers(1, 20)))
        for x in rng.standard_normal((5, D)):
            expected = brute_force_density(pts, x, kernel, h)
            assert est.density_at(x) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    def test_unit_mass_in_one_dimension(self):
        rng = np.random.default_rng(7)
        pts = rng.standard_normal(200)
        h = 0.3
        est = build_estimator(pts[:, None], normalize("truncated_gaussian", 1), Fixed(h))
        grid = np.arange(pts.min() - 2 * h, pts.max() + 2 * h, h / 20)
        vals = est.density_batch(grid[:, None])
        assert scipy.integrate.trapezoid(vals, grid) == pytest.approx(1.0, abs=1e-3)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(8)
        pts = rng.standard_normal((300, 3))
        shift = np.array([0.5, -1.25, 2.0])
        kernel = normalize("epanechnikov", 3)
        a = build_estimator(pts, kernel, Fixed(0.7))
        b = build_estimator(pts + shift, kernel, Fixed(0.7))
        for x in rng.standard_normal((20, 3)):
            assert b.density_at(x + shift) == pytest.approx(a.density_at(x), rel=1e-12, abs=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), h=st.floats(0.05, 3.0))
    def test_non_negative(self, seed, h):
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((30, 2))
        est = build_estimator(pts, normalize("epanechnikov", 1), Fixed(h))
        assert np.all(est.density_batch(rng.standard_normal((10, 2))) >= 0.0)


class TestBatch:
    def test_examples(self):
        single = build_estimator(Dataset([[0.0, 0.0]]), normalize("uniform", 2), Fixed(0.5))
        out = single.density_batch([[0.0, 0.0], [2.0, 0.0]])
        np.testing.assert_allclose(out, [4 / math.pi, 0.0], rtol=1e-12)
        three = build_estimator(Dataset([[0.0], [0.4], [3.0]]), normalize("uniform", 1), Fixed(0.5))
        assert three.density_batch([[0.0]])[0] == pytest.approx(2 / 3, rel=1e-12)

    def test_empty_batch(self):
        est = build_estimator(Dataset([[0.0, 0.0]]), normalize("uniform", 2), Fixed(0.5))
        assert est.density_batch(np.empty((0, 2))).shape == (0,)

    def test_bitwise_equal_to_loop_and_thread_count(self):
        domain = SparseGaussian(5, 3)
        train = domain.sample(2000, seed=1).points
        queries = domain.sample(500, seed=2).points
        est = build_estimator(train, normalize("truncated_gaussian", 3), RateSchedule(1.0, 3, 2))
        loop = np.array([est.density_at(x) for x in queries])
        one = est.density_batch(queries, threads=1)
        eight = est.density_batch(queries, threads=8)
        assert np.array_equal(loop, one)
        assert np.array_equal(one, eight)

    def test_shape_check(self):
        est = build_estimator(np.zeros((3, 2)), normalize("uniform", 2), Fixed(0.5))
        with pytest.raises(ValueError):
            est.density_batch(np.zeros((4, 3)))


class TestAmbient:
    def test_equal_dimensions(self):
        est = build_estimator(Dataset([[0.0, 0.0]]), normalize("uniform", 2), Fixed(0.5))
        assert est.ambient_density_at([0.0, 0.0]) == est.density_at([0.0, 0.0])

    def test_sparse_ratio(self):
        domain = SparseGaussian(5, 3)
        pts = domain.sample(5000, seed=11).points
        h = 0.1
        est = build_estimator(pts, normalize("truncated_gaussian", 3), Fixed(h))
        c5 = normalize("truncated_gaussian", 5).c_d
        c3 = est.kernel.c_d
        checked = 0
        for x in pts[:50]:
            intrinsic = est.density_at(x)
            if intrinsic > 0:
                ratio = est.ambient_density_at(x) / intrinsic
                assert ratio == pytest.approx(c5 / c3 * h**-2, rel=1e-12)
                checked += 1
        assert checked == 50

    def test_ambient_kernel_is_normalized_in_D(self):
        est = build_estimator(np.zeros((2, 4)), normalize("epanechnikov", 2), Fixed(1.0))
        assert est.ambient_kernel.d == 4
        assert est.ambient_kernel.c_d == normalize("epanechnikov", 4).c_d


class TestCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((20, 3))
        path = tmp_path / "pts.csv"
        write_points_csv(path, pts)
        assert np.array_equal(read_points_csv(path), pts)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ValueError, match="expected 2 columns"):
            read_points_csv(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,abc\n")
        with pytest.raises(ValueError):
            read_points_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("\n")
        with pytest.raises(ValueError, match="empty dataset"):
            read_points_csv(path)
