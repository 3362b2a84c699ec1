import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from rectkde.spatial import BruteForceIndex, KDTreeIndex, build_index


def as_set(result):
    return set(result.indices.tolist())


class TestBuild:
    def test_three_collinear_points(self):
        tree = KDTreeIndex([[0, 0], [1, 1], [2, 2]], leaf_size=1)
        assert tree.depth <= 2
        assert sorted(np.concatenate(tree.leaves()).tolist()) == [0, 1, 2]

    def test_single_point(self):
        tree = KDTreeIndex([[3.0, 4.0]])
        assert tree.n_nodes == 1 and tree.depth == 0

    def test_duplicate_points_do_not_recurse_forever(self):
        tree = KDTreeIndex(np.ones((100, 3)), leaf_size=4)
        assert tree.n_nodes == 1
        assert as_set(tree.radius_query([1, 1, 1], 1e-9)) == set(range(100))

    def test_external_indices_preserved(self):
        rng = np.random.default_rng(0)
        pts = rng.random((200, 2))
        tree = KDTreeIndex(pts, leaf_size=8)
        np.testing.assert_array_equal(tree.points, pts)
        for leaf in tree.leaves():
            assert len(leaf) <= 8
        assert sorted(np.concatenate(tree.leaves()).tolist()) == list(range(200))

    def test_large_gaussian_cloud(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((10_000, 10))
        tree = KDTreeIndex(pts)
        brute = BruteForceIndex(pts)
        for x in rng.standard_normal((20, 10)):
            assert as_set(tree.radius_query(x, 2.5)) == as_set(brute.radius_query(x, 2.5))

    @pytest.mark.parametrize("kind", ["kdtree", "brute"])
    def test_rejects_empty(self, kind):
        with pytest.raises(ValueError):
            build_index(np.empty((0, 2)), kind)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            build_index([[0.0, np.nan]])

    def test_rejects_bad_leaf_size(self):
        with pytest.raises(ValueError):
            KDTreeIndex([[0.0]], leaf_size=0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown index kind"):
            build_index([[0.0]], "balltree")


class TestRadiusQuery:
    @pytest.mark.parametrize("kind", ["kdtree", "brute"])
    def test_boundary_included(self, kind):
        index = build_index([[0.0], [1.0], [2.0]], kind, leaf_size=1)
        res = index.radius_query([0.0], 1.0)
        assert res.indices.tolist() == [0, 1]
        assert res.distances.tolist() == [0.0, 1.0]

    @pytest.mark.parametrize("kind", ["kdtree", "brute"])
    def test_empty_result(self, kind):
        index = build_index([[0.0], [1.0], [2.0]], kind)
        res = index.radius_query([10.0], 0.5)
        assert res.indices.size == 0 and res.distances.size == 0

    def test_uniform_cube(self):
        rng = np.random.default_rng(2)
        pts = rng.random((1000, 3))
        tree, brute = KDTreeIndex(pts), BruteForceIndex(pts)
        for x in rng.random((100, 3)):
            assert np.array_equal(tree.radius_query(x, 0.2).indices, brute.radius_query(x, 0.2).indices)

    @pytest.mark.parametrize("n, D", list(itertools.product([1, 10, 100], [1, 2, 5, 20])))
    def test_exhaustive_equivalence(self, n, D):
        rng = np.random.default_rng(n * 100 + D)
        pts = rng.standard_normal((n, D))
        tree = KDTreeIndex(pts, leaf_size=3)
        brute = BruteForceIndex(pts)
        for _ in range(50):
            x = rng.standard_normal(D)
            r = rng.uniform(0.05, 2.0) * np.sqrt(D)
            a, b = tree.radius_query(x, r), brute.radius_query(x, r)
            assert np.array_equal(a.indices, b.indices)
            np.testing.assert_allclose(a.distances, b.distances, rtol=0, atol=1e-15)

    def test_distances_exact(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((300, 4))
        tree = KDTreeIndex(pts, leaf_size=5)
        x = rng.standard_normal(4)
        res = tree.radius_query(x, 2.0)
        direct = np.array([np.sqrt(np.sum((pts[i] - x) ** 2)) for i in res.indices])
        np.testing.assert_allclose(res.distances, direct, rtol=0, atol=1e-15)

    def test_ties_on_lattice(self):
        # many points exactly at distance r from the query
        pts = np.array(list(itertools.product(range(-3, 4), repeat=2)), dtype=float)
        tree, brute = KDTreeIndex(pts, leaf_size=2), BruteForceIndex(pts)
        for r in (1.0, 2.0, np.sqrt(2.0), np.sqrt(5.0), 3.0):
            assert as_set(tree.radius_query([0, 0], r)) == as_set(brute.radius_query([0, 0], r))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            build_index(np.zeros((3, 2))).radius_query([0.0, 0.0, 0.0], 1.0)

    @pytest.mark.parametrize("r", [0.0, -1.0, np.inf])
    def test_bad_radius(self, r):
        with pytest.raises(ValueError):
            build_index(np.zeros((3, 2))).radius_query([0.0, 0.0], r)

    @settings(max_examples=60, deadline=None)
    @given(
        pts=hnp.arrays(np.float64, st.tuples(st.integers(1, 40), st.integers(1, 4)), elements=st.floats(-5, 5)),
        data=st.data(),
    )
    def test_property_matches_brute_and_is_monotone(self, pts, data):
        D = pts.shape[1]
        x = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=D, max_size=D)))
        r1 = data.draw(st.floats(0.01, 5))
        r2 = data.draw(st.floats(r1, 10))
        tree = KDTreeIndex(pts, leaf_size=data.draw(st.integers(1, 5)))
        brute = BruteForceIndex(pts)
        small, big = tree.radius_query(x, r1), tree.radius_query(x, r2)
        assert as_set(small) == as_set(brute.radius_query(x, r1))
        assert as_set(small) <= as_set(big)

    def test_concurrent_queries(self):
        from concurrent.futures import ThreadPoolExecutor

        rng = np.random.default_rng(4)
        pts = rng.random((2000, 3))
        tree = KDTreeIndex(pts)
        queries = rng.random((200, 3))
        serial = [tree.radius_query(q, 0.15).indices.tolist() for q in queries]
        with ThreadPoolExecutor(8) as pool:
            parallel = list(pool.map(lambda q: tree.radius_query(q, 0.15).indices.tolist(), queries))
        assert serial == parallel
