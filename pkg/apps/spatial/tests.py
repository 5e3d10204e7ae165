import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.spatial.kdtree import (
    NnResult,
    brute_force_nearest,
    build,
    nearest,
    nearest_batch,
)


def assert_same(batch, oracle):
    np.testing.assert_array_equal(batch.indices, oracle.indices)
    np.testing.assert_allclose(batch.distances, oracle.distances, rtol=0, atol=1e-12)


class TestNearest:
    def test_single_query(self):
        tree = build([[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        assert nearest(tree, [4.0, 0.0, 0.0]) == NnResult(1.0, 1)

    def test_empty_tree(self):
        batch = nearest_batch(build(np.empty((0, 3))), [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
        assert np.all(np.isinf(batch.distances))
        assert batch.indices.tolist() == [-1, -1]

    def test_empty_queries(self):
        batch = nearest_batch(build([[0.0, 0.0, 0.0]]), np.empty((0, 3)))
        assert len(batch) == 0

    def test_single_point_tree(self):
        batch = nearest_batch(build([[1.0, 2.0, 2.0]]), [[0.0, 0.0, 0.0]])
        assert list(batch) == [NnResult(3.0, 0)]

    def test_duplicate_points_pick_lowest_index(self):
        tree = build([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        assert nearest(tree, [1.0, 0.0, 0.0]).index == 1

    def test_equidistant_points_pick_lowest_index(self):
        points = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]
        assert nearest(build(points), [0.0, 0.0, 0.0]) == NnResult(1.0, 0)
        assert nearest(build(points[::-1]), [0.0, 0.0, 0.0]) == NnResult(1.0, 0)

    def test_worker_count_does_not_change_results(self):
        rng = np.random.default_rng(4)
        points = rng.integers(-5, 5, size=(3000, 3)).astype(np.float64)
        queries = rng.integers(-6, 6, size=(5000, 3)).astype(np.float64) + 0.5
        tree = build(points)
        single = nearest_batch(tree, queries, workers=1)
        parallel = nearest_batch(tree, queries, workers=4)
        np.testing.assert_array_equal(single.indices, parallel.indices)
        np.testing.assert_array_equal(single.distances, parallel.distances)

    def test_tree_points_are_read_only(self):
        tree = build([[0.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            tree.points[0, 0] = 1.0

    def test_every_point_is_its_own_nearest(self):
        points = np.random.default_rng(8).uniform(-100.0, 100.0, size=(100_000, 3))
        batch = nearest_batch(build(points), points, workers=-1)
        np.testing.assert_array_equal(batch.indices, np.arange(len(points)))
        assert np.all(batch.distances == 0.0)


class TestAgainstBruteForce:
    @settings(max_examples=200, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.integers(min_value=1, max_value=10_000),
        st.integers(min_value=1, max_value=10_000),
        st.booleans(),
    )
    def test_matches_brute_force(self, seed, n_points, n_queries, lattice):
        rng = np.random.default_rng(seed)
        if lattice:
            # 정수 격자 - 같은 거리의 후보가 많다
            points = rng.integers(-8, 8, size=(n_points, 3)).astype(np.float64)
            queries = rng.integers(-9, 9, size=(n_queries, 3)).astype(np.float64) / 2.0
        else:
            points = rng.uniform(-50.0, 50.0, size=(n_points, 3))
            queries = rng.uniform(-60.0, 60.0, size=(n_queries, 3))
        assert_same(nearest_batch(build(points), queries), brute_force_nearest(points, queries))


@pytest.mark.slow
def test_tree_outpaces_brute_force():
    rng = np.random.default_rng(0)
    points = rng.uniform(-100.0, 100.0, size=(200_000, 3))
    queries = rng.uniform(-100.0, 100.0, size=(20_000, 3))

    started = time.perf_counter()
    fast = nearest_batch(build(points), queries, workers=-1)
    tree_seconds = time.perf_counter() - started

    started = time.perf_counter()
    slow = brute_force_nearest(points, queries)
    brute_seconds = time.perf_counter() - started

    assert_same(fast, slow)
    assert brute_seconds / tree_seconds >= 20.0
