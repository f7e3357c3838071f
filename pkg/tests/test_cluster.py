import numpy as np
import pytest

from oracles import brute_kmeans, brute_kmedian, median_cost, random_small_rows
from sumspec.cluster import (
    approx_kmeans,
    approx_kmedian,
    geometric_median,
    kmeans_objective,
    kmedian_cost,
    normalize_rows,
)
from sumspec.errors import DegenerateInput


def test_separated_duplicates():
    rows = np.array([[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 3)
    res = approx_kmeans(rows, 2)
    assert res.objective == 0.0
    assert len(set(res.assign[:3])) == 1 and res.assign[0] != res.assign[3]


def test_identical_rows_trigger_one_repair():
    res = approx_kmeans(np.ones((6, 2)), 2)
    assert res.objective == 0.0
    assert res.repairs == 1


def test_square_corners():
    rows = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    assert brute_kmeans(rows, 2) == pytest.approx(1.0)
    assert approx_kmeans(rows, 2).objective == pytest.approx(1.0)


def test_degenerate_input():
    with pytest.raises(DegenerateInput):
        approx_kmeans(np.zeros((2, 2)), 3)
    with pytest.raises(DegenerateInput):
        approx_kmedian(np.zeros((1, 2)), 2)


@pytest.mark.parametrize("seed", range(40))
def test_kmeans_matches_exhaustive_search(seed):
    rows, k = random_small_rows(seed)
    res = approx_kmeans(rows, k, seed=seed)
    assert res.objective == pytest.approx(brute_kmeans(rows, k), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_kmedian_never_beats_exhaustive_search(seed):
    # exact agreement over a larger instance set is an acceptance criterion
    rows, k = random_small_rows(100 + seed, max_m=7, max_k=3, max_dim=2)
    res = approx_kmedian(rows, k, seed=seed)
    assert res.objective >= brute_kmedian(rows, k) - 1e-9


@pytest.mark.parametrize("seed", range(15))
def test_single_median_is_exact(seed):
    rows, _ = random_small_rows(200 + seed)
    res = approx_kmedian(rows, 1, seed=seed)
    assert res.objective == pytest.approx(median_cost(rows), rel=1e-9, abs=1e-12)


def test_antipodal_groups():
    rows = np.array([[1.0, 0.0]] * 4 + [[-1.0, 0.0]] * 3)
    res = approx_kmedian(rows, 2)
    assert res.objective == pytest.approx(0.0, abs=1e-12)


def test_collinear_median():
    res = approx_kmedian(np.array([[0.0], [1.0], [10.0]]), 1)
    assert res.centers[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert res.objective == pytest.approx(10.0, abs=1e-9)


def test_saturated_kmedian():
    rows = np.random.default_rng(0).normal(size=(5, 3))
    assert approx_kmedian(rows, 5).objective == pytest.approx(0.0, abs=1e-12)


def test_geometric_median_of_triangle():
    # equilateral triangle: the median is the centroid
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    assert geometric_median(pts) == pytest.approx(pts.mean(axis=0), abs=1e-8)


class TestNormalizeRows:
    def test_drops_zero_rows(self):
        u_plus, idx = normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
        assert u_plus.tolist() == [[0.6, 0.8]]
        assert idx.tolist() == [0]

    def test_unit_rows_unchanged(self):
        u = np.array([[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]])
        u_plus, idx = normalize_rows(u)
        assert np.allclose(u_plus, u) and idx.tolist() == [0, 1, 2]

    def test_all_zero(self):
        u_plus, idx = normalize_rows(np.zeros((4, 2)))
        assert u_plus.shape == (0, 2) and idx.size == 0


@pytest.mark.parametrize("fit", [approx_kmeans, approx_kmedian])
def test_invariants_on_noisy_blobs(fit):
    rng = np.random.default_rng(4)
    centers = np.array([[0, 0], [3, 0], [0, 3]], dtype=float)
    truth = rng.integers(0, 3, size=120)
    rows = centers[truth] + rng.normal(scale=0.8, size=(120, 2))
    res = fit(rows, 3, restarts=5, seed=1)
    # non-increasing objective across iterations
    assert np.all(np.diff(res.history) <= 1e-9 * max(res.history))
    # best of restarts
    assert res.objective <= min(res.restart_objectives) + 1e-12
    # nearest-center assignment with lowest-index tie breaking
    d = ((rows[:, None, :] - res.centers[None]) ** 2).sum(-1)
    assert np.array_equal(res.assign, d.argmin(axis=1))
    if fit is approx_kmeans:
        assert res.objective == pytest.approx(kmeans_objective(rows, res.assign, 3), rel=1e-9)
        assert res.objective <= kmeans_objective(rows, truth, 3)
    else:
        assert res.objective == pytest.approx(kmedian_cost(rows, res.assign, res.centers), rel=1e-9)


@pytest.mark.parametrize("fit", [approx_kmeans, approx_kmedian])
def test_row_permutation_keeps_objective(fit):
    rng = np.random.default_rng(2)
    rows = np.vstack([rng.normal(size=(15, 2)), rng.normal(size=(15, 2)) + 5])
    perm = rng.permutation(30)
    a, b = fit(rows, 2, seed=0), fit(rows[perm], 2, seed=0)
    assert a.objective == pytest.approx(b.objective, rel=1e-9)
    # same partition up to label names
    pa, pb = a.assign[perm], b.assign
    assert len(set(zip(pa.tolist(), pb.tolist()))) == 2


def test_deterministic():
    rows = np.random.default_rng(0).normal(size=(50, 3))
    a, b = approx_kmedian(rows, 3, seed=7), approx_kmedian(rows, 3, seed=7)
    assert np.array_equal(a.assign, b.assign) and a.objective == b.objective
