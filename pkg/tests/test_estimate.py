import math

import numpy as np
import pytest

from sumspec.errors import SizeMismatch
from sumspec.estimate import estimate_B, estimate_pi, pair_counts
from sumspec.genmodel import sample_memberships, sample_stack
from sumspec.membership import MembershipMatrix
from sumspec.netcore import LayerStack, from_edge_list


def test_pi_examples():
    assert estimate_pi(MembershipMatrix([0, 0, 0, 1], 2)).tolist() == [0.75, 0.25]
    assert estimate_pi(MembershipMatrix([0] * 5, 3)).tolist() == [1.0, 0.0, 0.0]
    assert estimate_pi(MembershipMatrix([0, 0, 1, 1, 2, 2, 3, 3], 4)).tolist() == [0.25] * 4


def test_triangle_block():
    stack = LayerStack.of([from_edge_list(3, [(0, 1), (1, 2), (0, 2)])])
    assert estimate_B(stack, MembershipMatrix([0, 0, 0], 1))[0][0, 0] == 1.0


def test_empty_graph():
    stack = LayerStack.of([from_edge_list(4, [])] * 2)
    for est in estimate_B(stack, MembershipMatrix([0, 0, 1, 1], 2)):
        assert (est == 0).all()


def test_singleton_pair():
    est = estimate_B(LayerStack.of([from_edge_list(2, [(0, 1)])]), MembershipMatrix([0, 1], 2))[0]
    assert est[0, 1] == est[1, 0] == 1.0
    # a singleton has no within-community pairs
    assert np.isnan(est[0, 0]) and np.isnan(est[1, 1])


def test_empty_community_is_undefined():
    est = estimate_B(LayerStack.of([from_edge_list(3, [(0, 1)])]), MembershipMatrix([0, 0, 0], 2))[0]
    assert est[0, 0] == pytest.approx(1 / 3)
    assert np.isnan(est[0, 1]) and np.isnan(est[1, 0]) and np.isnan(est[1, 1])


def test_pair_counts():
    assert pair_counts(MembershipMatrix([0, 0, 0, 1, 1], 2)).tolist() == [[6, 6], [6, 2]]


def test_size_mismatch():
    with pytest.raises(SizeMismatch):
        estimate_B(LayerStack.of([from_edge_list(3, [])]), MembershipMatrix([0, 1], 2))


def test_bounds_and_symmetry():
    rng = np.random.default_rng(0)
    gt = sample_memberships(50, [0.2, 0.3, 0.5], 1)
    bs = [rng.uniform(0, 1, (3, 3)) for _ in range(3)]
    bs = [(m + m.T) / 2 for m in bs]
    zhat = MembershipMatrix(rng.integers(0, 3, 50), 3)
    for est in estimate_B(sample_stack(gt, bs, 2), zhat):
        assert np.array_equal(est, est.T)
        assert (est[~np.isnan(est)] >= 0).all() and (est[~np.isnan(est)] <= 1).all()


def test_unbiased_at_truth():
    n, reps = 200, 100
    b = [np.array([[0.10, 0.03], [0.03, 0.06]]), np.array([[0.02, 0.05], [0.05, 0.08]])]
    gt = sample_memberships(n, [0.4, 0.6], 5)
    pairs = pair_counts(gt)
    # ordered-pair counts double the undirected pairs on the diagonal
    undirected = np.where(np.eye(2, dtype=bool), pairs / 2, pairs)
    total = [np.zeros((2, 2)) for _ in b]
    for seed in range(reps):
        for acc, est in zip(total, estimate_B(sample_stack(gt, b, seed), gt)):
            acc += est
    for acc, truth in zip(total, b):
        mean = acc / reps
        for a in range(2):
            for c in range(2):
                sd = math.sqrt(truth[a, c] * (1 - truth[a, c]) / (undirected[a, c] * reps))
                assert abs(mean[a, c] - truth[a, c]) <= 4 * sd
