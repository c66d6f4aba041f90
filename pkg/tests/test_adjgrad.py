import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphmga.adjgrad import (
    adjacency_gradient,
    finite_difference_oracle,
    min_hidden_preactivation,
    symmetrize,
)
from graphmga.gcn import GcnModel, normalized_adjacency
from graphmga.graph import LabelAssignment

from oracles import random_adjacency


def kink_free_instance(rng, n, d=3, h=4, f=3, p=0.4):
    """Random graph/model with every hidden pre-activation away from 0."""
    while True:
        A = random_adjacency(rng, n, p).astype(float)
        X = rng.normal(size=(n, d))
        m = GcnModel(rng.normal(size=(d, h)), rng.normal(size=(h, f)))
        if min_hidden_preactivation(m, A, X) > 1e-3:
            labels = LabelAssignment(rng.integers(0, f, size=n), f)
            return m, A, X, labels


def max_rel_error(m, A, X, labels, t, step=1e-5):
    G = adjacency_gradient(m, A, X, labels, t)
    worst = 0.0
    n = A.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j:
                fd = finite_difference_oracle(m, A, X, labels, t, i, j, step)
                worst = max(worst, abs(G[i, j] - fd) / max(1.0, abs(fd)))
    return worst


def test_zero_output_weights_give_zero_gradient(rng):
    m = GcnModel(rng.normal(size=(3, 4)), np.zeros((4, 2)))
    A = random_adjacency(rng, 5, 0.5)
    X = rng.normal(size=(5, 3))
    labels = LabelAssignment([0, 1, 0, 1, 0], 2)
    assert not np.any(adjacency_gradient(m, A, X, labels, 2))
    assert finite_difference_oracle(m, A, X, labels, 2, 0, 3) == 0.0


def test_gradient_matches_oracle_on_five_node_instances(rng):
    for _ in range(10):
        m, A, X, labels = kink_free_instance(rng, 5)
        assert max_rel_error(m, A, X, labels, int(rng.integers(5))) <= 1e-4


def test_gradient_far_from_target_still_matches_oracle(rng):
    # path 0-1-2-3-4 plus edge 5-6: pairs among {4,5,6} are outside the
    # target's 2-hop receptive field except through degree changes
    A = np.zeros((7, 7))
    for u, v in [(0, 1), (1, 2), (2, 3), (3, 4), (5, 6)]:
        A[u, v] = A[v, u] = 1
    while True:
        X = rng.normal(size=(7, 3))
        m = GcnModel(rng.normal(size=(3, 4)), rng.normal(size=(4, 2)))
        if min_hidden_preactivation(m, A, X) > 1e-3:
            break
    labels = LabelAssignment([0, 1, 0, 1, 0, 1, 0], 2)
    G = adjacency_gradient(m, A, X, labels, 0)
    for i, j in [(5, 6), (6, 5), (4, 5), (3, 4), (2, 3), (1, 2), (0, 2)]:
        fd = finite_difference_oracle(m, A, X, labels, 0, i, j)
        assert abs(G[i, j] - fd) <= 1e-4 * max(1.0, abs(fd))
    # entries with no path of influence on node 0 vanish
    assert G[5, 6] == 0.0 and G[4, 5] == 0.0


def test_oracle_step_halving_is_stable(rng):
    m, A, X, labels = kink_free_instance(rng, 6)
    for i, j in [(0, 1), (2, 5), (4, 3)]:
        coarse = finite_difference_oracle(m, A, X, labels, 1, i, j, 1e-4)
        fine = finite_difference_oracle(m, A, X, labels, 1, i, j, 1e-5)
        assert abs(coarse - fine) < 1e-6


def test_oracle_argument_checks(rng):
    m, A, X, labels = kink_free_instance(rng, 4)
    with pytest.raises(ValueError):
        finite_difference_oracle(m, A, X, labels, 0, 1, 1)
    with pytest.raises(ValueError):
        finite_difference_oracle(m, A, X, labels, 0, 1, 2, step=0.0)


def test_symmetrize_examples():
    np.testing.assert_array_equal(symmetrize([[5, 1], [3, 5]]), [[0, 2], [2, 0]])
    sym = np.array([[0, 1.5, -2], [1.5, 0, 4], [-2, 4, 0]])
    np.testing.assert_array_equal(symmetrize(sym), sym)
    anti = np.array([[0, 1, -2], [-1, 0, 3], [2, -3, 0]])
    np.testing.assert_array_equal(symmetrize(anti), np.zeros((3, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 7).map(lambda n: (n, n)), elements=st.floats(-1e6, 1e6)))
def test_symmetrize_output_symmetric_zero_diagonal(raw):
    g = symmetrize(raw)
    assert np.array_equal(g, g.T)
    assert not np.any(np.diag(g))


def test_gradient_linear_across_targets(rng):
    """grad(L_a) + grad(L_b) equals the finite-difference gradient of
    L_a + L_b, entry by entry."""
    m, A, X, labels = kink_free_instance(rng, 6)
    a, b = 1, 4
    summed = adjacency_gradient(m, A, X, labels, a) + adjacency_gradient(m, A, X, labels, b)
    for i, j in [(0, 1), (1, 4), (3, 5), (5, 2)]:
        fd = (finite_difference_oracle(m, A, X, labels, a, i, j)
              + finite_difference_oracle(m, A, X, labels, b, i, j))
        assert abs(summed[i, j] - fd) <= 1e-4 * max(1.0, abs(fd))


def test_gradient_on_isolated_nodes(rng):
    A = np.zeros((4, 4))
    X = rng.normal(size=(4, 2))
    m = GcnModel(rng.normal(size=(2, 3)), rng.normal(size=(3, 2)))
    labels = LabelAssignment([0, 1, 0, 1], 2)
    assert np.all(np.isfinite(adjacency_gradient(m, A, X, labels, 0)))
    assert normalized_adjacency(A)[0, 0] == 1.0
