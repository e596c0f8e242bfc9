import numpy as np
import pytest

from oracles import random_unitary
from qck.birkhoff import (
    BirkhoffDecomposition,
    NoPerfectMatching,
    NotDoublyStochastic,
    birkhoff_decompose,
    one_line,
    permutation_matrix,
    reconstruct,
    term_bound,
)
from qck.quantum import transition_matrix


def random_doubly_stochastic(rng, n, k):
    """Average of ``k`` random permutation matrices with random convex weights."""
    w = rng.dirichlet(np.ones(k))
    return sum(wi * permutation_matrix(tuple(rng.permutation(n))) for wi in w)


def test_permutation_matrix_dyadic_form():
    pi = (2, 0, 1)
    m = permutation_matrix(pi)
    e = np.eye(3)
    assert np.array_equal(m, sum(np.outer(e[j], e[pi[j]]) for j in range(3)))


def test_permutation_is_single_term():
    dec = birkhoff_decompose(permutation_matrix((1, 3, 0, 2)))
    assert dec.terms == ((1.0, (1, 3, 0, 2)),)


def test_two_by_two_is_unique():
    dec = birkhoff_decompose(np.array([[0.25, 0.75], [0.75, 0.25]]))
    assert sorted(dec.terms) == [(0.25, (0, 1)), (0.75, (1, 0))]


def test_uniform_three_by_three():
    dec = birkhoff_decompose(np.full((3, 3), 1 / 3))
    assert dec.k == 3 <= term_bound(3) == 5
    assert np.allclose(dec.weights(), 1 / 3, atol=1e-12)
    # the three permutations are disjoint: each cell used exactly once
    assert np.array_equal(sum(permutation_matrix(pi) for _, pi in dec.terms), np.ones((3, 3)))
    assert np.max(np.abs(reconstruct(dec) - 1 / 3)) <= 1e-9


def test_reconstruct_examples():
    assert np.array_equal(reconstruct(BirkhoffDecomposition(3, ((1.0, (0, 1, 2)),))), np.eye(3))
    half = reconstruct(BirkhoffDecomposition(2, ((0.5, (0, 1)), (0.5, (1, 0)))))
    assert np.array_equal(half, np.full((2, 2), 0.5))


def test_term_bound():
    assert [term_bound(n) for n in range(1, 6)] == [1, 2, 5, 10, 17]


def test_one_line():
    assert one_line((1, 0, 2)) == "[2 1 3]"


@pytest.mark.parametrize("seed", range(20))
def test_round_trip_and_bounds(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    m = random_doubly_stochastic(rng, n, int(rng.integers(1, 3 * n + 1)))
    dec = birkhoff_decompose(m)
    assert np.max(np.abs(reconstruct(dec) - m)) <= n * 1e-9 + 1e-9
    assert dec.k <= term_bound(n)
    assert dec.k <= int(np.count_nonzero(m > 1e-9)) - n + 1
    assert abs(dec.weights().sum() - 1) <= 1e-9
    assert np.all(dec.weights() > 0)


@pytest.mark.parametrize("seed", range(10))
def test_transition_matrix_pipeline(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 7))
    t = transition_matrix(random_unitary(rng, n).T, random_unitary(rng, n).T)
    dec = birkhoff_decompose(t)
    assert np.max(np.abs(reconstruct(dec) - t)) <= 1e-8
    assert dec.k <= term_bound(n)


def test_deterministic():
    m = random_doubly_stochastic(np.random.default_rng(7), 6, 10)
    assert birkhoff_decompose(m) == birkhoff_decompose(m.copy())


def test_rejects_non_doubly_stochastic():
    with pytest.raises(NotDoublyStochastic):
        birkhoff_decompose(np.array([[0.5, 0.5], [0.6, 0.4]]))
    with pytest.raises(NotDoublyStochastic):
        birkhoff_decompose(np.array([[1.5, -0.5], [-0.5, 1.5]]))
    with pytest.raises(NotDoublyStochastic):
        birkhoff_decompose(np.ones((2, 3)) / 3)


def test_no_perfect_matching_far_from_polytope():
    # sums pass at a loose tolerance, but the support admits no perfect matching
    m = np.array([[0.6, 0.2, 0.2], [0.6, 0.2, 0.2], [0.0, 0.6, 0.6]])
    with pytest.raises(NoPerfectMatching):
        birkhoff_decompose(m, tol=0.2)
