import itertools
import math

import numpy as np
import pytest

from peribond.linalg import (
    INF,
    cofactor,
    determinant,
    frobenius,
    is_rotation,
    random_rotation,
)


def leibniz_det(a):
    """Independent determinant oracle: permutation expansion."""
    n = a.shape[0]
    total = 0.0
    for perm in itertools.permutations(range(n)):
        sign = 1.0
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = 1.0
        for i in range(n):
            prod *= a[i, perm[i]]
        total += sign * prod
    return total


def test_frobenius_examples():
    assert frobenius(np.diag([1.0, 2.0])) == pytest.approx(math.sqrt(5.0))
    assert frobenius(np.zeros((3, 3))) == 0.0
    assert frobenius(np.eye(3)) == pytest.approx(math.sqrt(3.0))


def test_frobenius_zero_iff_zero():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.standard_normal((3, 3))
        assert (frobenius(a) == 0.0) == bool(np.all(a == 0.0))


def test_determinant_examples():
    assert determinant(np.eye(3)) == 1.0
    assert determinant(np.diag([2.0, 0.5, 1.0])) == pytest.approx(1.0)
    a = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert determinant(a) == pytest.approx(0.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_determinant_matches_leibniz(n):
    rng = np.random.default_rng(n)
    for _ in range(30):
        a = rng.standard_normal((n, n))
        assert determinant(a) == pytest.approx(leibniz_det(a), abs=1e-12)


def test_cofactor_examples():
    assert np.allclose(cofactor(np.eye(3)), np.eye(3))
    lam = 2.5
    got = cofactor(np.diag([lam, 1.0 / lam, 1.0]))
    assert np.allclose(got, np.diag([1.0 / lam, lam, 1.0]))
    assert np.array_equal(cofactor(np.array([[7.0]])), np.array([[1.0]]))


@pytest.mark.parametrize("n", [2, 3])
def test_cofactor_identity_random(n):
    # cof(A) A^T = det(A) I with det from the independent permutation oracle
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = rng.standard_normal((n, n))
        lhs = cofactor(a) @ a.T
        assert np.max(np.abs(lhs - leibniz_det(a) * np.eye(n))) < 1e-12 * (
            1.0 + np.max(np.abs(lhs))
        )


def test_cofactor_multiplicative_under_rotation():
    rng = np.random.default_rng(11)
    for k in range(100):
        n = 2 + (k % 2)
        r = random_rotation(n, 1000 + k)
        a = rng.standard_normal((n, n))
        assert np.max(np.abs(cofactor(r @ a) - cofactor(r) @ cofactor(a))) < 1e-10
        assert abs(determinant(r @ a) - determinant(a)) < 1e-10 * (1 + abs(determinant(a)))


def test_rotation_preserves_frobenius():
    rng = np.random.default_rng(13)
    for k in range(50):
        n = 2 + (k % 2)
        a = rng.standard_normal((n, n))
        r = random_rotation(n, k)
        assert abs(frobenius(r @ a) - frobenius(a)) < 1e-12 * (1 + frobenius(a))
        assert abs(frobenius(a @ r) - frobenius(a)) < 1e-12 * (1 + frobenius(a))


@pytest.mark.parametrize("dim", [2, 3])
def test_random_rotation_invariants(dim):
    for seed in range(25):
        r = random_rotation(dim, seed)
        assert np.max(np.abs(r @ r.T - np.eye(dim))) < 1e-12
        assert abs(determinant(r) - 1.0) < 1e-12
        assert is_rotation(r)


def test_random_rotation_deterministic():
    assert np.array_equal(random_rotation(3, 42), random_rotation(3, 42))
    assert not np.array_equal(random_rotation(3, 42), random_rotation(3, 43))


def test_random_rotation_rejects_bad_dim():
    with pytest.raises(ValueError):
        random_rotation(4, 0)


def test_square_only_operations():
    rect = np.ones((2, 3))
    with pytest.raises(ValueError):
        determinant(rect)
    with pytest.raises(ValueError):
        cofactor(rect)
    with pytest.raises(ValueError):
        frobenius(np.ones((4, 4)))


def test_extended_real_absorption():
    assert INF + 5.0 == INF
    assert INF * 2.5 == INF
    assert INF > 1e300
    assert not INF < INF
    assert min(INF, 3.0) == 3.0
