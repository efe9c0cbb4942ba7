import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfmarc.gaussint import (
    UNITS,
    GaussianInt,
    as_gauss,
    as_matrix,
    det_exact,
    is_full_rank,
    rank_exact,
    real_embedding,
    stack_real,
)

small = st.builds(GaussianInt, st.integers(-6, 6), st.integers(-6, 6))


def square(n):
    return st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)


def cofactor_det(A):
    """Leibniz expansion over permutations; independent of the elimination code."""
    n = len(A)
    total = GaussianInt(0, 0)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = GaussianInt(1, 0)
        for i, p in enumerate(perm):
            term = term * A[i][p]
        total = total + (term if inv % 2 == 0 else -term)
    return total


def svd_rank(A):
    z = np.array([[complex(x) for x in r] for r in A])
    return int(np.linalg.matrix_rank(z, tol=1e-8))


def test_arithmetic():
    a, b = GaussianInt(2, 3), GaussianInt(-1, 4)
    assert complex(a * b) == complex(2, 3) * complex(-1, 4)
    assert (a * b).divexact(b) == a
    assert a.norm() == 13 and a.conj() == GaussianInt(2, -3)
    with pytest.raises(ArithmeticError):
        a.divexact(GaussianInt(2, 0))
    with pytest.raises(ZeroDivisionError):
        a.divexact(0)


def test_coercion():
    assert as_gauss(3) == GaussianInt(3, 0)
    assert as_gauss(2 - 1j) == GaussianInt(2, -1)
    assert as_gauss((0, 5)) == GaussianInt(0, 5)
    with pytest.raises(ValueError):
        as_gauss(0.5 + 1j)
    with pytest.raises(TypeError):
        GaussianInt(1.0, 0)
    with pytest.raises(ValueError):
        as_matrix([[1, 2], [3]])


def test_small_examples():
    assert det_exact([[1, 1j], [1j, 1]]) == GaussianInt(2, 0)
    assert det_exact([[1, 1], [1j, 1j]]) == GaussianInt(0, 0)
    assert rank_exact([[1, 1j], [1j, -1]]) == 1  # second row is i times the first
    assert is_full_rank([[1, 0], [0, 1]])
    assert not is_full_rank([[1 + 1j, 2], [2j, 2 + 2j]])
    with pytest.raises(ValueError):
        is_full_rank([[1], [2]])
    with pytest.raises(ValueError):
        det_exact([[1, 2]])


@given(st.integers(1, 4).flatmap(square))
def test_det_matches_cofactor_expansion(A):
    assert det_exact(A) == cofactor_det(A)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(square(n), square(n))))
def test_det_is_multiplicative(pair):
    A, B = pair
    n = len(A)
    AB = [[sum((A[i][k] * B[k][j] for k in range(n)), GaussianInt(0, 0)) for j in range(n)] for i in range(n)]
    assert det_exact(AB) == det_exact(A) * det_exact(B)


@given(st.integers(1, 4).flatmap(lambda m: st.integers(1, m).flatmap(
    lambda l: st.lists(st.lists(small, min_size=m, max_size=m), min_size=l, max_size=l))))
def test_rank_matches_svd(A):
    assert rank_exact(A) == svd_rank(A)


@given(square(3), st.permutations(range(3)), st.lists(st.sampled_from(UNITS), min_size=3, max_size=3))
def test_rank_invariant_under_units_and_row_order(A, perm, units):
    B = [[units[i] * x for x in A[p]] for i, p in enumerate(perm)]
    assert rank_exact(B) == rank_exact(A)
    assert det_exact(B).norm() == det_exact(A).norm()


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=4, max_size=4),
       st.lists(small, min_size=2, max_size=2))
def test_real_embedding_preserves_norm(entries, a):
    B = np.array(entries).reshape(2, 2)
    z = np.array([complex(x) for x in a])
    assert np.isclose(np.linalg.norm(real_embedding(B) @ stack_real(a)), np.linalg.norm(B @ z))
