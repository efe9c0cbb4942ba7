"""Exact arithmetic over the Gaussian integers Z[i].

Coefficient vectors and matrices are kept as tuples of :class:`GaussianInt`
so that determinants and rank decisions never touch floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Integral
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GaussianInt",
    "UNITS",
    "as_gauss",
    "as_vector",
    "as_matrix",
    "to_complex_array",
    "det_exact",
    "rank_exact",
    "is_full_rank",
    "real_embedding",
    "stack_real",
]


@dataclass(frozen=True, slots=True)
class GaussianInt:
    re: int
    im: int

    def __post_init__(self):
        if not isinstance(self.re, Integral) or not isinstance(self.im, Integral):
            raise TypeError("GaussianInt components must be integers")
        # normalise numpy integer scalars to python ints (unbounded width)
        object.__setattr__(self, "re", int(self.re))
        object.__setattr__(self, "im", int(self.im))

    def __add__(self, other):
        other = as_gauss(other)
        return GaussianInt(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_gauss(other)
        return GaussianInt(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_gauss(other) - self

    def __mul__(self, other):
        other = as_gauss(other)
        return GaussianInt(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return GaussianInt(-self.re, -self.im)

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(self.re, self.im)

    def __repr__(self):
        return f"GaussianInt({self.re}{self.im:+d}i)"

    def conj(self) -> GaussianInt:
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        """Field norm ``|z|^2``."""
        return self.re * self.re + self.im * self.im

    def divexact(self, other) -> GaussianInt:
        """Division known to be exact in Z[i]; raises if it is not."""
        other = as_gauss(other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian integer")
        num = self * other.conj()
        qr, rr = divmod(num.re, n)
        qi, ri = divmod(num.im, n)
        if rr or ri:
            raise ArithmeticError(f"{self} is not divisible by {other}")
        return GaussianInt(qr, qi)


ZERO = GaussianInt(0, 0)
ONE = GaussianInt(1, 0)
UNITS = (GaussianInt(1, 0), GaussianInt(-1, 0), GaussianInt(0, 1), GaussianInt(0, -1))


def as_gauss(x) -> GaussianInt:
    """Coerce an int, integral complex, or ``(re, im)`` pair to GaussianInt."""
    if isinstance(x, GaussianInt):
        return x
    if isinstance(x, Integral):
        return GaussianInt(int(x), 0)
    if isinstance(x, tuple) and len(x) == 2:
        return GaussianInt(*x)
    if isinstance(x, (complex, float, np.complexfloating, np.floating)):
        z = complex(x)
        if z.real != int(z.real) or z.imag != int(z.imag):
            raise ValueError(f"{x!r} is not a Gaussian integer")
        return GaussianInt(int(z.real), int(z.imag))
    raise TypeError(f"cannot interpret {x!r} as a Gaussian integer")


def as_vector(v: Iterable) -> tuple[GaussianInt, ...]:
    return tuple(as_gauss(x) for x in v)


def as_matrix(rows: Iterable[Iterable]) -> tuple[tuple[GaussianInt, ...], ...]:
    mat = tuple(as_vector(r) for r in rows)
    if mat and any(len(r) != len(mat[0]) for r in mat):
        raise ValueError("matrix rows must all have the same length")
    return mat


def to_complex_array(v) -> np.ndarray:
    """Gaussian-integer vector or matrix as a complex128 array."""
    if len(v) and isinstance(v[0], (tuple, list)):
        return np.array([[complex(as_gauss(x)) for x in r] for r in v], dtype=complex)
    return np.array([complex(as_gauss(x)) for x in v], dtype=complex)


def _bareiss(rows: Sequence[Sequence[GaussianInt]]) -> tuple[int, list[list[GaussianInt]], int]:
    """Fraction-free row reduction.

    Returns ``(rank, reduced_rows, sign)`` where ``sign`` tracks row swaps.
    For a square matrix of full rank the last pivot is the determinant
    up to ``sign``.
    """
    a = [list(r) for r in rows]
    n_rows = len(a)
    n_cols = len(a[0]) if n_rows else 0
    prev = ONE
    rank = 0
    sign = 1
    for col in range(n_cols):
        if rank == n_rows:
            break
        piv = next((r for r in range(rank, n_rows) if a[r][col]), None)
        if piv is None:
            continue
        if piv != rank:
            a[rank], a[piv] = a[piv], a[rank]
            sign = -sign
        p = a[rank][col]
        for r in range(rank + 1, n_rows):
            f = a[r][col]
            for c in range(col + 1, n_cols):
                a[r][c] = (p * a[r][c] - f * a[rank][c]).divexact(prev)
            a[r][col] = ZERO
        prev = p
        rank += 1
    return rank, a, sign


def det_exact(A) -> GaussianInt:
    """Exact determinant of a square Gaussian-integer matrix (Bareiss)."""
    A = as_matrix(A)
    n = len(A)
    if any(len(r) != n for r in A):
        raise ValueError("det_exact requires a square matrix")
    if n == 0:
        return ONE
    rank, red, sign = _bareiss(A)
    if rank < n:
        return ZERO
    d = red[n - 1][n - 1]
    return d if sign > 0 else -d


def rank_exact(A) -> int:
    """Rank over C of a Gaussian-integer matrix."""
    A = as_matrix(A)
    if not A:
        return 0
    return _bareiss(A)[0]


def is_full_rank(A) -> bool:
    """True iff the L rows of an L x M matrix (L <= M) are independent over C."""
    A = as_matrix(A)
    if not A:
        raise ValueError("empty coefficient matrix")
    if len(A) > len(A[0]):
        raise ValueError(f"is_full_rank needs L <= M, got {len(A)} x {len(A[0])}")
    return rank_exact(A) == len(A)


def real_embedding(B) -> np.ndarray:
    """Map a complex matrix to ``[[Re B, -Im B], [Im B, Re B]]``.

    With ``a`` stacked as ``[Re a; Im a]`` the embedded product has the
    same Euclidean norm as ``B @ a``.
    """
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2:
        raise ValueError("real_embedding expects a 2-D matrix")
    if not np.all(np.isfinite(B)):
        raise ValueError("real_embedding needs finite entries")
    return np.block([[B.real, -B.imag], [B.imag, B.real]])


def stack_real(a) -> np.ndarray:
    """``[Re a; Im a]`` for a Gaussian-integer or complex vector."""
    z = to_complex_array(a) if not isinstance(a, np.ndarray) else a.astype(complex)
    return np.concatenate([z.real, z.imag])
