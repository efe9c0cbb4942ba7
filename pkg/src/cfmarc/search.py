"""Best Gaussian-integer coefficient vectors via lattice successive minima.

The complex lattice generated by the Cholesky factor ``B`` is embedded in
R^{2M}, LLL-reduced, and every lattice point inside a radius certified by
the reduced basis is enumerated (Schnorr-Euchner zig-zag). Candidates are
canonicalised modulo the units of Z[i] and filtered greedily for linear
independence over C, which yields the successive minima exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gaussint import GaussianInt, as_vector, rank_exact, real_embedding
from .rate import RateMatrix, log2_plus_inv

__all__ = [
    "CoefficientSet",
    "canonicalize",
    "lll_reduce",
    "enumerate_short_vectors",
    "successive_minima",
    "norm_sq",
]

LLL_DELTA = 0.99
# relative slack on the enumeration radius so boundary points survive rounding
RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class CoefficientSet:
    vectors: tuple[tuple[GaussianInt, ...], ...]
    norms_sq: tuple[float, ...]
    rates: tuple[float, ...]

    def __len__(self):
        return len(self.vectors)

    def matrix(self) -> np.ndarray:
        return np.array([[complex(x) for x in v] for v in self.vectors], dtype=complex)


def canonicalize(a) -> tuple[GaussianInt, ...]:
    """Unit multiple of ``a`` whose first nonzero entry has Re > 0 (or Re = 0, Im > 0)."""
    a = as_vector(a)
    first = next((x for x in a if x), None)
    if first is None:
        raise ValueError("cannot canonicalize the zero vector")
    # pick the unit u with u * first in the half-plane {re > 0} U {re = 0, im > 0}
    re, im = first.re, first.im
    if re > 0 and im >= 0:
        u = (1, 0)
    elif re <= 0 and im > 0:
        u = (0, -1)
    elif re < 0 and im <= 0:
        u = (-1, 0)
    else:
        u = (0, 1)
    ur, ui = u
    return tuple(GaussianInt(ur * x.re - ui * x.im, ur * x.im + ui * x.re) for x in a)


def norm_sq(B: np.ndarray, a: Sequence[GaussianInt]) -> float:
    """``||B a||^2`` computed directly from the Gaussian-integer vector."""
    z = np.array([complex(x.re, x.im) for x in a])
    v = B @ z
    return float(np.vdot(v, v).real)


def _gram_schmidt(cols: list[list[float]]) -> tuple[list[list[float]], list[list[float]], list[float]]:
    n = len(cols)
    bstar: list[list[float]] = []
    mu = [[0.0] * n for _ in range(n)]
    bnorm = [0.0] * n
    for i in range(n):
        v = list(cols[i])
        for j in range(i):
            m = sum(x * y for x, y in zip(cols[i], bstar[j])) / bnorm[j]
            mu[i][j] = m
            v = [x - m * y for x, y in zip(v, bstar[j])]
        bstar.append(v)
        bnorm[i] = sum(x * x for x in v)
    return bstar, mu, bnorm


def lll_reduce(G: np.ndarray, delta: float = LLL_DELTA) -> tuple[np.ndarray, np.ndarray]:
    """LLL-reduce the columns of ``G``.

    Returns ``(G @ U, U)`` with ``U`` unimodular (integer entries).
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[1]
    cols = [list(G[:, j]) for j in range(n)]
    U = [[int(i == j) for i in range(n)] for j in range(n)]  # U[j] = column j
    _, mu, bnorm = _gram_schmidt(cols)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                cols[k] = [x - q * y for x, y in zip(cols[k], cols[j])]
                U[k] = [x - q * y for x, y in zip(U[k], U[j])]
                for t in range(j):
                    mu[k][t] -= q * mu[j][t]
                mu[k][j] -= q
        if bnorm[k] >= (delta - mu[k][k - 1] ** 2) * bnorm[k - 1]:
            k += 1
        else:
            cols[k], cols[k - 1] = cols[k - 1], cols[k]
            U[k], U[k - 1] = U[k - 1], U[k]
            _, mu, bnorm = _gram_schmidt(cols)
            k = max(k - 1, 1)
    Gred = np.array(cols, dtype=float).T
    Umat = np.array(U, dtype=np.int64).T
    return Gred, Umat


def enumerate_short_vectors(R: np.ndarray, radius_sq: float) -> list[tuple[int, ...]]:
    """All nonzero integer ``z`` with ``||R z||^2 <= radius_sq`` (R upper triangular).

    Depth-first Schnorr-Euchner enumeration starting from the last coordinate.
    """
    n = R.shape[0]
    Rl = [list(map(float, row)) for row in R]
    diag = [Rl[k][k] for k in range(n)]
    z = [0] * n
    out: list[tuple[int, ...]] = []

    def center(k: int) -> float:
        s = 0.0
        row = Rl[k]
        for j in range(k + 1, n):
            s += row[j] * z[j]
        return -s / diag[k]

    def visit(k: int, zk: int, c: float, dist_above: float) -> bool:
        d = diag[k] * (zk - c)
        dist = dist_above + d * d
        if dist > radius_sq:
            return False
        z[k] = zk
        if k == 0:
            if any(z):
                out.append(tuple(z))
        else:
            descend(k - 1, dist)
        return True

    def descend(k: int, dist_above: float):
        c = center(k)
        base = math.floor(c + 0.5)
        first = 1 if c >= base else -1
        # zig-zag base, base+first, base-first, base+2first, ...; each side stops
        # at its first point outside the sphere since distance grows along it
        if visit(k, base, c, dist_above):
            near = far = True
            t = 1
            while near or far:
                if near:
                    near = visit(k, base + first * t, c, dist_above)
                if far:
                    far = visit(k, base - first * t, c, dist_above)
                t += 1
        z[k] = 0

    descend(n - 1, 0.0)
    return out


def _to_gauss(x: Sequence[int], M: int) -> tuple[GaussianInt, ...]:
    return tuple(GaussianInt(int(x[m]), int(x[m + M])) for m in range(M))


def _lex_key(a: Sequence[GaussianInt]) -> tuple[int, ...]:
    return tuple(v for x in a for v in (x.re, x.im))


def _greedy_independent(cands, L: int, given: Sequence[Sequence[GaussianInt]]):
    chosen = []
    basis = [tuple(g) for g in given]
    rank = rank_exact(basis) if basis else 0
    if rank != len(basis):
        raise ValueError("given vectors must be linearly independent")
    for nrm, a in cands:
        if len(chosen) == L:
            break
        trial = basis + [a]
        if rank_exact(trial) == len(trial):
            basis = trial
            chosen.append((nrm, a))
    return chosen


def _sorted_candidates(B: np.ndarray, raw) -> list[tuple[float, tuple[GaussianInt, ...]]]:
    seen = {}
    for a in raw:
        c = canonicalize(a)
        if c not in seen:
            seen[c] = norm_sq(B, c)
    return sorted(((n, a) for a, n in seen.items()), key=lambda t: (t[0], _lex_key(t[1])))


def successive_minima(rm: RateMatrix, L: int, given: Sequence = ()) -> CoefficientSet:
    """The ``L`` best coefficient vectors for the lattice generated by ``rm.B``.

    With ``given`` nonempty, returns the ``L`` shortest vectors that stay
    independent of ``given`` (greedy in order of norm), which is how a
    receiver completes a coefficient matrix around a fixed equation.
    """
    B = rm.B
    M = B.shape[0]
    given = [as_vector(g) for g in given]
    if L < 1 or L + len(given) > M:
        raise ValueError(f"need 1 <= L <= M - len(given), got L={L}, M={M}")

    G = real_embedding(B)
    Gred, U = lll_reduce(G)
    basis_vecs = [_to_gauss(U[:, j], M) for j in range(2 * M)]
    seed = _greedy_independent(_sorted_candidates(B, basis_vecs), L, given)
    if len(seed) < L:  # pragma: no cover - reduced basis spans the lattice
        raise RuntimeError("reduced basis failed to supply independent vectors")
    radius_sq = max(n for n, _ in seed) * (1.0 + RADIUS_SLACK)

    _, mu, bnorm = _gram_schmidt([list(Gred[:, j]) for j in range(2 * M)])
    # R[k, j] = mu[j][k] * ||b*_k||, so ||R z|| = ||Gred z||
    scale = np.sqrt(bnorm)
    R = np.triu(np.array(mu).T, 1) * scale[:, None] + np.diag(scale)
    while True:
        zs = enumerate_short_vectors(R, radius_sq)
        raw = [_to_gauss(U @ np.array(z, dtype=np.int64), M) for z in zs]
        chosen = _greedy_independent(_sorted_candidates(B, raw), L, given)
        if len(chosen) == L:
            break
        radius_sq *= 2.0  # pragma: no cover - radius is certified above
    norms = tuple(n for n, _ in chosen)
    return CoefficientSet(
        vectors=tuple(a for _, a in chosen),
        norms_sq=norms,
        rates=tuple(log2_plus_inv(n) for n in norms),
    )
