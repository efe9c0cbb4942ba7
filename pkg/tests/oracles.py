"""Reference computations that share no code with the lattice search."""

from __future__ import annotations

import itertools
import math

import numpy as np

from cfmarc.gaussint import GaussianInt, rank_exact
from cfmarc.search import canonicalize

_CHUNK = 1 << 20


def _grid(bounds):
    axes = [np.arange(-k, k + 1) for k in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def box_minima(h, snr: float, L: int, radius_sq: float):
    """Norms of the ``L`` successive minima by exhaustive search.

    Every Gaussian-integer vector with ``a^H M a <= radius_sq`` is visited:
    the leading ``M - 1`` entries run over the box implied by
    ``|a_i|^2 <= radius_sq * (1 + snr |h_i|^2)``, and for each prefix the last
    entry, on which the form is a shifted isotropic quadratic, runs over the
    integer points of the exact disc. ``radius_sq`` must be at least the
    ``L``-th minimum. Returns ``(norms, vectors)`` after greedy independence
    selection in (norm, lexicographic) order.
    """
    h = np.asarray(h, dtype=complex)
    M = h.shape[0]
    c = snr / (1.0 + snr * np.vdot(h, h).real)
    Mm = np.eye(M) - c * np.outer(h, h.conj())
    K = [int(math.floor(math.sqrt(radius_sq * (1 + snr * abs(x) ** 2)) + 1e-9)) for x in h]
    found = []
    if M == 1:
        prefixes = np.zeros((1, 0), dtype=np.int64)
    else:
        prefixes = _grid([K[i] for i in range(M - 1) for _ in (0, 1)])
    mtt = Mm[M - 1, M - 1].real
    for start in range(0, len(prefixes), _CHUNK):
        blk = prefixes[start:start + _CHUNK]
        p = blk[:, 0::2] + 1j * blk[:, 1::2]
        Mpp = Mm[: M - 1, : M - 1]
        qp = np.einsum("ni,ij,nj->n", p.conj(), Mpp, p).real
        cross = p @ Mm[M - 1, : M - 1]  # conj(a_M) * cross is the off-diagonal part
        tstar = -cross / mtt
        qmin = qp - mtt * np.abs(tstar) ** 2
        keep = np.nonzero(qmin <= radius_sq * (1 + 1e-9))[0]
        for i in keep:
            rho = math.sqrt(max(radius_sq * (1 + 1e-9) - qmin[i], 0.0) / mtt)
            ts = tstar[i]
            for x in range(math.ceil(ts.real - rho), math.floor(ts.real + rho) + 1):
                for y in range(math.ceil(ts.imag - rho), math.floor(ts.imag + rho) + 1):
                    a = np.append(p[i], complex(x, y))
                    if not np.any(a):
                        continue
                    q = np.vdot(a, Mm @ a).real
                    if q <= radius_sq * (1 + 1e-9):
                        found.append((q, a))
    seen = {}
    for q, a in found:
        g = canonicalize([GaussianInt(int(round(z.real)), int(round(z.imag))) for z in a])
        if g not in seen:
            seen[g] = q
    ordered = sorted(seen.items(), key=lambda kv: (kv[1], [t for x in kv[0] for t in (x.re, x.im)]))
    chosen = []
    for vec, q in ordered:
        if rank_exact([v for v, _ in chosen] + [vec]) == len(chosen) + 1:
            chosen.append((vec, q))
            if len(chosen) == L:
                break
    return [q for _, q in chosen], [v for v, _ in chosen]


def all_vectors_upto(M: int, K: int):
    """Every nonzero Gaussian-integer vector with entries in the box of half-width ``K``."""
    rng = range(-K, K + 1)
    for t in itertools.product(rng, repeat=2 * M):
        if any(t):
            yield [GaussianInt(t[2 * i], t[2 * i + 1]) for i in range(M)]
