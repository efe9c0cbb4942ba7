"""Pure-Python implementation of the batch lattice kernel.

Same contract as the compiled ``_kernel`` module, built on
:mod:`cfmarc.search` and exact Gaussian-integer rank. Slow, but it has no
width limits and serves as the reference the compiled path is tested
against.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .gaussint import GaussianInt, rank_exact
from .rate import LinkParams, build_rate_matrix
from .search import successive_minima

__all__ = ["evaluate_batch", "link_rates_batch", "rank_def_batch", "link_minima_py", "trial_facts"]


def _minima(h, snr, L, given=()):
    return successive_minima(build_rate_matrix(LinkParams(h=h, g=snr)), L, given=given)


def trial_facts(h_sd, h_sr, h_rd, snr_sd, snr_sr, snr_rd, perfect_rd=False):
    """Facts of one realization, with the coefficient vectors kept.

    Returns a dict holding the destination and relay coefficient sets
    (``A_d``, ``A_r``), their rates, the relay-destination rate, the
    suf-FB choice index, the lim-FB rank flag, the Insausti completion and
    the Soussi max-min rate.
    """
    M = len(h_sd)
    A_d = _minima(h_sd, snr_sd, M)
    A_r = _minima(h_sr, snr_sr, M)
    rate_rd = np.inf if perfect_rd else float(np.log2(1.0 + abs(h_rd) ** 2 * snr_rd))

    head = list(A_d.vectors[: M - 1])
    rank_def = rank_exact([A_r.vectors[0]] + head) < M
    star = next((l for l, a in enumerate(A_r.vectors) if rank_exact([a] + head) == M), None)
    if star is None:
        raise RuntimeError("no relay vector completes the destination's rank")

    if M == 1:
        ins_vectors, ins_rates = (), ()
    elif not rank_def:
        ins_vectors, ins_rates = tuple(head), A_d.rates[: M - 1]
    else:
        ins = _minima(h_sd, snr_sd, M - 1, given=[A_r.vectors[0]])
        ins_vectors, ins_rates = ins.vectors, ins.rates

    best = -1.0
    for l in range(M):
        for subset in combinations(range(M), M - 1):
            rows = [A_r.vectors[l]] + [A_d.vectors[i] for i in subset]
            if rank_exact(rows) == M:
                val = min([A_r.rates[l]] + [A_d.rates[i] for i in subset])
                best = max(best, val)
    if best < 0:
        raise RuntimeError("no full-rank relay/destination combination")

    return {
        "A_d": A_d,
        "A_r": A_r,
        "rate_rd": rate_rd,
        "star": star,
        "rank_def": rank_def,
        "ins_vectors": ins_vectors,
        "ins_rates": tuple(ins_rates),
        "soussi": best,
    }


def evaluate_batch(h_sd, h_sr, h_rd, snr_sd, snr_sr, snr_rd, perfect_rd=False,
                   target_rate=None, need_relay=True):
    """Batch facts; see the compiled kernel for the field meanings.

    ``target_rate`` and ``need_relay`` are accepted for interface parity;
    this path always computes exact facts, so ``certified`` and
    ``relay_skipped`` are all false.
    """
    h_sd = np.asarray(h_sd, dtype=complex)
    h_sr = np.asarray(h_sr, dtype=complex)
    h_rd = np.asarray(h_rd, dtype=complex)
    n, M = h_sd.shape
    if h_sr.shape != (n, M) or h_rd.shape != (n,):
        raise ValueError("channel arrays disagree in shape")
    if not need_relay and target_rate is None:
        raise ValueError("need_relay=False requires target_rate")
    facts = {
        "rates_d": np.zeros((n, M)),
        "rates_r": np.zeros((n, M)),
        "rate_rd": np.zeros(n),
        "rate_r_star": np.zeros(n),
        "rank_def": np.zeros(n, dtype=bool),
        "ins_rates_d": np.zeros((n, max(M - 1, 0))),
        "soussi": np.zeros(n),
        "certified": np.zeros(n, dtype=bool),
        "relay_skipped": np.zeros(n, dtype=bool),
    }
    for t in range(n):
        f = trial_facts(h_sd[t], h_sr[t], h_rd[t], snr_sd, snr_sr, snr_rd, perfect_rd)
        facts["rates_d"][t] = f["A_d"].rates
        facts["rates_r"][t] = f["A_r"].rates
        facts["rate_rd"][t] = f["rate_rd"]
        facts["rate_r_star"][t] = f["A_r"].rates[f["star"]]
        facts["rank_def"][t] = f["rank_def"]
        facts["ins_rates_d"][t] = f["ins_rates"]
        facts["soussi"][t] = f["soussi"]
    return facts, np.zeros(0, dtype=np.int64)


def link_minima_py(h, snr, L, given=None):
    """Single-link minima as ``(vectors of (re, im) pairs, norms)``."""
    given = [[GaussianInt(*x) for x in g] for g in (given or [])]
    cs = _minima(np.asarray(h, dtype=complex), snr, L, given=given)
    vecs = [tuple((x.re, x.im) for x in v) for v in cs.vectors]
    return vecs, list(cs.norms_sq)


def link_rates_batch(h, snr, target_rate=None):
    """Rates of the M best equations per row of ``h``; exact on this path."""
    h = np.asarray(h, dtype=complex)
    rates = np.array([_minima(row, snr, h.shape[1]).rates for row in h]).reshape(h.shape)
    return rates, np.zeros(0, dtype=np.int64)


def rank_def_batch(h_sd, h_sr, snr_sd, snr_sr):
    """Relay best vector dependent on the destination's M-1 best, per row."""
    h_sd = np.asarray(h_sd, dtype=complex)
    h_sr = np.asarray(h_sr, dtype=complex)
    M = h_sd.shape[1]
    if M < 2:
        raise ValueError("rank test needs M >= 2")
    flags = np.zeros(h_sd.shape[0], dtype=bool)
    for t in range(h_sd.shape[0]):
        head = _minima(h_sd[t], snr_sd, M - 1).vectors
        best = _minima(h_sr[t], snr_sr, 1).vectors
        flags[t] = rank_exact(list(best) + list(head)) < M
    return flags, np.zeros(0, dtype=np.int64)
