"""Estimators and bounds computed from sweep counters.

Probabilities are always derived from stored counts, never stored
themselves. Besides the plain estimators this module has:

* the diversity-slope fit (least squares of ``-log10 P`` against
  ``SNR_dB / 10`` over a high-SNR window);
* the union bounds for lim-FB and suf-FB assembled from marginal event
  probabilities;
* a conditional estimator for per-equation outage that integrates the
  channel gain out analytically, for probabilities far below what plain
  sampling reaches;
* the Hermite-constant envelope on best-equation outage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import gamma as gamma_dist

from . import kernel
from .montecarlo import ComponentCounts, EquationCounts, PointCounts, SweepResult
from .strategies import PROPOSED, TWO_ROUND

__all__ = [
    "outage_prob",
    "standard_error",
    "wilson_interval",
    "throughput",
    "diversity_slope",
    "union_bound_lim_fb",
    "union_bound_suf_fb",
    "union_bounds",
    "per_equation_outage",
    "RadialSample",
    "sample_equation_thresholds",
    "per_equation_conditional",
    "hermite_constant",
    "lemma1_threshold",
    "lemma1_envelope",
    "lemma1_bound_check",
]


def _pc(obj, strategy=None, snr=None) -> PointCounts:
    if isinstance(obj, PointCounts):
        return obj
    if isinstance(obj, SweepResult):
        return obj.counts(strategy, snr)
    raise TypeError("expected PointCounts or SweepResult")


def outage_prob(sr, strategy: str | None = None, snr: float | None = None) -> float:
    pc = _pc(sr, strategy, snr)
    if pc.trial_num <= 0:
        raise ValueError("no trials at this point")
    return pc.outage_num / pc.trial_num


def standard_error(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0 or not 0 <= k <= n:
        raise ValueError("need n > 0 and 0 <= k <= n")
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the interval touches 0 (or 1) exactly when no (or every) trial is a success
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


def throughput(sr, strategy: str, snr: float | None = None, M: int | None = None) -> float:
    """Messages delivered per transmission round.

    The closed forms per strategy class are checked against the recorded
    round count, so a mismatch between strategy definitions and counters
    cannot pass silently.
    """
    pc = _pc(sr, strategy, snr)
    if M is None:
        if not isinstance(sr, SweepResult):
            raise ValueError("M is required with bare counters")
        M = sr.cfg.M
    n = pc.trial_num
    if n <= 0:
        raise ValueError("no trials at this point")
    p_out = pc.outage_num / n
    if strategy in PROPOSED:
        denom = 1.0 + pc.direct_outage_num / n
    elif strategy in TWO_ROUND:
        denom = 2.0
    elif strategy == "baseline":
        denom = 1.0
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if abs(denom - pc.rounds_total / n) > 1e-12:
        raise AssertionError(f"{strategy}: rounds_total disagrees with the round model")
    return M * (1.0 - p_out) / denom


def diversity_slope(curve, window: tuple[float, float] | None = None, min_events: int = 0) -> float:
    """Least-squares slope of ``-log10 P`` against ``SNR_dB / 10``.

    ``curve`` holds ``(snr_db, p)`` or ``(snr_db, p, events)`` tuples. The
    window defaults to the top 15 dB of the curve. Points with ``p == 0``
    or fewer than ``min_events`` events are dropped; at least three must
    remain.
    """
    pts = [tuple(c) for c in curve]
    if not pts:
        raise ValueError("empty curve")
    if window is None:
        top = max(p[0] for p in pts)
        window = (top - 15.0, top)
    lo, hi = window
    keep = []
    for p in pts:
        snr, prob = p[0], p[1]
        if not lo - 1e-9 <= snr <= hi + 1e-9 or prob <= 0:
            continue
        if len(p) > 2 and p[2] < min_events:
            continue
        keep.append((snr, prob))
    if len(keep) < 3:
        raise ValueError(f"need at least 3 usable points in {window}, have {len(keep)}")
    x = np.array([k[0] / 10.0 for k in keep])
    y = -np.log10([k[1] for k in keep])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def union_bound_lim_fb(p_d_head: float, p_d_last: float, p_r1: float, p_rd: float, p_def: float) -> float:
    """Bound on lim-FB outage from its marginal events.

    Arguments are the probabilities that the destination's (M-1)-th and
    M-th equations, the relay's best equation and the relay-destination
    link fall below the rate, and the rank-deficiency probability.
    """
    return p_d_head + p_d_last * p_r1 + p_d_last * p_rd + min(p_d_last, p_def)


def union_bound_suf_fb(p_d_head: float, p_d_last: float, p_r_last: float, p_rd: float) -> float:
    """Bound on suf-FB outage; the relay term is its worst (M-th) equation."""
    return p_d_head + p_d_last * p_r_last + p_d_last * p_rd


def union_bounds(comp: ComponentCounts) -> dict:
    """Both union bounds from one SNR point's component counts."""
    pr = comp.probs()
    M = comp.M
    head = pr["d"][M - 2] if M > 1 else 0.0
    last = pr["d"][M - 1]
    return {
        "lim_fb": union_bound_lim_fb(head, last, pr["r"][0], pr["rd"], pr["def"]),
        "suf_fb": union_bound_suf_fb(head, last, pr["r"][M - 1], pr["rd"]),
    }


def per_equation_outage(counts: EquationCounts) -> dict[int, list[tuple[float, float, int]]]:
    """Plain estimates ``{m: [(snr_db, p, events), ...]}`` with ``m`` from 1."""
    out = {}
    for m in range(counts.M):
        out[m + 1] = [
            (snr, counts.fails[snr][m] / counts.trial_num[snr], counts.fails[snr][m])
            for snr in sorted(counts.fails)
        ]
    return out


# Hermite constants gamma_n for real lattices of dimension n (known exactly to n = 8)
_HERMITE = {
    1: 1.0,
    2: 2.0 / math.sqrt(3.0),
    3: 2.0 ** (1.0 / 3.0),
    4: math.sqrt(2.0),
    5: 8.0 ** (1.0 / 5.0),
    6: (64.0 / 3.0) ** (1.0 / 6.0),
    7: 64.0 ** (1.0 / 7.0),
    8: 2.0,
}


def hermite_constant(n: int) -> float:
    try:
        return _HERMITE[n]
    except KeyError:
        raise ValueError(f"Hermite constant known exactly only for 1 <= n <= 8, got {n}") from None


def lemma1_threshold(M: int, R: float) -> float:
    """Largest ``gamma * ||h||^2`` at which the best equation can still fail.

    The real lattice has dimension 2M and squared covolume
    ``1 / (1 + gamma ||h||^2)``, so its shortest squared length is at most
    ``gamma_2M (1 + gamma ||h||^2) ** (-1/M)``; the best equation fails only
    if that exceeds ``2 ** -R``.
    """
    return (hermite_constant(2 * M) * 2.0**R) ** M - 1.0


def lemma1_envelope(M: int, R: float, snr_db) -> np.ndarray:
    """``Pr(||h||^2 < threshold / gamma)`` with ``||h||^2 ~ Gamma(M, 1)``."""
    g = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    return gamma_dist.cdf(lemma1_threshold(M, R) / g, M)


def lemma1_bound_check(M: int, R: float, curve) -> list[bool]:
    """Per point: is the empirical best-equation outage below the envelope?

    ``curve`` holds ``(snr_db, p, ...)`` tuples.
    """
    return [bool(p[1] <= lemma1_envelope(M, R, p[0])) for p in curve]


@dataclass(frozen=True)
class RadialSample:
    """Per-direction outage thresholds of a single receiver.

    Writing ``h = rho * u`` with ``||u|| = 1``, the lattice depends on the
    channel only through ``u`` and ``x = gamma * rho**2``, and every
    successive minimum shrinks as ``x`` grows. Equation ``m`` therefore
    fails exactly when ``x < s[i, m]`` for direction ``i``.
    """

    M: int
    R: float
    s: np.ndarray  # (n, M)
    capped: np.ndarray  # (n, M) bool, threshold beyond the search range


def _threshold_for(u, M, m, thr, lo, hi, iters):
    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        c = 0.5 * (a + b)
        _, norms = kernel.link_minima(u, math.exp(c), M)
        if norms[m] > thr:
            a = c
        else:
            b = c
    return math.exp(0.5 * (a + b))


def sample_equation_thresholds(M: int, R: float, samples: int, seed: int,
                               x_max: float = 1e9, iters: int = 22,
                               equations: int | None = None) -> RadialSample:
    """Draw ``samples`` isotropic directions and locate each equation's threshold.

    ``equations`` limits the work to the first few equations; the remaining
    columns are NaN.

    Thresholds are bracketed below by ``2**R - 1`` (no equation is decodable
    before the point-to-point rate reaches ``R``), above by the Hermite bound
    for the first equation and by ``x_max`` otherwise, and are
    non-decreasing in ``m``. Bisection runs in ``log x``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(M, 7)))
    thr = 2.0 ** (-R)
    lo0 = 2.0**R - 1.0
    s = np.zeros((samples, M))
    capped = np.zeros((samples, M), dtype=bool)
    herm = lemma1_threshold(M, R) if 2 * M in _HERMITE else x_max
    k = M if equations is None else int(equations)
    if not 1 <= k <= M:
        raise ValueError(f"equations must lie in 1..{M}")
    s[:, k:] = np.nan
    for i in range(samples):
        u = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        u /= np.linalg.norm(u)
        lo = lo0
        for m in range(k):
            hi = min(herm, x_max) * (1 + 1e-9) if m == 0 else x_max
            _, norms = kernel.link_minima(u, hi, M)
            if norms[m] > thr:
                s[i, m] = hi
                capped[i, m] = True
            elif lo >= hi:
                s[i, m] = hi
            else:
                s[i, m] = _threshold_for(u, M, m, thr, lo, hi, iters)
            lo = max(lo, s[i, m] * (1 - 1e-9))
    return RadialSample(M=M, R=R, s=s, capped=capped)


def per_equation_conditional(rs: RadialSample, snr_grid_db) -> dict[int, list[tuple[float, float, float]]]:
    """Outage per equation with the gain integrated out.

    ``P_m(gamma) = E_u[F(s_m(u) / gamma)]`` with ``F`` the Gamma(M, 1) CDF
    of ``||h||^2``. Returns ``{m: [(snr_db, p, standard_error), ...]}`` for
    the equations whose thresholds were located.
    """
    out = {}
    n = rs.s.shape[0]
    for m in range(rs.M):
        if np.isnan(rs.s[:, m]).any():
            continue
        pts = []
        for snr in snr_grid_db:
            vals = gamma_dist.cdf(rs.s[:, m] / 10.0 ** (snr / 10.0), rs.M)
            pts.append((float(snr), float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))))
        out[m + 1] = pts
    return out
