import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chi2

from cfmarc import kernel
from cfmarc.analysis import (
    diversity_slope,
    hermite_constant,
    lemma1_bound_check,
    lemma1_envelope,
    lemma1_threshold,
    outage_prob,
    per_equation_conditional,
    per_equation_outage,
    sample_equation_thresholds,
    standard_error,
    throughput,
    union_bound_lim_fb,
    union_bound_suf_fb,
    union_bounds,
    wilson_interval,
)
from cfmarc.montecarlo import ComponentCounts, EquationCounts, PointCounts, per_equation_sweep


def test_outage_prob_examples():
    assert outage_prob(PointCounts(trial_num=1000, rounds_total=1000)) == 0.0
    assert outage_prob(PointCounts(trial_num=1000, outage_num=250, rounds_total=1000)) == 0.25
    with pytest.raises(ValueError):
        outage_prob(PointCounts())
    assert standard_error(0.25, 100) == pytest.approx(math.sqrt(0.25 * 0.75 / 100))


def test_throughput_examples():
    perfect = PointCounts(trial_num=100, rounds_total=100)
    assert throughput(perfect, "lim_fb", M=2) == 2.0
    assert throughput(perfect, "baseline", M=2) == 2.0
    dead = PointCounts(trial_num=100, outage_num=100, direct_outage_num=100, rounds_total=200)
    assert throughput(dead, "suf_fb", M=2) == 0.0
    two = PointCounts(trial_num=100, outage_num=10, direct_outage_num=10, rounds_total=200)
    assert throughput(two, "soussi", M=2) == pytest.approx(0.9)
    mixed = PointCounts(trial_num=100, outage_num=5, direct_outage_num=20, rounds_total=120)
    assert throughput(mixed, "lim_fb", M=2) == pytest.approx(2 * 0.95 / 1.2)
    with pytest.raises(AssertionError):
        throughput(PointCounts(trial_num=100, direct_outage_num=20, rounds_total=100), "lim_fb", M=2)
    with pytest.raises(ValueError):
        throughput(perfect, "lim_fb")


@given(st.integers(1, 4), st.integers(0, 1000), st.integers(1, 1000), st.integers(1, 1000))
def test_throughput_range(M, k_out, k_dir, n):
    k_dir = min(k_dir, n)
    k_out = min(k_out, k_dir)
    pc = PointCounts(trial_num=n, outage_num=k_out, direct_outage_num=k_dir, rounds_total=n + k_dir)
    t = throughput(pc, "lim_fb", M=M)
    assert M * (1 - k_out / n) / 2 - 1e-12 <= t <= M


def test_slope_on_power_laws():
    snr = np.arange(10.0, 41.0, 5.0)
    g = 10 ** (snr / 10)
    assert diversity_slope(list(zip(snr, g**-2.0))) == pytest.approx(2.0, abs=1e-9)
    assert diversity_slope(list(zip(snr, 0.3 / g))) == pytest.approx(1.0, abs=1e-9)
    # default window keeps the top 15 dB only
    bent = list(zip(snr, np.where(snr < 25, 1e-1, g**-3.0)))
    assert diversity_slope(bent) == pytest.approx(3.0, abs=1e-9)
    assert diversity_slope(bent, window=(25, 40)) == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ValueError):
        diversity_slope([(30, 1e-3, 5), (35, 1e-4, 5), (40, 1e-5, 50)], min_events=30)
    with pytest.raises(ValueError):
        diversity_slope([(30, 0.0), (35, 1e-4), (40, 1e-5)])


def test_union_bound_examples():
    assert union_bound_lim_fb(0, 0, 0, 0, 0) == 0
    assert union_bound_lim_fb(0.1, 0.2, 0.05, 0.05, 0.01) == pytest.approx(0.13)
    assert union_bound_suf_fb(0, 0, 0, 0) == 0
    assert union_bound_suf_fb(0.1, 0.2, 0.3, 0.05) == pytest.approx(0.17)
    comp = ComponentCounts(M=2, trial_num=100, d_fail=[10, 20], r_fail=[5, 30], rd_fail=5, r_star_fail=6,
                           rank_def=1)
    b = union_bounds(comp)
    assert b["lim_fb"] == pytest.approx(0.13) and b["suf_fb"] == pytest.approx(0.17)


def test_wilson_interval():
    lo, hi = wilson_interval(100, 10**6)
    assert (hi - lo) / 2 / 1e-4 == pytest.approx(0.196, abs=0.01)
    assert wilson_interval(0, 50)[0] == 0.0
    with pytest.raises(ValueError):
        wilson_interval(5, 3)


def test_hermite_and_envelope():
    assert hermite_constant(2) == pytest.approx(2 / math.sqrt(3))
    assert hermite_constant(4) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        hermite_constant(9)
    for M in (1, 2, 3, 4):
        t = lemma1_threshold(M, 2.0)
        for snr in (0.0, 20.0, 40.0):
            # 2 ||h||^2 is chi-square with 2M degrees of freedom
            ref = chi2.cdf(2 * t / 10 ** (snr / 10), 2 * M)
            assert lemma1_envelope(M, 2.0, snr) == pytest.approx(ref, rel=1e-10)
    assert lemma1_envelope(2, 2.0, 200.0) < 1e-30
    assert lemma1_bound_check(2, 2.0, [(10.0, 0.0), (10.0, 1.0)]) == [True, False]


def test_per_equation_outage_format():
    ec = EquationCounts(M=2, R=2.0, trial_num={10.0: 100}, fails={10.0: [3, 40]})
    assert per_equation_outage(ec) == {1: [(10.0, 0.03, 3)], 2: [(10.0, 0.4, 40)]}


def test_thresholds_are_exact_crossings():
    rs = sample_equation_thresholds(2, 2.0, 30, seed=3)
    assert (rs.s[:, 0] <= rs.s[:, 1] * (1 + 1e-6)).all()
    assert (rs.s[:, 0] >= 3.0 - 1e-9).all()
    assert (rs.s[:, 0] <= lemma1_threshold(2, 2.0) * (1 + 1e-6)).all()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=3, spawn_key=(2, 7)))
    for i in range(5):
        u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        u /= np.linalg.norm(u)
        for m in range(2):
            if rs.capped[i, m]:
                continue
            _, above = kernel.link_minima(u, rs.s[i, m] * 1.001, 2)
            _, below = kernel.link_minima(u, rs.s[i, m] * 0.999, 2)
            assert above[m] <= 0.25 < below[m]
    part = sample_equation_thresholds(3, 2.0, 5, seed=3, equations=1)
    assert np.isnan(part.s[:, 1:]).all()
    assert set(per_equation_conditional(part, [20.0])) == {1}


def test_conditional_estimator_agrees_with_plain_sampling():
    grid = (10.0, 15.0)
    ec = per_equation_sweep(2, 2.0, grid, 40000, 9, workers=1)
    cond = per_equation_conditional(sample_equation_thresholds(2, 2.0, 3000, seed=9), grid)
    plain = per_equation_outage(ec)
    for m in (1, 2):
        for (snr, p, k), (_, pc, se) in zip(plain[m], cond[m]):
            se_plain = math.sqrt(p * (1 - p) / 40000)
            assert abs(p - pc) < 4 * math.hypot(se, se_plain), (m, snr, p, pc)
