import os
import subprocess
import sys

import numpy as np
import pytest

from cfmarc import _kernel_py, kernel
from cfmarc.channel import draw_batch, scenario, scenario_snrs
from cfmarc.strategies import STRATEGIES, outcomes_from_facts

compiled = pytest.importorskip("cfmarc._kernel")


def batch(M, snr_db, n=256, seed=5, scen="scen2"):
    cfg = scenario(scen, M=M, R=2.0, snr_grid_db=(snr_db,), trials=n, seed=seed)
    h_sd, h_sr, h_rd = draw_batch(seed, snr_db, 0, M)
    return (h_sd[:n], h_sr[:n], h_rd[:n]), scenario_snrs(cfg, snr_db)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
@pytest.mark.parametrize("snr_db", [5.0, 20.0, 35.0])
@pytest.mark.parametrize("perfect_rd", [False, True])
def test_exact_mode_matches_python(M, snr_db, perfect_rd):
    n = 64 if M < 4 else 24
    h, g = batch(M, snr_db, n)
    fc, failed = compiled.evaluate_batch(*h, *g, perfect_rd=perfect_rd)
    fp, _ = _kernel_py.evaluate_batch(*h, *g, perfect_rd=perfect_rd)
    ok = np.setdiff1d(np.arange(n), failed)
    for key in ("rates_d", "rates_r", "rate_rd", "rate_r_star", "ins_rates_d", "soussi"):
        assert np.allclose(fc[key][ok], fp[key][ok], rtol=1e-9, atol=1e-12), key
    assert np.array_equal(fc["rank_def"][ok], fp["rank_def"][ok])
    assert not fc["certified"].any() and not fc["relay_skipped"].any()


@pytest.mark.parametrize("M", [2, 3])
@pytest.mark.parametrize("scen", ["scen1", "scen2", "scen3"])
@pytest.mark.parametrize("snr_db", [10.0, 25.0, 40.0])
def test_fast_modes_give_identical_outcomes(M, scen, snr_db):
    h, g = batch(M, snr_db, 512 if M == 2 else 192, scen=scen)
    exact = kernel.evaluate_batch(*h, *g)
    cert = kernel.evaluate_batch(*h, *g, target_rate=2.0)
    lazy = kernel.evaluate_batch(*h, *g, target_rate=2.0, need_relay=False)
    for s in STRATEGIES:
        ref = outcomes_from_facts(exact, 2.0, s)
        for facts in (cert, lazy):
            if facts is lazy and s == "soussi":
                continue
            got = outcomes_from_facts(facts, 2.0, s)
            for k in ("direct", "outage", "rounds"):
                assert np.array_equal(got[k], ref[k]), (s, k)
            if s == "lim_fb":
                # the conditional rank event is what lim-FB records
                assert np.array_equal(got["rank_def"], ref["rank_def"])


@pytest.mark.parametrize("M", [2, 3, 4])
def test_rank_batch_matches_python_and_exact_facts(M):
    n = 128 if M < 4 else 32
    h, g = batch(M, 15.0, n, scen="scen3")
    flags = kernel.rank_def_batch(h[0], h[1], g[0], g[1])
    ref, _ = _kernel_py.rank_def_batch(h[0], h[1], g[0], g[1])
    assert np.array_equal(flags, ref)
    assert np.array_equal(flags, kernel.evaluate_batch(*h, *g)["rank_def"])
    assert ref.any()  # the case is exercised


@pytest.mark.parametrize("M", [1, 2, 3])
def test_link_rates_parity(M):
    h, _ = batch(M, 30.0, 200)
    snr = 10 ** 3.0
    ref, _ = _kernel_py.link_rates_batch(h[0], snr)
    assert np.allclose(kernel.link_rates_batch(h[0], snr), ref, rtol=1e-9, atol=1e-12)
    fast = kernel.link_rates_batch(h[0], snr, target_rate=2.0)
    assert np.array_equal(fast < 2.0, ref < 2.0)


def test_link_minima_parity_with_given():
    h = np.array([0.3 + 1.2j, -0.8 + 0.1j, 0.5 - 0.5j])
    vc, nc = kernel.link_minima(h, 500.0, 3)
    vp, np_ = _kernel_py.link_minima_py(h, 500.0, 3)
    assert np.allclose(nc, np_, rtol=1e-9)
    gc, gn = kernel.link_minima(h, 500.0, 2, given=[vc[0]])
    pc, pn = _kernel_py.link_minima_py(h, 500.0, 2, given=[vp[0]])
    assert np.allclose(gn, pn, rtol=1e-9)


def test_lazy_mode_needs_target():
    h, g = batch(2, 20.0, 8)
    with pytest.raises(ValueError):
        kernel.evaluate_batch(*h, *g, need_relay=False)


def _backend_in_subprocess(value):
    env = dict(os.environ, CFMARC_BACKEND=value)
    return subprocess.run([sys.executable, "-c", "from cfmarc import kernel; print(kernel.BACKEND)"],
                          env=env, capture_output=True, text=True)


def test_backend_selection():
    assert kernel.BACKEND in ("compiled", "python")
    assert _backend_in_subprocess("python").stdout.strip() == "python"
    assert _backend_in_subprocess("compiled").stdout.strip() == "compiled"
    assert _backend_in_subprocess("bogus").returncode != 0
    assert kernel.backend_for(kernel.COMPILED_MAX_M + 1) == "python"
