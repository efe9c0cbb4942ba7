import numpy as np
import pytest

from cfmarc.channel import BATCH, draw_batch, scenario, scenario_snrs
from cfmarc import kernel
from cfmarc.montecarlo import (
    AdaptivePlan,
    PointCounts,
    adaptive_trials,
    per_equation_sweep,
    rank_deficiency_sweep,
    run_sweep,
    worker_count,
)
from cfmarc.strategies import STRATEGIES


def cfg(**kw):
    base = dict(M=2, R=2.0, snr_grid_db=(10.0, 20.0), trials=5000, seed=21)
    base.update(kw)
    return scenario(base.pop("scen", "scen2"), **base)


def flat(res):
    return {(s, snr): vars(pc) for s in res.strategies for snr, pc in res.points[s].items()}


def test_fixed_sweep_is_deterministic_across_workers():
    a = run_sweep(cfg(), workers=1, components=True)
    b = run_sweep(cfg(), workers=2, components=True)
    assert flat(a) == flat(b)
    assert {k: vars(v) for k, v in a.components.items()} == {k: vars(v) for k, v in b.components.items()}
    assert a.counts("lim_fb", 10.0).trial_num == 5000


def test_adaptive_sweep_is_deterministic_across_workers():
    plan = AdaptivePlan(target_events=40, max_trials=6 * BATCH)
    a = run_sweep(cfg(snr_grid_db=(20.0, 30.0)), adaptive=plan, workers=1)
    b = run_sweep(cfg(snr_grid_db=(20.0, 30.0)), adaptive=plan, workers=3)
    assert flat(a) == flat(b)


def test_counts_match_direct_batch_evaluation():
    c = cfg(trials=BATCH + 100, snr_grid_db=(15.0,))
    res = run_sweep(c, components=True, workers=1)
    d1 = 0
    rank = 0
    for b, n in ((0, BATCH), (1, 100)):
        h = [x[:n] for x in draw_batch(c.seed, 15.0, b, 2)]
        f = kernel.evaluate_batch(*h, *scenario_snrs(c, 15.0))
        d1 += int((f["rates_d"][:, 1] < 2.0).sum())
        rank += int(f["rank_def"].sum())
    assert res.counts("baseline", 15.0).outage_num == d1
    assert res.components[15.0].d_fail[1] == d1
    assert res.components[15.0].rank_def == rank
    assert res.counts("lim_fb", 15.0).rank_fail_num <= rank


def test_counter_invariants():
    res = run_sweep(cfg(scen="scen3", snr_grid_db=(5.0, 15.0, 25.0)), workers=1)
    for s in STRATEGIES:
        for pc in res.points[s].values():
            pc.check(s)
            assert pc.trial_num <= pc.rounds_total <= 2 * pc.trial_num
    with pytest.raises(AssertionError):
        PointCounts(trial_num=10, outage_num=3, direct_outage_num=2, rounds_total=12).check("lim_fb")


def test_no_outage_at_very_high_snr():
    res = run_sweep(cfg(snr_grid_db=(80.0,), trials=10**4), strategies=("baseline",), workers=1)
    assert res.counts("baseline", 80.0).outage_num == 0


def test_bad_inputs():
    with pytest.raises(ValueError):
        run_sweep(cfg(), strategies=("nope",))
    with pytest.raises(ValueError):
        AdaptivePlan(target_events=0, max_trials=10)
    with pytest.raises(ValueError):
        per_equation_sweep(2, 2.0, (10.0,), 0, 1)
    with pytest.raises(ValueError):
        rank_deficiency_sweep(scenario("scen2", M=1, R=2.0))


def test_adaptive_trial_counts():
    # P ~ 1e-2 at 30 dB for direct decoding, so ~1e4 trials for 100 events
    counts = adaptive_trials(cfg(snr_grid_db=(30.0,)), 100, strategies=("baseline",), max_trials=10**5,
                             workers=1)
    n, censored = counts["baseline"][30.0]
    assert 2 * BATCH <= n <= 4 * 10**4 and not censored
    counts = adaptive_trials(cfg(snr_grid_db=(90.0,)), 5, strategies=("baseline",), max_trials=3 * BATCH,
                             workers=1)
    n, censored = counts["baseline"][90.0]
    assert censored and n <= 3 * BATCH


def test_worker_count(monkeypatch):
    monkeypatch.setenv("CFMARC_WORKERS", "3")
    assert worker_count() == 3 and worker_count(1) == 1
    monkeypatch.setenv("CFMARC_WORKERS", "zero")
    with pytest.raises(ValueError):
        worker_count()


def test_equation_and_rank_sweeps():
    ec = per_equation_sweep(2, 2.0, (10.0, 20.0), 3000, 5, workers=1)
    assert ec.trial_num == {10.0: 3000, 20.0: 3000}
    for snr in (10.0, 20.0):
        f1, f2 = ec.fails[snr]
        assert f1 <= f2
    h, _, _ = draw_batch(5, 10.0, 0, 2)
    rates = kernel.link_rates_batch(h[:3000], 10.0)
    assert ec.fails[10.0] == [int(x) for x in (rates < 2.0).sum(axis=0)]
    rc = rank_deficiency_sweep(cfg(scen="scen3", perfect_rd=True, trials=4000), workers=1)
    assert rc.trial_num[10.0] == 4000 and 0 < rc.rank_def[10.0] < 4000
    again = rank_deficiency_sweep(cfg(scen="scen3", perfect_rd=True, trials=4000), workers=2)
    assert again.rank_def == rc.rank_def
