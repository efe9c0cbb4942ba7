"""Monte Carlo sweep engine.

Every (SNR point, batch) pair is an independent unit of work: its fading
comes from its own stream (see :mod:`cfmarc.channel`) and all requested
strategies are evaluated on that same draw. Units are merged by adding
counters, so the result does not depend on how many workers ran them.

Adaptive mode keeps drawing batches at an SNR point until every strategy
has seen ``target_events`` outages or hit the trial cap. Stopping is
decided batch by batch in index order, so adaptive runs are as
reproducible as fixed ones.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .channel import BATCH, ScenarioConfig, draw_batch, scenario_snrs
from .strategies import PROPOSED, STRATEGIES, needs_relay_when_direct_ok, outcomes_from_facts

__all__ = [
    "PointCounts",
    "ComponentCounts",
    "SweepResult",
    "AdaptivePlan",
    "EquationCounts",
    "worker_count",
    "run_sweep",
    "adaptive_trials",
    "per_equation_sweep",
    "RankCounts",
    "rank_deficiency_sweep",
]


@dataclass
class PointCounts:
    """Counters of one strategy at one SNR point."""

    trial_num: int = 0
    outage_num: int = 0
    direct_outage_num: int = 0
    rank_fail_num: int = 0
    rounds_total: int = 0
    censored: bool = False

    def add(self, other: "PointCounts") -> None:
        self.trial_num += other.trial_num
        self.outage_num += other.outage_num
        self.direct_outage_num += other.direct_outage_num
        self.rank_fail_num += other.rank_fail_num
        self.rounds_total += other.rounds_total

    def check(self, strategy: str) -> None:
        if not 0 <= self.outage_num <= self.trial_num:
            raise AssertionError(f"{strategy}: outage count out of range")
        if strategy in PROPOSED and self.outage_num > self.direct_outage_num:
            raise AssertionError(f"{strategy}: outage without direct outage")
        if strategy == "lim_fb" and self.rank_fail_num > self.direct_outage_num:
            raise AssertionError("lim_fb: rank failure outside round two")
        if not self.trial_num <= self.rounds_total <= 2 * self.trial_num:
            raise AssertionError(f"{strategy}: round count out of range")


@dataclass
class ComponentCounts:
    """Marginal event counts behind the union bounds, one SNR point.

    ``d_fail[m]`` and ``r_fail[m]`` count trials whose (m+1)-th best
    equation at the destination or relay is below the target rate;
    ``rank_def`` counts relay best equations dependent on the destination's
    M-1 best, on every trial (not only when round two runs).
    """

    M: int
    trial_num: int = 0
    d_fail: list = field(default_factory=list)
    r_fail: list = field(default_factory=list)
    rd_fail: int = 0
    r_star_fail: int = 0
    rank_def: int = 0

    def __post_init__(self):
        self.d_fail = list(self.d_fail) or [0] * self.M
        self.r_fail = list(self.r_fail) or [0] * self.M

    def add(self, other: "ComponentCounts") -> None:
        self.trial_num += other.trial_num
        self.d_fail = [a + b for a, b in zip(self.d_fail, other.d_fail)]
        self.r_fail = [a + b for a, b in zip(self.r_fail, other.r_fail)]
        self.rd_fail += other.rd_fail
        self.r_star_fail += other.r_star_fail
        self.rank_def += other.rank_def

    def probs(self) -> dict:
        n = self.trial_num
        return {
            "d": [x / n for x in self.d_fail],
            "r": [x / n for x in self.r_fail],
            "rd": self.rd_fail / n,
            "r_star": self.r_star_fail / n,
            "def": self.rank_def / n,
        }


@dataclass
class SweepResult:
    cfg: ScenarioConfig
    strategies: tuple
    points: dict  # strategy -> {snr_db: PointCounts}
    components: dict | None = None  # snr_db -> ComponentCounts

    def counts(self, strategy: str, snr_db: float) -> PointCounts:
        return self.points[strategy][float(snr_db)]

    def snrs(self) -> list[float]:
        return list(self.cfg.snr_grid_db)


@dataclass(frozen=True)
class AdaptivePlan:
    target_events: int
    max_trials: int
    min_trials: int = BATCH

    def __post_init__(self):
        if self.target_events < 1:
            raise ValueError("target_events must be at least 1")
        if self.max_trials < self.min_trials or self.min_trials < 1:
            raise ValueError("need 1 <= min_trials <= max_trials")


def worker_count(workers: int | None = None) -> int:
    """Explicit value, else ``CFMARC_WORKERS``, else the CPU count."""
    if workers is None:
        env = os.environ.get("CFMARC_WORKERS")
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ValueError(f"CFMARC_WORKERS must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError("worker count must be positive")
    return workers


def _batch_job(cfg: ScenarioConfig, snr_db: float, b: int, n_use: int, strategies: tuple,
               components: bool):
    """Counters of one batch (first ``n_use`` trials of batch ``b``)."""
    h_sd, h_sr, h_rd = draw_batch(cfg.seed, snr_db, b, cfg.M)
    if n_use < BATCH:
        h_sd, h_sr, h_rd = h_sd[:n_use], h_sr[:n_use], h_rd[:n_use]
    g_sd, g_sr, g_rd = scenario_snrs(cfg, snr_db)
    R = cfg.R
    if components:
        # components need every rate and the unconditional rank flag
        facts = kernel.evaluate_batch(h_sd, h_sr, h_rd, g_sd, g_sr, g_rd, cfg.perfect_rd)
    else:
        facts = kernel.evaluate_batch(
            h_sd, h_sr, h_rd, g_sd, g_sr, g_rd, cfg.perfect_rd,
            target_rate=R, need_relay=needs_relay_when_direct_ok(strategies),
        )
    out = {}
    for s in strategies:
        o = outcomes_from_facts(facts, R, s)
        out[s] = PointCounts(
            trial_num=n_use,
            outage_num=int(o["outage"].sum()),
            direct_outage_num=int(o["direct"].sum()),
            rank_fail_num=int(o["rank_def"].sum()),
            rounds_total=int(o["rounds"].sum()),
        )
    comp = None
    if components:
        comp = ComponentCounts(
            M=cfg.M,
            trial_num=n_use,
            d_fail=[int(x) for x in (facts["rates_d"] < R).sum(axis=0)],
            r_fail=[int(x) for x in (facts["rates_r"] < R).sum(axis=0)],
            rd_fail=int((facts["rate_rd"] < R).sum()),
            r_star_fail=int((facts["rate_r_star"] < R).sum()),
            rank_def=int(facts["rank_def"].sum()),
        )
    return out, comp


def _star(args):
    return _batch_job(*args)


class _Runner:
    """Maps batch jobs inline or over a process pool."""

    def __init__(self, workers: int):
        self.workers = workers
        self.pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

    def map(self, jobs: list) -> list:
        if self.pool is None:
            return [_star(j) for j in jobs]
        chunk = max(1, len(jobs) // (4 * self.workers))
        return list(self.pool.map(_star, jobs, chunksize=chunk))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _validate(cfg: ScenarioConfig, strategies) -> tuple:
    strategies = tuple(strategies)
    bad = [s for s in strategies if s not in STRATEGIES]
    if bad:
        raise ValueError(f"unknown strategies {bad}; choose from {STRATEGIES}")
    if not cfg.snr_grid_db:
        raise ValueError("empty SNR grid")
    return strategies


def run_sweep(cfg: ScenarioConfig, strategies=STRATEGIES, *, components: bool = False,
              adaptive: AdaptivePlan | None = None, workers: int | None = None) -> SweepResult:
    """Outage counters for ``strategies`` over the SNR grid of ``cfg``.

    Fixed mode runs exactly ``cfg.trials`` trials per point. With
    ``adaptive`` set, the trial count per point and strategy follows the
    plan instead. ``components`` adds the marginal event counts used by the
    union bounds (slower: every trial is then resolved exactly).
    """
    strategies = _validate(cfg, strategies)
    if cfg.trials < 1:
        raise ValueError("trial budget must be positive")
    runner = _Runner(worker_count(workers))
    try:
        if adaptive is None:
            points, comps = _fixed(cfg, strategies, components, runner)
        else:
            points, comps = _adaptive(cfg, strategies, components, adaptive, runner)
    finally:
        runner.close()
    for s in strategies:
        for pc in points[s].values():
            pc.check(s)
    return SweepResult(cfg=cfg, strategies=strategies, points=points,
                       components=comps if components else None)


def _fixed(cfg, strategies, components, runner):
    jobs = []
    for snr in cfg.snr_grid_db:
        nb = math.ceil(cfg.trials / BATCH)
        for b in range(nb):
            n_use = min(BATCH, cfg.trials - b * BATCH)
            jobs.append((cfg, snr, b, n_use, strategies, components))
    results = runner.map(jobs)
    points = {s: {snr: PointCounts() for snr in cfg.snr_grid_db} for s in strategies}
    comps = {snr: ComponentCounts(cfg.M) for snr in cfg.snr_grid_db}
    for job, (out, comp) in zip(jobs, results):
        snr = job[1]
        for s in strategies:
            points[s][snr].add(out[s])
        if comp is not None:
            comps[snr].add(comp)
    return points, comps


def _adaptive(cfg, strategies, components, plan: AdaptivePlan, runner):
    points = {s: {} for s in strategies}
    comps = {}
    wave = runner.workers
    for snr in cfg.snr_grid_db:
        acc = {s: PointCounts() for s in strategies}
        comp = ComponentCounts(cfg.M)
        active = list(strategies)
        b = 0
        while active:
            jobs = [(cfg, snr, b + k, BATCH, tuple(active), components) for k in range(wave)]
            for out, c in runner.map(jobs):
                if not active:
                    break
                for s in list(active):
                    acc[s].add(out[s])
                    done, capped = _stop(acc[s], plan)
                    if done or capped:
                        acc[s].censored = capped and acc[s].outage_num < plan.target_events
                        active.remove(s)
                if c is not None:
                    comp.add(c)
            b += wave
        for s in strategies:
            points[s][snr] = acc[s]
        comps[snr] = comp
    return points, comps


def _stop(pc: PointCounts, plan: AdaptivePlan) -> tuple[bool, bool]:
    enough = pc.outage_num >= plan.target_events and pc.trial_num >= plan.min_trials
    capped = pc.trial_num + BATCH > plan.max_trials
    return enough, capped


def adaptive_trials(cfg: ScenarioConfig, target_events: int, strategies=STRATEGIES,
                    max_trials: int = 10**7, workers: int | None = None) -> dict:
    """Trial counts the adaptive mode settles on, per strategy and SNR point.

    Returns ``{strategy: {snr_db: (trial_num, censored)}}``.
    """
    plan = AdaptivePlan(target_events=target_events, max_trials=max_trials)
    res = run_sweep(cfg, strategies, adaptive=plan, workers=workers)
    return {s: {snr: (pc.trial_num, pc.censored) for snr, pc in res.points[s].items()}
            for s in res.strategies}


@dataclass
class EquationCounts:
    """Per-equation outage counts of a single compute-and-forward receiver."""

    M: int
    R: float
    trial_num: dict  # snr_db -> int
    fails: dict  # snr_db -> list of M counts (equation m below the target rate)


def _equation_job(seed, snr_db, b, n_use, M, R):
    h, _, _ = draw_batch(seed, snr_db, b, M)
    h = h[:n_use]
    rates = kernel.link_rates_batch(h, 10.0 ** (snr_db / 10.0), target_rate=R)
    return [int(x) for x in (rates < R).sum(axis=0)]


def _equation_star(args):
    return _equation_job(*args)


def per_equation_sweep(M: int, R: float, snr_grid_db, trials: int, seed: int,
                       workers: int | None = None, adaptive: AdaptivePlan | None = None,
                       track=None) -> EquationCounts:
    """Plain Monte Carlo of ``Pr(R_cp^(m) < R)`` for a receiver with no relay.

    In adaptive mode a point stops once every equation listed in ``track``
    (1-based, default all) has ``target_events`` failures, or at the cap.
    """
    if trials < 1:
        raise ValueError("trial budget must be positive")
    grid = [float(x) for x in snr_grid_db]
    track = list(range(1, M + 1)) if track is None else [int(m) for m in track]
    if not track or any(not 1 <= m <= M for m in track):
        raise ValueError(f"tracked equations must lie in 1..{M}")
    nw = worker_count(workers)
    pool = ProcessPoolExecutor(max_workers=nw) if nw > 1 else None

    def run(jobs):
        if pool is None:
            return [_equation_star(j) for j in jobs]
        return list(pool.map(_equation_star, jobs, chunksize=max(1, len(jobs) // (4 * nw))))

    n_used, fails = {}, {}
    try:
        for snr in grid:
            if adaptive is None:
                jobs = [(seed, snr, b, min(BATCH, trials - b * BATCH), M, R)
                        for b in range(math.ceil(trials / BATCH))]
                acc = [0] * M
                for r in run(jobs):
                    acc = [x + y for x, y in zip(acc, r)]
                n_used[snr], fails[snr] = trials, acc
                continue
            n, acc, b, done = 0, [0] * M, 0, False
            while not done:
                for r in run([(seed, snr, b + j, BATCH, M, R) for j in range(nw)]):
                    n += BATCH
                    acc = [x + y for x, y in zip(acc, r)]
                    k = min(acc[m - 1] for m in track)
                    enough, capped = _stop(PointCounts(trial_num=n, outage_num=k), adaptive)
                    if enough or capped:
                        done = True
                        break
                b += nw
            n_used[snr], fails[snr] = n, acc
    finally:
        if pool is not None:
            pool.shutdown()
    return EquationCounts(M=M, R=R, trial_num=n_used, fails=fails)


@dataclass
class RankCounts:
    """Unconditional rank-deficiency counts for one relay position."""

    delta_sr: float
    trial_num: dict  # snr_db -> int
    rank_def: dict  # snr_db -> int


def _rank_job(cfg: ScenarioConfig, snr_db: float, b: int, n_use: int) -> int:
    h_sd, h_sr, _ = draw_batch(cfg.seed, snr_db, b, cfg.M)
    g_sd, g_sr, _ = scenario_snrs(cfg, snr_db)
    return int(kernel.rank_def_batch(h_sd[:n_use], h_sr[:n_use], g_sd, g_sr).sum())


def _rank_star(args):
    return _rank_job(*args)


def rank_deficiency_sweep(cfg: ScenarioConfig, adaptive: AdaptivePlan | None = None,
                          workers: int | None = None) -> RankCounts:
    """How often the relay's best equation duplicates the destination's span.

    Counted on every trial, whether or not direct decoding failed; the
    event is a property of the coefficient vectors alone, so it does not
    depend on the target rate or on the relay-destination link. Uses the
    same fading draws as :func:`run_sweep` with the same seed.
    """
    if cfg.M < 2:
        raise ValueError("rank deficiency needs at least two sources")
    runner_workers = worker_count(workers)
    pool = ProcessPoolExecutor(max_workers=runner_workers) if runner_workers > 1 else None

    def run(jobs):
        if pool is None:
            return [_rank_star(j) for j in jobs]
        return list(pool.map(_rank_star, jobs, chunksize=max(1, len(jobs) // (4 * runner_workers))))

    trials, counts = {}, {}
    try:
        for snr in cfg.snr_grid_db:
            if adaptive is None:
                nb = math.ceil(cfg.trials / BATCH)
                jobs = [(cfg, snr, b, min(BATCH, cfg.trials - b * BATCH)) for b in range(nb)]
                trials[snr] = cfg.trials
                counts[snr] = sum(run(jobs))
                continue
            n = k = b = 0
            done = False
            while not done:
                for c in run([(cfg, snr, b + j, BATCH) for j in range(runner_workers)]):
                    n += BATCH
                    k += c
                    pc = PointCounts(trial_num=n, outage_num=k)
                    enough, capped = _stop(pc, adaptive)
                    if enough or capped:
                        done = True
                        break
                b += runner_workers
            trials[snr], counts[snr] = n, k
    finally:
        if pool is not None:
            pool.shutdown()
    return RankCounts(delta_sr=cfg.delta_sr, trial_num=trials, rank_def=counts)
