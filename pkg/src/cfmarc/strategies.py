"""Outage evaluation of the five cooperation schemes.

Two layers share one set of definitions. The ``eval_*`` functions take a
single :class:`ChannelRealization` and work from exact coefficient vectors;
they are the readable reference. :func:`outcomes_from_facts` applies the
same rules to whole batches of kernel facts and is what sweeps run. Tests
check that the two agree trial by trial.

Every comparison against the target rate is strict: an equation is lost
when its rate is below ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel_py
from .channel import ChannelRealization, ScenarioConfig
from .gaussint import is_full_rank

__all__ = [
    "STRATEGIES",
    "PROPOSED",
    "TWO_ROUND",
    "TrialOutcome",
    "eval_baseline",
    "eval_lim_fb",
    "eval_suf_fb",
    "eval_soussi",
    "eval_insausti",
    "evaluate",
    "outcomes_from_facts",
    "needs_relay_when_direct_ok",
]

STRATEGIES = ("baseline", "lim_fb", "suf_fb", "soussi", "insausti")
PROPOSED = ("lim_fb", "suf_fb")
TWO_ROUND = ("soussi", "insausti")


@dataclass(frozen=True)
class TrialOutcome:
    direct_outage: bool
    overall_outage: bool
    rank_deficient: bool
    rounds_used: int


def _facts(ch: ChannelRealization, cfg: ScenarioConfig) -> dict:
    return _kernel_py.trial_facts(
        ch.h_sd, ch.h_sr, ch.h_rd, ch.gamma_sd, ch.gamma_sr, ch.gamma_rd, cfg.perfect_rd
    )


def _direct_fails(f: dict, R: float) -> bool:
    return f["A_d"].rates[-1] < R


def _head_fails(f: dict, R: float) -> bool:
    # the destination's M-1 best equations; vacuous for a single source
    rates = f["A_d"].rates
    return len(rates) > 1 and rates[-2] < R


def eval_baseline(ch: ChannelRealization, cfg: ScenarioConfig, facts: dict | None = None) -> TrialOutcome:
    f = facts or _facts(ch, cfg)
    e1 = _direct_fails(f, cfg.R)
    return TrialOutcome(e1, e1, False, 1)


def eval_lim_fb(ch: ChannelRealization, cfg: ScenarioConfig, facts: dict | None = None) -> TrialOutcome:
    f = facts or _facts(ch, cfg)
    R = cfg.R
    if not _direct_fails(f, R):
        return TrialOutcome(False, False, False, 1)
    M = len(f["A_d"].vectors)
    a_cop = [f["A_r"].vectors[0]] + list(f["A_d"].vectors[: M - 1])
    rank_def = not is_full_rank(a_cop)
    e2 = _head_fails(f, R) or f["A_r"].rates[0] < R or f["rate_rd"] < R or rank_def
    return TrialOutcome(True, e2, rank_def, 2)


def eval_suf_fb(ch: ChannelRealization, cfg: ScenarioConfig, facts: dict | None = None) -> TrialOutcome:
    f = facts or _facts(ch, cfg)
    R = cfg.R
    if not _direct_fails(f, R):
        return TrialOutcome(False, False, False, 1)
    M = len(f["A_d"].vectors)
    star = f["star"]
    a_cop = [f["A_r"].vectors[star]] + list(f["A_d"].vectors[: M - 1])
    if not is_full_rank(a_cop):
        raise AssertionError("relay selection produced a rank-deficient matrix")
    e2 = _head_fails(f, R) or f["A_r"].rates[star] < R or f["rate_rd"] < R
    return TrialOutcome(True, e2, False, 2)


def eval_soussi(ch: ChannelRealization, cfg: ScenarioConfig, facts: dict | None = None) -> TrialOutcome:
    f = facts or _facts(ch, cfg)
    out = f["soussi"] < cfg.R or f["rate_rd"] < cfg.R
    return TrialOutcome(out, out, False, 2)


def eval_insausti(ch: ChannelRealization, cfg: ScenarioConfig, facts: dict | None = None) -> TrialOutcome:
    f = facts or _facts(ch, cfg)
    R = cfg.R
    coop_ok = (
        f["A_r"].rates[0] >= R
        and f["rate_rd"] >= R
        and all(r >= R for r in f["ins_rates"])
    )
    e1 = _direct_fails(f, R)
    return TrialOutcome(e1, e1 and not coop_ok, False, 2)


_EVAL = {
    "baseline": eval_baseline,
    "lim_fb": eval_lim_fb,
    "suf_fb": eval_suf_fb,
    "soussi": eval_soussi,
    "insausti": eval_insausti,
}


def evaluate(strategy: str, ch: ChannelRealization, cfg: ScenarioConfig) -> TrialOutcome:
    try:
        fn = _EVAL[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}") from None
    return fn(ch, cfg)


def needs_relay_when_direct_ok(strategies) -> bool:
    """Whether any of ``strategies`` can be in outage although direct decoding works."""
    return "soussi" in strategies


def outcomes_from_facts(facts: dict, R: float, strategy: str) -> dict[str, np.ndarray]:
    """Vectorised outcomes for a batch.

    Returns boolean arrays ``direct``, ``outage``, ``rank_def`` and an
    integer array ``rounds``.
    """
    d = facts["rates_d"]
    n, M = d.shape
    e1 = d[:, M - 1] < R
    head = d[:, M - 2] < R if M > 1 else np.zeros(n, dtype=bool)
    rd = facts["rate_rd"] < R
    no = np.zeros(n, dtype=bool)
    if strategy == "baseline":
        return dict(direct=e1, outage=e1, rank_def=no, rounds=np.ones(n, dtype=np.int64))
    if strategy in PROPOSED:
        if strategy == "lim_fb":
            rank_def = e1 & facts["rank_def"]
            e2 = head | (facts["rates_r"][:, 0] < R) | rd | rank_def
        else:
            rank_def = no
            e2 = head | (facts["rate_r_star"] < R) | rd
        return dict(direct=e1, outage=e1 & e2, rank_def=rank_def, rounds=1 + e1.astype(np.int64))
    two = np.full(n, 2, dtype=np.int64)
    if strategy == "soussi":
        out = (facts["soussi"] < R) | rd
        return dict(direct=out, outage=out, rank_def=no, rounds=two)
    if strategy == "insausti":
        coop_ok = (facts["rates_r"][:, 0] >= R) & ~rd & np.all(facts["ins_rates_d"] >= R, axis=1)
        return dict(direct=e1, outage=e1 & ~coop_ok, rank_def=no, rounds=two)
    raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
