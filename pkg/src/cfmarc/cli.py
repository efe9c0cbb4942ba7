"""Command-line front end.

``cfmarc sweep --config FILE --out DIR``
    Sweep a scenario described by a key=value config file.
``cfmarc figure NAME --seed S --out DIR``
    Canned experiments ``fig2`` ... ``fig8``.
``cfmarc analyze ...``
    Slopes, throughput, union bounds and envelope checks from stored tables.

Exit status is 0 on success, 1 on a user error (bad arguments, config or
paths) and 2 on an internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, kernel
from .analysis import (
    diversity_slope,
    lemma1_bound_check,
    lemma1_envelope,
    per_equation_conditional,
    per_equation_outage,
    sample_equation_thresholds,
    throughput,
    union_bounds,
    wilson_interval,
)
from .channel import RELAY_POSITIONS, ScenarioConfig, scenario
from .montecarlo import AdaptivePlan, per_equation_sweep, rank_deficiency_sweep, run_sweep
from .strategies import STRATEGIES
from .tables import (
    STRATEGY_COLUMNS,
    component_rows,
    components_from_table,
    config_from_mapping,
    config_hash,
    config_text,
    equation_rows,
    equations_from_table,
    parse_config,
    parse_grid,
    points_from_table,
    rank_rows,
    ranks_from_table,
    read_table,
    strategy_rows,
    threshold_rows,
    thresholds_from_table,
    write_table,
)

__all__ = ["main", "build_parser", "FIGURES"]

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8")
DEFAULT_GRID = "5:40:2.5"


class UserError(Exception):
    """Problem with the invocation rather than with the program."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(message)


def _count(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(v)


def _window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like 25:40, got {text!r}") from None
    if b <= a:
        raise argparse.ArgumentTypeError("window end must exceed its start")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cfmarc", description="Compute-and-forward MARC outage simulator.")
    p.add_argument("--version", action="version", version=f"cfmarc {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sw = sub.add_parser("sweep", help="sweep a scenario from a config file")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--out", required=True, type=Path, help="output directory")
    sw.add_argument("--workers", type=int, default=None)

    fg = sub.add_parser("figure", help="run a canned experiment")
    fg.add_argument("name", choices=FIGURES)
    fg.add_argument("--seed", required=True, type=int)
    fg.add_argument("--out", required=True, type=Path)
    fg.add_argument("--trials", type=_count, default=10**6, help="trials per SNR point")
    fg.add_argument("--grid", default=DEFAULT_GRID, help="SNR points in dB, start:stop:step or a list")
    fg.add_argument("--R", type=float, default=2.0, help="target rate in bits per complex symbol")
    fg.add_argument("--samples", type=_count, default=20000,
                    help="directions for the conditional best-equation estimator (fig2, fig3)")
    fg.add_argument("--adaptive-target", type=_count, default=None,
                    help="run each point until this many outage events (needs --max-trials)")
    fg.add_argument("--max-trials", type=_count, default=None)
    fg.add_argument("--workers", type=int, default=None)

    an = sub.add_parser("analyze", help="derive estimates from stored tables")
    mode = an.add_mutually_exclusive_group(required=True)
    mode.add_argument("--summary", type=Path, metavar="TABLE", help="probabilities with 95%% intervals")
    mode.add_argument("--slope", type=Path, metavar="TABLE", help="fitted diversity slope")
    mode.add_argument("--throughput", type=Path, metavar="TABLE", help="messages per round (needs --M)")
    mode.add_argument("--bounds", type=Path, metavar="COMPONENTS", help="union bounds vs. --lim/--suf tables")
    mode.add_argument("--lemma1", type=Path, metavar="TABLE",
                      help="best-equation outage vs. the Hermite envelope (needs --M, --R)")
    an.add_argument("--window", type=_window, default=None, help="SNR window for --slope, e.g. 25:40")
    an.add_argument("--min-events", type=int, default=30, help="points with fewer events are not fitted")
    an.add_argument("--M", type=int, default=None)
    an.add_argument("--R", type=float, default=None)
    an.add_argument("--grid", default=None, help="SNR points for threshold tables")
    an.add_argument("--lim", type=Path, default=None)
    an.add_argument("--suf", type=Path, default=None)
    return p


# ------------------------------------------------------------------ helpers

def _prepare_out(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UserError(f"cannot create output directory {out}: {e.strerror or e}") from None
    probe = out / ".cfmarc-write-test"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise UserError(f"output directory {out} is not writable: {e.strerror or e}") from None


def _write_manifest(out: Path, stem: str, text: str, seed: int) -> str:
    """Store the canonical config next to the tables; return the reproducibility line."""
    line = f"cfmarc {__version__} seed={seed} config={config_hash(text)}"
    (out / f"{stem}_manifest.txt").write_text(f"# {line}\n" + text, encoding="utf-8")
    # the backend never changes a table, so it is reported but not stored
    return f"{line} backend={kernel.BACKEND}"


def _plan(args) -> AdaptivePlan | None:
    if (args.adaptive_target is None) != (args.max_trials is None):
        raise UserError("--adaptive-target and --max-trials go together")
    if args.adaptive_target is None:
        return None
    return AdaptivePlan(target_events=args.adaptive_target, max_trials=args.max_trials)


def _write_sweep(out: Path, stem: str, res) -> list[Path]:
    paths = []
    for s in res.strategies:
        path = out / f"{stem}_{s}.dat"
        write_table(path, STRATEGY_COLUMNS, strategy_rows(res.points[s]))
        paths.append(path)
    if res.components is not None:
        cols, rows = component_rows(res.components, res.cfg.M)
        path = out / f"{stem}_components.dat"
        write_table(path, cols, rows)
        paths.append(path)
    return paths


# ----------------------------------------------------------------- commands

def cmd_sweep(args) -> int:
    try:
        raw = parse_config(args.config.read_text(encoding="utf-8"))
    except OSError as e:
        raise UserError(f"cannot read config {args.config}: {e.strerror or e}") from None
    try:
        cfg, opts = config_from_mapping(raw)
    except (ValueError, TypeError) as e:
        raise UserError(f"bad config {args.config}: {e}") from None
    bad = [s for s in opts["strategies"] if s not in STRATEGIES]
    if bad:
        raise UserError(f"bad config {args.config}: unknown strategies {bad}")
    _prepare_out(args.out)
    plan = None
    if opts["adaptive_target"] is not None:
        plan = AdaptivePlan(target_events=opts["adaptive_target"], max_trials=opts["max_trials"])
    text = config_text(cfg, opts)
    res = run_sweep(cfg, opts["strategies"], components=opts["components"], adaptive=plan,
                    workers=args.workers)
    for p in _write_sweep(args.out, cfg.name, res):
        print(p)
    print(_write_manifest(args.out, cfg.name, text, cfg.seed))
    return 0


def _fig_equations(args, M: int, grid) -> list[str]:
    plan = _plan(args)
    ec = per_equation_sweep(M, args.R, grid, args.trials, args.seed, workers=args.workers,
                            adaptive=plan)
    stem = f"{args.name}_M{M}"
    cols, rows = equation_rows(ec)
    write_table(args.out / f"{stem}_per_equation.dat", cols, rows)
    # only the best equation has a bounded threshold, so only it gains from conditioning
    rs = sample_equation_thresholds(M, args.R, args.samples, args.seed, equations=1)
    cols, rows = threshold_rows(rs)
    write_table(args.out / f"{stem}_thresholds.dat", cols, rows)
    lines = []
    cond = per_equation_conditional(rs, grid)
    plain = per_equation_outage(ec)
    for m in range(1, M + 1):
        for k, (snr, p, ev) in enumerate(plain[m]):
            line = f"eq{m} {snr:g} dB plain={p:.4g} ({ev} events)"
            if m in cond:
                line += f" conditional={cond[m][k][1]:.4g} +- {cond[m][k][2]:.2g}"
            lines.append(line)
    return lines


def cmd_figure(args) -> int:
    grid = parse_grid(args.grid)
    _prepare_out(args.out)
    name = args.name
    text = (f"figure={name}\nR={args.R!r}\ngrid={args.grid}\ntrials={args.trials}\nseed={args.seed}\n"
            f"samples={args.samples}\nadaptive_target={args.adaptive_target}\nmax_trials={args.max_trials}\n")
    report: list[str] = []
    if name in ("fig2", "fig3"):
        report += _fig_equations(args, 3 if name == "fig2" else 2, grid)
    elif name == "fig4":
        for d in RELAY_POSITIONS:
            cfg = ScenarioConfig(M=2, R=args.R, delta_sr=d, delta_rd=1.0 - d, snr_grid_db=grid,
                                 trials=args.trials, seed=args.seed, perfect_rd=True,
                                 name=f"fig4_dsr{d:.2f}")
            rc = rank_deficiency_sweep(cfg, adaptive=_plan(args), workers=args.workers)
            cols, rows = rank_rows(rc)
            write_table(args.out / f"{cfg.name}_rank.dat", cols, rows)
            for s in grid:
                report.append(f"delta_sr={d:.2f} {s:g} dB P_def={rc.rank_def[s] / rc.trial_num[s]:.4g}")
    else:
        scen = {"fig5": "scen1", "fig6": "scen2", "fig7": "scen3", "fig8": "scen2"}[name]
        strategies = STRATEGIES if name != "fig8" else ("lim_fb", "suf_fb", "soussi", "insausti")
        cfg = scenario(scen, M=2, R=args.R, snr_grid_db=grid, trials=args.trials, seed=args.seed)
        cfg = cfg.with_(name=f"{name}_{scen}")
        plan = _plan(args)
        res = run_sweep(cfg, strategies, components=(plan is None and name != "fig8"),
                        adaptive=plan, workers=args.workers)
        _write_sweep(args.out, cfg.name, res)
        for s in strategies:
            for snr in grid:
                pc = res.counts(s, snr)
                line = f"{s} {snr:g} dB P_out={pc.outage_num / pc.trial_num:.4g}"
                if name == "fig8":
                    line += f" throughput={throughput(res, s, snr):.4f}"
                report.append(line)
    for line in report:
        print(line)
    print(_write_manifest(args.out, name, text, args.seed))
    return 0


def _curves_from_table(path: Path, args) -> dict[str, list[tuple]]:
    """Named curves ``[(snr, p, events, trials)]`` from any supported table kind."""
    header, _ = read_table(path)
    if tuple(header) == STRATEGY_COLUMNS:
        pts = points_from_table(path)
        return {"outage_num_snr": [(s, pc.outage_num / pc.trial_num, pc.outage_num, pc.trial_num)
                                   for s, pc in sorted(pts.items())]}
    if header[:2] == ["sd_snrdb", "trial_num"] and header[2:3] == ["comb1"]:
        ec = equations_from_table(path)
        return {f"comb{m}": [(s, p, k, ec.trial_num[s]) for s, p, k in c]
                for m, c in per_equation_outage(ec).items()}
    if header == ["sd_snrdb", "trial_num", "rank_fail_num"]:
        rc = ranks_from_table(path)
        return {"rank_fail_num": [(s, rc.rank_def[s] / rc.trial_num[s], rc.rank_def[s], rc.trial_num[s])
                                  for s in sorted(rc.trial_num)]}
    if header and header[0] == "s1":
        if args.grid is None:
            raise UserError("threshold tables need --grid")
        rs = thresholds_from_table(path)
        cond = per_equation_conditional(rs, parse_grid(args.grid))
        # conditional estimates carry no event count; the window alone selects points
        return {f"comb{m}": [(s, p) for s, p, _ in c] for m, c in cond.items()}
    raise UserError(f"{path}: unrecognised table")


def cmd_analyze(args) -> int:
    if args.slope is not None:
        curves = _curves_from_table(args.slope, args)
        for name, c in curves.items():
            try:
                d = diversity_slope(c, window=args.window, min_events=args.min_events)
            except ValueError as e:
                raise UserError(f"{name}: {e}") from None
            print(f"{d:.2f}" if len(curves) == 1 else f"{name} {d:.2f}")
        return 0
    if args.summary is not None:
        for name, c in _curves_from_table(args.summary, args).items():
            for pt in c:
                if len(pt) > 2:
                    lo, hi = wilson_interval(pt[2], pt[3])
                    print(f"{name} {pt[0]:g} {pt[1]:.6g} [{lo:.3g}, {hi:.3g}]")
                else:
                    print(f"{name} {pt[0]:g} {pt[1]:.6g}")
        return 0
    if args.throughput is not None:
        if args.M is None:
            raise UserError("--throughput needs --M")
        pts = points_from_table(args.throughput)
        for s, pc in sorted(pts.items()):
            # the round model is implied by the stored round count
            rounds = pc.rounds_total / pc.trial_num
            print(f"{s:g} {args.M * (1.0 - pc.outage_num / pc.trial_num) / rounds:.6f}")
        return 0
    if args.bounds is not None:
        comps = components_from_table(args.bounds)
        lim = points_from_table(args.lim) if args.lim else {}
        suf = points_from_table(args.suf) if args.suf else {}
        print("sd_snrdb lim_bound lim_emp suf_bound suf_emp")
        for s, c in sorted(comps.items()):
            b = union_bounds(c)
            le = lim[s].outage_num / lim[s].trial_num if s in lim else float("nan")
            se = suf[s].outage_num / suf[s].trial_num if s in suf else float("nan")
            print(f"{s:g} {b['lim_fb']:.6g} {le:.6g} {b['suf_fb']:.6g} {se:.6g}")
        return 0
    if args.lemma1 is not None:
        if args.M is None or args.R is None:
            raise UserError("--lemma1 needs --M and --R")
        curves = _curves_from_table(args.lemma1, args)
        if "comb1" not in curves:
            raise UserError("--lemma1 needs a per-equation or threshold table")
        c = curves["comb1"]
        ok = lemma1_bound_check(args.M, args.R, c)
        for pt, good in zip(c, ok):
            env = float(lemma1_envelope(args.M, args.R, pt[0]))
            print(f"{pt[0]:g} {pt[1]:.6g} {env:.6g} {'below' if good else 'ABOVE'}")
        return 0 if all(ok) else 1
    raise UserError("no analysis requested")  # pragma: no cover - argparse enforces a mode


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "figure":
            return cmd_figure(args)
        return cmd_analyze(args)
    except UserError as e:
        print(f"cfmarc: error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"cfmarc: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except Exception as e:  # pragma: no cover - reported, not hidden
        print(f"cfmarc: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
