"""Compiled vs. pure-Python lattice kernel, microseconds per trial.

    python3 benchmarks/bench_kernel.py [--trials 2000] [--snr 25]

Both backends get the same fading draws. The compiled kernel is timed in
each of its modes (exact, target-rate certified, lazy relay); the Python
fallback always resolves every trial exactly.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cfmarc import _kernel_py
from cfmarc.channel import draw_batch, scenario, scenario_snrs

try:
    from cfmarc import _kernel as _compiled
except ImportError:  # pragma: no cover
    _compiled = None


def _time(fn, reps: int = 3) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--snr", type=float, default=25.0)
    ap.add_argument("--M", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--R", type=float, default=2.0)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled kernel not built; nothing to compare")
        return 1

    print(f"{'M':>2} {'mode':<10} {'python_us':>10} {'compiled_us':>12} {'speedup':>8}")
    for M in args.M:
        cfg = scenario("scen2", M=M, R=args.R, snr_grid_db=(args.snr,), trials=args.trials, seed=1)
        h_sd, h_sr, h_rd = draw_batch(cfg.seed, args.snr, 0, M)
        n = min(args.trials, h_sd.shape[0])
        h_sd, h_sr, h_rd = h_sd[:n], h_sr[:n], h_rd[:n]
        g = scenario_snrs(cfg, args.snr)
        n_py = min(n, 300)
        t_py = _time(lambda: _kernel_py.evaluate_batch(h_sd[:n_py], h_sr[:n_py], h_rd[:n_py], *g), reps=1)
        us_py = 1e6 * t_py / n_py
        modes = {
            "exact": dict(),
            "certified": dict(target_rate=args.R),
            "lazy": dict(target_rate=args.R, need_relay=False),
        }
        for name, kw in modes.items():
            t_c = _time(lambda: _compiled.evaluate_batch(h_sd, h_sr, h_rd, *g, **kw))
            us_c = 1e6 * t_c / n
            print(f"{M:>2} {name:<10} {us_py:>10.1f} {us_c:>12.2f} {us_py / us_c:>8.0f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
