"""Plain-text tables and key=value configs.

Tables are ASCII: a header line of column names, then one row per SNR
point, single spaces between fields. Only raw counters are stored (plus
per-direction thresholds for the conditional estimator); every probability
is recomputed on read, so tables from separate runs can be merged by adding
counts.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .analysis import RadialSample
from .channel import ScenarioConfig
from .montecarlo import ComponentCounts, EquationCounts, PointCounts, RankCounts

__all__ = [
    "STRATEGY_COLUMNS",
    "format_snr",
    "write_table",
    "read_table",
    "strategy_rows",
    "points_from_table",
    "component_rows",
    "components_from_table",
    "equation_rows",
    "equations_from_table",
    "rank_rows",
    "ranks_from_table",
    "threshold_rows",
    "thresholds_from_table",
    "parse_grid",
    "parse_config",
    "config_from_mapping",
    "config_text",
    "config_hash",
]

STRATEGY_COLUMNS = ("sd_snrdb", "trial_num", "outage_num_snr", "direct_outage", "rank_fail_num", "rounds_total")


def format_snr(x: float) -> str:
    """Shortest exact rendering of a grid point (grid points are multiples of 0.001 dB)."""
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(path, columns, rows) -> None:
    lines = [" ".join(columns)]
    for r in rows:
        if len(r) != len(columns):
            raise ValueError("row length does not match the header")
        lines.append(" ".join(v if isinstance(v, str) else _fmt(v) for v in r))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty table")
    header = lines[0].split()
    rows = [ln.split() for ln in lines[1:]]
    for i, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    return header, rows


def strategy_rows(points: dict) -> list:
    """Rows for one strategy from ``{snr_db: PointCounts}``."""
    return [
        (format_snr(snr), pc.trial_num, pc.outage_num, pc.direct_outage_num, pc.rank_fail_num, pc.rounds_total)
        for snr, pc in sorted(points.items())
    ]


def points_from_table(path) -> dict:
    header, rows = read_table(path)
    if tuple(header) != STRATEGY_COLUMNS:
        raise ValueError(f"{path}: not a strategy table (header {' '.join(header)})")
    out = {}
    for r in rows:
        out[float(r[0])] = PointCounts(*(int(x) for x in r[1:]))
    return out


def _component_columns(M: int) -> list[str]:
    return (["sd_snrdb", "trial_num"] + [f"d{m}" for m in range(1, M + 1)]
            + [f"r{m}" for m in range(1, M + 1)] + ["rd", "r_star", "rank_def"])


def component_rows(comps: dict, M: int) -> tuple[list[str], list]:
    rows = []
    for snr, c in sorted(comps.items()):
        rows.append((format_snr(snr), c.trial_num, *c.d_fail, *c.r_fail, c.rd_fail, c.r_star_fail, c.rank_def))
    return _component_columns(M), rows


def components_from_table(path) -> dict:
    header, rows = read_table(path)
    M = sum(1 for h in header if h.startswith("d") and h[1:].isdigit())
    if M < 1 or header != _component_columns(M):
        raise ValueError(f"{path}: not a components table")
    out = {}
    for r in rows:
        v = [int(x) for x in r[1:]]
        out[float(r[0])] = ComponentCounts(
            M=M, trial_num=v[0], d_fail=v[1 : 1 + M], r_fail=v[1 + M : 1 + 2 * M],
            rd_fail=v[1 + 2 * M], r_star_fail=v[2 + 2 * M], rank_def=v[3 + 2 * M],
        )
    return out


def equation_rows(ec: EquationCounts) -> tuple[list[str], list]:
    cols = ["sd_snrdb", "trial_num"] + [f"comb{m}" for m in range(1, ec.M + 1)]
    rows = [(format_snr(s), ec.trial_num[s], *ec.fails[s]) for s in sorted(ec.fails)]
    return cols, rows


def equations_from_table(path, R: float = float("nan")) -> EquationCounts:
    header, rows = read_table(path)
    M = len(header) - 2
    if M < 1 or header != ["sd_snrdb", "trial_num"] + [f"comb{m}" for m in range(1, M + 1)]:
        raise ValueError(f"{path}: not a per-equation table")
    trial_num, fails = {}, {}
    for r in rows:
        s = float(r[0])
        trial_num[s] = int(r[1])
        fails[s] = [int(x) for x in r[2:]]
    return EquationCounts(M=M, R=R, trial_num=trial_num, fails=fails)


def rank_rows(rc: RankCounts) -> tuple[list[str], list]:
    cols = ["sd_snrdb", "trial_num", "rank_fail_num"]
    return cols, [(format_snr(s), rc.trial_num[s], rc.rank_def[s]) for s in sorted(rc.trial_num)]


def ranks_from_table(path, delta_sr: float = float("nan")) -> RankCounts:
    header, rows = read_table(path)
    if header != ["sd_snrdb", "trial_num", "rank_fail_num"]:
        raise ValueError(f"{path}: not a rank table")
    return RankCounts(
        delta_sr=delta_sr,
        trial_num={float(r[0]): int(r[1]) for r in rows},
        rank_def={float(r[0]): int(r[2]) for r in rows},
    )


def threshold_rows(rs: RadialSample) -> tuple[list[str], list]:
    """One row per sampled direction: the channel-gain threshold of each equation."""
    cols = [f"s{m}" for m in range(1, rs.M + 1)]
    return cols, [tuple(float(x) for x in row) for row in rs.s]


def thresholds_from_table(path, R: float = float("nan")) -> RadialSample:
    header, rows = read_table(path)
    M = len(header)
    if M < 1 or header != [f"s{m}" for m in range(1, M + 1)]:
        raise ValueError(f"{path}: not a threshold table")
    s = np.array([[float(x) for x in r] for r in rows]).reshape(len(rows), M)
    # the cap flag is not stored; a threshold at the search ceiling is used as is
    return RadialSample(M=M, R=R, s=s, capped=np.zeros_like(s, dtype=bool))


# ---------------------------------------------------------------- configs

_REQUIRED = ("M", "R", "seed")
_FLOAT = {"R", "delta_sr", "delta_rd", "kappa"}
_INT = {"M", "trials", "seed", "adaptive_target", "max_trials"}
_BOOL = {"perfect_rd", "components"}
_KNOWN = _FLOAT | _INT | _BOOL | {"snr_grid_db", "strategies", "name", "scenario"}


def _parse_bool(key, v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{key}: expected a boolean, got {v!r}")


def _parse_int(key, v: str) -> int:
    f = float(v)
    if f != int(f):
        raise ValueError(f"{key}: expected an integer, got {v!r}")
    return int(f)


def parse_grid(v: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma/space separated list."""
    v = v.strip()
    if ":" in v:
        parts = [float(p) for p in v.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError(f"bad SNR range {v!r}; use start:stop:step")
        a, b, st = parts
        n = int(round((b - a) / st))
        if abs(a + n * st - b) > 1e-9:
            raise ValueError(f"SNR range {v!r}: step does not divide the span")
        return tuple(round(a + i * st, 6) for i in range(n + 1))
    return tuple(float(x) for x in v.replace(",", " ").split())


def parse_config(text: str) -> dict:
    """Raw ``key -> value string`` mapping from config text."""
    out = {}
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {i}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in _KNOWN:
            raise ValueError(f"line {i}: unknown key {k!r}")
        if k in out:
            raise ValueError(f"line {i}: duplicate key {k!r}")
        out[k] = v
    return out


def config_from_mapping(raw: dict) -> tuple[ScenarioConfig, dict]:
    """Build the scenario and the run options from parsed config values.

    ``M``, ``R`` and ``seed`` must be given. Geometry comes either from
    ``scenario`` (a preset name) or from ``delta_sr`` and ``delta_rd``.
    """
    from .channel import SCENARIOS, KAPPA

    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ValueError(f"missing required keys: {', '.join(missing)}")
    vals = {}
    for k, v in raw.items():
        if k in _FLOAT:
            vals[k] = float(v)
        elif k in _INT:
            vals[k] = _parse_int(k, v)
        elif k in _BOOL:
            vals[k] = _parse_bool(k, v)
        else:
            vals[k] = v
    if "scenario" in vals:
        if "delta_sr" in vals or "delta_rd" in vals:
            raise ValueError("give either scenario or delta_sr/delta_rd, not both")
        name = vals.pop("scenario")
        if name not in SCENARIOS:
            raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
        vals["delta_sr"], vals["delta_rd"] = SCENARIOS[name]
        vals.setdefault("name", name)
    for k in ("delta_sr", "delta_rd", "snr_grid_db", "trials"):
        if k not in vals:
            raise ValueError(f"missing required key: {k}")
    opts = {
        "strategies": tuple(vals.pop("strategies", "baseline,lim_fb,suf_fb,soussi,insausti").replace(",", " ").split()),
        "components": vals.pop("components", False),
        "adaptive_target": vals.pop("adaptive_target", None),
        "max_trials": vals.pop("max_trials", None),
    }
    if (opts["adaptive_target"] is None) != (opts["max_trials"] is None):
        raise ValueError("adaptive_target and max_trials go together")
    vals["snr_grid_db"] = parse_grid(vals["snr_grid_db"])
    vals.setdefault("kappa", KAPPA)
    cfg = ScenarioConfig(**vals)
    return cfg, opts


def config_text(cfg: ScenarioConfig, opts: dict | None = None) -> str:
    """Canonical rendering; equal configs give equal text (and hash)."""
    lines = [
        f"M={cfg.M}",
        f"R={cfg.R!r}",
        f"delta_sr={cfg.delta_sr!r}",
        f"delta_rd={cfg.delta_rd!r}",
        f"kappa={cfg.kappa!r}",
        "snr_grid_db=" + ",".join(format_snr(s) for s in cfg.snr_grid_db),
        f"trials={cfg.trials}",
        f"seed={cfg.seed}",
        f"perfect_rd={cfg.perfect_rd}",
        f"name={cfg.name}",
    ]
    for k, v in sorted((opts or {}).items()):
        if v is None:
            continue
        lines.append(f"{k}={' '.join(v) if isinstance(v, tuple) else v}")
    return "\n".join(lines) + "\n"


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
