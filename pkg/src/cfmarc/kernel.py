"""Backend selection for the batch lattice kernel.

The compiled Cython module is used when it imports and handles ``M``;
otherwise the pure-Python fallback runs. Setting ``CFMARC_BACKEND=python``
forces the fallback. Trials the compiled path rejects (coefficient entries
beyond its exact integer range) are recomputed by the fallback, so callers
always get complete facts.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

__all__ = ["BACKEND", "COMPILED_MAX_M", "evaluate_batch", "link_rates_batch", "rank_def_batch", "link_minima",
           "backend_for"]

COMPILED_MAX_M = 4


def _choose() -> str:
    want = os.environ.get("CFMARC_BACKEND", "auto").strip().lower()
    if want not in ("auto", "compiled", "python"):
        raise ValueError(f"CFMARC_BACKEND must be auto, compiled or python, got {want!r}")
    if want == "python":
        return "python"
    if _compiled is None:
        if want == "compiled":
            raise ImportError("compiled kernel requested but cfmarc._kernel is not built")
        return "python"
    return "compiled"


BACKEND = _choose()


def backend_for(M: int) -> str:
    return "compiled" if BACKEND == "compiled" and M <= COMPILED_MAX_M else "python"


def evaluate_batch(h_sd, h_sr, h_rd, snr_sd, snr_sr, snr_rd, perfect_rd=False,
                   target_rate=None, need_relay=True) -> dict:
    """Lattice facts for a batch; see :func:`cfmarc._kernel_py.evaluate_batch`."""
    h_sd = np.asarray(h_sd, dtype=complex)
    M = h_sd.shape[1]
    kw = dict(perfect_rd=perfect_rd, target_rate=target_rate, need_relay=need_relay)
    if backend_for(M) == "python":
        facts, _ = _kernel_py.evaluate_batch(h_sd, h_sr, h_rd, snr_sd, snr_sr, snr_rd, **kw)
        return facts
    facts, failed = _compiled.evaluate_batch(h_sd, h_sr, h_rd, snr_sd, snr_sr, snr_rd, **kw)
    if len(failed):
        h_sr = np.asarray(h_sr, dtype=complex)
        h_rd = np.asarray(h_rd, dtype=complex)
        redo, _ = _kernel_py.evaluate_batch(
            h_sd[failed], h_sr[failed], h_rd[failed], snr_sd, snr_sr, snr_rd, **kw
        )
        for key, arr in redo.items():
            facts[key][failed] = arr
    return facts


def link_minima(h, snr: float, L: int, given=None):
    """Single-link minima as ``(vectors of (re, im) pairs, norms)``."""
    h = np.asarray(h, dtype=complex)
    if backend_for(h.shape[0]) == "compiled":
        try:
            return _compiled.link_minima_py(h, float(snr), int(L), given)
        except OverflowError:
            pass
    return _kernel_py.link_minima_py(h, snr, L, given)


def link_rates_batch(h, snr: float, target_rate=None) -> np.ndarray:
    """Rates of the M best equations for each row of ``h``."""
    h = np.asarray(h, dtype=complex)
    if backend_for(h.shape[1]) == "python":
        return _kernel_py.link_rates_batch(h, snr, target_rate)[0]
    rates, failed = _compiled.link_rates_batch(h, float(snr), target_rate)
    if len(failed):
        rates[failed] = _kernel_py.link_rates_batch(h[failed], snr)[0]
    return rates


def rank_def_batch(h_sd, h_sr, snr_sd: float, snr_sr: float) -> np.ndarray:
    """Unconditional lim-FB rank-deficiency flags for a batch."""
    h_sd = np.asarray(h_sd, dtype=complex)
    h_sr = np.asarray(h_sr, dtype=complex)
    if backend_for(h_sd.shape[1]) == "python":
        return _kernel_py.rank_def_batch(h_sd, h_sr, snr_sd, snr_sr)[0]
    flags, failed = _compiled.rank_def_batch(h_sd, h_sr, float(snr_sd), float(snr_sr))
    if len(failed):
        flags[failed] = _kernel_py.rank_def_batch(h_sd[failed], h_sr[failed], snr_sd, snr_sr)[0]
    return flags
