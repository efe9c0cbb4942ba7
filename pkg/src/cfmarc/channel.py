"""Scenario geometry and reproducible Rayleigh block fading.

Distances are normalised so the source-destination distance is 1; a link of
length ``delta`` has geometric gain ``delta ** -kappa``. Transmit power is
folded into the gains, so every average SNR is ``gamma_sd`` times a gain.

Fading is drawn in fixed-size batches. Batch ``b`` at SNR point ``s`` comes
from its own counter-derived stream, so trial ``t`` of a sweep is the same
draw no matter how the trials are split across workers or how many trials
are requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BATCH",
    "ScenarioConfig",
    "ChannelRealization",
    "geometric_gain",
    "gain_db",
    "scenario_snrs",
    "snr_key",
    "draw_batch",
    "sample_realization",
    "SCENARIOS",
    "RELAY_POSITIONS",
    "scenario",
]

# trials per RNG stream; part of the reproducibility contract, do not change
BATCH = 4096
KAPPA = 3.52


def geometric_gain(delta: float, kappa: float) -> float:
    if not delta > 0:
        raise ValueError(f"distance must be positive, got {delta}")
    if kappa < 0:
        raise ValueError(f"path-loss exponent must be nonnegative, got {kappa}")
    return float(delta ** (-kappa))


def gain_db(delta: float, kappa: float) -> float:
    return 10.0 * math.log10(geometric_gain(delta, kappa))


@dataclass(frozen=True)
class ScenarioConfig:
    """One relay geometry plus the sweep it is simulated over."""

    M: int
    R: float
    delta_sr: float
    delta_rd: float
    kappa: float = KAPPA
    snr_grid_db: tuple[float, ...] = ()
    trials: int = 1
    seed: int = 0
    perfect_rd: bool = False
    name: str = "custom"

    def __post_init__(self):
        if not (isinstance(self.M, (int, np.integer)) and self.M >= 1):
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R!r}")
        for nm in ("delta_sr", "delta_rd"):
            v = getattr(self, nm)
            if not 0 < v < 1:
                raise ValueError(f"{nm} must lie in (0, 1), got {v!r}")
        if abs(self.delta_sr + self.delta_rd - 1.0) > 1e-9:
            raise ValueError("delta_sr + delta_rd must equal 1 (source-destination distance is 1)")
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")
        if not (isinstance(self.trials, (int, np.integer)) and self.trials >= 1):
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        grid = tuple(float(x) for x in self.snr_grid_db)
        if len(set(grid)) != len(grid):
            raise ValueError("SNR grid has repeated points")
        object.__setattr__(self, "snr_grid_db", grid)
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    def with_(self, **changes) -> "ScenarioConfig":
        vals = {k: getattr(self, k) for k in self.__dataclass_fields__}
        vals.update(changes)
        return ScenarioConfig(**vals)


@dataclass(frozen=True)
class ChannelRealization:
    h_sd: np.ndarray
    h_sr: np.ndarray
    h_rd: complex
    gamma_sd: float
    gamma_sr: float
    gamma_rd: float


def scenario_snrs(cfg: ScenarioConfig, gamma_sd_db: float) -> tuple[float, float, float]:
    """Linear ``(gamma_sd, gamma_sr, gamma_rd)`` at a given ``gamma_sd`` in dB."""
    g_sd = 10.0 ** (gamma_sd_db / 10.0)
    return (
        g_sd,
        g_sd * geometric_gain(cfg.delta_sr, cfg.kappa),
        g_sd * geometric_gain(cfg.delta_rd, cfg.kappa),
    )


def snr_key(snr_db: float) -> int:
    """Stream key of an SNR point: its value in millidecibels, offset to stay nonnegative."""
    k = round(snr_db * 1000.0)
    if abs(k - snr_db * 1000.0) > 1e-6:
        raise ValueError(f"SNR points must be multiples of 0.001 dB, got {snr_db}")
    return int(k) + 10**6


def draw_batch(seed: int, snr_db: float, batch_index: int, M: int):
    """Fading for trials ``[batch_index * BATCH, (batch_index + 1) * BATCH)``.

    Returns ``(h_sd, h_sr, h_rd)`` with shapes ``(BATCH, M)``, ``(BATCH, M)``
    and ``(BATCH,)``; entries are CN(0, 1).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(snr_key(snr_db), int(batch_index)))
    rng = np.random.Generator(np.random.PCG64(ss))
    x = rng.standard_normal((BATCH, 2 * M + 1, 2)) * math.sqrt(0.5)
    h = x[..., 0] + 1j * x[..., 1]
    return h[:, :M].copy(), h[:, M : 2 * M].copy(), h[:, 2 * M].copy()


def sample_realization(cfg: ScenarioConfig, snr_db: float, trial_index: int) -> ChannelRealization:
    """The single realization used for ``trial_index`` at ``snr_db``.

    Identical to the corresponding row of the batched draw, so per-trial
    reference evaluation sees exactly what a sweep sees.
    """
    b, r = divmod(int(trial_index), BATCH)
    h_sd, h_sr, h_rd = draw_batch(cfg.seed, snr_db, b, cfg.M)
    g = scenario_snrs(cfg, snr_db)
    return ChannelRealization(h_sd[r], h_sr[r], complex(h_rd[r]), *g)


# Relay geometries simulated in the experiments. The third is fixed by its
# SNR offsets (relay near the destination), see the decisions ledger.
SCENARIOS = {
    "scen1": (0.25, 0.75),
    "scen2": (0.5, 0.5),
    "scen3": (0.75, 0.25),
}

# relay positions of the rank-deficiency study (relay-destination link perfect)
RELAY_POSITIONS = (0.10, 0.25, 0.50, 0.75)


def scenario(name: str, **kw) -> ScenarioConfig:
    """Preset geometry by name; the remaining fields come from ``kw``."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    d_sr, d_rd = SCENARIOS[name]
    return ScenarioConfig(delta_sr=d_sr, delta_rd=d_rd, name=name, **kw)
