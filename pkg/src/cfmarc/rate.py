"""Computation-rate machinery for a single compute-and-forward receiver.

All rates are in bits per complex channel use (log base 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussint import to_complex_array

__all__ = [
    "LinkParams",
    "RateMatrix",
    "build_rate_matrix",
    "quad_form",
    "log2_plus_inv",
    "computation_rate",
    "computation_rate_direct",
    "optimal_alpha",
    "effective_noise_var",
    "p2p_rate",
]


@dataclass(frozen=True)
class LinkParams:
    """Channel vector ``h``, geometric gain ``g`` and transmit power ``P``.

    Only the product ``P * g`` (the average SNR) enters any rate, so the
    simulator keeps ``P = 1`` and lets ``g`` carry the SNR.
    """

    h: np.ndarray
    g: float
    P: float = 1.0

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=complex))
        if h.ndim != 1:
            raise ValueError("h must be a vector")
        if not np.all(np.isfinite(h)):
            raise ValueError("h must be finite")
        if not (self.g > 0 and self.P > 0):
            raise ValueError("g and P must be positive")
        object.__setattr__(self, "h", h)

    @property
    def snr(self) -> float:
        return self.P * self.g

    @property
    def M(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class RateMatrix:
    M_mat: np.ndarray
    B: np.ndarray

    @property
    def dim(self) -> int:
        return self.B.shape[0]


def build_rate_matrix(link: LinkParams) -> RateMatrix:
    h = link.h
    snr = link.snr
    c = snr / (1.0 + snr * np.vdot(h, h).real)
    M_mat = np.eye(link.M, dtype=complex) - c * np.outer(h, h.conj())
    # numpy returns lower L with M = L L^H, so B = L^H is upper triangular
    L = np.linalg.cholesky(M_mat)
    return RateMatrix(M_mat=M_mat, B=L.conj().T)


def _as_coeff(a) -> np.ndarray:
    z = a if isinstance(a, np.ndarray) else to_complex_array(a)
    z = np.asarray(z, dtype=complex)
    if not np.any(z):
        raise ValueError("zero coefficient vector carries no equation")
    return z


def quad_form(a, rm: RateMatrix) -> float:
    """``a^H M a`` evaluated as ``||B a||^2``."""
    z = _as_coeff(a)
    v = rm.B @ z
    return float(np.vdot(v, v).real)


def log2_plus_inv(q: float) -> float:
    """``log2^+(1/q)``."""
    return max(-np.log2(q), 0.0)


def computation_rate(a, link: LinkParams | RateMatrix) -> float:
    rm = link if isinstance(link, RateMatrix) else build_rate_matrix(link)
    return log2_plus_inv(quad_form(a, rm))


def computation_rate_direct(a, link: LinkParams) -> float:
    """Rate from the closed form in ``||a||``, ``|h^H a|`` (no factorisation)."""
    z = _as_coeff(a)
    snr = link.snr
    h = link.h
    q = np.vdot(z, z).real - snr * abs(np.vdot(h, z)) ** 2 / (1.0 + snr * np.vdot(h, h).real)
    return log2_plus_inv(q)


def optimal_alpha(a, link: LinkParams) -> complex:
    z = _as_coeff(a)
    h = link.h
    snr = link.snr
    return complex(link.P * np.sqrt(link.g) * np.vdot(h, z) / (1.0 + snr * np.vdot(h, h).real))


def effective_noise_var(alpha: complex, a, link: LinkParams) -> float:
    z = np.asarray(a if isinstance(a, np.ndarray) else to_complex_array(a), dtype=complex)
    d = alpha * np.sqrt(link.g) * link.h - z
    return float(np.vdot(d, d).real * link.P + abs(alpha) ** 2)


def p2p_rate(h_rd: complex, gamma_rd: float) -> float:
    if gamma_rd <= 0:
        raise ValueError("gamma_rd must be positive")
    return float(np.log2(1.0 + abs(h_rd) ** 2 * gamma_rd))
