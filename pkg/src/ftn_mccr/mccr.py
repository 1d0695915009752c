"""Finite-blocklength rate of the parallel FTN subchannels.

With per-subchannel SNRs ``s_i = g_i q_i / s0``::

    C_DN = (1/N) sum_i log2(1 + s_i)
    V_DN = (log2 e)^2 / N * sum_i (1 - (1 + s_i)^-2)
    C(N, eps) = N/(N+2L) * (C_DN - sqrt(V_DN/(DN)) Qinv(eps) + log2(DN)/(2DN))

and the spectral efficiency is ``C(N, eps) / (delta (1 + beta))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .allocation import PowerAllocation, waterfill
from .decomp import ParallelChannels, SingularSpectrum, combine
from .pulse import PulseCoeffs

__all__ = [
    "RatePoint",
    "CapacityBound",
    "LOG2E_SQ",
    "qfunc",
    "q_inv",
    "subchannel_snr",
    "c_dn",
    "v_dn",
    "mccr",
    "spectral_efficiency",
    "rate_point",
    "toeplitz_symbol",
    "capacity_infinite_n",
]

LOG2E_SQ = math.log2(math.e) ** 2
DISPERSION_FORMS = ("normalized", "unnormalized")

# Acklam's rational approximation to the standard normal quantile
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def qfunc(x: float) -> float:
    """Standard Gaussian tail ``Q(x) = P[Z > x]``."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _acklam(p: float) -> float:
    if p < _P_LOW:
        r = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]) / (
            (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
        )
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    u = p - 0.5
    r = u * u
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def q_inv(eps: float) -> float:
    """Inverse Gaussian tail: ``x`` with ``Q(x) = eps``.

    A rational initial guess refined with two Newton steps on ``Q``.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    x = -_acklam(eps)
    for _ in range(2):
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        x += (qfunc(x) - eps) / pdf
    return x


def subchannel_snr(ch: ParallelChannels, alloc: PowerAllocation) -> np.ndarray:
    return ch.gain * alloc.q / ch.noise_power


def c_dn(ch: ParallelChannels, alloc: PowerAllocation) -> float:
    """``(1/N) sum_i log2(1 + g_i q_i / s0)`` in bits."""
    return float(np.sum(np.log2(1.0 + subchannel_snr(ch, alloc)))) / ch.N


def v_dn(ch: ParallelChannels, alloc: PowerAllocation) -> float:
    """Dispersion ``(log2 e)^2 / N * sum_i (1 - (1 + s_i)^-2)`` in squared bits."""
    s = subchannel_snr(ch, alloc)
    return LOG2E_SQ * float(np.sum(1.0 - (1.0 + s) ** -2.0)) / ch.N


def _mccr(c, v, N, D, L, eps, dispersion="normalized"):
    if dispersion not in DISPERSION_FORMS:
        raise ValueError(f"dispersion must be one of {DISPERSION_FORMS}, got {dispersion!r}")
    DN = D * N
    if dispersion == "unnormalized":
        # V_DN without its 1/N prefactor
        v = v * N
    raw = N / (N + 2 * L) * (c - math.sqrt(v / DN) * q_inv(eps) + math.log2(DN) / (2 * DN))
    return raw


def mccr(c: float, v: float, N: int, D: int, L: int, eps: float, dispersion: str = "normalized") -> float:
    """Normal-approximation rate in bits per channel use, clamped at zero.

    ``dispersion="normalized"`` (default) uses ``sqrt(V_DN / (DN))`` with the
    ``1/N`` already inside ``V_DN``; ``"unnormalized"`` drops that ``1/N``.
    Use :func:`rate_point` to learn whether clamping happened.
    """
    return max(_mccr(c, v, N, D, L, eps, dispersion), 0.0)


def spectral_efficiency(c: float, delta: float, beta: float) -> float:
    """Bits/s/Hz from bits per channel use: ``c / (delta (1 + beta))``."""
    return c / (delta * (1.0 + beta))


@dataclass(frozen=True)
class RatePoint:
    c_dn: float
    v_dn: float
    mccr: float
    spectral_efficiency: float
    N: int
    D: int
    L: int
    eps: float
    delta: float
    beta: float
    clamped: bool = False


def rate_point(
    ch: ParallelChannels,
    alloc: PowerAllocation,
    L: int,
    eps: float,
    beta: float,
    dispersion: str = "normalized",
) -> RatePoint:
    c = c_dn(ch, alloc)
    v = v_dn(ch, alloc)
    raw = _mccr(c, v, ch.N, ch.D, L, eps, dispersion)
    rate = max(raw, 0.0)
    return RatePoint(
        c_dn=c,
        v_dn=v,
        mccr=rate,
        spectral_efficiency=spectral_efficiency(rate, ch.delta, beta),
        N=ch.N,
        D=ch.D,
        L=L,
        eps=eps,
        delta=ch.delta,
        beta=beta,
        clamped=raw < 0.0,
    )


def toeplitz_symbol(coeffs: PulseCoeffs, grid: int) -> np.ndarray:
    """``f(w) = |sum_l p_l e^{j l w}|^2`` sampled at ``w_k = 2 pi k / grid``.

    This is the symbol of the Toeplitz matrix ``P^T P``.
    """
    if grid < coeffs.taps.size:
        raise ValueError("grid must be at least the number of taps")
    return np.abs(np.fft.fft(coeffs.taps, n=grid)) ** 2


class CapacityBound(NamedTuple):
    bits_per_cu: float
    bits_per_s_hz: float
    converged: bool
    grid: int


def _symbol_capacity(coeffs, sigma_h, P, sigma0_sq, grid):
    f = toeplitz_symbol(coeffs, grid)
    spec = SingularSpectrum(sigma_h=np.asarray(sigma_h, dtype=float), sigma_p=np.sqrt(f))
    ch = combine(spec, coeffs.spec, grid, sigma0_sq)
    return c_dn(ch, waterfill(ch, P))


def capacity_infinite_n(
    coeffs: PulseCoeffs,
    sigma_h,
    P: float,
    sigma0_sq: float,
    grid: int = 4096,
    check: bool = True,
) -> CapacityBound:
    """Large-``N`` limit of ``C_DN`` for a fixed channel.

    The ``sigma_p**2`` spectrum is replaced by ``grid`` samples of the Toeplitz
    symbol of ``P^T P``, which by Szego's theorem is its limiting eigenvalue
    distribution, and the usual water-filling is solved on those samples.
    With ``check`` the result is recomputed on a doubled grid and flagged as
    not converged if the two differ by ``1e-4`` or more.
    """
    if grid < 256:
        raise ValueError(f"grid must be >= 256, got {grid}")
    c = _symbol_capacity(coeffs, sigma_h, P, sigma0_sq, grid)
    converged = True
    if check:
        c2 = _symbol_capacity(coeffs, sigma_h, P, sigma0_sq, 2 * grid)
        converged = abs(c2 - c) < 1e-4
        if not converged:
            warnings.warn(f"capacity bound not converged at grid={grid}: {c} vs {c2}", RuntimeWarning)
    spec = coeffs.spec
    return CapacityBound(
        bits_per_cu=c,
        bits_per_s_hz=spectral_efficiency(c, spec.delta, spec.beta),
        converged=converged,
        grid=grid,
    )
