"""Raised-cosine pulse, its sinc-basis projection taps and the banded ISI matrix.

The transmit pulse is the unit-energy raised cosine

    p(t) = RC(t; T, beta) / sqrt(T (1 - beta/4))

and the receiver correlates against the orthonormal sinc family
``phi(t - l delta T)`` with ``phi(t) = sqrt(delta T) sin(pi t / (delta T)) / (pi t)``.
The tap ``p_l`` is the projection of ``p`` onto ``phi(. - l delta T)``, which in
the frequency domain is an integral of the pulse spectrum over the flat band of
the basis, ``|f| < 1 / (2 delta T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

__all__ = [
    "PulseSpec",
    "PulseCoeffs",
    "IsiMatrix",
    "QuadratureError",
    "raised_cosine",
    "raised_cosine_spectrum",
    "inband_energy",
    "basis_coefficients",
    "build_isi_matrix",
]

DEFAULT_T = 0.01
DEFAULT_L = 10

QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-13


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature misses its tolerance."""


@dataclass(frozen=True)
class PulseSpec:
    """Pulse and basis parameters.

    Parameters
    ----------
    delta : float
        Acceleration factor, ``0 < delta <= 1``.
    beta : float
        Raised-cosine roll-off, ``0 <= beta <= 1``.
    T : float
        Nyquist symbol period in seconds.
    L : int
        One-sided number of projection taps kept.
    """

    delta: float
    beta: float
    T: float = DEFAULT_T
    L: int = DEFAULT_L

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T}")
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")

    @property
    def spacing(self) -> float:
        """Symbol spacing ``delta * T`` in seconds."""
        return self.delta * self.T

    @property
    def band_edge(self) -> float:
        """One-sided edge of the basis band, ``1 / (2 delta T)`` in Hz."""
        return 1.0 / (2.0 * self.delta * self.T)

    @property
    def energy_norm(self) -> float:
        # energy of the un-normalised raised cosine
        return self.T * (1.0 - self.beta / 4.0)


@dataclass(frozen=True)
class PulseCoeffs:
    """Projection taps ``p_{-L..L}`` of a unit-energy pulse."""

    spec: PulseSpec
    taps: np.ndarray
    inband_energy: float

    @property
    def L(self) -> int:
        return self.spec.L

    @property
    def captured_energy(self) -> float:
        return float(np.sum(self.taps**2))

    @property
    def discarded_energy(self) -> float:
        """Energy outside the kept taps relative to the in-band energy.

        When ``delta (1 + beta) <= 1`` the in-band energy is the full unit
        pulse energy and this reduces to ``1 - captured_energy``.
        """
        return (self.inband_energy - self.captured_energy) / self.inband_energy

    def tap(self, l: int) -> float:
        if abs(l) > self.L:
            return 0.0
        return float(self.taps[l + self.L])

    def autocorrelation(self) -> np.ndarray:
        """``r[k] = sum_l p_l p_{l+k}`` for ``k = 0..2L``."""
        full = np.correlate(self.taps, self.taps, mode="full")
        return full[2 * self.L:].copy()


@dataclass(frozen=True)
class IsiMatrix:
    """The ``(N + 2L) x N`` banded matrix with ``P[i, j] = p_{i - j - L}`` (1-indexed).

    Only the taps are stored; ``dense()`` materialises the matrix.
    """

    coeffs: PulseCoeffs
    N: int

    @property
    def L(self) -> int:
        return self.coeffs.L

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N + 2 * self.L, self.N)

    def banded(self) -> np.ndarray:
        """Column-wise band storage, shape ``(2L + 1, N)``.

        Column ``j`` holds the nonzero rows ``j .. j + 2L`` of column ``j``,
        which is the tap vector for every column.
        """
        return np.repeat(self.coeffs.taps[:, None], self.N, axis=1)

    def dense(self) -> np.ndarray:
        rows, cols = self.shape
        out = np.zeros((rows, cols))
        taps = self.coeffs.taps
        width = taps.size
        for j in range(cols):
            out[j:j + width, j] = taps
        return out

    def gram_toeplitz_row(self) -> np.ndarray:
        """First row of ``P^T P`` (length ``N``), which is Toeplitz."""
        r = self.coeffs.autocorrelation()
        row = np.zeros(self.N)
        k = min(self.N, r.size)
        row[:k] = r[:k]
        return row

    @cached_property
    def trace_gram(self) -> float:
        return self.N * float(self.coeffs.autocorrelation()[0])


def raised_cosine(t, spec: PulseSpec):
    """Unit-energy raised-cosine pulse evaluated at ``t`` (seconds).

    The removable singularities at ``t = 0`` and ``t = +-T / (2 beta)`` are
    replaced by their limits. Accepts scalars or arrays.
    """
    T, beta = spec.T, spec.beta
    x = np.asarray(t, dtype=float) / T
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    if beta > 0.0:
        edge = np.isclose(np.abs(2.0 * beta * x), 1.0, rtol=0.0, atol=1e-9)
    else:
        edge = np.zeros(x.shape, dtype=bool)
    regular = ~edge
    xr = x[regular]
    out[regular] = np.sinc(xr) * np.cos(np.pi * beta * xr) / (1.0 - (2.0 * beta * xr) ** 2)
    if edge.any():
        out[edge] = (np.pi / 4.0) * np.sinc(1.0 / (2.0 * beta))
    out /= math.sqrt(spec.energy_norm)
    return float(out[0]) if scalar else out


def raised_cosine_spectrum(f, spec: PulseSpec):
    """Fourier transform of the unit-energy raised cosine (real and even)."""
    T, beta = spec.T, spec.beta
    af = np.abs(np.asarray(f, dtype=float))
    scalar = af.ndim == 0
    af = np.atleast_1d(af)
    lo = (1.0 - beta) / (2.0 * T)
    hi = (1.0 + beta) / (2.0 * T)
    out = np.zeros_like(af)
    out[af <= lo] = T
    roll = (af > lo) & (af < hi)
    if beta > 0.0:
        out[roll] = 0.5 * T * (1.0 + np.cos(np.pi * T / beta * (af[roll] - lo)))
    out /= math.sqrt(spec.energy_norm)
    return float(out[0]) if scalar else out


def _band_pieces(spec: PulseSpec) -> list[tuple[float, float]]:
    # [0, band_edge] split at the roll-off breakpoints so each piece is smooth
    fb = spec.band_edge
    cuts = [(1.0 - spec.beta) / (2.0 * spec.T), (1.0 + spec.beta) / (2.0 * spec.T)]
    edges = [0.0] + sorted(c for c in cuts if 0.0 < c < fb) + [fb]
    return list(zip(edges[:-1], edges[1:]))


def _quad(func, lo, hi, what):
    val, err = integrate.quad(func, lo, hi, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=200)
    if err > max(QUAD_RTOL * abs(val), QUAD_ATOL) * 10.0:
        raise QuadratureError(f"{what}: quadrature error {err:.3e} on [{lo}, {hi}]")
    return val


def inband_energy(spec: PulseSpec) -> float:
    """Energy of the unit pulse inside the basis band, ``int_{|f|<1/(2 delta T)} |P(f)|^2 df``."""
    total = 0.0
    for lo, hi in _band_pieces(spec):
        total += _quad(lambda f: raised_cosine_spectrum(f, spec) ** 2, lo, hi, "in-band energy")
    return min(2.0 * total, 1.0)


def basis_coefficients(spec: PulseSpec) -> PulseCoeffs:
    """Project the unit-energy pulse onto the ``delta T``-spaced sinc basis.

    ``p_l = sqrt(delta T) * int_{-fb}^{fb} P(f) exp(j 2 pi f l delta T) df``; the
    spectrum is even, so only the cosine part over ``[0, fb]`` survives.

    Raises
    ------
    QuadratureError
        If a band piece cannot be integrated to relative tolerance 1e-10.
    """
    L = spec.L
    tau = spec.spacing
    pieces = _band_pieces(spec)
    half = np.empty(L + 1)
    for l in range(L + 1):
        acc = 0.0
        for lo, hi in pieces:
            acc += _quad(
                lambda f, l=l: raised_cosine_spectrum(f, spec) * math.cos(2.0 * math.pi * f * l * tau),
                lo,
                hi,
                f"tap {l}",
            )
        half[l] = 2.0 * math.sqrt(tau) * acc
    taps = np.concatenate([half[:0:-1], half])
    return PulseCoeffs(spec=spec, taps=taps, inband_energy=inband_energy(spec))


def build_isi_matrix(coeffs: PulseCoeffs, N: int) -> IsiMatrix:
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    return IsiMatrix(coeffs=coeffs, N=int(N))
