"""Random MIMO channels and the Kronecker decomposition into parallel subchannels.

The space-time channel ``H kron P`` has singular values ``sigma_h[d] * sigma_p[n]``,
so only the two small spectra are ever computed. Subchannel ``i`` uses the
spatial mode ``i // N`` and the temporal mode ``i % N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .pulse import IsiMatrix, PulseSpec

__all__ = [
    "ChannelMatrix",
    "SingularSpectrum",
    "ParallelChannels",
    "SpectrumError",
    "generate_channel",
    "channel_singular_values",
    "isi_singular_values",
    "singular_spectrum",
    "combine",
    "sort_descending",
]


class SpectrumError(RuntimeError):
    """The SVD routine failed to converge."""


@dataclass(frozen=True)
class ChannelMatrix:
    """``M x K`` complex gain matrix, ``entries[m, k] = h_mk``."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries)
        if h.ndim != 2 or min(h.shape) < 1:
            raise ValueError(f"channel matrix must be 2-D and non-empty, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("channel matrix has non-finite entries")

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def K(self) -> int:
        return self.entries.shape[1]

    @property
    def D(self) -> int:
        return min(self.K, self.M)


@dataclass(frozen=True)
class SingularSpectrum:
    sigma_h: np.ndarray
    sigma_p: np.ndarray

    def __post_init__(self):
        for name in ("sigma_h", "sigma_p"):
            v = np.asarray(getattr(self, name))
            if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValueError(f"{name} must be a 1-D array of finite nonnegative values")

    @property
    def D(self) -> int:
        return self.sigma_h.size

    @property
    def N(self) -> int:
        return self.sigma_p.size


@dataclass(frozen=True)
class ParallelChannels:
    """``D*N`` parallel complex Gaussian subchannels.

    ``gain[i]`` is the power gain ``(sigma_h[i//N] sigma_p[i%N])**2`` and
    ``cost[i] = sigma_p[i%N]**2 / (N delta T)`` is the weight of the input
    power ``q[i]`` in the transmit-power constraint ``sum(cost * q) <= P``.
    ``noise_power`` is the variance of one noise sample after the receive filter.
    """

    gain: np.ndarray
    cost: np.ndarray
    noise_power: float
    N: int
    delta: float
    T: float
    D: int

    def __post_init__(self):
        if self.gain.shape != self.cost.shape or self.gain.ndim != 1:
            raise ValueError("gain and cost must be 1-D arrays of equal length")
        if self.gain.size != self.D * self.N:
            raise ValueError(f"expected D*N = {self.D * self.N} subchannels, got {self.gain.size}")
        if np.any(self.gain < 0) or np.any(self.cost < 0):
            raise ValueError("gains and costs must be nonnegative")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")

    @property
    def count(self) -> int:
        return self.gain.size

    def spatial_index(self) -> np.ndarray:
        return np.arange(self.count) // self.N

    def temporal_index(self) -> np.ndarray:
        return np.arange(self.count) % self.N


def sort_descending(values) -> np.ndarray:
    """Descending sort; equal values keep their original order."""
    values = np.asarray(values)
    return values[np.argsort(-values, kind="stable")]


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_channel(K: int, M: int, seed) -> ChannelMatrix:
    """Draw an ``M x K`` matrix with i.i.d. ``CN(0, 1/K)`` entries.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``; there is no
    fallback to a global RNG.
    """
    if K < 1 or M < 1:
        raise ValueError(f"antenna counts must be >= 1, got K={K}, M={M}")
    rng = _as_rng(seed)
    scale = np.sqrt(1.0 / (2.0 * K))
    re = rng.standard_normal((M, K))
    im = rng.standard_normal((M, K))
    return ChannelMatrix(entries=scale * (re + 1j * im))


def channel_singular_values(H) -> np.ndarray:
    h = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)
    if not np.all(np.isfinite(h)):
        raise SpectrumError("channel matrix has non-finite entries")
    try:
        s = linalg.svdvals(h)
    except linalg.LinAlgError as exc:
        raise SpectrumError(f"SVD of the {h.shape} channel matrix did not converge") from exc
    return sort_descending(s)


def isi_singular_values(P: IsiMatrix) -> np.ndarray:
    try:
        s = linalg.svdvals(P.dense(), check_finite=False)
    except linalg.LinAlgError as exc:
        raise SpectrumError(f"SVD of the {P.shape} ISI matrix did not converge") from exc
    return sort_descending(s)


def singular_spectrum(H, P: IsiMatrix) -> SingularSpectrum:
    """Singular values of ``H`` (length ``D``) and ``P`` (length ``N``), descending.

    The unitary factors are never formed.
    """
    return SingularSpectrum(sigma_h=channel_singular_values(H), sigma_p=isi_singular_values(P))


def combine(spectrum: SingularSpectrum, pulse: PulseSpec, N: int, sigma0_sq: float) -> ParallelChannels:
    if spectrum.N != N:
        raise ValueError(f"sigma_p has {spectrum.N} values but N = {N}")
    sh2 = np.asarray(spectrum.sigma_h, dtype=float) ** 2
    sp2 = np.asarray(spectrum.sigma_p, dtype=float) ** 2
    gain = np.outer(sh2, sp2).ravel()
    cost = np.tile(sp2 / (N * pulse.delta * pulse.T), sh2.size)
    return ParallelChannels(
        gain=gain,
        cost=cost,
        noise_power=float(sigma0_sq),
        N=int(N),
        delta=pulse.delta,
        T=pulse.T,
        D=sh2.size,
    )
