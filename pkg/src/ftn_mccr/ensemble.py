"""Seeded Monte Carlo over quasi-static channel realisations.

Noise convention: the continuous noise power ``sigma0**2`` is measured in the
Nyquist bandwidth ``1/T``, so one noise sample at the output of the
unit-energy receive filter has variance ``sigma0**2 * T``. With
``sigma0**2 = 1`` and ``P = 10**(snr_db/10)`` the symbol energy-to-noise
ratio is ``delta * SNR``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import kernels
from .allocation import ALLOCATION_MODES, allocate
from .decomp import SingularSpectrum, channel_singular_values, combine, generate_channel, isi_singular_values
from .mccr import RatePoint, q_inv, rate_point, spectral_efficiency, toeplitz_symbol
from .pulse import DEFAULT_L, DEFAULT_T, PulseCoeffs, PulseSpec, basis_coefficients, build_isi_matrix

__all__ = [
    "DEFAULT_SEED",
    "TrialConfig",
    "EnsembleResult",
    "TrialError",
    "SigmaPCache",
    "default_cache",
    "pulse_coeffs",
    "noise_sample_variance",
    "trial_seed",
    "evaluate_trial",
    "run_ensemble",
]

log = logging.getLogger(__name__)

DEFAULT_SEED = 0xF7A57E2
CACHE_ENV = "FTN_MCCR_CACHE_DIR"
CACHE_FORMAT = "ftn_mccr sigma_p v1"
BOUND_GRID = 4096


class TrialError(RuntimeError):
    """A lower-level failure inside one Monte Carlo trial."""

    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial}: {cause}")
        self.trial = trial


@dataclass(frozen=True)
class TrialConfig:
    K: int = 2
    M: int = 2
    N: int = 500
    L: int = DEFAULT_L
    delta: float = 0.67
    beta: float = 0.5
    T: float = DEFAULT_T
    snr_db: float = 20.0
    eps: float = 1e-6
    trials: int = 1000
    seed: int = DEFAULT_SEED
    allocation_mode: str = "optimal"

    def __post_init__(self):
        for name in ("K", "M", "N", "L", "trials"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ValueError(f"{name} must be a positive integer, got {val}")
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.allocation_mode not in ALLOCATION_MODES:
            raise ValueError(f"allocation_mode must be one of {ALLOCATION_MODES}, got {self.allocation_mode!r}")
        self.pulse  # validates delta, beta, T, L

    @property
    def pulse(self) -> PulseSpec:
        return PulseSpec(delta=self.delta, beta=self.beta, T=self.T, L=self.L)

    @property
    def D(self) -> int:
        return min(self.K, self.M)

    @property
    def power(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def noise_var(self) -> float:
        return noise_sample_variance(self.T)

    def with_(self, **changes) -> "TrialConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class EnsembleResult:
    mean_mccr: float
    mean_spectral_efficiency: float
    std_error: float
    trials_used: int
    config: TrialConfig
    cache_hit: bool
    mean_capacity_bound: float | None = None
    clamped_trials: int = 0
    per_trial_mccr: np.ndarray = field(default=None, repr=False, compare=False)
    per_trial_se: np.ndarray = field(default=None, repr=False, compare=False)


def noise_sample_variance(T: float, sigma0_sq: float = 1.0) -> float:
    """Variance of one receive-filter noise sample, ``sigma0**2 * T``."""
    return sigma0_sq * T


def trial_seed(seed: int, trial: int) -> np.random.SeedSequence:
    """Independent, individually reproducible stream for ``trial``."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(trial,))


@lru_cache(maxsize=64)
def pulse_coeffs(delta: float, beta: float, L: int = DEFAULT_L, T: float = DEFAULT_T) -> PulseCoeffs:
    return basis_coefficients(PulseSpec(delta=delta, beta=beta, T=T, L=L))


def _trace_ok(sigma_p: np.ndarray, coeffs: PulseCoeffs, N: int) -> bool:
    expected = N * float(coeffs.autocorrelation()[0])
    got = float(np.sum(sigma_p**2))
    return abs(got - expected) <= 1e-8 * expected


def _checksum(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()


class SigmaPCache:
    """Disk-backed cache of ``sigma_p`` spectra keyed by ``(N, delta, beta, L)``.

    The taps do not depend on ``T`` (it scales out of the projection), so the
    key omits it and spectra are always computed at the reference period.
    Each file is plain text: a header with the key and a SHA-256 of the
    values, then one value per line in round-trip ``repr`` form.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        if directory is None:
            directory = os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "ftn_mccr"
        self.directory = Path(directory)
        self._memory: dict[tuple, np.ndarray] = {}
        self._locks: dict[tuple, threading.Lock] = {}
        self._guard = threading.Lock()

    @staticmethod
    def key(N: int, delta: float, beta: float, L: int) -> tuple:
        return (int(N), float(delta), float(beta), int(L))

    def path_for(self, key: tuple) -> Path:
        N, delta, beta, L = key
        digest = hashlib.sha1(json.dumps(key).encode()).hexdigest()[:12]
        return self.directory / f"sigma_p_N{N}_L{L}_{digest}.txt"

    def _lock(self, key):
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def clear_memory(self):
        self._memory.clear()

    def _read(self, key, coeffs) -> np.ndarray | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            with open(path) as fh:
                head = [fh.readline().rstrip("\n") for _ in range(3)]
                values = np.array([float(line) for line in fh if line.strip()])
            if head[0] != f"# {CACHE_FORMAT}":
                raise ValueError("bad header")
            if tuple(json.loads(head[1][len("# key "):])) != key:
                raise ValueError("key mismatch")
            if head[2][len("# sha256 "):] != _checksum(values):
                raise ValueError("checksum mismatch")
            if values.size != key[0] or not _trace_ok(values, coeffs, key[0]):
                raise ValueError("trace check failed")
        except (OSError, ValueError, IndexError, json.JSONDecodeError) as exc:
            warnings.warn(f"corrupt sigma_p cache entry {path}: {exc}; recomputing", RuntimeWarning)
            return None
        return values

    def _write(self, key, values):
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(key)
        lines = [
            f"# {CACHE_FORMAT}",
            f"# key {json.dumps(list(key))}",
            f"# sha256 {_checksum(values)}",
        ]
        lines += [repr(float(v)) for v in values]
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp_", suffix=".txt")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write("\n".join(lines) + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get(self, N: int, delta: float, beta: float, L: int = DEFAULT_L) -> tuple[np.ndarray, bool]:
        """Return ``(sigma_p, cache_hit)``."""
        key = self.key(N, delta, beta, L)
        with self._lock(key):
            if key in self._memory:
                return self._memory[key], True
            coeffs = pulse_coeffs(key[1], key[2], key[3])
            values = self._read(key, coeffs)
            hit = values is not None
            if not hit:
                log.info("computing sigma_p for N=%d delta=%g beta=%g L=%d", *key)
                values = isi_singular_values(build_isi_matrix(coeffs, key[0]))
                try:
                    self._write(key, values)
                except OSError as exc:
                    warnings.warn(f"could not persist sigma_p cache entry: {exc}", RuntimeWarning)
            values.setflags(write=False)
            self._memory[key] = values
            return values, hit


_default_cache: SigmaPCache | None = None


def default_cache() -> SigmaPCache:
    global _default_cache
    directory = os.environ.get(CACHE_ENV)
    if _default_cache is None or (directory and Path(directory) != _default_cache.directory):
        _default_cache = SigmaPCache(directory)
    return _default_cache


def evaluate_trial(config: TrialConfig, trial: int, sigma_p: np.ndarray) -> RatePoint:
    """One trial through the full module pipeline (no batching)."""
    H = generate_channel(config.K, config.M, trial_seed(config.seed, trial))
    spec = SingularSpectrum(sigma_h=channel_singular_values(H), sigma_p=sigma_p)
    ch = combine(spec, config.pulse, config.N, config.noise_var)
    alloc = allocate(ch, config.power, config.allocation_mode)
    return rate_point(ch, alloc, config.L, config.eps, config.beta)


def _draw_sigma_h2(config: TrialConfig, trials: range) -> np.ndarray:
    mats = np.stack([generate_channel(config.K, config.M, trial_seed(config.seed, t)).entries for t in trials])
    try:
        s = np.linalg.svd(mats, compute_uv=False)
    except np.linalg.LinAlgError:
        for t, h in zip(trials, mats):
            try:
                channel_singular_values(h)
            except Exception as exc:
                raise TrialError(t, exc) from exc
        raise
    return s**2


def _chunks(n: int, workers: int) -> list[range]:
    size = max(1, math.ceil(n / workers))
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def _fsum_mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def run_ensemble(
    config: TrialConfig,
    *,
    capacity_bound: bool = False,
    cache: SigmaPCache | None = None,
    workers: int = 1,
    engine: str = "kernel",
    backend: str | None = None,
) -> EnsembleResult:
    """Average the spectral efficiency over ``config.trials`` channel draws.

    ``engine="kernel"`` evaluates rates with the batch kernel;
    ``engine="reference"`` runs every trial through :func:`evaluate_trial`.
    Both use the same per-trial channel draws. Statistics are accumulated
    with exactly rounded sums, so ``workers`` never changes the result.
    """
    cache = cache or default_cache()
    sigma_p, hit = cache.get(config.N, config.delta, config.beta, config.L)
    n = config.trials
    D, N, L = config.D, config.N, config.L

    if engine == "reference":
        points = []
        for t in range(n):
            try:
                points.append(evaluate_trial(config, t, sigma_p))
            except Exception as exc:
                raise TrialError(t, exc) from exc
        mccr_t = np.array([p.mccr for p in points])
        clamped = sum(p.clamped for p in points)
        sh2 = None
    elif engine == "kernel":
        parts = _chunks(n, max(1, workers))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                blocks = list(pool.map(lambda r: _draw_sigma_h2(config, r), parts))
        else:
            blocks = [_draw_sigma_h2(config, r) for r in parts]
        sh2 = np.concatenate(blocks, axis=0)
        c, v = kernels.batch_rates(
            sh2, sigma_p**2, N, config.power, config.noise_var, config.delta, config.T,
            config.allocation_mode, backend=backend,
        )
        DN = D * N
        raw = N / (N + 2 * L) * (c - np.sqrt(v / DN) * q_inv(config.eps) + math.log2(DN) / (2 * DN))
        clamped = int(np.count_nonzero(raw < 0.0))
        mccr_t = np.maximum(raw, 0.0)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    se_t = spectral_efficiency(mccr_t, config.delta, config.beta)
    mean_se, std_error = _fsum_mean_se(se_t)
    mean_mccr = math.fsum(mccr_t) / n

    bound = None
    if capacity_bound:
        if sh2 is None:
            sh2 = _draw_sigma_h2(config, range(n))
        bound = _mean_capacity_bound(config, sh2, backend)

    return EnsembleResult(
        mean_mccr=mean_mccr,
        mean_spectral_efficiency=mean_se,
        std_error=std_error,
        trials_used=n,
        config=config,
        cache_hit=hit,
        mean_capacity_bound=bound,
        clamped_trials=int(clamped),
        per_trial_mccr=mccr_t,
        per_trial_se=se_t,
    )


def _mean_capacity_bound(config: TrialConfig, sh2: np.ndarray, backend=None, grid: int = BOUND_GRID) -> float:
    """Mean infinite-blocklength capacity over the trials, in bits/s/Hz."""
    coeffs = pulse_coeffs(config.delta, config.beta, config.L)

    def per_trial(g):
        f = toeplitz_symbol(coeffs, g)
        c, _ = kernels.batch_rates(
            sh2, f, g, config.power, config.noise_var, config.delta, config.T, "optimal", backend=backend
        )
        return c

    c = per_trial(grid)
    c2 = per_trial(2 * grid)
    worst = float(np.max(np.abs(c2 - c))) if c.size else 0.0
    if worst >= 1e-4:
        warnings.warn(f"capacity bound not converged at grid={grid} (max change {worst:.2e})", RuntimeWarning)
    return math.fsum(spectral_efficiency(c, config.delta, config.beta)) / c.size
