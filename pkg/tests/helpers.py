"""Shared builders for seeded test channels."""

import math

import numpy as np

from ftn_mccr.decomp import (
    ParallelChannels,
    SingularSpectrum,
    channel_singular_values,
    combine,
    generate_channel,
    isi_singular_values,
)
from ftn_mccr.ensemble import pulse_coeffs, trial_seed
from ftn_mccr.mccr import q_inv
from ftn_mccr.pulse import PulseSpec, basis_coefficients, build_isi_matrix

DELTAS = (0.5, 0.625, 0.75, 0.875, 1.0)
BETAS = (0.1, 0.3, 0.5, 0.7, 1.0)
TAPS = (0, 1, 3, 6, 10)


def ftn_channels(K=2, M=2, N=40, delta=0.67, beta=0.5, seed=0, T=0.01):
    pulse = PulseSpec(delta, beta, T=T)
    sp = isi_singular_values(build_isi_matrix(pulse_coeffs(delta, beta), N))
    sh = channel_singular_values(generate_channel(K, M, seed))
    return combine(SingularSpectrum(sigma_h=sh, sigma_p=sp), pulse, N, T)


def random_channels(rng, n=None, D=None):
    """Unstructured positive gains and costs, ``D * N <= 12``."""
    D = D or int(rng.integers(1, 4))
    N = n or int(rng.integers(1, 12 // D + 1))
    gain = rng.exponential(size=D * N) * 10 ** rng.uniform(-2, 2)
    cost = rng.uniform(0.05, 2.0, size=D * N)
    return ParallelChannels(gain, cost, float(rng.uniform(0.01, 1.0)), N, 0.67, 0.01, D)


def waterfill_instances(n=100, seed=0):
    rng = np.random.default_rng(seed)
    for k in range(n):
        yield k, random_channels(rng), float(10 ** rng.uniform(-2, 2))


def kron_instances(n=50, seed=1):
    rng = np.random.default_rng(seed)
    for k in range(n):
        K, M = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        N = int(rng.integers(1, 64 // K + 1))
        delta = float(rng.choice(DELTAS))
        beta = float(rng.choice(BETAS))
        L = int(rng.integers(1, 6))
        yield k, generate_channel(K, M, rng), build_isi_matrix(basis_coefficients(PulseSpec(delta, beta, L=L)), N)


def classical_mimo_capacity(sh2, snr):
    """Water-filling over eigenmodes with unit noise and total power ``snr``."""
    s = np.sort(sh2)[::-1]
    for k in range(len(s), 0, -1):
        mu = (snr + np.sum(1 / s[:k])) / k
        if mu > 1 / s[k - 1]:
            return float(np.sum(np.log2(mu * s[:k])))
    return 0.0


def siso_reference_mccr(cfg, t):
    """Scalar FTN rate of trial ``t`` for ``K = M = 1``, without matrix modules.

    A scalar channel prices every time slot the same, so the optimum spends
    the budget evenly over the ``N`` slots.
    """
    rng = np.random.default_rng(trial_seed(cfg.seed, t))
    h = math.sqrt(0.5) * complex(rng.standard_normal(), rng.standard_normal())
    snr = abs(h) ** 2 * cfg.delta * cfg.T * cfg.power / cfg.noise_var
    c = math.log2(1 + snr)
    v = (1 - (1 + snr) ** -2) / math.log(2) ** 2
    raw = cfg.N / (cfg.N + 2 * cfg.L) * (c - math.sqrt(v / cfg.N) * q_inv(cfg.eps) + math.log2(cfg.N) / (2 * cfg.N))
    return max(raw, 0.0)
