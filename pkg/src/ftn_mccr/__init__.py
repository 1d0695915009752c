"""Maximum channel coding rate of finite-blocklength MIMO faster-than-Nyquist links."""

from .allocation import PowerAllocation, allocate, equal_power_allocation, uniform_allocation, waterfill
from .decomp import (
    ChannelMatrix,
    ParallelChannels,
    SingularSpectrum,
    combine,
    generate_channel,
    singular_spectrum,
)
from .ensemble import EnsembleResult, SigmaPCache, TrialConfig, run_ensemble
from .kernels import BACKEND
from .mccr import RatePoint, c_dn, capacity_infinite_n, mccr, q_inv, rate_point, spectral_efficiency, v_dn
from .pulse import IsiMatrix, PulseCoeffs, PulseSpec, basis_coefficients, build_isi_matrix, raised_cosine

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelMatrix",
    "EnsembleResult",
    "IsiMatrix",
    "ParallelChannels",
    "PowerAllocation",
    "PulseCoeffs",
    "PulseSpec",
    "RatePoint",
    "SigmaPCache",
    "SingularSpectrum",
    "TrialConfig",
    "allocate",
    "basis_coefficients",
    "build_isi_matrix",
    "c_dn",
    "capacity_infinite_n",
    "combine",
    "equal_power_allocation",
    "generate_channel",
    "mccr",
    "q_inv",
    "raised_cosine",
    "rate_point",
    "run_ensemble",
    "singular_spectrum",
    "spectral_efficiency",
    "uniform_allocation",
    "v_dn",
    "waterfill",
]
