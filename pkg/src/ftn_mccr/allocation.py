"""Power allocation over the parallel subchannels.

Maximise ``sum_i log2(1 + g_i q_i / s0)`` subject to ``sum_i w_i q_i <= P`` and
``q_i >= 0``. Stationarity gives ``q_i = s0 * (lam - w_i/g_i) / w_i`` on the
active set, so channels are ranked by their price ``w_i / g_i``. For the FTN
subchannels the price is ``1 / (sigma_h[d]**2 N delta T)`` and depends on the
spatial mode only, which makes the water level constant per mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomp import ParallelChannels

__all__ = [
    "PowerAllocation",
    "ALLOCATION_MODES",
    "SIGMA_P_REL_TOL",
    "usable_channels",
    "waterfill",
    "uniform_allocation",
    "equal_power_allocation",
    "allocate",
    "objective",
]

# subchannels whose sigma_p factor is below this fraction of the largest are dropped
SIGMA_P_REL_TOL = 1e-12

BUDGET_RTOL = 1e-9
BISECT_RTOL = 1e-12

ALLOCATION_MODES = ("optimal", "uniform", "uniform_power")


@dataclass(frozen=True)
class PowerAllocation:
    """Per-subchannel input powers.

    ``water_level`` is expressed as ``N delta T / mu``, i.e. the quantity from
    which ``1 / sigma_h**2`` is subtracted in the closed-form solution. It is
    ``nan`` for the non-optimal schemes.
    """

    q: np.ndarray
    water_level: float
    active: np.ndarray
    spent_power: float


def usable_channels(ch: ParallelChannels) -> np.ndarray:
    """Mask of subchannels with nonzero gain and a non-negligible sigma_p factor."""
    wmax = float(ch.cost.max()) if ch.count else 0.0
    if wmax <= 0.0:
        return np.zeros(ch.count, dtype=bool)
    return (ch.gain > 0.0) & (ch.cost > SIGMA_P_REL_TOL**2 * wmax)


def _check_budget(P):
    if not (isinstance(P, (int, float, np.floating, np.integer)) and math.isfinite(P) and P > 0):
        raise ValueError(f"power budget must be positive and finite, got {P!r}")


def _zero(ch):
    return PowerAllocation(
        q=np.zeros(ch.count), water_level=0.0, active=np.zeros(ch.count, dtype=bool), spent_power=0.0
    )


def _level_bisect(price: np.ndarray, budget: float) -> float:
    # sum((lam - price)^+) = budget is increasing in lam
    lo = float(price.min())
    hi = lo + budget + float(price.max() - lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(mid - price, 0.0)) < budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECT_RTOL * hi:
            break
    return 0.5 * (lo + hi)


def waterfill(ch: ParallelChannels, P: float) -> PowerAllocation:
    """Optimal power allocation by an exact active-set pass.

    Channels are sorted by price ``w_i / g_i``; the active set is the longest
    prefix whose level ``lam_k = (P/s0 + sum_{j<=k} price_j) / k`` strictly
    exceeds the price of its last member. A channel priced exactly at the
    water line is left inactive. Unusable channels (zero gain, or sigma_p
    below ``SIGMA_P_REL_TOL`` of the largest) receive zero power.
    """
    _check_budget(P)
    usable = usable_channels(ch)
    if not usable.any():
        return _zero(ch)

    s0 = ch.noise_power
    budget = P / s0
    idx = np.flatnonzero(usable)
    price = ch.cost[idx] / ch.gain[idx]
    order = np.argsort(price, kind="stable")
    sorted_price = price[order]
    levels = (budget + np.cumsum(sorted_price)) / np.arange(1, idx.size + 1)
    ok = np.flatnonzero(levels > sorted_price)
    lam = float(levels[ok[-1]]) if ok.size else float("nan")

    q = np.zeros(ch.count)
    good = False
    if math.isfinite(lam):
        q[idx] = s0 * np.maximum(lam - price, 0.0) / ch.cost[idx]
        spent = float(np.dot(ch.cost, q))
        good = abs(spent - P) <= BUDGET_RTOL * P
    if not good:
        lam = _level_bisect(price, budget)
        q[:] = 0.0
        q[idx] = s0 * np.maximum(lam - price, 0.0) / ch.cost[idx]

    spent = float(np.dot(ch.cost, q))
    return PowerAllocation(
        q=q,
        water_level=lam * ch.N * ch.delta * ch.T,
        active=q > 0.0,
        spent_power=spent,
    )


def uniform_allocation(ch: ParallelChannels, P: float) -> PowerAllocation:
    """Equal symbol power ``q = P / sum(w)`` on every channel with ``w_i > 0``.

    This is the white-input baseline: i.i.d. equal-power symbols on every
    antenna and time slot.
    """
    _check_budget(P)
    total = float(ch.cost.sum())
    if total <= 0.0:
        raise ValueError("all cost weights are zero; no power can be spent")
    live = ch.cost > 0.0
    q = np.where(live, P / total, 0.0)
    return PowerAllocation(q=q, water_level=float("nan"), active=live, spent_power=float(np.dot(ch.cost, q)))


def equal_power_allocation(ch: ParallelChannels, P: float) -> PowerAllocation:
    """Every usable channel spends the same share ``P / n`` of the budget.

    Each channel then has the SNR ``g_i P / (n w_i s0)``, which for the FTN
    subchannels is flat in time and equal to ``sigma_h**2 N delta T P / (n s0)``.
    """
    _check_budget(P)
    usable = usable_channels(ch)
    n = int(usable.sum())
    if n == 0:
        raise ValueError("no usable subchannel; no power can be spent")
    q = np.zeros(ch.count)
    q[usable] = (P / n) / ch.cost[usable]
    return PowerAllocation(q=q, water_level=float("nan"), active=usable, spent_power=float(np.dot(ch.cost, q)))


def allocate(ch: ParallelChannels, P: float, mode: str = "optimal") -> PowerAllocation:
    if mode == "optimal":
        return waterfill(ch, P)
    if mode == "uniform":
        return uniform_allocation(ch, P)
    if mode == "uniform_power":
        return equal_power_allocation(ch, P)
    raise ValueError(f"unknown allocation mode {mode!r}; expected one of {ALLOCATION_MODES}")


def objective(ch: ParallelChannels, q) -> float:
    """``sum_i log2(1 + g_i q_i / s0)``."""
    return float(np.sum(np.log2(1.0 + ch.gain * np.asarray(q) / ch.noise_power)))
