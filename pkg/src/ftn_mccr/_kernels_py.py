"""Pure numpy implementation of the batch rate kernel.

Given ``sigma_h**2`` for many trials and one shared ``sigma_p**2`` vector this
returns the per-trial ``C_DN`` and ``V_DN`` without building the ``D*N``
subchannel arrays. It relies on the FTN structure: the price of every
temporal subchannel of spatial mode ``d`` is ``1 / (sigma_h[d]**2 N delta T)``,
so water-filling runs over the ``D`` spatial modes, each repeated once per
usable temporal mode.
"""

from __future__ import annotations

import numpy as np

from .allocation import SIGMA_P_REL_TOL
from .mccr import LOG2E_SQ

MODE_CODES = {"optimal": 0, "uniform": 1, "uniform_power": 2}


def _dispersion_terms(snr):
    return 1.0 - (1.0 + snr) ** -2.0


def batch_rates(sh2, sp2, N, P, s0, delta, T, mode):
    sh2 = np.ascontiguousarray(sh2, dtype=float)
    sp2 = np.ascontiguousarray(sp2, dtype=float)
    trials, D = sh2.shape
    c = np.zeros(trials)
    v = np.zeros(trials)
    spmax = sp2.max() if sp2.size else 0.0
    if spmax <= 0.0:
        return c, v
    ne = int(np.count_nonzero(sp2 > SIGMA_P_REL_TOL**2 * spmax))
    frac = ne / N
    ndt = N * delta * T

    if mode == 0:
        s = -np.sort(-sh2, axis=1)
        pos = s > 0.0
        with np.errstate(divide="ignore"):
            price = np.where(pos, 1.0 / (np.where(pos, s, 1.0) * ndt), np.inf)
        k = np.arange(1, D + 1)
        cum = np.cumsum(np.where(pos, ne * price, 0.0), axis=1)
        levels = (P / s0 + cum) / (ne * k)
        ok = pos & (levels > price)
        any_ok = ok.any(axis=1)
        # last qualifying prefix length per row
        best = D - 1 - np.argmax(ok[:, ::-1], axis=1)
        lvl = levels[np.arange(trials), best]
        active = (k[None, :] <= (best + 1)[:, None]) & any_ok[:, None] & pos
        with np.errstate(invalid="ignore"):
            snr = np.where(active, (lvl[:, None] - price) / price, 0.0)
        snr = np.maximum(snr, 0.0)
        c = frac * np.sum(np.log2(1.0 + snr), axis=1)
        v = LOG2E_SQ * frac * np.sum(_dispersion_terms(snr), axis=1)
    elif mode == 1:
        total = sp2.sum()
        a = P * ndt / (D * total) / s0
        for d in range(D):
            snr = (sh2[:, d] * a)[:, None] * sp2[None, :]
            c += np.sum(np.log2(1.0 + snr), axis=1)
            v += np.sum(_dispersion_terms(snr), axis=1)
        c /= N
        v *= LOG2E_SQ / N
    elif mode == 2:
        dpos = np.count_nonzero(sh2 > 0.0, axis=1)
        safe = np.maximum(dpos, 1)
        snr = sh2 * (ndt * P / (safe * ne * s0))[:, None]
        snr = np.where(sh2 > 0.0, snr, 0.0)
        c = frac * np.sum(np.log2(1.0 + snr), axis=1)
        v = LOG2E_SQ * frac * np.sum(_dispersion_terms(snr), axis=1)
    else:
        raise ValueError(f"unknown mode code {mode}")
    return c, v
