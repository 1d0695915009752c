# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch rate kernel; see ``_kernels_py`` for the reference semantics."""

import numpy as np

from libc.math cimport log2
from libc.stdlib cimport malloc, free

cdef double SIGMA_P_REL_TOL_SQ = 1e-24
cdef double LOG2E_SQ = 2.0813689810056077


cdef inline double _dispersion_term(double snr) nogil:
    cdef double x = 1.0 + snr
    return 1.0 - 1.0 / (x * x)


def batch_rates(double[:, ::1] sh2, double[::1] sp2, long N, double P, double s0,
                double delta, double T, int mode):
    """Per-trial ``(C_DN, V_DN)`` for a batch of spatial spectra.

    ``sh2`` holds ``sigma_h**2`` per trial (rows), ``sp2`` the shared
    ``sigma_p**2``. ``mode`` is 0 for water-filling, 1 for equal symbol power
    and 2 for equal power share.
    """
    cdef Py_ssize_t trials = sh2.shape[0]
    cdef Py_ssize_t D = sh2.shape[1]
    cdef Py_ssize_t Np = sp2.shape[0]
    cdef Py_ssize_t t, d, j, n, k, best
    cdef double ndt = N * delta * T
    cdef double budget = P / s0
    cdef double spmax = 0.0, sum_sp2 = 0.0, thresh, x, acc_c, acc_v, lvl, cum, snr, a
    cdef long ne = 0, dpos
    cdef double frac

    out_c = np.zeros(trials)
    out_v = np.zeros(trials)
    cdef double[::1] c = out_c
    cdef double[::1] v = out_v

    for n in range(Np):
        if sp2[n] > spmax:
            spmax = sp2[n]
        sum_sp2 += sp2[n]
    if spmax <= 0.0:
        return out_c, out_v
    thresh = SIGMA_P_REL_TOL_SQ * spmax
    for n in range(Np):
        if sp2[n] > thresh:
            ne += 1
    frac = <double>ne / <double>N

    cdef double *buf = <double *> malloc(D * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(trials):
                # positive sigma_h**2, sorted descending (insertion sort, D is small)
                dpos = 0
                for d in range(D):
                    x = sh2[t, d]
                    if x > 0.0:
                        j = dpos
                        while j > 0 and buf[j - 1] < x:
                            buf[j] = buf[j - 1]
                            j -= 1
                        buf[j] = x
                        dpos += 1
                acc_c = 0.0
                acc_v = 0.0
                if mode == 0:
                    if dpos == 0 or ne == 0:
                        continue
                    best = -1
                    cum = 0.0
                    lvl = 0.0
                    for k in range(dpos):
                        cum += ne * (1.0 / (buf[k] * ndt))
                        x = (budget + cum) / (ne * (k + 1))
                        if x > 1.0 / (buf[k] * ndt):
                            best = k
                            lvl = x
                    for k in range(best + 1):
                        snr = (lvl - 1.0 / (buf[k] * ndt)) / (1.0 / (buf[k] * ndt))
                        if snr > 0.0:
                            acc_c += log2(1.0 + snr)
                            acc_v += _dispersion_term(snr)
                    c[t] = frac * acc_c
                    v[t] = LOG2E_SQ * frac * acc_v
                elif mode == 1:
                    if sum_sp2 <= 0.0:
                        continue
                    # q = P / sum(w) over all D*Np channels
                    a = P * ndt / (D * sum_sp2) / s0
                    for d in range(D):
                        x = sh2[t, d] * a
                        for n in range(Np):
                            snr = x * sp2[n]
                            acc_c += log2(1.0 + snr)
                            acc_v += _dispersion_term(snr)
                    c[t] = acc_c / N
                    v[t] = LOG2E_SQ * acc_v / N
                else:
                    if dpos == 0 or ne == 0:
                        continue
                    a = ndt * P / (dpos * ne * s0)
                    for k in range(dpos):
                        snr = buf[k] * a
                        acc_c += log2(1.0 + snr)
                        acc_v += _dispersion_term(snr)
                    c[t] = frac * acc_c
                    v[t] = LOG2E_SQ * frac * acc_v
    finally:
        free(buf)
    return out_c, out_v
