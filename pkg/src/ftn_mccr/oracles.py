"""Slow reference implementations used by the test-suite.

Each one takes a different route from the production code: time-domain
instead of frequency-domain projection, iterative ascent instead of the
active-set water-filling, a dense Kronecker SVD instead of combining spectra,
and series / continued-fraction Gaussian tails instead of ``erfc``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .decomp import ChannelMatrix, ParallelChannels
from .pulse import IsiMatrix, PulseSpec, raised_cosine

__all__ = [
    "OracleReport",
    "OracleError",
    "compare",
    "adaptive_gauss",
    "pulse_energy_oracle",
    "projection_oracle",
    "waterfill_oracle",
    "kron_svd_oracle",
    "charpoly_eigvals",
    "qfunc_oracle",
    "qinv_oracle",
]


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleReport:
    name: str
    instance: str
    main: np.ndarray
    oracle: np.ndarray
    max_abs: float
    max_rel: float
    tol: float
    passed: bool

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name} ({self.instance}): max|d|={self.max_abs:.3e} rel={self.max_rel:.3e} tol={self.tol:.1e}"


def compare(name, instance, main, oracle, tol, relative=False) -> OracleReport:
    a = np.atleast_1d(np.asarray(main, dtype=float))
    b = np.atleast_1d(np.asarray(oracle, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"{name}: shape mismatch {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    max_abs = float(diff.max()) if diff.size else 0.0
    max_rel = float((diff / scale).max()) if diff.size else 0.0
    passed = (max_rel if relative else max_abs) <= tol
    return OracleReport(name, instance, a, b, max_abs, max_rel, tol, passed)


# -- quadrature ---------------------------------------------------------------

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (16, 32)}


def adaptive_gauss(func, lo, hi, pieces, tol=1e-14, max_rounds=30):
    """Vectorised adaptive Gauss-Legendre quadrature.

    The interval is cut into ``pieces`` panels; every panel is integrated with
    16 and 32 nodes and the ones that disagree by more than ``tol`` are halved
    until all agree.
    """
    edges = np.linspace(lo, hi, pieces + 1)
    panels = np.stack([edges[:-1], edges[1:]], axis=1)
    total = 0.0
    for _ in range(max_rounds):
        a, b = panels[:, :1], panels[:, 1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        est = []
        for n in (16, 32):
            x, w = _GL[n]
            est.append(np.sum(func(mid + half * x) * w, axis=1) * half[:, 0])
        good = np.abs(est[0] - est[1]) <= tol
        total += math.fsum(est[1][good])
        bad = panels[~good]
        if bad.size == 0:
            return total
        m = 0.5 * (bad[:, 0] + bad[:, 1])
        panels = np.concatenate([np.stack([bad[:, 0], m], 1), np.stack([m, bad[:, 1]], 1)])
    raise OracleError("adaptive quadrature did not converge")


def pulse_energy_oracle(spec: PulseSpec, span: float = 40.0) -> float:
    """``int |p(t)|^2 dt`` over ``|t| <= span * T`` in the time domain."""
    T = spec.T
    pieces = int(4 * span)
    return adaptive_gauss(lambda t: raised_cosine(t, spec) ** 2, -span * T, span * T, pieces)


def _sinc_basis(t, spec: PulseSpec):
    tau = spec.spacing
    return np.sinc(t / tau) / math.sqrt(tau)


def _tail_terms(spec: PulseSpec, s: float):
    """Trig decomposition of ``p(t) phi(t - s)`` away from its removable poles.

    Returns the rational envelope ``R`` and ``(coef, omega, theta)`` triples
    with ``p(t) phi(t - s) = R(t) * sum coef * cos(omega t + theta)``.
    """
    T, beta, tau = spec.T, spec.beta, spec.spacing
    amp = 1.0 / math.sqrt(spec.energy_norm)

    def envelope(t):
        return (
            amp * (T / (math.pi * t)) / (1.0 - (2.0 * beta * t / T) ** 2)
            * math.sqrt(tau) / (math.pi * (t - s))
        )

    a, b, c = math.pi / T, math.pi * beta / T, math.pi / tau
    terms = []
    for alpha in (a + b, a - b):
        terms.append((0.25, alpha - c, c * s))
        terms.append((-0.25, alpha + c, -c * s))
    return envelope, terms


def _tail(envelope, terms, start, sign):
    # int_start^inf of f(sign * u) du
    total = 0.0
    for coef, omega, theta in terms:
        omega, theta = sign * omega, theta
        if omega < 0.0:
            omega, theta = -omega, -theta
        env = lambda u: envelope(sign * u)  # noqa: E731
        if omega < 1e-12:
            val, _ = integrate.quad(env, start, np.inf, epsabs=1e-15, epsrel=1e-13, limit=500)
            total += coef * math.cos(theta) * val
            continue
        vc, _ = integrate.quad(env, start, np.inf, weight="cos", wvar=omega, epsabs=1e-15, limlst=200)
        vs, _ = integrate.quad(env, start, np.inf, weight="sin", wvar=omega, epsabs=1e-15, limlst=200)
        total += coef * (math.cos(theta) * vc - math.sin(theta) * vs)
    return total


def projection_oracle(spec: PulseSpec, l: int) -> float:
    """``int p(t) phi(t - l delta T) dt`` computed in the time domain.

    The finite middle section ``|t| <= A`` (``A >= 60 delta T``) is integrated
    with adaptive Gauss-Legendre panels; the two tails are split into
    sinusoids times a rational envelope and handed to QUADPACK's Fourier
    integral routine, so no truncation error is left.
    """
    tau = spec.spacing
    s = l * tau
    A = 60.0 * tau + abs(s) + tau
    if spec.beta > 0.0:
        A = max(A, spec.T / spec.beta)
    pieces = int(math.ceil(2.0 * A / (0.5 * min(tau, spec.T))))
    middle = adaptive_gauss(lambda t: raised_cosine(t, spec) * _sinc_basis(t - s, spec), -A, A, pieces, tol=1e-15)
    envelope, terms = _tail_terms(spec, s)
    right = _tail(envelope, terms, A, +1.0)
    left = _tail(envelope, terms, A, -1.0)
    return middle + right + left


# -- water-filling --------------------------------------------------------------


def _project_simplex(y, total):
    # Euclidean projection onto {x >= 0, sum x = total} (sort-based)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(y - theta, 0.0)


def waterfill_oracle(ch: ParallelChannels, P: float, max_iter: int = 20000):
    """Optimal allocation by projected-gradient ascent plus pairwise refinement.

    Works on the spent powers ``x_i = w_i q_i``, whose feasible set is the
    simplex ``sum x = P``. After accelerated projected-gradient ascent, power
    is moved between the channels with the largest and smallest marginal
    utility; each move is located by a shrinking grid on the marginal
    difference. Returns the symbol powers ``q``.
    """
    g, w, s0 = ch.gain, ch.cost, ch.noise_power
    live = (g > 0.0) & (w > 0.0)
    q = np.zeros(ch.count)
    if not live.any():
        return q
    a = g[live] / (w[live] * s0)
    n = a.size

    def grad(x):
        return a / (1.0 + a * x)

    x = np.full(n, P / n)
    y = x.copy()
    step = 1.0 / float(np.max(a) ** 2)
    tk = 1.0
    for _ in range(2000):
        x_new = _project_simplex(y + step * grad(y), P)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        y = x_new + ((tk - 1.0) / t_new) * (x_new - x)
        x, tk = x_new, t_new

    for it in range(max_iter):
        m = grad(x)
        donors = np.flatnonzero(x > 0.0)
        i = donors[np.argmin(m[donors])]
        j = int(np.argmax(m))
        if m[j] - m[i] <= 1e-14 * m[j] or i == j:
            break
        # move t from i to j; d/dt objective = m_j(t) - m_i(t) is decreasing
        lo, hi = 0.0, x[i]
        for _ in range(60):
            grid = np.linspace(lo, hi, 9)
            diff = a[j] / (1.0 + a[j] * (x[j] + grid)) - a[i] / (1.0 + a[i] * (x[i] - grid))
            pos = np.flatnonzero(diff > 0.0)
            if pos.size == 0:
                hi = grid[0]
                break
            k = pos[-1]
            if k == grid.size - 1:
                lo = hi = grid[-1]
                break
            lo, hi = grid[k], grid[k + 1]
            if hi - lo <= 1e-16 * max(x[i], x[j], 1e-300):
                break
        t = 0.5 * (lo + hi)
        x[i] -= t
        x[j] += t
        if x[i] < 1e-15 * P:
            x[j] += x[i]
            x[i] = 0.0
    else:
        raise OracleError(f"waterfill oracle hit its iteration budget ({max_iter})")

    q[live] = x / w[live]
    return q


# -- spectra -----------------------------------------------------------------------


def kron_svd_oracle(H, P: IsiMatrix) -> np.ndarray:
    """Singular values of the dense ``H kron P``, descending."""
    h = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)
    if h.shape[1] * P.N > 64:
        raise OracleError(f"KN = {h.shape[1] * P.N} exceeds the dense-oracle limit of 64")
    big = np.kron(h, P.dense())
    return np.linalg.svd(big, compute_uv=False)


def charpoly_eigvals(A) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix from its characteristic polynomial.

    Coefficients by Faddeev-LeVerrier, roots by ``numpy.roots``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    Mk = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        Mk = A @ Mk + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(A @ Mk) / k
    roots = np.roots(coeffs)
    return np.sort(roots.real)[::-1]


# -- Gaussian tail -------------------------------------------------------------------


def _erf_series(z):
    # erf(z) = 2/sqrt(pi) exp(-z^2) sum_n 2^n z^(2n+1) / (2n+1)!!  (positive terms)
    term = z
    total = z
    n = 0
    while term > 1e-18 * total:
        n += 1
        term *= 2.0 * z * z / (2 * n + 1)
        total += term
    return 2.0 / math.sqrt(math.pi) * math.exp(-z * z) * total


def _erfc_cf(z, depth=300):
    # erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    frac = z
    for k in range(depth, 0, -1):
        frac = z + (k / 2.0) / frac
    return math.exp(-z * z) / math.sqrt(math.pi) / frac


def qfunc_oracle(x: float) -> float:
    """Gaussian tail from a power series (``x <= 3``) or continued fraction."""
    if x < 0.0:
        return 1.0 - qfunc_oracle(-x)
    z = x / math.sqrt(2.0)
    if x <= 3.0:
        return 0.5 * (1.0 - _erf_series(z))
    return 0.5 * _erfc_cf(z)


def qinv_oracle(eps: float, tol: float = 1e-13) -> float:
    """Bisection on :func:`qfunc_oracle`."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    lo, hi = -40.0, 40.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if qfunc_oracle(mid) > eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
