import numpy as np
import pytest

from ftn_mccr.oracles import charpoly_eigvals, pulse_energy_oracle
from ftn_mccr.pulse import (
    PulseSpec,
    basis_coefficients,
    build_isi_matrix,
    raised_cosine,
    raised_cosine_spectrum,
)


@pytest.mark.parametrize("beta", [0.0, 0.25, 0.5, 1.0])
def test_peak_value(beta):
    spec = PulseSpec(0.8, beta)
    assert raised_cosine(0.0, spec) == pytest.approx(1.0 / np.sqrt(spec.T * (1 - beta / 4)), rel=1e-14)


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_removable_singularity_is_continuous(beta):
    spec = PulseSpec(0.8, beta)
    t0 = spec.T / (2 * beta)
    vals = raised_cosine(np.array([t0 - 1e-9 * spec.T, t0, t0 + 1e-9 * spec.T]), spec)
    assert np.all(np.isfinite(vals))
    peak = raised_cosine(0.0, spec)
    assert abs(vals[1] - vals[0]) < 1e-6 * peak
    assert abs(vals[1] - vals[2]) < 1e-6 * peak


def test_pulse_is_even():
    spec = PulseSpec(0.7, 0.35)
    t = np.linspace(0, 8 * spec.T, 97)
    np.testing.assert_allclose(raised_cosine(t, spec), raised_cosine(-t, spec), rtol=0, atol=1e-12)


@pytest.mark.parametrize("beta", [0.3, 0.5, 1.0])
def test_unit_energy(beta):
    assert pulse_energy_oracle(PulseSpec(0.67, beta)) == pytest.approx(1.0, abs=1e-6)


def test_spectrum_energy_matches_time_domain():
    from scipy.integrate import quad

    spec = PulseSpec(0.67, 0.5)
    edge = (1 + spec.beta) / (2 * spec.T)
    energy, _ = quad(lambda f: raised_cosine_spectrum(f, spec) ** 2, -edge, edge, points=[-0.25 / spec.T, 0.25 / spec.T])
    assert energy == pytest.approx(1.0, rel=1e-10)


def test_taps_symmetric_and_indexed():
    c = basis_coefficients(PulseSpec(0.67, 0.5))
    assert c.taps.shape == (21,)
    np.testing.assert_array_equal(c.taps, c.taps[::-1])
    assert c.tap(0) == c.taps[10]
    assert c.tap(11) == 0.0 and c.tap(-11) == 0.0


def test_nyquist_sinc_taps_are_a_delta():
    c = basis_coefficients(PulseSpec(1.0, 0.0))
    expected = np.zeros(21)
    expected[10] = 1.0
    np.testing.assert_allclose(c.taps, expected, atol=1e-10)


def test_taps_do_not_depend_on_period():
    a = basis_coefficients(PulseSpec(0.67, 0.5, T=0.01)).taps
    b = basis_coefficients(PulseSpec(0.67, 0.5, T=1.0)).taps
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("delta", [0.5, 0.6, 0.67, 0.8, 0.9, 1.0])
@pytest.mark.parametrize("beta", [0.3, 0.5, 0.7, 1.0])
def test_truncation_keeps_in_band_energy(delta, beta):
    # with L = 10 the tap tails are below 1e-4 for roll-offs of 0.3 and up
    assert basis_coefficients(PulseSpec(delta, beta)).discarded_energy < 1e-4


def test_in_band_energy_is_full_when_band_fits():
    c = basis_coefficients(PulseSpec(0.6, 0.5))
    assert c.inband_energy == pytest.approx(1.0, rel=1e-10)


def test_isi_matrix_layout():
    c = basis_coefficients(PulseSpec(0.67, 0.5, L=3))
    P = build_isi_matrix(c, 5)
    dense = P.dense()
    assert dense.shape == P.shape == (11, 5)
    for i in range(11):
        for j in range(5):
            assert dense[i, j] == c.tap(i - j - 3)
    assert P.banded().shape == (7, 5)


def test_gram_is_toeplitz_with_trace():
    c = basis_coefficients(PulseSpec(0.67, 0.5))
    P = build_isi_matrix(c, 40)
    G = P.dense().T @ P.dense()
    row = P.gram_toeplitz_row()
    for k in range(40):
        np.testing.assert_allclose(np.diag(G, k), row[k], atol=1e-15)
    assert np.trace(G) == pytest.approx(P.trace_gram, rel=1e-13)


def test_gram_eigenvalues_by_characteristic_polynomial():
    c = basis_coefficients(PulseSpec(0.67, 0.5))
    P = build_isi_matrix(c, 4)
    G = P.dense().T @ P.dense()
    np.testing.assert_allclose(charpoly_eigvals(G), np.linalg.eigvalsh(G)[::-1], rtol=1e-10)


@pytest.mark.parametrize(
    "kwargs",
    [dict(delta=0.0, beta=0.5), dict(delta=1.2, beta=0.5), dict(delta=0.7, beta=-0.1),
     dict(delta=0.7, beta=1.5), dict(delta=0.7, beta=0.5, T=0.0), dict(delta=0.7, beta=0.5, L=0)],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        PulseSpec(**kwargs)


def test_isi_matrix_rejects_bad_size():
    with pytest.raises(ValueError):
        build_isi_matrix(basis_coefficients(PulseSpec(0.67, 0.5)), 0)
