import numpy as np
import pytest
from helpers import ftn_channels, random_channels

from ftn_mccr.allocation import (
    allocate,
    equal_power_allocation,
    objective,
    uniform_allocation,
    usable_channels,
    waterfill,
)
from ftn_mccr.decomp import ParallelChannels


def _kkt_level(ch, q):
    return ch.cost * (q + ch.noise_power / ch.gain)


@pytest.mark.parametrize("seed", range(10))
def test_budget_is_met_exactly(seed):
    ch = ftn_channels(seed=seed)
    for P in (1e-2, 1.0, 100.0, 1e4):
        a = waterfill(ch, P)
        assert np.all(a.q >= 0)
        assert np.dot(ch.cost, a.q) == pytest.approx(P, rel=1e-9)
        assert a.spent_power == pytest.approx(P, rel=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_complementary_slackness(seed):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng)
    P = 10 ** rng.uniform(-2, 2)
    a = waterfill(ch, P)
    level = _kkt_level(ch, a.q)
    on = a.active
    assert on.any()
    # equal marginal utility on the active set, no gain from switching on the rest
    np.testing.assert_allclose(level[on], level[on][0], rtol=1e-9)
    assert np.all(level[~on] >= level[on][0] * (1 - 1e-9))


def test_temporal_snr_is_flat_per_spatial_mode():
    ch = ftn_channels(N=60, seed=4)
    a = waterfill(ch, 100.0)
    snr = (ch.gain * a.q / ch.noise_power).reshape(ch.D, ch.N)
    for row in snr:
        np.testing.assert_allclose(row, row[0], rtol=1e-9)


def test_water_level_closed_form():
    ch = ftn_channels(N=30, seed=2)
    a = waterfill(ch, 100.0)
    # each active spatial mode d sits at SNR sigma_h^2 * W - 1
    sh2 = (ch.gain / (ch.cost * ch.N * ch.delta * ch.T))[:: ch.N]
    snr = (ch.gain * a.q / ch.noise_power)[:: ch.N]
    np.testing.assert_allclose(snr[snr > 0], sh2[snr > 0] * a.water_level - 1.0, rtol=1e-9)


def test_negligible_sigma_p_gets_no_power():
    gain = np.array([1.0, 1e-30, 0.5, 0.0])
    cost = np.array([1.0, 1e-30, 0.5, 1.0])
    ch = ParallelChannels(gain, cost, 1.0, 4, 1.0, 0.01, 1)
    np.testing.assert_array_equal(usable_channels(ch), [True, False, True, False])
    q = waterfill(ch, 10.0).q
    assert q[1] == 0.0 and q[3] == 0.0


def test_all_unusable_gives_zero():
    ch = ParallelChannels(np.zeros(3), np.ones(3), 1.0, 3, 1.0, 0.01, 1)
    a = waterfill(ch, 5.0)
    assert not a.q.any() and a.spent_power == 0.0


@pytest.mark.parametrize("P", [0.0, -1.0, np.inf, np.nan])
def test_bad_budget(P):
    with pytest.raises(ValueError):
        waterfill(ftn_channels(N=5), P)


def test_uniform_spends_equal_symbol_power():
    ch = ftn_channels(seed=3)
    a = uniform_allocation(ch, 50.0)
    np.testing.assert_allclose(a.q, a.q[0], rtol=0)
    assert np.dot(ch.cost, a.q) == pytest.approx(50.0, rel=1e-12)


def test_equal_power_spends_equal_shares():
    ch = ftn_channels(seed=3)
    a = equal_power_allocation(ch, 50.0)
    spent = ch.cost * a.q
    np.testing.assert_allclose(spent[a.active], 50.0 / a.active.sum(), rtol=1e-12)


def test_uniform_needs_some_cost():
    ch = ParallelChannels(np.ones(2), np.zeros(2), 1.0, 2, 1.0, 0.01, 1)
    with pytest.raises(ValueError):
        uniform_allocation(ch, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_optimal_beats_baselines(seed):
    ch = ftn_channels(seed=seed)
    best = objective(ch, allocate(ch, 100.0, "optimal").q)
    for mode in ("uniform", "uniform_power"):
        assert best >= objective(ch, allocate(ch, 100.0, mode).q) - 1e-9


def test_unknown_mode():
    with pytest.raises(ValueError):
        allocate(ftn_channels(N=5), 1.0, "greedy")
