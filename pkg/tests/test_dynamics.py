import math

import numpy as np
import pytest

import ttrecurrence.dynamics as dyn
from ttrecurrence.dynamics import (TTSystem, ball_pair_data, first_return, first_returns, make_orbit,
                                   naive_return_times, pair_data, point_process, point_process_with_ball,
                                   rate_from_times, recurrence_rate, recurrence_target, simulate_returns,
                                   tt_system, z_extension_process, zeta_prefactor)
from ttrecurrence.cocycle import make_cocycle
from ttrecurrence.symbolic import TWO_SIDED, dimension, full_shift, make_shift, markov_measure

LOG2 = math.log(2)


def systems():
    gm = [[1, 1], [1, 0]]
    gm_markov = make_shift(gm, markov_measure(gm, [["1/2", "1/2"], ["1", "0"]]), lyapunov=LOG2)
    sft3 = make_shift([[1, 1, 0], [1, 1, 1], [0, 1, 1]], lyapunov=LOG2)
    return {
        "full3-full2": (tt_system(full_shift(3, LOG2), full_shift(2, LOG2, TWO_SIDED), [-1, 0, 1]), 2.0**-5),
        "full3-full2-coarse": (tt_system(full_shift(3, LOG2), full_shift(2, LOG2, TWO_SIDED), [-1, 0, 1]), 2.0**-2),
        "gm-sft3": (tt_system(gm_markov, make_shift([[1, 1, 0], [1, 1, 1], [0, 1, 1]], lyapunov=LOG2,
                                                    sided=TWO_SIDED), [1, -2], allow_arithmetic=True), 2.0**-3),
        "sft3-gm-onesided": (tt_system(sft3, make_shift(gm, lyapunov=LOG2), [-1, 0, 1]), 2.0**-3),
        "full2-full2-arith": (tt_system(full_shift(2, LOG2), full_shift(2, LOG2, TWO_SIDED), [-1, 1],
                                        allow_arithmetic=True), 2.0**-2),
    }


SYSTEMS = systems()


@pytest.mark.parametrize("name", list(SYSTEMS))
@pytest.mark.parametrize("seed", range(6))
def test_fast_scan_equals_naive_oracle(name, seed):
    system, r = SYSTEMS[name]
    fast = simulate_returns(system, r, 20000, np.random.default_rng(seed)).times.astype(np.int64)
    slow = naive_return_times(system, r, 20000, np.random.default_rng(seed))
    np.testing.assert_array_equal(fast, slow)


def test_spec_example_long_horizon():
    system, r = SYSTEMS["full3-full2"]
    fast = simulate_returns(system, r, 10**6, np.random.default_rng(99)).times.astype(np.int64)
    slow = naive_return_times(system, r, 10**6, np.random.default_rng(99))
    np.testing.assert_array_equal(fast, slow)


@pytest.mark.parametrize("seed", range(4))
def test_conditional_mode_equals_naive(seed):
    system, r = SYSTEMS["full3-full2-coarse"]
    base = ([0, 1, 2], [1, 0, 0, 1, 1])
    fast = simulate_returns(system, r, 50000, np.random.default_rng(seed), base=base).times.astype(np.int64)
    slow = naive_return_times(system, r, 50000, np.random.default_rng(seed), base=base)
    np.testing.assert_array_equal(fast, slow)
    assert len(fast) > 0


def test_base_words_validated():
    system, r = SYSTEMS["full3-full2-coarse"]
    with pytest.raises(ValueError):
        simulate_returns(system, r, 10, np.random.default_rng(0), base=([0, 1], [0, 0, 0, 0, 0]))
    gm_sys, r2 = SYSTEMS["sft3-gm-onesided"]
    with pytest.raises(ValueError):
        simulate_returns(gm_sys, r2, 10, np.random.default_rng(0), base=([0, 0, 0, 0], [1, 1, 0, 0]))


def test_horizon_zero_and_T_zero():
    system, r = SYSTEMS["full3-full2"]
    assert simulate_returns(system, r, 0, np.random.default_rng(0)).raw_count == 0
    assert point_process(system, r, 0.0, np.random.default_rng(0)).raw_count == 0


def test_zero_cocycle_reduces_to_f_returns():
    x = full_shift(3, LOG2)
    system = tt_system(x, full_shift(2, LOG2, TWO_SIDED), [0, 0, 0], allow_arithmetic=True)
    res, orbit = simulate_returns(system, 2.0**-3, 30000, np.random.default_rng(5), keep_orbit=True)
    seq = np.concatenate([orbit.x_base, orbit.x_sequence()[len(orbit.x_base):]])
    w = orbit.x_base
    f_returns = [n for n in range(1, 30001) if np.array_equal(seq[n:n + len(w)], w)]
    np.testing.assert_array_equal(res.times.astype(np.int64), f_returns)
    with pytest.warns(UserWarning, match="zero cocycle"):
        z_extension_process(x, system.cocycle, 2.0**-3, 1.0, np.random.default_rng(5))


@pytest.mark.parametrize("seed", range(5))
def test_z_extension_events_are_returns(seed):
    system, r = SYSTEMS["full3-full2-coarse"]
    z = z_extension_process(system.x_shift, system.cocycle, r, 3.0, np.random.default_rng(seed))
    raw = np.rint(z.times * z.normalization).astype(np.int64)
    horizon = int(math.ceil(3.0 * z.normalization))
    full = simulate_returns(system, r, horizon, np.random.default_rng(seed)).times.astype(np.int64)
    assert set(raw) <= set(full)
    assert np.all(np.diff(z.times) > 0) and np.all(z.times <= 3.0)


@pytest.mark.parametrize("seed", range(5))
def test_nested_radii_give_nested_events(seed):
    system, _ = SYSTEMS["full3-full2"]
    radii = [2.0**-2, 2.0**-3, 2.0**-4]
    orbit = make_orbit(system, radii, np.random.default_rng(seed))
    ev = orbit.run(50000)
    for a, b in zip(ev, ev[1:]):
        assert set(b) <= set(a)
    # the smallest radius draws the same base words as a single-radius run
    np.testing.assert_array_equal(ev[-1], naive_return_times(system, radii[-1], 50000, np.random.default_rng(seed)))
    for j, r in enumerate(radii):
        assert ball_pair_data(system, r, orbit.x_base[: orbit.mx[j] + 1], orbit.y_base(j)) == orbit.ball(j)


@pytest.mark.parametrize("seed", range(8))
def test_first_return_is_first_event(seed):
    system, r = SYSTEMS["full3-full2-coarse"]
    fr = first_return(system, r, np.random.default_rng(seed), cap=10**5)
    ev = simulate_returns(system, r, 10**5, np.random.default_rng(seed)).times
    if len(ev):
        assert not fr.censored and fr.time == int(ev[0]) and fr.time >= 1
    else:
        assert fr.censored and fr.time is None
    nested = first_returns(system, [2.0**-1, r], np.random.default_rng(seed), cap_factor=1000)
    fr2, data = nested[1]
    if not fr2.censored and not fr.censored:
        assert fr2.time == fr.time
    assert nested[0][0].censored or nested[1][0].censored or nested[0][0].time <= nested[1][0].time


def test_first_return_censoring():
    system, r = SYSTEMS["full3-full2"]
    fr = first_return(system, r, np.random.default_rng(0), cap=1)
    assert fr.cap == 1 and (fr.censored or fr.time == 1)
    with pytest.raises(ValueError):
        first_return(system, r, np.random.default_rng(0), cap=0)


def test_pair_data_examples():
    d = pair_data(0.01, 0.1)
    assert d.n_r == pytest.approx(1000) and (d.alpha_r, d.beta_r) == pytest.approx((0.1, 1.0))
    d = pair_data(0.1, 0.01)
    assert d.n_r == pytest.approx(100) and (d.alpha_r, d.beta_r) == pytest.approx((1.0, 0.1))
    d = pair_data(0.2, 0.2)
    assert max(d.alpha_r, d.beta_r) == 1.0 and d.n_r == pytest.approx(25)


@pytest.mark.parametrize("L, d", [(2, 2), (3, 1), (2, 1)])
def test_corollary_pairs(L, d):
    lam = math.log(L)
    x = full_shift(L**d, lam)
    y = full_shift(L, lam, TWO_SIDED if d == 2 else "one-sided")
    rng = np.random.default_rng(0)
    for m in range(1, 5):
        r = math.exp(-lam * m)
        orbit = make_orbit(tt_system(x, y, [0] * (L**d), allow_arithmetic=True), [r], rng)
        data = orbit.ball(0)
        assert data.alpha_r == pytest.approx(L ** (1 - d), rel=1e-12)
        assert data.beta_r == pytest.approx(1.0, rel=1e-12)


def test_zeta_prefactor():
    for r in (0.3, 0.01, 1e-5):
        assert zeta_prefactor(r, 0.7, 0.7, 1.0, 2.0) == pytest.approx(1.0)
    assert zeta_prefactor(math.exp(-3) * (1 - 1e-12), 1.0, 2.0, 1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-9)
    with pytest.raises(ValueError):
        zeta_prefactor(0.1, 0.0, 1.0, 1.0, 1.0)


def test_zeta_prefactor_dense():
    # lambda_X / lambda_Y irrational: values fill [exp(-lambda_Y h_mu/h_nu), exp(lambda_X h_mu/h_nu)]
    lx, ly = 1.0, math.sqrt(2)
    rs = np.exp(-np.linspace(1, 400, 20000))
    z = np.log([zeta_prefactor(r, lx, ly, 1.0, 1.0) for r in rs])
    hist, _ = np.histogram(z, bins=20, range=(-ly, lx))
    assert np.all(hist > 0)
    assert z.min() >= -ly - 1e-9 and z.max() <= lx + 1e-9


def test_point_process_normalised():
    system, r = SYSTEMS["full3-full2-coarse"]
    series, data = point_process_with_ball(system, r, 2.0, np.random.default_rng(1))
    assert series.normalization == data.n_r
    assert np.all(series.times <= 2.0) and np.all(np.diff(series.times) > 0)
    assert series.count(0, 2.0) == series.raw_count


def test_point_process_doubling():
    x = full_shift(8, LOG2)
    system = tt_system(x, full_shift(2, LOG2), [-4, -3, -2, -1, 1, 2, 3, 4])
    r = 2.0**-2
    c1 = [point_process(system, r, 1.0, np.random.default_rng(s)).raw_count for s in range(3000)]
    c2 = [point_process(system, r, 2.0, np.random.default_rng(s + 10**6)).raw_count for s in range(3000)]
    m1, m2 = np.mean(c1), np.mean(c2)
    se = math.sqrt(np.var(c2) / 3000 + 4 * np.var(c1) / 3000)
    assert abs(m2 - 2 * m1) < 3 * se


def test_memory_guard(monkeypatch):
    monkeypatch.setattr(dyn, "Y_WINDOW_GUARD", 64)
    system, r = SYSTEMS["full3-full2"]
    with pytest.raises(MemoryError, match="smaller horizon"):
        simulate_returns(system, r, 10**6, np.random.default_rng(0))


def test_recurrence_workers_agree():
    system = tt_system(full_shift(3, LOG2), full_shift(2, LOG2, TWO_SIDED), [-1, 0, 1])
    radii = [2.0**-k for k in range(1, 5)]
    a = recurrence_rate(system, radii, 16, seed=3, workers=1)
    b = recurrence_rate(system, radii, 16, seed=3, workers=2)
    np.testing.assert_array_equal(a.slopes, b.slopes)
    with pytest.raises(ValueError):
        recurrence_rate(system, radii[:3], 4, seed=0)


def test_recurrence_targets():
    s = tt_system(full_shift(2), full_shift(2, LOG2, TWO_SIDED), [0, 0], allow_arithmetic=True)
    assert recurrence_target(s) == pytest.approx(2.0)
    s = tt_system(full_shift(4), full_shift(2), [-1, 1, -2, 2], allow_arithmetic=True)
    assert recurrence_target(s) == pytest.approx(3.0)


def test_zero_cocycle_trivial_y_rate():
    x = full_shift(2, LOG2)
    system = tt_system(x, full_shift(1), [0, 0], allow_arithmetic=True)
    radii = [2.0**-k for k in range(3, 9)]
    est = recurrence_rate(system, radii, 300, seed=11)
    assert recurrence_target(system) == pytest.approx(dimension(x))
    assert est.slope == pytest.approx(dimension(x), abs=max(3 * est.stderr, 0.05))


def test_rate_from_times_censoring():
    tau = np.array([[2.0, 4.0, np.nan, 16.0], [np.nan] * 4, [1.0, 2.0, 4.0, 8.0]])
    radii = [0.5, 0.25, 0.125, 0.0625]
    est = rate_from_times(tau, radii)
    assert len(est.slopes) == 2
    np.testing.assert_allclose(est.slopes, 1.0)
    np.testing.assert_array_equal(est.censored, [1, 1, 2, 1])
    with pytest.warns(UserWarning, match="censored in every trial"):
        rate_from_times(np.array([[1.0, np.nan], [2.0, np.nan]]), [0.5, 0.25])


def test_system_validation():
    with pytest.raises(ValueError, match="one-sided"):
        TTSystem(full_shift(2, sided=TWO_SIDED), None, make_cocycle(full_shift(2), [0, 0]))
    with pytest.raises(ValueError, match="arithmetic"):
        tt_system(full_shift(2), full_shift(2), [-1, 1])
