import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttrecurrence.symbolic import (ONE_SIDED, TWO_SIDED, ShiftError, ball_generation, cylinder_measure, dimension,
                                   full_shift, golden_mean_shift, is_admissible, load_shift, make_shift,
                                   markov_measure, parry_measure, primitivity_witness, sample_path,
                                   shift_from_dict)

PHI = (1 + math.sqrt(5)) / 2


def perron_oracle(M):
    """Left/right Perron vectors from numpy's dense eigen solver, normalised u.v = 1."""
    M = np.asarray(M, dtype=float)
    w, V = np.linalg.eig(M)
    i = np.argmax(w.real)
    v = np.abs(V[:, i].real)
    w2, U = np.linalg.eig(M.T)
    u = np.abs(U[:, np.argmax(w2.real)].real)
    u = u / u.sum()
    v = v / (u @ v)
    return float(w[i].real), u, v


def admissible_words(M, length):
    A = len(M)
    for w in itertools.product(range(A), repeat=length):
        if all(M[a][b] for a, b in zip(w, w[1:])):
            yield w


@pytest.mark.parametrize("L", [2, 3, 4])
def test_full_shift_cylinders_are_uniform(L):
    s = full_shift(L)
    for length in range(1, 5):
        for w in itertools.product(range(L), repeat=length):
            assert cylinder_measure(s, w) == pytest.approx(L ** -length, rel=1e-12)


def test_full_two_shift_parry_data():
    mu = parry_measure(np.ones((2, 2), dtype=int))
    assert mu.entropy == pytest.approx(math.log(2), abs=1e-13)
    np.testing.assert_allclose(mu.kernel, 0.5, atol=1e-13)
    np.testing.assert_allclose(mu.initial, 0.5, atol=1e-13)


def test_golden_mean_against_eigen_oracle(golden):
    lam, u, v = perron_oracle([[1, 1], [1, 0]])
    assert golden.measure.entropy == pytest.approx(math.log(lam), abs=1e-10)
    assert golden.measure.entropy == pytest.approx(math.log(PHI), abs=1e-10)
    assert cylinder_measure(golden, [0, 0]) == pytest.approx(PHI / (PHI**2 + 1), rel=1e-12)
    assert cylinder_measure(golden, [0, 0]) == pytest.approx(0.44721, abs=1e-5)
    assert cylinder_measure(golden, [1, 1]) == 0.0
    assert cylinder_measure(golden, []) == 1.0


def test_parry_structure(sft3):
    mu = sft3.measure
    assert mu.is_parry
    M = sft3.transitions
    lam = math.exp(mu.entropy)
    np.testing.assert_allclose(mu.perron_left @ M, lam * mu.perron_left, rtol=1e-12)
    np.testing.assert_allclose(M @ mu.perron_right, lam * mu.perron_right, rtol=1e-12)
    assert mu.perron_left @ mu.perron_right == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(mu.initial @ mu.kernel, mu.initial, atol=1e-14)
    P = mu.kernel
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(P > 0, np.log(np.where(P > 0, P, 1)), 0)
    assert -(mu.initial @ (P * logs).sum(axis=1)) == pytest.approx(mu.entropy, abs=1e-12)


@pytest.mark.parametrize("fixture", ["golden", "sft3"])
def test_parry_cylinder_identity(fixture, request):
    s = request.getfixturevalue(fixture)
    lam, u, v = perron_oracle(s.transitions)
    h = math.log(lam)
    for k in range(7):
        for w in admissible_words(s.transitions, k + 1):
            expected = u[w[0]] * v[w[-1]] * math.exp(-k * h)
            assert cylinder_measure(s, w) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("fixture", ["golden", "sft3", "golden_markov", "full3"])
def test_cylinder_measures_sum_to_one(fixture, request):
    s = request.getfixturevalue(fixture)
    for m in range(1, 7):
        total = sum(cylinder_measure(s, w) for w in itertools.product(range(s.alphabet_size), repeat=m))
        assert total == pytest.approx(1.0, abs=1e-10)


def test_inadmissible_word_has_zero_measure(golden):
    assert not is_admissible(golden, [0, 1, 1, 0])
    assert cylinder_measure(golden, [0, 1, 1, 0]) == 0.0


@pytest.mark.parametrize("r, lam, m", [(0.1, math.log(2), 3), (math.exp(-5), 1.0, 5), (0.5, math.log(2), 1)])
def test_ball_generation_examples(r, lam, m):
    assert ball_generation(r, lam) == m


@pytest.mark.parametrize("r", [0.0, 1.0, 1.5, -0.2])
def test_ball_generation_domain(r):
    with pytest.raises(ValueError):
        ball_generation(r, 1.0)


@given(st.floats(1e-12, 0.999), st.floats(1e-12, 0.999), st.floats(0.05, 5.0))
def test_ball_generation_monotone(r1, r2, lam):
    lo, hi = sorted((r1, r2))
    assert ball_generation(lo, lam) >= ball_generation(hi, lam)


def test_ball_generation_on_boundaries():
    # r = exp(-lambda m) exactly must give generation m despite rounding
    for lam in (math.log(2), math.log(3), 1.0, 0.37):
        for m in range(1, 40):
            assert ball_generation(math.exp(-lam * m), lam) == m


def test_dimension_examples(golden):
    assert dimension(full_shift(2)) == pytest.approx(1.0)
    assert dimension(full_shift(2, sided=TWO_SIDED)) == pytest.approx(2.0)
    assert dimension(golden_mean_shift(lyapunov=1.0)) == pytest.approx(math.log(PHI), abs=1e-10)


@pytest.mark.parametrize("sided", [ONE_SIDED, TWO_SIDED])
def test_dimension_matches_ball_scaling(sft3, sided):
    # slope of log mu(C_m(x)) against log r over m = 2..20, along a typical point
    s = make_shift(sft3.transitions, lyapunov=0.9, sided=sided)
    rng = np.random.default_rng(3)
    x = sample_path(s, 2 * 20 + 1, rng)
    ms = np.arange(2, 21)
    logs = []
    for m in ms:
        word = x[20 - m: 20 + m + 1] if sided == TWO_SIDED else x[: m + 1]
        logs.append(math.log(cylinder_measure(s, word)))
    slope = np.polyfit(-ms * s.lyapunov, logs, 1)[0]
    assert slope == pytest.approx(dimension(s), rel=0.02)


def test_sample_path_initial_frequency(golden):
    rng = np.random.default_rng(11)
    n = 10**6
    first = np.array([sample_path(golden, 1, rng)[0] for _ in range(n)])
    p = golden.measure.initial[1]
    se = math.sqrt(p * (1 - p) / n)
    assert abs(first.mean() - p) < 3 * se


def test_sample_path_deterministic_and_admissible(golden):
    a = sample_path(golden, 5000, np.random.default_rng(5))
    b = sample_path(golden, 5000, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
    assert not np.any((a[:-1] == 1) & (a[1:] == 1))
    c = sample_path(full_shift(2), 100, np.random.default_rng(9))
    np.testing.assert_array_equal(c, sample_path(full_shift(2), 100, np.random.default_rng(9)))


def test_non_primitive_matrices_rejected():
    with pytest.raises(ShiftError, match="period"):
        parry_measure([[0, 1], [1, 0]])
    with pytest.raises(ShiftError, match="reducible|irreducible|reach"):
        parry_measure([[1, 1], [0, 1]])
    assert primitivity_witness([[1, 1], [1, 0]]) is None


def test_markov_measure_validation():
    M = [[1, 1], [1, 0]]
    with pytest.raises(ShiftError):
        markov_measure(M, [[0.5, 0.5], [0.5, 0.5]])  # mass on a forbidden transition
    with pytest.raises(ShiftError):
        markov_measure(M, [[0.5, 0.5], [1, 0]], initial=[0.5, 0.5])  # not stationary


def test_shift_file_round_trip(tmp_path):
    spec = {"alphabet_size": 2, "transitions": [[1, 1], [1, 0]],
            "measure": {"markov": {"kernel": [["1/2", "1/2"], ["1", "0"]]}},
            "lyapunov": {"log": 2}, "sided": "two-sided"}
    path = tmp_path / "gm.json"
    path.write_text(json.dumps(spec))
    s = load_shift(path)
    assert s.two_sided and s.lyapunov == pytest.approx(math.log(2))
    np.testing.assert_allclose(s.measure.initial, [2 / 3, 1 / 3])
    with pytest.raises(ShiftError, match="missing"):
        shift_from_dict({"alphabet_size": 2})
