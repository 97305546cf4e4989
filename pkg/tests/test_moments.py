import math

import numpy as np
import pytest

from ttrecurrence.limit import ZParams
from ttrecurrence.moments import (ColoringMatrix, MCParams, MomentSpec, PrecisionWarning, StepFunction, H_integral,
                                  atom_maps, enumerate_surjections, formula_samples, formula_terms, limit_moment,
                                  poisson_integral_moment, poisson_moment,
                                  sample_poisson_integrals, simulated_moment, stirling2)

SQRT_2_PI = math.sqrt(2 / math.pi)


def set_partitions(items):
    """All set partitions of a list, by recursive insertion of the first element."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def test_stirling_examples():
    assert stirling2(3, 2) == 3 and stirling2(4, 2) == 7
    for m in range(1, 12):
        assert stirling2(m, 1) == 1 and stirling2(m, m) == 1
    assert stirling2(0, 0) == 1
    with pytest.raises(ValueError):
        stirling2(31, 2)
    with pytest.raises(ValueError):
        stirling2(3, 4)


def test_stirling_against_partitions():
    for m in range(1, 9):
        sizes = [len(p) for p in set_partitions(list(range(m)))]
        for q in range(1, m + 1):
            assert stirling2(m, q) == sizes.count(q)


def test_surjection_counts_and_order():
    assert len(enumerate_surjections(3, 1)) == 6
    assert enumerate_surjections(2, 2) == []
    assert len(enumerate_surjections(4, 1)) == 14
    for q in range(1, 7):
        for q0 in range(q):
            maps = enumerate_surjections(q, q0)
            assert len(maps) == math.factorial(q0 + 1) * stirling2(q, q0 + 1)
            assert maps == sorted(maps)
            assert all(set(m) == set(range(q0 + 1)) for m in maps)


def test_atom_maps_count():
    # maps hitting 1..q0: surjections onto {1..q0} plus those onto {0..q0}
    def surj(q, k):
        return math.factorial(k) * stirling2(q, k) if k <= q else 0

    for q in range(1, 7):
        for q0 in range(q + 1):
            assert len(atom_maps(q, q0)) == surj(q, q0) + surj(q, q0 + 1)


def test_poisson_moment():
    for lam in (0.0, 0.3, 2.5):
        assert poisson_moment(lam, 2) == pytest.approx(lam + lam**2)
    assert poisson_moment(1.0, 3) == 5
    x = np.random.default_rng(0).poisson(2.0, 10**6).astype(float) ** 4
    assert abs(x.mean() - poisson_moment(2.0, 4)) < 3 * x.std() / 1000
    with pytest.raises(ValueError):
        poisson_moment(-1, 2)


def step(breaks, values):
    return StepFunction(np.array(breaks, dtype=float), np.array(values, dtype=float))


def partition_oracle(gs, eta):
    total = 0.0
    for part in set_partitions(list(range(len(gs)))):
        term = 1.0
        for block in part:
            pts = np.unique(np.concatenate([eta.breaks] + [gs[j].breaks for j in block]))
            mids = (pts[1:] + pts[:-1]) / 2
            w = eta(mids) * np.diff(pts)
            for j in block:
                w = w * gs[j](mids)
            term *= w.sum()
        total += term
    return total


def test_poisson_integral_simple_cases():
    leb = step([0, 1], [1])
    g = step([0, 1], [1])
    assert poisson_integral_moment([g], leb) == pytest.approx(1.0)
    assert poisson_integral_moment([g, g], leb) == pytest.approx(2.0)
    assert poisson_integral_moment([g, g], leb) == pytest.approx(poisson_moment(1, 2))
    h = step([0, 0.5, 2], [3, -1])
    assert poisson_integral_moment([h], step([0, 2], [2])) == pytest.approx(2 * (1.5 - 1.5))
    assert poisson_integral_moment([], leb) == 1.0


@pytest.mark.parametrize("seed", range(4))
def test_poisson_integral_random_steps(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    gs = []
    for _ in range(m):
        b = np.sort(rng.uniform(-1, 2, 4))
        gs.append(step(b, rng.uniform(-1, 2, 3)))
    eta = step([-1, 0.5, 2], rng.uniform(0.5, 2, 2))
    exact = poisson_integral_moment(gs, eta)
    assert exact == pytest.approx(partition_oracle(gs, eta), rel=1e-12, abs=1e-12)
    draws = np.prod(sample_poisson_integrals(gs, eta, 400000, rng), axis=1)
    assert abs(draws.mean() - exact) < 3 * draws.std() / math.sqrt(len(draws))


def test_poisson_integral_budget():
    g = step([0, 1], [1])
    with pytest.raises(ValueError):
        poisson_integral_moment([g] * 7, g)


def test_moment_spec_validation():
    with pytest.raises(ValueError):
        MomentSpec((1.0, 1.0), (1, 1))
    with pytest.raises(ValueError):
        MomentSpec((1.0,), (0,))
    with pytest.raises(ValueError):
        MomentSpec((1.0, 2.0), (5, 4))
    s = MomentSpec((0.5, 2), (1, 2))
    assert s.K == 2 and s.m == 3 and np.allclose(s.lengths, [0.5, 1.5])


def test_coloring_matrix_validation():
    with pytest.raises(ValueError):
        ColoringMatrix(np.array([[1, 0], [0, 0]]))
    z = ColoringMatrix(np.array([[1, 0], [0, 2], [1, 0]]))
    assert z.q0 == 2 and list(z.column_sums) == [2, 2]
    assert z.key() == ColoringMatrix(np.array([[1, 0], [1, 0], [0, 2]])).key()


def test_H_integral_special_cases():
    spec = MomentSpec((1.0,), (1,))
    mc = MCParams(paths=4000, steps=64)
    assert H_integral(ColoringMatrix(np.zeros((1, 1))), spec, 1.0, mc, np.random.default_rng(0)).value == 1.0
    for sigma in (1.0, 2.0):
        e = H_integral(ColoringMatrix(np.array([[1]])), spec, sigma, mc, np.random.default_rng(1))
        assert abs(e.value - SQRT_2_PI / sigma) < 3 * e.stderr
    e = H_integral(ColoringMatrix(np.array([[0], [1]])), spec, 1.0, MCParams(paths=2000, steps=64),
                   np.random.default_rng(2))
    assert e.value == pytest.approx(1.0, rel=0.01)
    with pytest.warns(PrecisionWarning):
        H_integral(ColoringMatrix(np.array([[2]])), spec, 1.0, MCParams(paths=50, steps=16, target_se=1e-6),
                   np.random.default_rng(3))


def test_standard_poisson_moment_is_exact():
    spec = MomentSpec((0.5, 1.5, 2.0), (2, 1, 3))
    res = limit_moment(ZParams(0, 1), spec)
    assert res.exact and res.stderr == 0
    assert res.value == poisson_moment(0.5, 2) * poisson_moment(1.0, 1) * poisson_moment(0.5, 3)


@pytest.mark.parametrize("alpha, beta", [(1, 1), (0.5, 1), (1, 0.3)])
def test_first_moment_expansion(alpha, beta):
    spec = MomentSpec((1.5,), (1,))
    terms = formula_terms(spec, ZParams(alpha, beta))
    # exactly two terms: the origin atom (sqrt(alpha) E L_t(0)) and one Poisson atom (beta t)
    assert terms == {((1,),): {0: pytest.approx(math.sqrt(alpha))}, ((0,), (1,)): {1: pytest.approx(beta)}}
    res = limit_moment(ZParams(alpha, beta), spec, MCParams(paths=4000, steps=64), np.random.default_rng(4))
    target = math.sqrt(alpha) * SQRT_2_PI * math.sqrt(1.5) + beta * 1.5
    assert abs(res.value - target) < 3 * res.stderr + 0.01 * beta * 1.5


def test_true_surjections_drop_spatial_term():
    # with true surjections onto {0..q0} the single-point term q = 1, q0 = 1 is empty,
    # so the expansion would lose beta * t and disagree with E[Z(t)]
    assert enumerate_surjections(1, 1) == []
    assert atom_maps(1, 1) == [(1,)]


def test_one_zero_second_moment_vs_simulation():
    params = ZParams(1, 0)
    spec = MomentSpec((1.0,), (2,))
    f = limit_moment(params, spec, MCParams(paths=6000, steps=64), np.random.default_rng(5))
    s = simulated_moment(params, spec, 6000, np.random.default_rng(6), steps=64)
    # closed form: E[P(L)^2] = E L + E L^2 = sqrt(2/pi) + 1
    assert abs(f.value - (SQRT_2_PI + 1)) < 3 * f.stderr
    assert abs(f.value - s.value) < 3 * math.hypot(f.stderr, s.stderr)


@pytest.mark.parametrize("alpha, beta", [(1, 1), (0.5, 1)])
def test_two_interval_moment_vs_simulation(alpha, beta):
    params = ZParams(alpha, beta)
    spec = MomentSpec((0.5, 1.0), (1, 2))
    f = limit_moment(params, spec, MCParams(paths=6000, steps=64), np.random.default_rng(7))
    s = simulated_moment(params, spec, 8000, np.random.default_rng(8), steps=64)
    assert abs(f.value - s.value) < 3 * math.hypot(f.stderr, s.stderr)


def _quotients(spec, grid, coord, seed):
    mc = MCParams(paths=1000, steps=32)
    vals = np.array([limit_moment(ZParams(a, b), spec, mc, np.random.default_rng(seed)).value for a, b in grid])
    x = np.array([coord(a, b) for a, b in grid])
    return np.abs(np.diff(vals) / np.diff(x))


def test_continuity_in_parameters():
    # common random numbers make the estimate a polynomial in (sqrt(alpha), beta); its difference
    # quotients stay bounded under grid refinement (the dependence on alpha itself is Hoelder-1/2)
    spec = MomentSpec((1.0,), (2,))
    peaks = []
    for n in (5, 10, 20):
        along_b = [(1.0, b) for b in np.linspace(0, 1, n + 1)]
        along_a = [(a * a, 1.0) for a in np.linspace(1, 0.1, n + 1)]
        qb = _quotients(spec, along_b, lambda a, b: b, 9)
        qa = _quotients(spec, along_a, lambda a, b: math.sqrt(a), 9)
        peaks.append((qb.max(), qa.max()))
    for coarse, fine in zip(peaks, peaks[1:]):
        assert fine[0] <= 1.2 * coarse[0] and fine[1] <= 1.2 * coarse[1]
    # the corner (0, 1) is the limit along beta = 1
    near = limit_moment(ZParams(1e-6, 1), spec, MCParams(paths=1000, steps=32), np.random.default_rng(9))
    assert near.value == pytest.approx(limit_moment(ZParams(0, 1), spec).value, abs=0.01)


def test_exchangeability_only_for_poisson():
    a = MomentSpec((1.0, 2.0), (2, 1))
    b = MomentSpec((1.0, 2.0), (1, 2))
    assert limit_moment(ZParams(0, 1), a).value == limit_moment(ZParams(0, 1), b).value
    # for alpha > 0 the origin local time is not stationary in t, so increments are not
    # exchangeable; the same seed gives the same paths, so the per-path difference is paired
    mc = MCParams(paths=6000, steps=64)
    _, ca = formula_samples(ZParams(1, 0), a, mc, np.random.default_rng(10))
    _, cb = formula_samples(ZParams(1, 0), b, mc, np.random.default_rng(10))
    d = ca.sum(axis=1) - cb.sum(axis=1)
    assert abs(d.mean()) > 4 * d.std() / math.sqrt(len(d))


def test_order_budget():
    with pytest.raises(ValueError):
        formula_terms(MomentSpec((1.0,), (7,)), ZParams(1, 1))
    with pytest.raises(ValueError):
        limit_moment(ZParams(1, 1), MomentSpec((1.0,), (1,)))
