"""Combinatorial moment formulas for Poisson functionals and for Z_{alpha,beta}.

The joint increment moment of Z is expanded as

    E[prod_v (Z(t_v) - Z(t_{v-1}))^{m_v}]
      = sum_{q_v} prod_v S(m_v, q_v) sum_{q0} 1/q0! sum_psi a^q b^q0 H(Z'(psi))

with ``a = sqrt(alpha)``, ``b = beta/sqrt(alpha)`` and ``psi`` running over
maps from the ``q`` marked points to the atoms ``{0, 1, ..., q0}`` that hit
every Poisson atom ``1..q0`` (the atom at 0 may carry no point).  ``H`` is
the expected local-time product integral of the coloring matrix of ``psi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .limit import BRIDGE, ZParams, bridge_margin, level_grid, local_time, sample_brownian, sample_Z

EXACT_ORDER_BUDGET = 6
MC_ORDER_BUDGET = 8


@lru_cache(maxsize=None)
def _stirling(m: int, q: int) -> int:
    if m == q:
        return 1
    if q == 0 or q > m:
        return 0
    return q * _stirling(m - 1, q) + _stirling(m - 1, q - 1)


def stirling2(m: int, q: int) -> int:
    """Stirling number of the second kind, for ``0 <= q <= m <= 30``."""
    if not (0 <= q <= m <= 30):
        raise ValueError(f"stirling2 needs 0 <= q <= m <= 30, got m={m}, q={q}")
    return _stirling(m, q)


def enumerate_surjections(q: int, q0: int) -> list[tuple[int, ...]]:
    """All surjections {1..q} -> {0..q0} in lexicographic order (as tuples of images)."""
    if q0 + 1 > q or q0 < 0:
        return []
    target = set(range(q0 + 1))
    return [m for m in product(range(q0 + 1), repeat=q) if set(m) == target]


def atom_maps(q: int, q0: int) -> list[tuple[int, ...]]:
    """Maps {1..q} -> {0..q0} hitting each of 1..q0 (0 may be missed)."""
    if q0 > q or q0 < 0:
        return []
    need = set(range(1, q0 + 1))
    return [m for m in product(range(q0 + 1), repeat=q) if need <= set(m)]


def poisson_moment(lam: float, m: int) -> float:
    """E[P^m] for P ~ Poisson(lam): sum_q S(m, q) lam^q."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return float(sum(stirling2(m, q) * lam**q for q in range(m + 1)))


# ---------------------------------------------------------------------------
# Poisson integrals of step functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepFunction:
    """Value ``values[i]`` on ``[breaks[i], breaks[i+1])``, zero elsewhere."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(b) != len(v) + 1 or np.any(np.diff(b) <= 0):
            raise ValueError("need increasing breaks and one value per piece")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.breaks, x, side="right") - 1
        inside = (i >= 0) & (i < len(self.values))
        return np.where(inside, self.values[np.clip(i, 0, len(self.values) - 1)], 0.0)


def _integral_of_product(fs: Sequence[StepFunction], intensity: StepFunction) -> float:
    # integral of prod f against intensity(x) dx, exact on the common refinement
    pts = np.unique(np.concatenate([intensity.breaks] + [f.breaks for f in fs]))
    mids = 0.5 * (pts[:-1] + pts[1:])
    w = intensity(mids) * np.diff(pts)
    for f in fs:
        w = w * f(mids)
    return float(w.sum())


def poisson_integral_moment(gs: Sequence[StepFunction], intensity: StepFunction) -> float:
    """E[prod_j int g_j dP] for a Poisson process P with the given intensity.

    Sum over q of 1/q! times the sum over surjections chi: {1..m} -> {1..q}
    of prod_i int prod_{chi(j)=i} g_j d(eta).
    """
    m = len(gs)
    if m > EXACT_ORDER_BUDGET:
        raise ValueError(f"order {m} exceeds the exact budget {EXACT_ORDER_BUDGET}")
    if m == 0:
        return 1.0
    total = 0.0
    for q in range(1, m + 1):
        acc = 0.0
        for chi in product(range(q), repeat=m):
            if len(set(chi)) != q:
                continue
            term = 1.0
            for i in range(q):
                term *= _integral_of_product([gs[j] for j in range(m) if chi[j] == i], intensity)
            acc += term
        total += acc / math.factorial(q)
    return total


def sample_poisson_integrals(gs: Sequence[StepFunction], intensity: StepFunction, n: int,
                             rng: np.random.Generator) -> np.ndarray:
    """``n`` draws of the vector ``(int g_j dP)_j``, shape ``(n, m)``."""
    lengths = np.diff(intensity.breaks)
    means = np.clip(intensity.values, 0, None) * lengths
    out = np.zeros((n, len(gs)))
    counts = rng.poisson(means, size=(n, len(means)))
    for piece in range(len(means)):
        c = counts[:, piece]
        tot = int(c.sum())
        if tot == 0:
            continue
        x = rng.uniform(intensity.breaks[piece], intensity.breaks[piece + 1], tot)
        owner = np.repeat(np.arange(n), c)
        for j, g in enumerate(gs):
            out[:, j] += np.bincount(owner, weights=g(x), minlength=n)
    return out


# ---------------------------------------------------------------------------
# moments of Z_{alpha, beta}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSpec:
    """Increment times ``t_1 < ... < t_K`` (``t_0 = 0``) and exponents ``m_1..m_K``."""

    times: tuple
    exponents: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        e = tuple(int(x) for x in self.exponents)
        if len(t) != len(e) or not t:
            raise ValueError("need one exponent per time")
        if t[0] <= 0 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("times must be strictly increasing and positive")
        if any(x < 1 for x in e):
            raise ValueError("exponents must be positive")
        if sum(e) > MC_ORDER_BUDGET:
            raise ValueError(f"total order exceeds {MC_ORDER_BUDGET}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "exponents", e)

    @property
    def K(self) -> int:
        return len(self.times)

    @property
    def m(self) -> int:
        return sum(self.exponents)

    @property
    def grid(self) -> np.ndarray:
        return np.concatenate([[0.0], self.times])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.grid)


@dataclass(frozen=True)
class ColoringMatrix:
    """Counts ``z[u, w]`` of marked points at atom ``u`` in interval ``w``."""

    entries: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.entries, dtype=np.int64)
        if z.ndim != 2 or z.shape[0] < 1 or np.any(z < 0):
            raise ValueError("coloring matrix must be a nonnegative (q0+1) x K array")
        if z.shape[0] > 1 and np.any(z[1:].sum(axis=1) == 0):
            raise ValueError("every Poisson atom row must be used")
        object.__setattr__(self, "entries", z)

    @property
    def q0(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def key(self) -> tuple:
        # rows 1..q0 are exchangeable atoms
        rows = sorted(tuple(r) for r in self.entries[1:].tolist())
        return (tuple(self.entries[0].tolist()),) + tuple(rows)


@dataclass
class MCParams:
    """Path ensemble settings; ``target_se`` triggers a warning when not reached."""

    paths: int = 20000
    steps: int = 256
    dx: float | None = None
    target_se: float | None = None


class PrecisionWarning(UserWarning):
    pass


def _check_precision(mc: MCParams, se: float):
    if mc.target_se is not None and se > mc.target_se:
        warnings.warn(f"achieved standard error {se:.3g} exceeds the target {mc.target_se:.3g}; "
                      "use more paths or a finer grid", PrecisionWarning, stacklevel=3)


def coloring_of(psi: Sequence[int], blocks: Sequence[int], q0: int) -> ColoringMatrix:
    """Coloring matrix of a map ``psi`` on points grouped into consecutive interval blocks."""
    z = np.zeros((q0 + 1, len(blocks)), dtype=np.int64)
    j = 0
    for w, size in enumerate(blocks):
        for _ in range(size):
            z[psi[j], w] += 1
            j += 1
    return ColoringMatrix(z)


def formula_terms(spec: MomentSpec, params: ZParams) -> dict[tuple, dict[int, float]]:
    """Coefficient of each distinct ``H(Z')`` in the moment expansion, split by ``q0``.

    Returns ``{key(Z'): {q0: coefficient}}``.
    """
    if spec.m > EXACT_ORDER_BUDGET:
        raise ValueError(f"order {spec.m} exceeds the exact budget {EXACT_ORDER_BUDGET}")
    alpha, beta = params.alpha, params.beta
    terms: dict[tuple, dict[int, float]] = {}
    ranges = [range(1, m + 1) for m in spec.exponents]
    for qs in product(*ranges):
        s = math.prod(stirling2(m, q) for m, q in zip(spec.exponents, qs))
        q = sum(qs)
        for q0 in range(q + 1):
            weight = s * alpha ** ((q - q0) / 2) * beta**q0 / math.factorial(q0)
            if weight == 0:
                continue
            for psi in atom_maps(q, q0):
                k = coloring_of(psi, qs, q0).key()
                by_q0 = terms.setdefault(k, {})
                by_q0[q0] = by_q0.get(q0, 0.0) + weight
    return terms


def _path_factors(keys, spec: MomentSpec, sigma: float, mc: MCParams, rng: np.random.Generator) -> np.ndarray:
    """Per-path values of the local-time product integral for each coloring key.

    Shape ``(paths, len(keys))``.  The spatial integral is a Riemann sum on a
    grid with a uniform random offset, which makes it unbiased.
    """
    T = spec.times[-1]
    dx = mc.dx if mc.dx is not None else 0.1 * sigma * math.sqrt(T)
    rows = sorted({r for k in keys for r in k[1:]})
    out = np.empty((mc.paths, len(keys)))
    for p in range(mc.paths):
        path = sample_brownian(sigma, T, mc.steps, rng, include=spec.times)
        offset = rng.uniform(0, dx)
        levels = level_grid(path, dx, bridge_margin(path), offset)
        levels = np.concatenate([[0.0], levels])
        field = local_time(path, dx, BRIDGE, rng, record_times=spec.grid, levels=levels)
        inc = np.diff(field.values, axis=0)
        at0 = inc[:, 0]
        spatial = inc[:, 1:]
        row_val = {r: dx * float(np.prod(spatial ** np.array(r)[:, None], axis=0).sum()) for r in rows}
        for i, k in enumerate(keys):
            v = float(np.prod(at0 ** np.array(k[0])))
            for r in k[1:]:
                v *= row_val[r]
            out[p, i] = v
    return out


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


def H_integral(Z: ColoringMatrix, spec: MomentSpec, sigma: float, mc: MCParams,
               rng: np.random.Generator) -> Estimate:
    """E int prod_{u,w} (L_{t_w}(s_u) - L_{t_{w-1}}(s_u))^{z_uw} ds_1..ds_q0 with s_0 = 0."""
    if Z.entries.shape[1] != spec.K:
        raise ValueError("coloring matrix has the wrong number of columns")
    if not Z.entries.any() and Z.q0 == 0:
        return Estimate(1.0, 0.0)
    vals = _path_factors([Z.key()], spec, sigma, mc, rng)[:, 0]
    est = Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals))))
    _check_precision(mc, est.stderr)
    return est


@dataclass(frozen=True)
class MomentResult:
    value: float
    stderr: float
    terms: dict = field(default_factory=dict)
    exact: bool = False


def formula_samples(params: ZParams, spec: MomentSpec, mc: MCParams, rng: np.random.Generator):
    """Per-path contributions to the formula, split by ``q0``.

    Returns ``(q0s, contrib)`` with ``contrib`` of shape ``(paths, len(q0s))``;
    row sums are unbiased draws of the moment.
    """
    terms = formula_terms(spec, params)
    keys = list(terms)
    per_path = _path_factors(keys, spec, params.sigma, mc, rng)
    q0s = sorted({q0 for t in terms.values() for q0 in t})
    coef = np.array([[terms[k].get(q0, 0.0) for q0 in q0s] for k in keys])
    return q0s, per_path @ coef


def summarize_formula(q0s, contrib: np.ndarray) -> MomentResult:
    total = contrib.sum(axis=1)
    n = len(total)
    by_q0 = {q0: (float(contrib[:, i].mean()), float(contrib[:, i].std(ddof=1) / math.sqrt(n)))
             for i, q0 in enumerate(q0s)}
    return MomentResult(float(total.mean()), float(total.std(ddof=1) / math.sqrt(n)), by_q0)


def poisson_limit_moment(spec: MomentSpec) -> float:
    """Exact moment for the standard Poisson process (independent increments)."""
    return math.prod(poisson_moment(L, m) for L, m in zip(spec.lengths, spec.exponents))


def limit_moment(params: ZParams, spec: MomentSpec, mc: MCParams | None = None,
                 rng: np.random.Generator | None = None) -> MomentResult:
    """Joint increment moment of Z_{alpha,beta} from the combinatorial formula.

    ``terms`` maps ``q0`` to its contribution ``(value, stderr)``.  All terms
    share one Brownian path ensemble.
    """
    if params.standard_poisson:
        return MomentResult(poisson_limit_moment(spec), 0.0, {}, True)
    if rng is None:
        raise ValueError("limit_moment needs an rng outside the standard Poisson case")
    mc = mc or MCParams()
    q0s, contrib = formula_samples(params, spec, mc, rng)
    res = summarize_formula(q0s, contrib)
    _check_precision(mc, res.stderr)
    return res


def interval_counts(times: np.ndarray, grid: Sequence[float]) -> np.ndarray:
    cum = np.searchsorted(times, np.asarray(grid, dtype=float), side="right")
    return np.diff(cum)


def sample_Z_counts(params: ZParams, times: Sequence[float], n: int, rng: np.random.Generator,
                    steps: int = 256) -> np.ndarray:
    """Counts of ``n`` independent Z samples over ``(0, t_1], (t_1, t_2], ...``; shape ``(n, K)``."""
    times = [float(t) for t in times]
    grid = np.concatenate([[0.0], times])
    out = np.empty((n, len(times)), dtype=np.int64)
    for i in range(n):
        z = sample_Z(params, times[-1], rng, steps=steps, include=times)
        out[i] = interval_counts(z.times, grid)
    return out


def moment_of_counts(counts: np.ndarray, exponents: Sequence[int]) -> np.ndarray:
    return np.prod(np.asarray(counts, dtype=float) ** np.asarray(exponents, dtype=float)[None, :], axis=1)


def simulated_moment(params: ZParams, spec: MomentSpec, n: int, rng: np.random.Generator,
                     steps: int = 256) -> Estimate:
    """Direct Monte Carlo of the joint increment moment from :func:`sample_Z`."""
    vals = moment_of_counts(sample_Z_counts(params, spec.times, n, rng, steps), spec.exponents)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)))
