"""Integer cocycles, Birkhoff sums and the law of the driving walk h_n."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .symbolic import MarkovShift, cylinder_measure, is_admissible

DP_CELL_BUDGET = 100_000_000


class CocycleError(ValueError):
    pass


class ArithmeticCocycleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Cocycle:
    """Integer step function constant on 0-cylinders.

    ``lattice_span`` is the largest ``d`` such that h is cohomologous to a
    function with values in ``c + dZ``; ``0`` flags a coboundary (sigma2 = 0).
    """

    values: np.ndarray
    sigma2: float
    lattice_span: int
    centering_sum: float = 0.0

    @property
    def max_abs(self) -> int:
        return int(np.abs(self.values).max()) if len(self.values) else 0

    @property
    def arithmetic(self) -> bool:
        return self.lattice_span != 1


def _centering(shift: MarkovShift, values: np.ndarray):
    exact = shift.measure.initial_exact
    if exact is not None:
        total = sum(Fraction(int(v)) * p for v, p in zip(values, exact))
        return float(total), total == 0
    total = float(shift.measure.initial @ values)
    return total, abs(total) <= 1e-12


def make_cocycle(shift: MarkovShift, values) -> Cocycle:
    """Validate ``values`` (one integer per symbol) and attach sigma2 and the lattice span."""
    v = np.asarray(values)
    if v.ndim != 1 or len(v) != shift.alphabet_size:
        raise CocycleError(f"need one value per symbol ({shift.alphabet_size}), got {list(values)!r}")
    if not np.all(np.equal(np.mod(v, 1), 0)):
        raise CocycleError(f"cocycle values must be integers, got {list(values)!r}")
    v = v.astype(np.int64)
    total, ok = _centering(shift, v)
    if not ok:
        raise CocycleError(f"cocycle is not centred: sum_a p_a h(a) = {total!r}")
    return Cocycle(v, _green_kubo(shift, v), lattice_span(shift, v), total)


def birkhoff_sums(word, c: Cocycle | np.ndarray) -> np.ndarray:
    """Prefix sums ``h_0 = 0, h_1, ..., h_n`` of the cocycle along ``word``."""
    values = c.values if isinstance(c, Cocycle) else np.asarray(c)
    w = np.asarray(word, dtype=np.int64)
    out = np.zeros(len(w) + 1, dtype=np.int64)
    np.cumsum(values[w], out=out[1:])
    return out


def lattice_span(shift: MarkovShift, values) -> int:
    """Largest d with h(a) = c + g(b) - g(a) mod d along every allowed edge a -> b.

    The constraint only involves cycle sums: every closed path of length n
    must have Birkhoff sum congruent to c*n mod d.  Fundamental cycles of a
    BFS tree give the generating constraints.
    """
    h = np.asarray(values, dtype=np.int64)
    support = shift.measure.kernel > 0
    A = len(h)
    depth = np.full(A, -1)
    S = np.zeros(A, dtype=np.int64)
    depth[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for b in np.flatnonzero(support[a]):
                if depth[b] < 0:
                    depth[b] = depth[a] + 1
                    S[b] = S[a] + h[a]
                    nxt.append(b)
        frontier = nxt
    cons = []
    for a in range(A):
        for b in np.flatnonzero(support[a]):
            cons.append((int(S[a] + h[a] - S[b]), int(depth[a] + 1 - depth[b])))
    G = 0
    for (s1, n1), (s2, n2) in combinations(cons, 2):
        G = math.gcd(G, s1 * n2 - s2 * n1)
    if G == 0:
        # every cycle sum is c * length: h is cohomologous to a constant
        return 0
    for d in sorted((d for d in range(1, G + 1) if G % d == 0), reverse=True):
        if any(all((s - c * n) % d == 0 for s, n in cons) for c in range(d)):
            return d
    return 1


def _green_kubo(shift: MarkovShift, h: np.ndarray) -> float:
    # Var(h) + 2 sum_{k>=1} Cov(h, h o f^k), summed in closed form with the
    # fundamental matrix Z = (I - P + 1 p)^{-1}:  sum_{k>=1} P^k h = (Z - I) h
    # for centred h.
    p = shift.measure.initial
    P = shift.measure.kernel
    A = len(p)
    hf = h.astype(float)
    Z = np.linalg.inv(np.eye(A) - P + np.outer(np.ones(A), p))
    tail = (Z - np.eye(A)) @ hf
    s2 = float(p @ (hf * hf) + 2.0 * p @ (hf * tail))
    return max(s2, 0.0)


def sigma2(shift: MarkovShift, c: Cocycle | np.ndarray) -> float:
    """Asymptotic variance lim E[h_n^2]/n of a centred cocycle."""
    values = c.values if isinstance(c, Cocycle) else np.asarray(c, dtype=np.int64)
    total, ok = _centering(shift, values)
    if not ok:
        raise CocycleError(f"cocycle is not centred: sum_a p_a h(a) = {total!r}")
    return _green_kubo(shift, values)


def fourier_eigenvalue(shift: MarkovShift, c: Cocycle, u: float) -> complex:
    """Leading eigenvalue of ``P_ab exp(i u h(b))`` (largest modulus)."""
    Pu = shift.measure.kernel * np.exp(1j * u * c.values.astype(float))[None, :]
    w = np.linalg.eigvals(Pu)
    return complex(w[np.argmax(np.abs(w))])


@dataclass(frozen=True)
class WalkDistribution:
    """Joint law of ``(x_n, h_n)``: ``table[a, k + offset] = P(x_n = a, h_n = k)``."""

    horizon: int
    offset: int
    table: np.ndarray

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.table.shape[1]) - self.offset

    def level_law(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def prob(self, k: int) -> float:
        i = k + self.offset
        if 0 <= i < self.table.shape[1]:
            return float(self.table[:, i].sum())
        return 0.0


def _check_budget(n: int, A: int, H: int):
    cells = n * A * (2 * n * H + 1)
    if cells > DP_CELL_BUDGET:
        raise MemoryError(f"walk DP needs {cells:.3g} cells (budget {DP_CELL_BUDGET:.0e}); reduce n")


def _propagate(D: np.ndarray, P: np.ndarray, values: np.ndarray, steps: int) -> np.ndarray:
    # D[a, k]: mass at current symbol a and current level k.  One step adds
    # h(a) to the level and moves to b with probability P[a, b].
    A, W = D.shape
    for _ in range(steps):
        new = np.zeros_like(D)
        for a in range(A):
            sh = int(values[a])
            row = D[a]
            if sh > 0:
                shifted = np.concatenate([np.zeros(sh), row[:-sh]])
            elif sh < 0:
                shifted = np.concatenate([row[-sh:], np.zeros(-sh)])
            else:
                shifted = row
            new += P[a][:, None] * shifted[None, :]
        D = new
    return D


def exact_walk_distribution(shift: MarkovShift, c: Cocycle, n: int) -> WalkDistribution:
    """Exact law of ``(x_n, h_n)`` under the stationary measure, by dynamic programming."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    H = max(c.max_abs, 1)
    A = shift.alphabet_size
    _check_budget(max(n, 1), A, H)
    offset = n * H
    D = np.zeros((A, 2 * offset + 1))
    D[:, offset] = shift.measure.initial
    D = _propagate(D, shift.measure.kernel, c.values, n)
    return WalkDistribution(n, offset, D)


class LLTResult(NamedTuple):
    exact_prob: float
    gaussian_prediction: float
    normalized_error: float


def llt_check(shift: MarkovShift, c: Cocycle, A_word, B_word, n: int, k: int) -> LLTResult:
    """Compare mu(x in [A], h_n = k, f^n x in [B]) with its Gaussian prediction.

    ``[A]`` fixes coordinates ``0..|A|-1`` and ``[B]`` fixes ``n..n+|B|-1``.
    Empty words stand for the whole space.
    """
    A_word = np.asarray(A_word, dtype=np.int64)
    B_word = np.asarray(B_word, dtype=np.int64)
    if not (is_admissible(shift, A_word) and is_admissible(shift, B_word)):
        raise ValueError("A_word and B_word must be admissible")
    if n < max(len(A_word), 1):
        raise ValueError("n must be at least the length of A_word")
    if c.arithmetic:
        warnings.warn(f"cocycle has lattice span {c.lattice_span}; Gaussian prediction is not valid",
                      ArithmeticCocycleWarning, stacklevel=2)
    H = max(c.max_abs, 1)
    nA = len(A_word)
    _check_budget(n, shift.alphabet_size, H)
    offset = n * H
    P = shift.measure.kernel
    D = np.zeros((shift.alphabet_size, 2 * offset + 1))
    if nA == 0:
        D[:, offset] = shift.measure.initial
        steps = n
    else:
        level = int(c.values[A_word[:-1]].sum())
        D[A_word[-1], offset + level] = cylinder_measure(shift, A_word)
        steps = n - (nA - 1)
    D = _propagate(D, P, c.values, steps)
    idx = k + offset
    if not 0 <= idx < D.shape[1]:
        at_level = np.zeros(shift.alphabet_size)
    else:
        at_level = D[:, idx]
    if len(B_word) == 0:
        exact = float(at_level.sum())
    else:
        exact = float(at_level[B_word[0]] * np.prod(P[B_word[:-1], B_word[1:]]))
    muA = cylinder_measure(shift, A_word)
    muB = cylinder_measure(shift, B_word)
    s = math.sqrt(c.sigma2)
    pred = muA * muB * math.exp(-k * k / (2 * c.sigma2 * n)) / (s * math.sqrt(2 * math.pi * n))
    m = max(len(A_word), len(B_word), 1)
    return LLTResult(exact, pred, abs(exact - pred) * n / (muA * muB * m))
