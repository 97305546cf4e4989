"""Subshifts of finite type with Markov measures.

Symbols are dense integers ``0..A-1`` and words are integer arrays.  A shift
carries its transition matrix, a stationary Markov measure, the Lyapunov
exponent of its ultrametric and whether balls are one- or two-sided cylinders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from ._kernels import markov_chain

ONE_SIDED = "one-sided"
TWO_SIDED = "two-sided"

# Slack when flooring -log(r)/lambda so that radii on exact cylinder
# boundaries (r = exp(-lambda*m)) land on m and not m-1.
_FLOOR_SLACK = 1e-9


class ShiftError(ValueError):
    """Raised for an invalid transition matrix, measure or shift file."""


@dataclass(frozen=True)
class MarkovMeasure:
    """Stationary Markov measure on a subshift of finite type.

    ``perron_left``/``perron_right`` are set for Parry measures only and are
    normalised so that their dot product is one.
    """

    initial: np.ndarray
    kernel: np.ndarray
    entropy: float
    is_parry: bool = False
    perron_left: np.ndarray | None = None
    perron_right: np.ndarray | None = None
    perron_value: float | None = None
    initial_exact: tuple[Fraction, ...] | None = None

    @property
    def size(self) -> int:
        return len(self.initial)


@dataclass(frozen=True)
class MarkovShift:
    transitions: np.ndarray
    measure: MarkovMeasure
    lyapunov: float
    sided: str = ONE_SIDED
    name: str = ""
    _cum_kernel: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_initial: np.ndarray = field(init=False, repr=False, compare=False)
    _cum_reverse: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sided not in (ONE_SIDED, TWO_SIDED):
            raise ShiftError(f"sided must be {ONE_SIDED!r} or {TWO_SIDED!r}, got {self.sided!r}")
        if not self.lyapunov > 0:
            raise ShiftError(f"lyapunov exponent must be positive, got {self.lyapunov}")
        M = self.transitions
        if M.shape != self.measure.kernel.shape:
            raise ShiftError("measure kernel and transition matrix shapes differ")
        if np.any((self.measure.kernel > 0) & (M == 0)):
            raise ShiftError("measure kernel charges a forbidden transition")
        p = self.measure.initial
        P = self.measure.kernel
        # time reversal: Pr[a, b] = p_b P[b, a] / p_a
        with np.errstate(divide="ignore", invalid="ignore"):
            rev = np.where(p[:, None] > 0, (P.T * p[None, :]) / p[:, None], 0.0)
        object.__setattr__(self, "_cum_kernel", _cumulative_rows(P))
        object.__setattr__(self, "_cum_initial", _cumulative_rows(p[None, :])[0])
        object.__setattr__(self, "_cum_reverse", _cumulative_rows(rev))
        self.transitions.setflags(write=False)

    @property
    def alphabet_size(self) -> int:
        return self.transitions.shape[0]

    @property
    def two_sided(self) -> bool:
        return self.sided == TWO_SIDED

    def word_length(self, m: int) -> int:
        """Length of the cylinder word of generation ``m``."""
        return 2 * m + 1 if self.two_sided else m + 1


@dataclass(frozen=True)
class CylinderBall:
    """Ball of radius ``r`` identified with a cylinder of generation ``m``.

    For two-sided shifts ``base_word`` holds coordinates ``-m..m``; for
    one-sided shifts coordinates ``0..m``.
    """

    base_word: np.ndarray
    generation: int
    radius: float
    sided: str


def _cumulative_rows(P: np.ndarray) -> np.ndarray:
    cum = np.cumsum(P, axis=1)
    # clamp the last positive entry of each row so a uniform in [0,1) never
    # falls past the end through round-off
    for i, row in enumerate(P):
        nz = np.flatnonzero(row > 0)
        if len(nz):
            cum[i, nz[-1]:] = 1.0
    return cum


def _as_transition_matrix(transitions) -> np.ndarray:
    M = np.array(transitions, dtype=np.int64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ShiftError(f"transition matrix must be square and non-empty, got shape {M.shape}")
    if not np.all((M == 0) | (M == 1)):
        raise ShiftError("transition matrix entries must be 0 or 1")
    return M


def _reachability(M: np.ndarray) -> np.ndarray:
    A = M.shape[0]
    R = (M > 0) | np.eye(A, dtype=bool)
    for _ in range(max(1, int(math.ceil(math.log2(A))) + 1)):
        R = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
    return R


def _period(M: np.ndarray) -> int:
    """Period of an irreducible 0/1 matrix (gcd of cycle lengths)."""
    A = M.shape[0]
    level = np.full(A, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for b in np.flatnonzero(M[a]):
                if level[b] < 0:
                    level[b] = level[a] + 1
                    nxt.append(b)
        frontier = nxt
    g = 0
    for a in range(A):
        for b in np.flatnonzero(M[a]):
            g = math.gcd(g, int(level[a] + 1 - level[b]))
    return g


def primitivity_witness(transitions) -> str | None:
    """Return ``None`` if the matrix is primitive, else a diagnostic string."""
    M = _as_transition_matrix(transitions)
    A = M.shape[0]
    R = _reachability(M)
    if not R.all():
        a, b = np.argwhere(~R)[0]
        return f"reducible: symbol {b} is not reachable from symbol {a}"
    period = _period(M)
    if period != 1:
        return f"irreducible with period {period}"
    # Wielandt: a primitive matrix has M^k > 0 for k = A^2 - 2A + 2 <= A^2
    Q = M.astype(bool)
    P = Q.copy()
    for _ in range(A * A):
        if P.all():
            return None
        P = (P.astype(np.int64) @ Q.astype(np.int64)) > 0
    return "no strictly positive power up to A^2"


def _power_iteration(M: np.ndarray, tol: float = 1e-13, max_iter: int = 100_000):
    v = np.ones(M.shape[0])
    v /= v.sum()
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        lam = w.sum()
        w /= lam
        if np.max(np.abs(w - v)) < tol:
            return lam, w
        v = w
    raise ShiftError(f"power iteration did not converge in {max_iter} iterations")


def parry_measure(transitions) -> MarkovMeasure:
    """Measure of maximal entropy built from the Perron data of ``transitions``.

    >>> mu = parry_measure([[1, 1], [1, 1]])
    >>> mu.initial, round(mu.entropy / math.log(2), 12)
    (array([0.5, 0.5]), 1.0)
    """
    M = _as_transition_matrix(transitions)
    witness = primitivity_witness(M)
    if witness is not None:
        raise ShiftError(f"transition matrix is not primitive: {witness}")
    Mf = M.astype(float)
    lam, v = _power_iteration(Mf)
    lam_left, u = _power_iteration(Mf.T)
    u = u / (u @ v)
    p = u * v
    p = p / p.sum()
    P = Mf * v[None, :] / (lam * v[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    return MarkovMeasure(
        initial=p,
        kernel=P,
        entropy=math.log(lam),
        is_parry=True,
        perron_left=u,
        perron_right=v,
        perron_value=lam,
    )


def _exact_stationary(kernel: Sequence[Sequence[Fraction]]) -> tuple[Fraction, ...]:
    """Stationary vector of an irreducible rational kernel, by Gaussian elimination."""
    A = len(kernel)
    # rows: (P^T - I) p = 0 with the last equation replaced by sum(p) = 1
    rows = [[kernel[j][i] - (1 if i == j else 0) for j in range(A)] + [Fraction(0)] for i in range(A)]
    rows[-1] = [Fraction(1)] * A + [Fraction(1)]
    for col in range(A):
        piv = next(r for r in range(col, A) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        pv = rows[col][col]
        rows[col] = [x / pv for x in rows[col]]
        for r in range(A):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return tuple(rows[i][A] for i in range(A))


def _entropy(p: np.ndarray, P: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(p[:, None] * P * logs).sum())


def markov_measure(transitions, kernel, initial=None) -> MarkovMeasure:
    """Stationary Markov measure with the given row-stochastic ``kernel``.

    Entries may be floats, :class:`~fractions.Fraction` or strings such as
    ``"1/3"``.  When every entry is rational the stationary vector is also
    kept in exact arithmetic, which makes centring checks exact.
    """
    M = _as_transition_matrix(transitions)
    A = M.shape[0]
    rational = all(isinstance(x, (int, Fraction, str)) for row in kernel for x in row)
    if rational:
        K = [[Fraction(x) for x in row] for row in kernel]
        if any(sum(row) != 1 for row in K):
            raise ShiftError("kernel rows must sum to one")
        P = np.array([[float(x) for x in row] for row in K])
    else:
        P = np.array(kernel, dtype=float)
        if not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
            raise ShiftError("kernel rows must sum to one")
    if P.shape != (A, A) or np.any(P < 0):
        raise ShiftError("kernel must be a nonnegative A x A matrix")
    if np.any((P > 0) & (M == 0)):
        raise ShiftError("kernel charges a forbidden transition")
    witness = primitivity_witness((P > 0).astype(int))
    if witness is not None:
        raise ShiftError(f"kernel support is not primitive: {witness}")

    exact = _exact_stationary(K) if rational else None
    if exact is not None:
        p = np.array([float(x) for x in exact])
    else:
        w, V = np.linalg.eig(P.T)
        k = int(np.argmin(np.abs(w - 1.0)))
        p = np.real(V[:, k])
        p = p / p.sum()
    if initial is not None:
        given = np.array([float(Fraction(x)) if isinstance(x, str) else float(x) for x in initial])
        if not np.allclose(given, p, atol=1e-10):
            raise ShiftError(f"initial vector {given} is not stationary (expected {p})")
    return MarkovMeasure(initial=p, kernel=P, entropy=_entropy(p, P), initial_exact=exact)


def make_shift(transitions, measure: MarkovMeasure | str = "parry", lyapunov: float = math.log(2),
               sided: str = ONE_SIDED, name: str = "") -> MarkovShift:
    M = _as_transition_matrix(transitions)
    if isinstance(measure, str):
        if measure != "parry":
            raise ShiftError(f"unknown measure {measure!r}")
        measure = parry_measure(M)
    return MarkovShift(M, measure, float(lyapunov), sided, name)


def full_shift(L: int, lyapunov: float = math.log(2), sided: str = ONE_SIDED) -> MarkovShift:
    """Full shift on ``L`` symbols with the uniform (Parry) measure."""
    return make_shift(np.ones((L, L), dtype=int), "parry", lyapunov, sided, name=f"full-{L}")


def golden_mean_shift(measure="parry", lyapunov: float = math.log(2), sided: str = ONE_SIDED) -> MarkovShift:
    M = [[1, 1], [1, 0]]
    if not isinstance(measure, (str, MarkovMeasure)):
        measure = markov_measure(M, measure)
    return make_shift(M, measure, lyapunov, sided, name="golden-mean")


def is_admissible(shift: MarkovShift, word) -> bool:
    w = np.asarray(word, dtype=np.int64)
    if len(w) == 0:
        return True
    if w.min() < 0 or w.max() >= shift.alphabet_size:
        return False
    return bool(np.all(shift.transitions[w[:-1], w[1:]] == 1))


def cylinder_measure(shift: MarkovShift, word) -> float:
    """Measure of the cylinder fixing ``word`` on consecutive coordinates.

    Stationarity makes the value independent of where the word sits.  An
    inadmissible word has measure zero and the empty word has measure one.
    """
    w = np.asarray(word, dtype=np.int64)
    if len(w) == 0:
        return 1.0
    if w.min() < 0 or w.max() >= shift.alphabet_size:
        return 0.0
    mu = shift.measure
    return float(mu.initial[w[0]] * np.prod(mu.kernel[w[:-1], w[1:]]))


def ball_generation(r: float, lyapunov: float, sided: str = ONE_SIDED) -> int:
    """Generation ``m = floor(-log(r)/lambda)`` of the cylinder equal to the r-ball."""
    if not 0 < r < 1:
        raise ValueError(f"radius must lie in (0, 1), got {r}")
    if not lyapunov > 0:
        raise ValueError(f"lyapunov exponent must be positive, got {lyapunov}")
    if sided not in (ONE_SIDED, TWO_SIDED):
        raise ValueError(f"unknown sidedness {sided!r}")
    return int(math.floor(-math.log(r) / lyapunov + _FLOOR_SLACK))


def on_cylinder_boundary(r: float, lyapunov: float, tol: float = 1e-9) -> bool:
    x = -math.log(r) / lyapunov
    return abs(x - round(x)) < tol


def cylinder_ball(shift: MarkovShift, base_word, r: float) -> CylinderBall:
    m = ball_generation(r, shift.lyapunov, shift.sided)
    w = np.asarray(base_word, dtype=np.int64)
    if len(w) != shift.word_length(m):
        raise ValueError(f"generation {m} needs a word of length {shift.word_length(m)}, got {len(w)}")
    if not is_admissible(shift, w):
        raise ValueError(f"base word {w.tolist()} is not admissible")
    return CylinderBall(w, m, r, shift.sided)


def dimension(shift: MarkovShift) -> float:
    """Pointwise dimension entropy/lambda, doubled for two-sided cylinders."""
    d = shift.measure.entropy / shift.lyapunov
    return 2 * d if shift.two_sided else d


def sample_path(shift: MarkovShift, length: int, rng: np.random.Generator, start=None) -> np.ndarray:
    """Stationary sample ``x_0..x_{length-1}``; one uniform is consumed per symbol.

    If ``start`` is given the chain continues from that symbol and the first
    returned symbol is its successor.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    u = rng.random(length)
    if start is None:
        first = int(np.searchsorted(shift._cum_initial, u[0], side="right"))
        out = np.empty(length, dtype=np.int64)
        out[0] = first
        out[1:] = markov_chain(u[1:], shift._cum_kernel, first)
        return out
    return markov_chain(u, shift._cum_kernel, int(start))


# ---------------------------------------------------------------------------
# shift definition files
# ---------------------------------------------------------------------------

def _parse_lyapunov(value) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict) and set(value) == {"log"}:
        return math.log(float(value["log"]))
    raise ShiftError(f"lyapunov must be a number or {{'log': base}}, got {value!r}")


def shift_from_dict(spec: dict, name: str = "") -> MarkovShift:
    """Build a shift from the JSON schema documented in ``docs/formats.md``."""
    required = {"alphabet_size", "transitions", "measure", "lyapunov", "sided"}
    missing = required - set(spec)
    if missing:
        raise ShiftError(f"shift definition missing keys: {sorted(missing)}")
    unknown = set(spec) - required - {"name"}
    if unknown:
        raise ShiftError(f"shift definition has unknown keys: {sorted(unknown)}")
    M = _as_transition_matrix(spec["transitions"])
    if M.shape[0] != spec["alphabet_size"]:
        raise ShiftError(f"alphabet_size {spec['alphabet_size']} does not match matrix size {M.shape[0]}")
    measure = spec["measure"]
    if measure == "parry":
        mu = parry_measure(M)
    elif isinstance(measure, dict) and "markov" in measure:
        body = measure["markov"]
        mu = markov_measure(M, body["kernel"], body.get("initial"))
    else:
        raise ShiftError(f"measure must be 'parry' or {{'markov': {{...}}}}, got {measure!r}")
    return MarkovShift(M, mu, _parse_lyapunov(spec["lyapunov"]), spec["sided"], spec.get("name", name))


def load_shift(path) -> MarkovShift:
    path = Path(path)
    with path.open() as fh:
        spec = json.load(fh)
    return shift_from_dict(spec, name=path.stem)
