"""Orbits of the skew product F(x, y) = (f x, g^{h(x)} y) and its Z-extension.

Returns of ``F^n(x, y)`` to the ball around ``(x, y)`` need two things: the
x-cylinder word reappears at time ``n`` and the walk level ``h_n`` lies in
``G_r(y) = {k : g^k y in B_r(y)}``.  The x-stream is scanned with a KMP
automaton; ``G_r(y)`` is decided lazily for the levels that actually occur.

Randomness layout per trial: ``rng.spawn(3)`` gives the x-stream, the forward
y-chain and the backward y-chain.  In annealed mode the ball is sampled from
the stream itself, so nested radii share one orbit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._kernels import accept_masks, kmp_failure, markov_chain, scan_stream
from .cocycle import Cocycle, make_cocycle
from .parallel import run_trials
from .symbolic import (ONE_SIDED, TWO_SIDED, MarkovShift, ball_generation, cylinder_measure,
                       is_admissible)

Y_WINDOW_GUARD = 1 << 30
_MIN_CHUNK = 1 << 12
_MAX_CHUNK = 1 << 19


@dataclass(frozen=True)
class TTSystem:
    x_shift: MarkovShift
    y_shift: MarkovShift | None
    cocycle: Cocycle

    def __post_init__(self):
        if self.x_shift.sided != ONE_SIDED:
            raise ValueError("the driving shift must be one-sided")
        if len(self.cocycle.values) != self.x_shift.alphabet_size:
            raise ValueError("cocycle does not match the driving alphabet")

    def generations(self, r: float) -> tuple[int, int | None]:
        mx = ball_generation(r, self.x_shift.lyapunov, ONE_SIDED)
        if self.y_shift is None:
            return mx, None
        return mx, ball_generation(r, self.y_shift.lyapunov, self.y_shift.sided)


def tt_system(x_shift, y_shift, values, allow_arithmetic: bool = False) -> TTSystem:
    c = make_cocycle(x_shift, values)
    if c.arithmetic and not allow_arithmetic:
        raise ValueError(f"cocycle {c.values.tolist()} is arithmetic (lattice span {c.lattice_span})")
    return TTSystem(x_shift, y_shift, c)


@dataclass(frozen=True)
class EventSeries:
    times: np.ndarray
    normalization: float
    raw_count: int
    horizon: float

    def count(self, a: float, b: float) -> int:
        """Number of events in ``(a, b]``."""
        return int(np.searchsorted(self.times, b, side="right") - np.searchsorted(self.times, a, side="right"))

    def counts(self, grid: Sequence[float]) -> np.ndarray:
        """Counts over the consecutive intervals ``(grid[i-1], grid[i]]``."""
        cum = np.searchsorted(self.times, np.asarray(grid, dtype=float), side="right")
        return np.diff(cum)


@dataclass(frozen=True)
class BallPairData:
    mu_ball: float
    nu_ball: float
    n_r: float
    alpha_r: float
    beta_r: float


def pair_data(mu_ball: float, nu_ball: float) -> BallPairData:
    n_r = 1.0 / max(mu_ball * mu_ball, mu_ball * nu_ball)
    if mu_ball > nu_ball:
        alpha, beta = 1.0, nu_ball / mu_ball
    else:
        alpha, beta = mu_ball / nu_ball, 1.0
    return BallPairData(mu_ball, nu_ball, n_r, alpha, beta)


def ball_pair_data(system: TTSystem, r: float, x_word_base, y_word_base) -> BallPairData:
    mx, my = system.generations(r)
    xw = np.asarray(x_word_base, dtype=np.int64)
    yw = np.asarray(y_word_base, dtype=np.int64)
    if len(xw) != mx + 1:
        raise ValueError(f"x base word must have length {mx + 1}")
    if len(yw) != system.y_shift.word_length(my):
        raise ValueError(f"y base word must have length {system.y_shift.word_length(my)}")
    if not (is_admissible(system.x_shift, xw) and is_admissible(system.y_shift, yw)):
        raise ValueError("base words must be admissible")
    return pair_data(cylinder_measure(system.x_shift, xw), cylinder_measure(system.y_shift, yw))


def zeta_prefactor(r: float, lambda_x: float, lambda_y: float, h_mu: float, h_nu: float) -> float:
    """Deterministic prefactor left over when the two cylinder generations differ."""
    if min(r, lambda_x, lambda_y, h_mu, h_nu) <= 0:
        raise ValueError("all arguments must be positive")
    mx = ball_generation(r, lambda_x)
    my = ball_generation(r, lambda_y)
    return math.exp(-(mx * lambda_x - my * lambda_y) * h_mu / h_nu)


# ---------------------------------------------------------------------------
# lazily generated two-sided y-chain
# ---------------------------------------------------------------------------

class _TwoSidedChain:
    """Stationary two-sided Markov sequence ``y_k`` generated outward on demand.

    Position ``k`` lives at ``buf[k + origin]``.  Forward positions consume
    the forward stream in order and backward positions the backward stream,
    so every ``y_k`` depends only on the seed.
    """

    def __init__(self, shift: MarkovShift, fwd: np.random.Generator, bwd: np.random.Generator,
                 window: tuple[int, np.ndarray] | None, nradii: int):
        self.shift = shift
        self.fwd = fwd
        self.bwd = bwd
        if window is None:
            y0 = int(np.searchsorted(shift._cum_initial, fwd.random(), side="right"))
            self.buf = np.array([y0], dtype=np.int64)
            self.origin = 0
        else:
            start, word = window
            self.buf = np.array(word, dtype=np.int64)
            self.origin = -start
        self.cache = [np.full(len(self.buf), -1, dtype=np.int8) for _ in range(nradii)]

    @property
    def lo(self) -> int:
        return -self.origin

    @property
    def hi(self) -> int:
        return len(self.buf) - 1 - self.origin

    def ensure(self, lo: int, hi: int):
        grow_hi = hi - self.hi
        grow_lo = self.lo - lo
        if grow_hi <= 0 and grow_lo <= 0:
            return
        n = len(self.buf)
        if grow_hi > 0:
            grow_hi = max(grow_hi, n)
        if grow_lo > 0:
            grow_lo = max(grow_lo, n)
        if n + max(grow_hi, 0) + max(grow_lo, 0) > Y_WINDOW_GUARD:
            raise MemoryError("y window exceeds the memory guard; use a smaller horizon")
        parts = [self.buf]
        cparts = [[c] for c in self.cache]
        if grow_hi > 0:
            new = markov_chain(self.fwd.random(grow_hi), self.shift._cum_kernel, int(self.buf[-1]))
            parts.append(new)
            for cp in cparts:
                cp.append(np.full(grow_hi, -1, dtype=np.int8))
        if grow_lo > 0:
            new = markov_chain(self.bwd.random(grow_lo), self.shift._cum_reverse, int(self.buf[0]))
            parts.insert(0, new[::-1])
            for cp in cparts:
                cp.insert(0, np.full(grow_lo, -1, dtype=np.int8))
            self.origin += grow_lo
        self.buf = np.concatenate(parts)
        self.cache = [np.concatenate(cp) for cp in cparts]

    def window(self, lo: int, hi: int) -> np.ndarray:
        self.ensure(lo, hi)
        return self.buf[lo + self.origin: hi + self.origin + 1]

    def member(self, j: int, levels: np.ndarray, offsets: np.ndarray, base: np.ndarray) -> np.ndarray:
        """Whether ``y_{k+o} == y_o`` for all window offsets ``o``, for each level ``k``."""
        self.ensure(int(levels.min()) + int(offsets[0]), int(levels.max()) + int(offsets[-1]))
        idx = levels + self.origin
        cached = self.cache[j][idx]
        unknown = cached < 0
        if unknown.any():
            iu = idx[unknown]
            ok = (self.buf[iu[:, None] + offsets[None, :]] == base[None, :]).all(axis=1)
            self.cache[j][iu] = ok
            cached = self.cache[j][idx]
        return cached == 1


@dataclass
class OrbitBuffer:
    """Orbit of ``(x, y)`` with return detection for several nested radii.

    ``x_word`` holds the generated x-symbols only when ``keep`` is set.
    """

    system: TTSystem
    radii: list[float]
    x_base: np.ndarray
    y: _TwoSidedChain | None
    x_rng: np.random.Generator
    mx: list[int]
    my: list[int | None]
    keep: bool = False
    x_word: list = field(default_factory=list)
    walk_min: int = 0
    walk_max: int = 0

    def y_base(self, j: int) -> np.ndarray:
        return self.y.window(int(self._offsets[j][0]), int(self._offsets[j][-1]))

    def ball(self, j: int) -> BallPairData:
        xw = self.x_base[: self.mx[j] + 1]
        mu = cylinder_measure(self.system.x_shift, xw)
        nu = cylinder_measure(self.system.y_shift, self.y_base(j)) if self.y is not None else 0.0
        return pair_data(mu, nu)

    def run(self, horizon: int, first_only: bool = False) -> list[np.ndarray]:
        """Event times ``1 <= n <= horizon`` for each radius (sorted)."""
        nrad = len(self.radii)
        lengths = np.array([m + 1 for m in self.mx], dtype=np.int64)
        pattern = self.x_base
        M = len(pattern)
        fail = kmp_failure(pattern)
        accept = accept_masks(fail, lengths.tolist())
        values = self.system.cocycle.values
        ring = np.zeros(M + 1, dtype=np.int64)
        events: list[list[np.ndarray]] = [[] for _ in range(nrad)]
        found = np.zeros(nrad, dtype=bool)
        if horizon < 1:
            return [np.zeros(0, dtype=np.int64) for _ in range(nrad)]

        walk, q = 0, 0
        pos = 0
        last_needed = horizon + M - 1
        chunk = _MIN_CHUNK
        block = self.x_base
        state = int(self.x_base[-1])
        while True:
            cap = len(block) * nrad
            out_n = np.empty(cap, dtype=np.int64)
            out_l = np.empty(cap, dtype=np.int64)
            out_b = np.empty(cap, dtype=np.int64)
            walk, q, cnt, wmin, wmax = scan_stream(block, pos, walk, q, pattern, fail, accept, lengths,
                                                   values, ring, horizon, out_n, out_l, out_b)
            self.walk_min = min(self.walk_min, wmin)
            self.walk_max = max(self.walk_max, wmax)
            if self.keep:
                self.x_word.append(block.copy())
            pos += len(block)
            if cnt:
                self._accept(out_n[:cnt], out_l[:cnt], out_b[:cnt], events, found)
            if pos > last_needed or (first_only and found.all()):
                break
            size = min(chunk, last_needed - pos + 1)
            block = markov_chain(self.x_rng.random(size), self.system.x_shift._cum_kernel, state)
            state = int(block[-1])
            chunk = min(2 * chunk, _MAX_CHUNK)
        return [np.concatenate(e) if e else np.zeros(0, dtype=np.int64) for e in events]

    def _accept(self, ns, levels, rad, events, found):
        for j in range(len(self.radii)):
            sel = rad == j
            if not sel.any():
                continue
            n_j = ns[sel]
            l_j = levels[sel]
            if self.y is None:
                ok = l_j == 0
            else:
                ok = self.y.member(j, l_j, self._offsets[j], self._ybase[j])
            if ok.any():
                events[j].append(n_j[ok])
                found[j] = True

    def x_sequence(self) -> np.ndarray:
        return np.concatenate(self.x_word) if self.x_word else np.zeros(0, dtype=np.int64)


def _y_offsets(shift: MarkovShift, m: int) -> np.ndarray:
    if shift.sided == TWO_SIDED:
        return np.arange(-m, m + 1, dtype=np.int64)
    return np.arange(0, m + 1, dtype=np.int64)


def make_orbit(system: TTSystem, radii: Sequence[float], rng: np.random.Generator,
               base: tuple | None = None, use_y: bool = True, keep: bool = False) -> OrbitBuffer:
    """Start an orbit for the given radii.

    ``base=None`` samples ``(x, y)`` from the product measure and uses its own
    balls (annealed).  ``base=(x_word, y_word)`` conditions the start on those
    balls; the words must match the smallest radius, larger radii use the
    nested sub-words.
    """
    radii = [float(r) for r in radii]
    gens = [system.generations(r) for r in radii]
    mx = [g[0] for g in gens]
    my = [g[1] for g in gens]
    M = max(mx) + 1
    x_rng, yf, yb = rng.spawn(3)
    if base is None:
        u = x_rng.random(M)
        x0 = int(np.searchsorted(system.x_shift._cum_initial, u[0], side="right"))
        x_base = np.concatenate([[x0], markov_chain(u[1:], system.x_shift._cum_kernel, x0)]).astype(np.int64)
    else:
        x_base = np.asarray(base[0], dtype=np.int64)
        if len(x_base) != M or not is_admissible(system.x_shift, x_base):
            raise ValueError(f"x base word must be admissible of length {M}")
    y = None
    if use_y and system.y_shift is not None:
        mY = max(my)
        offs = _y_offsets(system.y_shift, mY)
        window = None
        if base is not None:
            yw = np.asarray(base[1], dtype=np.int64)
            if len(yw) != len(offs) or not is_admissible(system.y_shift, yw):
                raise ValueError(f"y base word must be admissible of length {len(offs)}")
            window = (int(offs[0]), yw)
        y = _TwoSidedChain(system.y_shift, yf, yb, window, len(radii))
    orbit = OrbitBuffer(system, radii, x_base, y, x_rng, mx, my, keep)
    if y is not None:
        orbit._offsets = [_y_offsets(system.y_shift, m) for m in my]
        orbit._ybase = [y.window(int(o[0]), int(o[-1])).copy() for o in orbit._offsets]
    return orbit


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def simulate_returns(system: TTSystem, r: float, horizon: int, rng: np.random.Generator,
                     base: tuple | None = None, keep_orbit: bool = False):
    """Unnormalised return times ``1 <= n <= horizon`` of F to the r-ball of its start.

    With ``keep_orbit`` the orbit buffer is returned alongside the series.
    """
    orbit = make_orbit(system, [r], rng, base, keep=keep_orbit)
    times = orbit.run(int(horizon))[0]
    series = EventSeries(times.astype(float), 1.0, len(times), float(max(horizon, 0)))
    return (series, orbit) if keep_orbit else series


def point_process_with_ball(system: TTSystem, r: float, T: float, rng: np.random.Generator,
                            base: tuple | None = None) -> tuple[EventSeries, BallPairData | None]:
    """:func:`point_process` together with the ball data of the start."""
    if T <= 0:
        return EventSeries(np.zeros(0), float("nan"), 0, max(T, 0.0)), None
    orbit = make_orbit(system, [r], rng, base)
    data = orbit.ball(0)
    horizon = int(math.ceil(T * data.n_r))
    times = orbit.run(horizon)[0] / data.n_r
    times = times[times <= T]
    return EventSeries(times, data.n_r, len(times), float(T)), data


def point_process(system: TTSystem, r: float, T: float, rng: np.random.Generator,
                  base: tuple | None = None) -> EventSeries:
    """Return times divided by ``n_r`` on ``(0, T]``."""
    return point_process_with_ball(system, r, T, rng, base)[0]


def z_extension_process(x_shift: MarkovShift, cocycle: Cocycle, r: float, T: float,
                        rng: np.random.Generator, base=None) -> EventSeries:
    """Returns of ``(x, 0)`` under ``(x, q) -> (f x, q + h(x))``, times scaled by mu(B_r)^2."""
    system = TTSystem(x_shift, None, cocycle)
    if np.all(cocycle.values == 0):
        warnings.warn("zero cocycle: the Z-extension process is the f-return process", stacklevel=2)
    if T <= 0:
        return EventSeries(np.zeros(0), float("nan"), 0, max(T, 0.0))
    orbit = make_orbit(system, [r], rng, None if base is None else (base, None), use_y=False)
    mu = cylinder_measure(x_shift, orbit.x_base)
    norm = 1.0 / (mu * mu)
    horizon = int(math.ceil(T * norm))
    times = orbit.run(horizon)[0] / norm
    times = times[times <= T]
    return EventSeries(times, norm, len(times), float(T))


class FirstReturn(NamedTuple):
    time: int | None
    censored: bool
    cap: int


def first_return(system: TTSystem, r: float, rng: np.random.Generator, cap: int | None = None,
                 base: tuple | None = None, cap_factor: float = 1000.0) -> FirstReturn:
    """First return time, censored at ``cap`` (default ``cap_factor * n_r``)."""
    orbit = make_orbit(system, [r], rng, base)
    if cap is None:
        cap = int(math.ceil(cap_factor * orbit.ball(0).n_r))
    if cap < 1:
        raise ValueError("cap must be at least 1")
    times = orbit.run(cap, first_only=True)[0]
    if len(times):
        return FirstReturn(int(times[0]), False, cap)
    return FirstReturn(None, True, cap)


def first_returns(system: TTSystem, radii: Sequence[float], rng: np.random.Generator,
                  cap_factor: float = 1000.0, base: tuple | None = None):
    """First returns for nested radii along one orbit.

    Returns a list of ``(FirstReturn, BallPairData)`` in the order of ``radii``.
    """
    orbit = make_orbit(system, radii, rng, base)
    balls = [orbit.ball(j) for j in range(len(radii))]
    caps = [int(math.ceil(cap_factor * b.n_r)) for b in balls]
    times = orbit.run(max(caps), first_only=True)
    out = []
    for t, cap, b in zip(times, caps, balls):
        if len(t) and t[0] <= cap:
            out.append((FirstReturn(int(t[0]), False, cap), b))
        else:
            out.append((FirstReturn(None, True, cap), b))
    return out


def naive_return_times(system: TTSystem, r: float, horizon: int, rng: np.random.Generator,
                       base: tuple | None = None) -> np.ndarray:
    """Reference implementation: regenerate the orbit step by step and test every n.

    Uses the same randomness layout as :func:`simulate_returns` but no shared
    code paths beyond the measure's cumulative tables.
    """
    mx, my = system.generations(r)
    xs = system.x_shift
    x_rng, yf, yb = rng.spawn(3)
    L = mx + 1
    total = horizon + L
    x = []
    if base is None:
        u = x_rng.random(L)
        x.append(int(np.searchsorted(xs._cum_initial, u[0], side="right")))
        for v in u[1:]:
            x.append(int(np.searchsorted(xs._cum_kernel[x[-1]], v, side="right")))
    else:
        x.extend(int(a) for a in base[0])
    while len(x) < total:
        v = x_rng.random()
        x.append(int(np.searchsorted(xs._cum_kernel[x[-1]], v, side="right")))
    h = np.concatenate([[0], np.cumsum(system.cocycle.values[np.array(x)])])

    ys = system.y_shift
    offs = _y_offsets(ys, my) if ys is not None else None
    y = {}
    if ys is not None:
        if base is None:
            y[0] = int(np.searchsorted(ys._cum_initial, yf.random(), side="right"))
        else:
            for o, a in zip(offs, base[1]):
                y[int(o)] = int(a)
    state = {"hi": max(y) if y else 0, "lo": min(y) if y else 0}

    def y_at(k):
        while k > state["hi"]:
            v = yf.random()
            y[state["hi"] + 1] = int(np.searchsorted(ys._cum_kernel[y[state["hi"]]], v, side="right"))
            state["hi"] += 1
        while k < state["lo"]:
            v = yb.random()
            y[state["lo"] - 1] = int(np.searchsorted(ys._cum_reverse[y[state["lo"]]], v, side="right"))
            state["lo"] -= 1
        return y[k]

    out = []
    for n in range(1, horizon + 1):
        if any(x[n + i] != x[i] for i in range(L)):
            continue
        if ys is not None:
            k = int(h[n])
            if any(y_at(k + int(o)) != y_at(int(o)) for o in offs):
                continue
        out.append(n)
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# recurrence rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateEstimate:
    slope: float
    stderr: float
    slopes: np.ndarray
    censored: np.ndarray
    used_radii: list[float]


def _rate_trial(rng, system, radii, cap_factor):
    res = first_returns(system, radii, rng, cap_factor)
    return [(fr.time, fr.censored) for fr, _ in res]


def rate_from_times(tau: np.ndarray, radii: Sequence[float]) -> RateEstimate:
    """Mean regression slope from a ``(trials, radii)`` array of first returns (NaN = censored).

    Censored points are left out of a trial's regression; a trial with fewer
    than two uncensored radii contributes no slope.
    """
    tau = np.asarray(tau, dtype=float)
    trials = len(tau)
    censored = np.isnan(tau).sum(axis=0)
    keep = censored < trials
    for r, k in zip(radii, keep):
        if not k:
            warnings.warn(f"radius {r} censored in every trial; excluded", stacklevel=3)
    xs = -np.log(np.asarray(radii, dtype=float))[keep]
    slopes = []
    for row in tau[:, keep]:
        ok = ~np.isnan(row)
        if ok.sum() >= 2:
            slopes.append(np.polyfit(xs[ok], np.log(row[ok]), 1)[0])
    slopes = np.array(slopes)
    mean = float(slopes.mean()) if len(slopes) else float("nan")
    se = float(slopes.std(ddof=1) / math.sqrt(len(slopes))) if len(slopes) > 1 else float("nan")
    return RateEstimate(mean, se, slopes, censored, [float(r) for r, k in zip(radii, keep) if k])


def recurrence_rate(system: TTSystem, radii: Sequence[float], trials: int, seed: int,
                    cap_factor: float = 1000.0, workers: int | None = None) -> RateEstimate:
    """Mean over trials of the regression slope of log tau_r against -log r."""
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 4:
        raise ValueError("need at least 4 radii")
    rows = run_trials(_rate_trial, trials, seed, workers, system=system, radii=radii, cap_factor=cap_factor)
    tau = np.array([[np.nan if c else t for t, c in row] for row in rows], dtype=float)
    return rate_from_times(tau, radii)


def recurrence_target(system: TTSystem) -> float:
    from .symbolic import dimension
    dmu = dimension(system.x_shift)
    dnu = dimension(system.y_shift)
    return min(2 * dmu, dmu + dnu)
