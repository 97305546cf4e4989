"""Brownian paths, local time, and the limiting point process Z_{alpha,beta}.

Two local-time estimators are offered.  ``"occupation"`` is the binned
occupation density (width ``eps``).  ``"bridge"`` samples, for each grid
interval and level, the local time of the Brownian bridge between the grid
values from its closed-form law; single-level marginals at grid times are then
exact whatever the step size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import bridge_local_time, occupation_local_time
from .dynamics import EventSeries

OCCUPATION = "occupation"
BRIDGE = "bridge"


@dataclass(frozen=True)
class BrownianPath:
    times: np.ndarray
    values: np.ndarray
    sigma2: float

    @property
    def step(self) -> float:
        return float(np.max(np.diff(self.times))) if len(self.times) > 1 else 0.0

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t - 1e-12 * max(1.0, abs(t))))
        if i >= len(self.times) or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the path grid")
        return i


def time_grid(T: float, steps: int, include=()) -> np.ndarray:
    grid = np.linspace(0.0, T, steps + 1)
    extra = [float(t) for t in include if 0 < t < T]
    if not extra:
        return grid
    grid = np.union1d(grid, extra)
    # merge points that coincide up to rounding
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * max(T, 1.0)])
    return grid[keep]


def sample_brownian(sigma: float, T: float, steps: int, rng: np.random.Generator, include=()) -> BrownianPath:
    """Brownian motion with variance rate sigma^2 on a grid of ``steps`` equal steps
    (plus the times in ``include``)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if sigma < 0 or T <= 0:
        raise ValueError("need sigma >= 0 and T > 0")
    times = time_grid(T, steps, include)
    dt = np.diff(times)
    inc = rng.standard_normal(len(dt)) * np.sqrt(dt) * sigma
    values = np.concatenate([[0.0], np.cumsum(inc)])
    return BrownianPath(times, values, sigma * sigma)


@dataclass(frozen=True)
class LocalTimeField:
    """``values[i, k]`` is the local time at level ``levels[k]`` up to ``times[i]``."""

    levels: np.ndarray
    times: np.ndarray
    values: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.levels[1] - self.levels[0]) if len(self.levels) > 1 else float("nan")

    def at(self, x: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.levels - x)))
        return self.values[:, k]

    def integral(self) -> np.ndarray:
        """Riemann sum over levels of L_t, for each recorded time."""
        return self.values.sum(axis=1) * self.spacing


def level_grid(path: BrownianPath, eps: float, margin: float = 0.0, offset: float = 0.0) -> np.ndarray:
    """Levels ``offset + k*eps`` covering the path range widened by ``margin``."""
    lo = path.values.min() - margin
    hi = path.values.max() + margin
    k0 = math.floor((lo - offset) / eps) - 1
    k1 = math.ceil((hi - offset) / eps) + 1
    return offset + eps * np.arange(k0, k1 + 1)


def _record_indices(path: BrownianPath, record_times) -> np.ndarray:
    if record_times is None:
        return np.array([0, len(path.times) - 1], dtype=np.int64)
    return np.array([path.index_of(t) for t in record_times], dtype=np.int64)


def bridge_margin(path: BrownianPath) -> float:
    return 7.0 * math.sqrt(path.sigma2 * max(path.step, 0.0))


def local_time(path: BrownianPath, eps: float, method: str = OCCUPATION, rng: np.random.Generator | None = None,
               record_times=None, levels=None) -> LocalTimeField:
    """Local time field of ``path`` on a level grid of spacing ``eps``.

    The occupation estimate uses bins ``[x - eps/2, x + eps/2)`` centred on
    the levels.  The bridge method needs ``rng``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    res = math.sqrt(path.sigma2 * path.step)
    record = _record_indices(path, record_times)
    dts = np.diff(path.times)
    if method == OCCUPATION:
        if eps < res / 10:
            warnings.warn(f"eps={eps:.3g} is below the path resolution/10 ({res / 10:.3g}); undersmoothed",
                          stacklevel=2)
        if levels is None:
            levels = level_grid(path, eps)
        levels = np.asarray(levels, dtype=float)
        if len(levels) > 1 and not np.allclose(np.diff(levels), eps):
            raise ValueError("occupation method needs levels spaced by eps")
        vals = occupation_local_time(path.values, dts, float(levels[0]) - eps / 2, eps, len(levels), record)
    elif method == BRIDGE:
        if rng is None:
            raise ValueError("bridge method needs an rng")
        if levels is None:
            levels = level_grid(path, eps, bridge_margin(path))
        levels = np.asarray(levels, dtype=float)
        if path.sigma2 == 0:
            vals = np.zeros((len(record), len(levels)))
        else:
            seed = int(rng.integers(2**62))
            vals = bridge_local_time(path.values, dts, path.sigma2, levels, record, seed)
    else:
        raise ValueError(f"unknown local time method {method!r}")
    return LocalTimeField(levels, path.times[record], vals)


def local_time_series(path: BrownianPath, s: float, method: str = BRIDGE, eps: float | None = None,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """``L_t(s)`` at every grid time, for one level ``s``."""
    record = np.arange(len(path.times), dtype=np.int64)
    dts = np.diff(path.times)
    if method == BRIDGE:
        if path.sigma2 == 0:
            return np.zeros(len(path.times))
        seed = int(rng.integers(2**62))
        return bridge_local_time(path.values, dts, path.sigma2, np.array([float(s)]), record, seed)[:, 0]
    if eps is None:
        raise ValueError("occupation method needs eps")
    return occupation_local_time(path.values, dts, float(s) - eps / 2, eps, 1, record)[:, 0]


# ---------------------------------------------------------------------------
# Z_{alpha, beta}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZParams:
    alpha: float
    beta: float
    sigma: float = 1.0

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not (0 <= a <= 1 and 0 <= b <= 1):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if abs(max(a, b) - 1) > 1e-12:
            raise ValueError("max(alpha, beta) must equal 1")
        if a == 0 and b != 1:
            raise ValueError("alpha = 0 requires beta = 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def standard_poisson(self) -> bool:
        return self.alpha == 0

    @property
    def atom_rate(self) -> float:
        """Intensity sqrt(alpha) of the Poisson clocks read through local time."""
        return math.sqrt(self.alpha)

    @property
    def spatial_rate(self) -> float:
        """Intensity beta/sqrt(alpha) of the spatial Poisson cloud."""
        return self.beta / math.sqrt(self.alpha)


@dataclass(frozen=True)
class ZSample:
    events: EventSeries
    atoms: np.ndarray
    atom_counts: np.ndarray


def _crossing_times(times: np.ndarray, ell: np.ndarray, marks: np.ndarray) -> np.ndarray:
    # first t with L_t >= mark, linear interpolation inside the grid step
    i = np.searchsorted(ell, marks, side="left")
    i = np.clip(i, 1, len(ell) - 1)
    l0 = ell[i - 1]
    l1 = ell[i]
    frac = np.where(l1 > l0, (marks - l0) / np.where(l1 > l0, l1 - l0, 1.0), 1.0)
    return times[i - 1] + np.clip(frac, 0.0, 1.0) * (times[i] - times[i - 1])


def sample_Z(params: ZParams, T: float, rng: np.random.Generator, steps: int | None = None,
             construction: str = "crossing", method: str = BRIDGE, eps: float | None = None,
             include=(), return_atoms: bool = False):
    """One realisation of Z_{alpha,beta} on ``(0, T]``.

    ``steps`` defaults to 10^5 per unit time.  ``construction`` is
    ``"crossing"`` (Poisson marks on the local-time axis) or ``"thinning"``
    (Poisson total, then uniform marks); both give the same law.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if params.standard_poisson:
        k = rng.poisson(T)
        times = np.sort(rng.uniform(0.0, T, k))
        series = EventSeries(times, 1.0, int(k), float(T))
        return ZSample(series, np.zeros(0), np.zeros(0, dtype=np.int64)) if return_atoms else series
    if steps is None:
        steps = int(math.ceil(1e5 * T))
    path = sample_brownian(params.sigma, T, steps, rng, include)
    if eps is None:
        eps = 10.0 * math.sqrt(path.sigma2 * path.step)
    margin = eps if method == OCCUPATION else bridge_margin(path)
    lo = path.values.min() - margin
    hi = path.values.max() + margin
    n_atoms = rng.poisson(params.spatial_rate * (hi - lo)) if params.beta > 0 else 0
    atoms = np.concatenate([[0.0], rng.uniform(lo, hi, n_atoms)])
    a = params.atom_rate
    all_times = []
    counts = np.zeros(len(atoms), dtype=np.int64)
    for j, s in enumerate(atoms):
        ell = local_time_series(path, s, method, eps, rng)
        total = ell[-1]
        if construction == "crossing":
            marks = []
            acc = rng.exponential(1.0 / a)
            while acc <= total:
                marks.append(acc)
                acc += rng.exponential(1.0 / a)
            marks = np.array(marks)
        elif construction == "thinning":
            marks = np.sort(rng.uniform(0.0, total, rng.poisson(a * total)))
        else:
            raise ValueError(f"unknown construction {construction!r}")
        counts[j] = len(marks)
        if len(marks):
            all_times.append(_crossing_times(path.times, ell, marks))
    times = np.sort(np.concatenate(all_times)) if all_times else np.zeros(0)
    times = times[times > 0]
    series = EventSeries(times, 1.0, len(times), float(T))
    return ZSample(series, atoms, counts) if return_atoms else series


def sample_first_return_limit(sigma: float, rng: np.random.Generator, size: int | None = None):
    """Draws of sigma^2 E^2 / N^2 with E ~ Exp(1) and N ~ N(0, 1) independent."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = 1 if size is None else size
    E = rng.exponential(1.0, n)
    N = rng.standard_normal(n)
    while np.any(N == 0):
        bad = N == 0
        N[bad] = rng.standard_normal(int(bad.sum()))
    out = sigma * sigma * E * E / (N * N)
    return float(out[0]) if size is None else out


def first_passage_local_time(sigma: float, rng: np.random.Generator, T_max: float, steps: int) -> float:
    """``inf{t : L_t(0) >= E}`` from a simulated path, ``inf`` if beyond ``T_max``."""
    E = rng.exponential(1.0)
    # small crossing times are common (P(tau <= t) ~ sqrt(t)); a geometric
    # ladder keeps the interpolation error relative to t
    ladder = np.geomspace(1e-9 * T_max, T_max, max(steps // 4, 2))
    path = sample_brownian(sigma, T_max, steps, rng, include=ladder)
    ell = local_time_series(path, 0.0, BRIDGE, rng=rng)
    if ell[-1] < E:
        return math.inf
    return float(_crossing_times(path.times, ell, np.array([E]))[0])
