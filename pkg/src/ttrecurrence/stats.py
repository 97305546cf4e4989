"""Comparison statistics: KS distances, jackknife errors, moment comparison rows."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps


def ks_distance(sample_a, sample_b_or_cdf) -> float:
    """Sup distance between the empirical CDF of ``sample_a`` and either a second
    sample's empirical CDF or a callable CDF."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    if len(a) == 0:
        raise ValueError("empty sample")
    if callable(sample_b_or_cdf):
        return float(sps.kstest(a, sample_b_or_cdf).statistic)
    b = np.sort(np.asarray(sample_b_or_cdf, dtype=float))
    if len(b) == 0:
        raise ValueError("empty sample")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / len(a)
    fb = np.searchsorted(b, pts, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def ks_critical(n: int, m: int | None = None, level: float = 0.01) -> float:
    """Asymptotic two-sample (or one-sample if ``m`` is None) KS critical value."""
    c = math.sqrt(-0.5 * math.log(level / 2))
    if m is None:
        return c / math.sqrt(n)
    return c * math.sqrt((n + m) / (n * m))


def jackknife(data: np.ndarray, fn: Callable[[np.ndarray], float], groups: int = 100) -> tuple[float, float]:
    """Estimate ``fn(data)`` and its delete-a-group jackknife standard error.

    ``data`` has one row per independent sample.
    """
    data = np.asarray(data)
    n = len(data)
    est = float(fn(data))
    g = min(groups, n)
    if g < 2:
        return est, float("nan")
    labels = np.arange(n) % g
    loo = np.array([fn(data[labels != i]) for i in range(g)])
    se = math.sqrt((g - 1) / g * np.sum((loo - loo.mean()) ** 2))
    return est, se


@dataclass
class ComparisonRow:
    """One statistic checked against its theoretical value.

    ``rule`` is ``"abs"`` (|emp - theo| <= tol), ``"rel"`` (relative), ``"se"``
    (within ``tol`` combined standard errors), ``"max"`` (emp <= tol) or
    ``"true"`` (emp is 1 for a boolean check).
    """

    name: str
    empirical: float
    theoretical: float | None
    stderr: float | None
    tolerance: float
    rule: str
    target: str = ""
    ks: float | None = None
    hard: bool = True
    verdict: str = ""

    def __post_init__(self):
        if not self.verdict:
            self.verdict = "PASS" if self._passes() else "FAIL"

    def _passes(self) -> bool:
        e, t, tol = self.empirical, self.theoretical, self.tolerance
        if e is None or (isinstance(e, float) and math.isnan(e)):
            return False
        if self.rule == "abs":
            return abs(e - t) <= tol
        if self.rule == "rel":
            return abs(e - t) <= tol * abs(t)
        if self.rule == "se":
            se = self.stderr if self.stderr is not None else 0.0
            return abs(e - t) <= tol * se if se > 0 else e == t
        if self.rule == "max":
            return e <= tol
        if self.rule == "true":
            return bool(e)
        raise ValueError(f"unknown rule {self.rule!r}")

    def as_dict(self) -> dict:
        return asdict(self)


def moment_compare(counts: np.ndarray, exponents: Sequence[int], theoretical: float,
                   theoretical_se: float = 0.0, name: str = "moment", se_mult: float = 3.0,
                   target: str = "") -> ComparisonRow:
    """Empirical joint increment moment of interval ``counts`` (samples x K) against a target.

    The empirical standard error is a delete-a-group jackknife.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 1:
        counts = counts[:, None]
    if len(counts) < 100:
        raise ValueError("moment_compare needs at least 100 samples")
    e = np.asarray(exponents, dtype=float)
    vals = np.prod(counts ** e[None, :], axis=1)
    est, se = jackknife(vals, np.mean)
    combined = math.hypot(se, theoretical_se)
    return ComparisonRow(name, est, theoretical, combined, se_mult, "se", target)
