"""
Moment formulas
===============

Poisson moments are sums of Stirling numbers.  The joint increment moments of
Z_{alpha,beta} expand over colorings of marked points by atoms, each weighted
by alpha^((q-q0)/2) beta^q0 and an expected local-time product.  We compare
the formula with direct simulation of Z.
"""

import math

import numpy as np

from ttrecurrence import MCParams, MomentSpec, ZParams, enumerate_surjections, limit_moment, poisson_moment, stirling2
from ttrecurrence.moments import formula_terms, simulated_moment

print("S(4, 2) =", stirling2(4, 2), "  E[P(1)^3] =", poisson_moment(1.0, 3))
print("surjections {1,2,3} -> {0,1}:", enumerate_surjections(3, 1))

# Terms of E[Z(1)] group into the origin atom and one Poisson atom.
spec = MomentSpec((1.0,), (1,))
print("terms of E Z(1) for (1,1):", formula_terms(spec, ZParams(1, 1)))

# The (0, 1) case is exact.
spec = MomentSpec((0.5, 1.0), (2, 1))
print("standard Poisson moment:", limit_moment(ZParams(0, 1), spec).value)

# Formula (shared Brownian paths) against direct simulation of Z.
for a, b in ((1, 0), (1, 1), (0.5, 1)):
    params = ZParams(a, b)
    f = limit_moment(params, spec, MCParams(paths=3000, steps=64), np.random.default_rng(1))
    s = simulated_moment(params, spec, 3000, np.random.default_rng(2), steps=64)
    z = (f.value - s.value) / math.hypot(f.stderr, s.stderr)
    print(f"({a},{b}): formula {f.value:.4f} +- {f.stderr:.4f}, simulation {s.value:.4f} +- {s.stderr:.4f}"
          f"  ({z:+.2f} SE)")
