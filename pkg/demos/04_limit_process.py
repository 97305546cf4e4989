"""
Brownian local time and the limit process Z_{alpha,beta}
========================================================

Z_{alpha,beta} places Poisson clocks of rate sqrt(alpha) on the local time
of a Brownian motion at the origin and at a Poisson cloud of atoms with
intensity beta/sqrt(alpha).  The standard Poisson process is the (0, 1) case.
"""

import math

import numpy as np

from ttrecurrence import ZParams, local_time, sample_brownian, sample_first_return_limit, sample_Z
from ttrecurrence.limit import BRIDGE, local_time_series

rng = np.random.default_rng(3)

# Occupation-density local time integrates to elapsed time.
path = sample_brownian(1.0, 1.0, 20000, rng)
field = local_time(path, 20 * math.sqrt(path.step))
print("int L_1(x) dx =", field.integral()[-1])

# The bridge estimator has exact single-level marginals on any grid.
ell = [local_time_series(sample_brownian(1.0, 1.0, 8, rng), 0.0, BRIDGE, rng=rng)[-1] for _ in range(20000)]
print(f"E L_1(0) ~ {np.mean(ell):.4f} vs sqrt(2/pi) = {math.sqrt(2 / math.pi):.4f}")

# Samples of Z for the four regimes.
for a, b in ((0, 1), (1, 0), (1, 1), (0.5, 1)):
    counts = [sample_Z(ZParams(a, b), 1.0, rng, steps=64).raw_count for _ in range(4000)]
    target = b + math.sqrt(a) * math.sqrt(2 / math.pi) if a else 1.0
    print(f"(alpha,beta)=({a},{b}): E Z(1) ~ {np.mean(counts):.3f} (expected {target:.3f})")

# The Z_{1,1} sample records which atom each event came from.
s = sample_Z(ZParams(1, 1), 2.0, rng, steps=256, return_atoms=True)
print("atoms:", np.round(s.atoms, 3), " events per atom:", s.atom_counts)

# First return limit law sigma^2 E^2 / N^2: heavy tailed with infinite mean.
x = sample_first_return_limit(1.0, rng, 10**6)
print("quantiles 10/50/90%:", np.round(np.quantile(x, [0.1, 0.5, 0.9]), 4))
