"""
Returns of the skew product
===========================

F(x, y) = (f x, g^{h(x)} y) moves y by the walk h_n.  A return to the r-ball
needs the x-cylinder to recur and the y-cylinder to recur at the current walk
level.  Here we detect returns, look at normalised return processes, and
estimate the recurrence rate min(2 d_mu, d_mu + d_nu).
"""

import math

import numpy as np

from ttrecurrence import (first_return, full_shift, point_process, recurrence_rate, simulate_returns, tt_system,
                          z_extension_process, zeta_prefactor)
from ttrecurrence.dynamics import naive_return_times, recurrence_target

log2 = math.log(2)
system = tt_system(full_shift(3, log2), full_shift(2, log2, sided="two-sided"), [-1, 0, 1])
r = 2.0**-3

# Return times from the streaming matcher agree with a naive rescan.
fast = simulate_returns(system, r, 20000, np.random.default_rng(1)).times.astype(int)
slow = naive_return_times(system, r, 20000, np.random.default_rng(1))
print("first returns:", fast[:8], " agrees with naive scan:", np.array_equal(fast, slow))

# Normalised by n_r = 1/max(mu^2, mu nu), returns form a point process on (0, T].
pp = point_process(system, r, 5.0, np.random.default_rng(2))
print("normalised event times:", np.round(pp.times, 3), " n_r =", pp.normalization)

# The Z-extension only counts returns at walk level 0.
z = z_extension_process(system.x_shift, system.cocycle, r, 5.0, np.random.default_rng(2))
print("Z-extension events:", np.round(z.times, 3))

# First return times, censored at 1000 n_r by default.
print("tau_r samples:", [first_return(system, r, np.random.default_rng(s)).time for s in range(8)])

# Recurrence rate: slope of log tau_r against -log r.
radii = [2.0**-k for k in range(2, 6)]
est = recurrence_rate(system, radii, trials=100, seed=7)
print(f"recurrence slope {est.slope:.3f} +- {est.stderr:.3f}, target {recurrence_target(system):.3f}")

# When the two Lyapunov exponents differ the cylinder generations drift apart.
print("zeta_r for lambda_X=1, lambda_Y=2, r=e^-3:", zeta_prefactor(math.exp(-3) * 0.999, 1.0, 2.0, 1.0, 1.0))
