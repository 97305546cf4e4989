"""
The driving walk h_n
====================

An integer cocycle h assigns a step to each symbol.  Its Birkhoff sums h_n
form a Markov-modulated random walk whose variance grows like sigma^2 n.
This script computes the exact law of h_n, sigma^2, the Fourier eigenvalue
and the local limit theorem error.
"""

import math

import numpy as np

from ttrecurrence import (birkhoff_sums, exact_walk_distribution, fourier_eigenvalue, full_shift, llt_check,
                          make_cocycle, make_shift, markov_measure)

shift = full_shift(3)
c = make_cocycle(shift, [-1, 0, 1])
print("h along 2,2,0:", birkhoff_sums([2, 2, 0], c))
print("sigma^2 =", c.sigma2, " lattice span =", c.lattice_span)

# The exact law of h_n comes from a dynamic program over (symbol, level).
law = exact_walk_distribution(shift, c, 2)
print("P(h_2 = k):", dict(zip(law.levels.tolist(), np.round(law.level_law(), 4).tolist())))

# A Markov example: golden mean with a kernel that centres the cocycle (1, -2).
M = [[1, 1], [1, 0]]
gm = make_shift(M, markov_measure(M, [["1/2", "1/2"], ["1", "0"]]))
g = make_cocycle(gm, [1, -2])
print("golden-mean walk: sigma^2 =", round(g.sigma2, 6), " lattice span =", g.lattice_span)
for n in (64, 256, 1024):
    D = exact_walk_distribution(gm, g, n)
    print(f"  E[h_{n}^2]/n = {D.level_law() @ D.levels.astype(float) ** 2 / n:.6f}")

# The leading eigenvalue of P_ab exp(i u h(b)) is 1 - sigma^2 u^2 / 2 + O(u^3).
for u in (0.1, 0.01, 0.001):
    lam = fourier_eigenvalue(shift, c, u)
    print(f"u={u}: (1 - Re lambda_u)/(u^2/2) = {(1 - lam.real) / (u * u / 2):.6f}")

# Local limit theorem with cylinder events at both ends of the orbit segment.
for n in (250, 500, 1000, 2000):
    res = llt_check(shift, c, [2, 0], [0, 1], n, 0)
    print(f"n={n}: exact {res.exact_prob:.6e}  gaussian {res.gaussian_prediction:.6e}"
          f"  normalized error {res.normalized_error:.4f}")
print("relative error at n=2000:", abs(res.exact_prob / res.gaussian_prediction - 1))
print("expected gaussian at n=2, k=0:", 1 / math.sqrt(c.sigma2 * 4 * math.pi))
