"""
Subshifts, Parry measures and cylinder balls
============================================

A subshift of finite type is given by a 0/1 transition matrix.  Its measure
of maximal entropy (the Parry measure) comes from the Perron eigenvectors of
that matrix, and metric balls of radius r are cylinders of generation
floor(-log r / lambda).
"""

import math

import numpy as np

from ttrecurrence import (ball_generation, cylinder_measure, dimension, full_shift, golden_mean_shift, make_shift,
                          sample_path)

# The golden-mean shift forbids the word "11".
gm = golden_mean_shift()
print("golden mean kernel:\n", gm.measure.kernel)
print("entropy", gm.measure.entropy, "vs log(phi)", math.log((1 + math.sqrt(5)) / 2))

# Cylinder measures follow u_a v_b lambda^-k for a word a ... b of length k + 1.
for word in ([0], [1], [0, 0], [0, 1, 0], [1, 1]):
    print(f"mu[{''.join(map(str, word))}] = {cylinder_measure(gm, word):.6f}")

# Balls are cylinders: with lambda = log 2, r = 0.1 gives generation 3.
print("generation of r=0.1:", ball_generation(0.1, math.log(2)))

# Any primitive matrix works; sampling a path gives a typical point.
M = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
s = make_shift(M, lyapunov=0.9)
x = sample_path(s, 30, np.random.default_rng(0))
print("typical point:", "".join(map(str, x)))

# Measures of shrinking balls along x decay like r^d with d = h / lambda.
ms = np.arange(2, 25)
logs = [math.log(cylinder_measure(s, x[: m + 1])) for m in ms]
slope = np.polyfit(-ms * s.lyapunov, logs, 1)[0]
print(f"ball-scaling slope {slope:.4f} vs dimension {dimension(s):.4f}")

# Two-sided cylinders fix coordinates -m..m, which doubles the dimension.
print("full 2-shift: one-sided d =", dimension(full_shift(2)), " two-sided d =",
      dimension(full_shift(2, sided="two-sided")))
