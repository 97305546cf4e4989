"""Compiled inner loops.

Randomness is supplied by the caller, either as uniforms drawn from a numpy
``Generator`` or as a seed drawn from one, so results depend only on the
caller's seed.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def markov_chain(u, cum, state):
    """Successors of ``state`` driven by uniforms ``u`` (inverse CDF per row)."""
    n = u.shape[0]
    A = cum.shape[1]
    out = np.empty(n, dtype=np.int64)
    s = state
    for i in range(n):
        row = cum[s]
        x = u[i]
        t = 0
        while t < A - 1 and x >= row[t]:
            t += 1
        out[i] = t
        s = t
    return out


def kmp_failure(pattern):
    """Failure function: ``fail[q]`` is the longest proper border of ``pattern[:q]``."""
    M = len(pattern)
    fail = np.zeros(M + 1, dtype=np.int64)
    k = 0
    for q in range(1, M):
        while k > 0 and pattern[q] != pattern[k]:
            k = fail[k]
        if pattern[q] == pattern[k]:
            k += 1
        fail[q + 1] = k
    return fail


def accept_masks(fail, lengths):
    """Bitmask per KMP state of the prefix lengths that end at the current position."""
    M = len(fail) - 1
    acc = np.zeros(M + 1, dtype=np.int64)
    for q in range(1, M + 1):
        bits = 0
        for b, ell in enumerate(lengths):
            if ell == q:
                bits |= 1 << b
        acc[q] = bits | acc[fail[q]]
    return acc


@njit(cache=True)
def scan_stream(symbols, pos0, walk, q, pattern, fail, accept, lengths, values, ring,
                horizon, out_n, out_level, out_radius):
    """Stream ``symbols`` (stream positions ``pos0..``) through the KMP automaton.

    ``walk`` is h at position ``pos0``.  Every occurrence of a tracked prefix
    of ``pattern`` starting at time ``1 <= n <= horizon`` is written as
    ``(n, h_n, radius index)``.  Returns ``(walk, q, count, wmin, wmax)``.
    """
    M = pattern.shape[0]
    R = ring.shape[0]
    nrad = lengths.shape[0]
    count = 0
    wmin = walk
    wmax = walk
    for k in range(symbols.shape[0]):
        s = symbols[k]
        j = pos0 + k
        ring[j % R] = walk
        walk += values[s]
        if walk < wmin:
            wmin = walk
        elif walk > wmax:
            wmax = walk
        if q == M:
            q = fail[q]
        while q > 0 and pattern[q] != s:
            q = fail[q]
        if pattern[q] == s:
            q += 1
        mask = accept[q]
        if mask != 0:
            for b in range(nrad):
                if (mask >> b) & 1:
                    n = j - lengths[b] + 1
                    if n >= 1 and n <= horizon:
                        out_n[count] = n
                        out_level[count] = ring[n % R]
                        out_radius[count] = b
                        count += 1
    return walk, q, count, wmin, wmax


@njit(cache=True)
def _bridge_increment(a, b, x, dt, sigma2, u):
    # P(L^x > l | a, b) = exp(-((|a-x| + |b-x| + sigma^2 l)^2 - (b-a)^2) / (2 sigma^2 dt))
    c = abs(a - x) + abs(b - x)
    d2 = (b - a) * (b - a)
    root = np.sqrt(d2 - 2.0 * sigma2 * dt * np.log(u))
    inc = (root - c) / sigma2
    if inc > 0.0:
        return inc
    return 0.0


@njit(cache=True)
def bridge_local_time(values, dts, sigma2, levels, record, seed):
    """Local time of a Brownian path at fixed ``levels``, sampled exactly at grid times.

    Given the grid values, the pieces of the path are independent Brownian
    bridges, and the local time a bridge accrues at a fixed level has a closed
    form law; one uniform per (level, interval) samples it by inversion.
    Returns an array ``(len(record), len(levels))`` of cumulative local time at
    grid indices ``record`` (which must be increasing).
    """
    np.random.seed(seed)
    n = dts.shape[0]
    nl = levels.shape[0]
    nr = record.shape[0]
    out = np.zeros((nr, nl))
    for li in range(nl):
        x = levels[li]
        acc = 0.0
        ri = 0
        while ri < nr and record[ri] == 0:
            out[ri, li] = 0.0
            ri += 1
        for i in range(n):
            a = values[i]
            b = values[i + 1]
            u = np.random.random()
            lo = a if a < b else b
            hi = b if a < b else a
            if x < lo or x > hi:
                dist = lo - x if x < lo else x - hi
                # hitting probability exp(-2 dist (dist + |b-a|)/(sigma^2 dt)) below 1e-20
                if 2.0 * dist * (dist + hi - lo) > 92.0 * sigma2 * dts[i]:
                    if ri < nr and record[ri] == i + 1:
                        out[ri, li] = acc
                        ri += 1
                    continue
            if u > 0.0:
                acc += _bridge_increment(a, b, x, dts[i], sigma2, u)
            if ri < nr and record[ri] == i + 1:
                out[ri, li] = acc
                ri += 1
    return out


@njit(cache=True)
def occupation_local_time(values, dts, lo, eps, nlev, record):
    """Binned occupation density with trapezoidal time weights.

    Bin ``k`` is ``[lo + k*eps, lo + (k+1)*eps)``.  Returns cumulative
    occupation/eps at the grid indices in ``record``.
    """
    n = dts.shape[0]
    nr = record.shape[0]
    out = np.zeros((nr, nlev))
    cur = np.zeros(nlev)
    ri = 0
    while ri < nr and record[ri] == 0:
        ri += 1
    for i in range(n):
        half = 0.5 * dts[i] / eps
        k0 = int(np.floor((values[i] - lo) / eps))
        k1 = int(np.floor((values[i + 1] - lo) / eps))
        if 0 <= k0 < nlev:
            cur[k0] += half
        if 0 <= k1 < nlev:
            cur[k1] += half
        if ri < nr and record[ri] == i + 1:
            out[ri, :] = cur
            ri += 1
    return out
