"""Compiled inner loops for the pair-interaction dynamics.

Each kernel applies a pre-drawn batch of interactions to the phase array in
place.  Randomness (pair codes, scaled noise, acceptance uniforms) is drawn
by the caller from a numpy Generator, so reproducibility is owned entirely
by the calling stream.
"""

import math

import numba
import numpy as np

TWO_PI = 2.0 * math.pi

# squared threshold on |v_i + v_j| for the antipodal (skipped) collision
_DEG_SQ = 1e-24


@numba.njit(cache=True, nogil=True)
def _wrap(x):
    r = x % TWO_PI
    if r >= TWO_PI:
        r = 0.0
    return r


@numba.njit(cache=True, nogil=True)
def _decode_pair(code, n):
    """Ordered pair (a, b), a != b, from a code in [0, n*(n-1))."""
    a = code // (n - 1)
    r = code - a * (n - 1)
    b = r + 1 if r >= a else r
    return a, b


@numba.njit(cache=True, nogil=True)
def _periodized_gaussian(x, sigma, period, min_terms):
    t = x % period
    if t > 0.5 * period:
        t -= period
    inv = 1.0 / (2.0 * sigma * sigma)
    total = math.exp(-t * t * inv)
    k = 1
    while k <= 512:
        term = math.exp(-((t + k * period) ** 2) * inv) \
            + math.exp(-((t - k * period) ** 2) * inv)
        total += term
        if k >= min_terms and term <= 1e-15 * total:
            break
        k += 1
    return total


@numba.njit(cache=True, nogil=True)
def bdg_chunk(phases, codes, w1, w2):
    """Midpoint collisions: both pair members jump to midpoint + own noise."""
    n = phases.shape[0]
    for t in range(codes.shape[0]):
        a, b = _decode_pair(codes[t], n)
        x = math.cos(phases[a]) + math.cos(phases[b])
        y = math.sin(phases[a]) + math.sin(phases[b])
        if x * x + y * y < _DEG_SQ:
            continue
        hat = math.atan2(y, x)
        phases[a] = _wrap(hat + w1[t])
        phases[b] = _wrap(hat + w2[t])


@numba.njit(cache=True, nogil=True)
def biased_bdg_chunk(phases, codes, w1, w2, uniforms, tau, h_peak, min_terms):
    """Midpoint collisions gated by the half-angle acceptance law.

    ``h_peak`` is the unnormalized acceptance numerator at offset 0, so a
    draw u accepts when u * h_peak < h(offset).  Rejected attempts leave the
    state unchanged but still consume their randomness.
    """
    n = phases.shape[0]
    half_pi = 0.5 * math.pi
    for t in range(codes.shape[0]):
        a, b = _decode_pair(codes[t], n)
        x = math.cos(phases[a]) + math.cos(phases[b])
        y = math.sin(phases[a]) + math.sin(phases[b])
        if x * x + y * y < _DEG_SQ:
            continue
        off = (0.5 * (phases[a] - phases[b]) + half_pi) % math.pi - half_pi
        if uniforms[t] * h_peak >= _periodized_gaussian(off, tau, math.pi, min_terms):
            continue
        hat = math.atan2(y, x)
        phases[a] = _wrap(hat + w1[t])
        phases[b] = _wrap(hat + w2[t])


@numba.njit(cache=True, nogil=True)
def cl_chunk(phases, codes, w):
    """Leader-following jumps: the first of the ordered pair adopts the
    second's phase plus noise; the leader never moves."""
    n = phases.shape[0]
    for t in range(codes.shape[0]):
        a, b = _decode_pair(codes[t], n)
        phases[a] = _wrap(phases[b] + w[t])
