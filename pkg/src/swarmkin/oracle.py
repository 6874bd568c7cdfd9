"""Closed-form equilibrium objects of the leader-following (CL) limit dynamics.

The stationary two-particle correlation is the Green's function of
``(1 - sigma_bar^2 d^2/dtheta^2)`` on the circle.  All densities are
normalized against dtheta/(2*pi), so the correlation has mean 1 and its
Fourier coefficients are exactly ``1/(1 + sigma_bar^2 n^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .torus import TWO_PI


@dataclass(frozen=True)
class CorrelationParams:
    """Limit noise scale sigma = 2*pi*gamma and derived sigma_bar = sigma/sqrt(2)."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError("sigma must be finite and > 0")

    @property
    def sigma_bar(self) -> float:
        return self.sigma / math.sqrt(2.0)

    @classmethod
    def from_gamma(cls, gamma: float) -> "CorrelationParams":
        return cls(sigma=TWO_PI * gamma)


def m_density(theta, p: CorrelationParams):
    """Stationary pair correlation M(theta), normalized to mean 1.

    ``M(theta) = (pi/(sb*(e^{2 pi/sb}-1))) * (e^{theta/sb} + e^{(2 pi-theta)/sb})``
    for theta in [0, 2*pi], with sb = sigma_bar.  Evaluated in the
    overflow-safe form with all exponents <= 0; for very small sb the value
    underflows to 0 away from the peak, which is flagged with a warning.
    """
    sb = p.sigma_bar
    t = np.remainder(np.asarray(theta, dtype=float), TWO_PI)
    num = np.exp((t - TWO_PI) / sb) + np.exp(-t / sb)
    den = -math.expm1(-TWO_PI / sb)
    out = (math.pi / sb) * num / den
    if np.any(out == 0.0):
        warnings.warn("pair correlation underflowed to zero away from the peak",
                      RuntimeWarning, stacklevel=2)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def m_fourier(n, p: CorrelationParams):
    """Fourier coefficient of the pair correlation: 1/(1 + sigma_bar^2 n^2)."""
    sb2 = p.sigma_bar**2
    n = np.asarray(n, dtype=float)
    out = 1.0 / (1.0 + sb2 * n * n)
    return float(out) if out.ndim == 0 else out


def m_profile_binned(p: CorrelationParams, n_bins: int, n_max: int = 4096) -> np.ndarray:
    """Expected pair-difference profile of M at histogram resolution.

    A difference profile built from an n_bins x n_bins pair histogram smears
    each lag b*(2*pi/n_bins) with the triangular cell kernel of half-width
    one bin; in Fourier terms the coefficients pick up sinc^2(n*delta/2).
    Returns the smeared density at the n_bins lag angles.
    """
    delta = TWO_PI / n_bins
    n = np.arange(1, n_max + 1)
    coeff = m_fourier(n, p) * np.sinc(n * delta / (2.0 * math.pi)) ** 2
    lags = np.arange(n_bins) * delta
    return 1.0 + 2.0 * (coeff[None, :] * np.cos(np.outer(lags, n))).sum(axis=1)


@dataclass
class FourierMarginal:
    """Sparse Fourier table of a k-particle stationary marginal.

    Coefficients are stored for every integer tuple (n_1, ..., n_k) with
    n_1 + ... + n_k = 0 and max|n_i| <= n_max; tuples outside the box are
    treated as 0.  Coefficients are real, permutation invariant (exactly, by
    construction) and equal to 1 at the zero tuple.
    """

    k: int
    n_max: int
    coefficients: dict

    def get(self, key) -> float:
        return self.coefficients.get(tuple(key), 0.0)

    def to_csv(self, path) -> None:
        """Dump rows "n1,...,nk,value" for every stored tuple."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for key in sorted(self.coefficients):
                vals = ",".join(str(n) for n in key)
                fh.write(f"{vals},{self.coefficients[key]!r}\n")


def _zero_sum_canonical_tuples(k: int, n_max: int):
    """Non-decreasing integer k-tuples with sum 0 and entries in [-n_max, n_max]."""
    out = []

    def rec(prefix, last, remaining, total):
        if remaining == 1:
            n = -total
            if last <= n <= n_max:
                out.append(tuple(prefix) + (n,))
            return
        # entry bounds keeping the remaining sum reachable
        lo = max(last, -total - (remaining - 1) * n_max)
        hi = min(n_max, -total // remaining)
        for n in range(lo, hi + 1):
            rec(prefix + [n], n, remaining - 1, total + n)

    rec([], -n_max, k, 0)
    return out


def marginal_recursion(k: int, p: CorrelationParams, n_max: int = 64) -> FourierMarginal:
    """Stationary k-particle marginal coefficients from the closed recursion.

    Starting from the isotropic one-particle table (delta at n = 0), level m
    is built from level m-1 by

        c_m(n) = sum_{i<j} [c_{m-1}(drop i, n_j -> n_i+n_j)
                            + c_{m-1}(n_i -> n_i+n_j, drop j)]
                 / ((sigma^2/2) sum n_i^2 + m(m-1))

    over tuples with sum 0 and max|n_i| <= n_max; lookups outside the box
    contribute 0.  Each value is computed once per sorted representative and
    copied to all permutations, so permutation invariance is exact.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    sb2 = p.sigma_bar**2
    level = {(0,): 1.0}
    if k == 1:
        return FourierMarginal(k=1, n_max=n_max, coefficients=level)
    for m in range(2, k + 1):
        nxt = {}
        for canon in _zero_sum_canonical_tuples(m, n_max):
            total = 0.0
            for i in range(m):
                for j in range(i + 1, m):
                    merged = canon[i] + canon[j]
                    drop_i = canon[:i] + canon[i + 1:j] + (merged,) + canon[j + 1:]
                    drop_j = canon[:i] + (merged,) + canon[i + 1:j] + canon[j + 1:]
                    total += level.get(tuple(sorted(drop_i)), 0.0)
                    total += level.get(tuple(sorted(drop_j)), 0.0)
            denom = 0.5 * p.sigma**2 * sum(n * n for n in canon) + m * (m - 1)
            value = total / denom
            for perm in set(permutations(canon)):
                nxt[perm] = value
        level = nxt
    return FourierMarginal(k=k, n_max=n_max, coefficients=level)


def eval_marginal(fm: FourierMarginal, thetas) -> float:
    """Synthesize the marginal density at a k-tuple of phases.

    Computes ``sum_n c(n) cos(n . theta)``; the sine parts cancel because the
    coefficient table is real and symmetric under n -> -n.  Depends only on
    phase differences since every stored tuple has zero total wavenumber.
    """
    th = np.asarray(thetas, dtype=float)
    if th.shape != (fm.k,):
        raise ValueError(f"expected {fm.k} phases")
    keys = np.array(list(fm.coefficients.keys()), dtype=float)
    vals = np.array(list(fm.coefficients.values()))
    return float(np.sum(vals * np.cos(keys @ th)))


def chaos_deficiency(f2, f1) -> dict:
    """l1 and linf norms of f2(theta1, theta2) - f1(theta1) * f1(theta2).

    ``f2`` is a density on the n x n torus grid, ``f1`` a density on the
    matching n-point circle grid (same axis order in both).
    """
    f2 = np.asarray(f2, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    if f2.ndim != 2 or f2.shape[0] != f2.shape[1]:
        raise ValueError("f2 must be a square 2D grid")
    if f1.shape != (f2.shape[0],):
        raise ValueError("f1 grid does not match f2 grid")
    diff = np.abs(f2 - np.outer(f1, f1))
    return {"l1": float(diff.mean()), "linf": float(diff.max())}
