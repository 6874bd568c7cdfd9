"""Binned empirical densities on the circle and torus, and comparison metrics.

Histograms partition [0, 2*pi) uniformly.  Finalized densities are
normalized against dtheta/(2*pi) per axis, so a uniform sample stream gives
density ~ 1 in every bin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .torus import TWO_PI


def _bin_index(values, n_bins: int):
    idx = (np.asarray(values, dtype=float) * (n_bins / TWO_PI)).astype(np.int64)
    # theta just below 2*pi can round up to n_bins in the multiply
    return np.clip(idx, 0, n_bins - 1)


def bin_centers(n_bins: int) -> np.ndarray:
    return (np.arange(n_bins) + 0.5) * (TWO_PI / n_bins)


@dataclass
class Histogram1D:
    """Counts and (after finalize) density over uniform bins on [0, 2*pi)."""

    n_bins: int = 64
    counts: np.ndarray = None
    density: np.ndarray | None = None

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if self.counts is None:
            self.counts = np.zeros(self.n_bins, dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != (self.n_bins,):
                raise ValueError("counts shape does not match n_bins")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def bin_centers(self) -> np.ndarray:
        return bin_centers(self.n_bins)

    def accumulate(self, thetas) -> "Histogram1D":
        """Add one phase or an array of canonical phases; returns self."""
        idx = _bin_index(thetas, self.n_bins)
        np.add.at(self.counts, idx, 1)
        return self

    def merge(self, other: "Histogram1D") -> "Histogram1D":
        if other.n_bins != self.n_bins:
            raise ValueError("bin grids do not match")
        self.counts += other.counts
        return self

    def finalize(self) -> "Histogram1D":
        """Compute density = counts * n_bins / total; errors on empty input."""
        total = self.total
        if total < 1:
            raise ValueError("cannot finalize an empty histogram")
        self.density = self.counts * (self.n_bins / total)
        return self


@dataclass
class Histogram2D:
    """Counts and density over the uniform n_bins x n_bins grid on [0, 2*pi)^2."""

    n_bins: int = 64
    counts: np.ndarray = None
    density: np.ndarray | None = None

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if self.counts is None:
            self.counts = np.zeros((self.n_bins, self.n_bins), dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != (self.n_bins, self.n_bins):
                raise ValueError("counts shape does not match n_bins")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def bin_centers(self) -> np.ndarray:
        return bin_centers(self.n_bins)

    def accumulate(self, theta1, theta2) -> "Histogram2D":
        """Add one pair or arrays of canonical phase pairs; returns self."""
        i1 = _bin_index(theta1, self.n_bins)
        i2 = _bin_index(theta2, self.n_bins)
        np.add.at(self.counts, (i1, i2), 1)
        return self

    def merge(self, other: "Histogram2D") -> "Histogram2D":
        if other.n_bins != self.n_bins:
            raise ValueError("bin grids do not match")
        self.counts += other.counts
        return self

    def finalize(self) -> "Histogram2D":
        total = self.total
        if total < 1:
            raise ValueError("cannot finalize an empty histogram")
        self.density = self.counts * (self.n_bins**2 / total)
        return self


def compare(hist, reference) -> dict:
    """Distance metrics between a finalized histogram and a reference density.

    ``reference`` must be the reference density sampled at this histogram's
    bin centers (same shape as the density array).  Returns ``l1`` (integral
    of |e - r| against the bin measure), ``linf`` (max |e - r|) and ``chi2``
    (Pearson statistic of raw counts against expected counts).
    """
    if hist.density is None:
        raise ValueError("histogram must be finalized before comparison")
    ref = np.asarray(reference, dtype=float)
    if ref.shape != hist.density.shape:
        raise ValueError("reference grid does not match histogram grid")
    diff = np.abs(hist.density - ref)
    measure = 1.0 / diff.size
    l1 = float(diff.sum() * measure)
    linf = float(diff.max())
    # expected counts from the reference, renormalized to the sample size
    total_ref = ref.sum()
    expected = hist.total * (ref / total_ref) if total_ref > 0 else np.zeros_like(ref)
    counts = hist.counts.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (counts - expected) ** 2 / expected
    terms = np.where((expected == 0) & (counts == 0), 0.0, terms)
    chi2 = float(terms.sum())
    return {"l1": l1, "linf": linf, "chi2": chi2}


def pair_difference_profile(hist: Histogram2D) -> Histogram1D:
    """Collapse a 2D pair histogram onto the difference coordinate.

    Lag bin b collects all cells (i, j) with (i - j) mod n_bins = b, i.e. the
    empirical law of (theta_1 - theta_2) mod 2*pi at the histogram's
    resolution.  The lag-b cell centers sit exactly at b * (2*pi/n_bins), so
    a reference profile for this object should be evaluated at those lags
    (smeared by the triangular cell kernel; see oracle.m_profile_binned).
    """
    b = hist.n_bins
    out = np.zeros(b, dtype=np.int64)
    i = np.arange(b)
    for lag in range(b):
        out[lag] = hist.counts[(i + lag) % b, i].sum()
    prof = Histogram1D(n_bins=b, counts=out)
    if hist.density is not None:
        prof.finalize()
    return prof


def profile_lags(n_bins: int) -> np.ndarray:
    """Lag angles b * (2*pi/n_bins) indexing a pair difference profile."""
    return np.arange(n_bins) * (TWO_PI / n_bins)


def circular_std(hist: Histogram1D) -> float:
    """Circular standard deviation sqrt(-2 log R) of a binned angular law.

    R is the modulus of the first trigonometric moment of the binned density
    (bin centers for an ordinary histogram, exact lags for a difference
    profile are equivalent up to a global rotation, which R ignores).
    """
    if hist.total < 1:
        raise ValueError("empty histogram")
    w = hist.counts / hist.total
    angles = hist.bin_centers
    r = abs(np.sum(w * np.exp(1j * angles)))
    if r <= 0.0:
        return float("inf")
    return float(np.sqrt(-2.0 * np.log(r)))
