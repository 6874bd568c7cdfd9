"""Circle arithmetic and the rescaled noise/bias laws shared by all dynamics.

Angles are phases of unit vectors ``v = exp(i*theta)`` and live on
``[0, 2*pi)``.  All densities in this package are normalized against the
measure ``dtheta/(2*pi)``, so the uniform density is identically 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: Threshold on |v_i + v_j| below which a pair is treated as antipodal and
#: the midpoint is undefined.
DEGENERACY_TOL = 1e-12


def wrap(x):
    """Reduce an angle in radians to its canonical representative in [0, 2*pi).

    Works on scalars and arrays.  Non-finite input raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("angle must be finite")
    out = np.mod(arr, TWO_PI)
    # x % (2*pi) rounds up to exactly 2*pi for tiny negative x
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


def pair_midpoint(theta_i: float, theta_j: float):
    """Phase of e^{i*theta_i} + e^{i*theta_j}, or ``None`` for antipodal inputs.

    The midpoint is always obtained from the two-component unit-vector sum,
    never by averaging the phases themselves, so the 2*pi wrap point is not
    special.  ``None`` is a distinguished "degenerate" return, not a failure:
    antipodal pairs have no well defined average direction.
    """
    x = math.cos(theta_i) + math.cos(theta_j)
    y = math.sin(theta_i) + math.sin(theta_j)
    if x * x + y * y < DEGENERACY_TOL**2:
        return None
    return wrap(math.atan2(y, x))


def half_angle_offset(theta_i: float, theta_j: float):
    """Signed angle from the pair midpoint to v_i, in (-pi/2, pi/2].

    This is the phase of ``conj(v_hat) * v_i``, i.e. the representative of
    ``(theta_i - theta_j)/2`` modulo pi that lies in (-pi/2, pi/2].  Returns
    ``None`` for antipodal inputs, where the midpoint itself is undefined.
    """
    x = math.cos(theta_i) + math.cos(theta_j)
    y = math.sin(theta_i) + math.sin(theta_j)
    if x * x + y * y < DEGENERACY_TOL**2:
        return None
    off = math.remainder(0.5 * (theta_i - theta_j), math.pi)
    if off <= -0.5 * math.pi:
        off += math.pi
    return off


def _periodized_gaussian(theta, sigma: float, period: float, min_terms: int,
                         rel_tol: float = 1e-15, max_terms: int = 512):
    """sum_k exp(-(theta + k*period)^2 / (2 sigma^2)), truncated adaptively.

    At least ``min_terms`` translates are summed on each side; more are added
    until the last pair contributes less than ``rel_tol`` of the running sum.
    """
    t = np.remainder(np.asarray(theta, dtype=float), period)
    t = np.where(t > 0.5 * period, t - period, t)
    inv = 1.0 / (2.0 * sigma * sigma)
    total = np.exp(-t * t * inv)
    k = 1
    while k <= max_terms:
        term = np.exp(-((t + k * period) ** 2) * inv) + np.exp(-((t - k * period) ** 2) * inv)
        total = total + term
        if k >= min_terms and np.all(term <= rel_tol * total):
            break
        k += 1
    return total


@dataclass(frozen=True)
class NoiseModel:
    """Wrapped-Gaussian noise law at particle number N.

    The angular standard deviation is ``sigma = 2*pi*gamma/sqrt(N)``; the
    density is the Gaussian periodized over 2*pi and normalized against
    dtheta/(2*pi).  ``gamma = 0`` is accepted as the deterministic limit:
    the sampler then returns exactly 0 and the model carries a diagnostic
    flag; the density is undefined there.

    Parameters
    ----------
    gamma : float
        Dimensionless noise intensity (>= 0).
    n_particles : int
        Particle number N >= 2 entering the scaling of sigma.
    truncation_k : int
        Minimum number of periodized translates summed on each side when
        evaluating the density (raised automatically until the last term is
        below 1e-15 of the running sum).
    """

    gamma: float
    n_particles: int
    truncation_k: int = 8

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError("gamma must be finite and >= 0")
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if self.truncation_k < 1:
            raise ValueError("truncation_k must be >= 1")
        if self.gamma == 0.0:
            warnings.warn("deterministic noise model (sigma = 0); sampler returns 0",
                          RuntimeWarning, stacklevel=2)

    @property
    def sigma(self) -> float:
        """Angular standard deviation 2*pi*gamma/sqrt(N)."""
        return TWO_PI * self.gamma / math.sqrt(self.n_particles)

    @property
    def deterministic(self) -> bool:
        return self.gamma == 0.0

    def density(self, theta):
        return wrapped_gaussian_density(theta, self)

    def fourier(self, n):
        """Fourier coefficient exp(-sigma^2 n^2 / 2) under dtheta/(2*pi)."""
        n = np.asarray(n, dtype=float)
        out = np.exp(-0.5 * (self.sigma * n) ** 2)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        return sample_wrapped_gaussian(self, rng, size)


def wrapped_gaussian_density(theta, model: NoiseModel):
    """Density of the periodized Gaussian, normalized against dtheta/(2*pi).

    Evaluates ``2*pi * sum_k N(theta + 2*k*pi; 0, sigma^2)`` so that the
    integral against dtheta/(2*pi) over one period equals 1.
    """
    sigma = model.sigma
    if sigma <= 0.0:
        raise ValueError("density undefined for sigma <= 0")
    amp = TWO_PI / (sigma * math.sqrt(TWO_PI))
    out = amp * _periodized_gaussian(theta, sigma, TWO_PI, model.truncation_k)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def sample_wrapped_gaussian(model: NoiseModel, rng, size=None):
    """Exact sampler: draw z ~ Normal(0, sigma^2) and wrap to [0, 2*pi).

    The wrapped law is by definition the pushforward of the Gaussian under
    wrap, so this is exact with no rejection step.
    """
    if model.deterministic:
        if size is None:
            return 0.0
        return np.zeros(size)
    return wrap(rng.normal(0.0, model.sigma, size))


@dataclass(frozen=True)
class BiasModel:
    """Acceptance law for biased midpoint collisions.

    ``H(offset) = h(offset)/h(0)`` where h is the Gaussian of standard
    deviation ``tau = 2*pi*gamma_prime/sqrt(N)`` periodized over pi (the
    half-angle offset lives on (-pi/2, pi/2]).  By construction H(0) = 1,
    H is even, and 0 < H <= 1.
    """

    gamma_prime: float
    n_particles: int
    truncation_k: int = 8

    def __post_init__(self):
        if not (math.isfinite(self.gamma_prime) and self.gamma_prime > 0.0):
            raise ValueError("gamma_prime must be finite and > 0")
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if self.truncation_k < 1:
            raise ValueError("truncation_k must be >= 1")

    @property
    def tau(self) -> float:
        """Angular acceptance width 2*pi*gamma_prime/sqrt(N)."""
        return TWO_PI * self.gamma_prime / math.sqrt(self.n_particles)

    def acceptance(self, offset):
        return acceptance_probability(offset, self)


def acceptance_probability(offset, bias: BiasModel):
    """Collision acceptance probability H(offset) in [0, 1].

    ``offset`` is a half-angle offset in (-pi/2, pi/2]; the function is
    pi-periodic and even, with max normalization H(0) = 1.
    """
    tau = bias.tau
    num = _periodized_gaussian(offset, tau, math.pi, bias.truncation_k)
    den = _periodized_gaussian(0.0, tau, math.pi, bias.truncation_k)
    out = num / den
    if np.ndim(offset) == 0:
        return float(out)
    return out
