"""Solvers for the infinite-N kinetic equations on periodic grids.

The leader-following (CL) hierarchy levels k = 1, 2 are linear and diagonal
in Fourier space, so they are integrated exactly; the delta source lives in
Fourier space (coefficients 1 on n1 + n2 = 0), never as a grid spike.  The
midpoint (BDG) limit pieces are the hierarchy right-hand side operator and
the nonlinear diffusion closure, solved by conservative finite volumes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .oracle import FourierMarginal
from .torus import TWO_PI


@dataclass
class GridField:
    """Scalar field sampled on the uniform periodic grid [0, 2*pi)^dims."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = self.values.shape
        if len(shape) < 1 or any(s != shape[0] for s in shape):
            raise ValueError("grid must be square with at least one axis")

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def grid(self) -> np.ndarray:
        return np.arange(self.n_points) * (TWO_PI / self.n_points)

    def copy(self) -> "GridField":
        return GridField(self.values.copy())


@dataclass(frozen=True)
class PdeParams:
    """Noise/bias scales and time stepping for the limit equations."""

    sigma: float
    tau: float = 0.0
    dt: float = 0.01
    t_end: float = 1.0

    def __post_init__(self):
        if self.sigma < 0 or self.tau < 0:
            raise ValueError("sigma and tau must be >= 0")
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("dt must be > 0 and t_end >= 0")


def _wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n)


def cl_f1_solve(f0: GridField, p: PdeParams) -> GridField:
    """Exact spectral heat propagation of the one-particle marginal.

    Mode n is multiplied by exp(-(sigma^2/2) n^2 t_end); the n = 0 mode (the
    mass) is untouched.  Being exact, this jumps straight to t_end.
    """
    if f0.dims != 1:
        raise ValueError("f0 must be one-dimensional")
    n = _wavenumbers(f0.n_points)
    fhat = np.fft.fft(f0.values)
    fhat *= np.exp(-0.5 * p.sigma**2 * n**2 * p.t_end)
    return GridField(np.fft.ifft(fhat).real)


def _step_kernel(a: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """(exp(-b dt) - exp(-a dt)) / (a - b), continuous at a = b.

    Exact integral of exp(-a (dt - s)) exp(-b s) over one step; evaluated in
    the difference form (all exponents nonpositive) with a series switch near
    a = b to avoid cancellation.
    """
    diff = a - b
    near = np.abs(diff) * dt < 1e-6
    denom = np.where(near, 1.0, diff)
    direct = (np.exp(-b * dt) - np.exp(-a * dt)) / denom
    series = dt * np.exp(-a * dt) * (1.0 + 0.5 * diff * dt)
    return np.where(near, series, direct)


def cl_f2_solve(f1_0: GridField, f20: GridField, p: PdeParams) -> GridField:
    """Two-particle marginal under the damped heat flow with pair source.

    Integrates ``dF2/dt = S - 2 F2 + (sigma^2/2) Lap F2`` where the source is
    ``S = (F1(theta1) + F1(theta2)) delta(theta1 - theta2)`` with F1 evolving
    under the one-particle heat flow from ``f1_0``.  Everything is diagonal
    in Fourier space, so each time step is exact up to roundoff: mode
    (n1, n2) obeys a scalar linear ODE with exponential forcing
    2*F1hat(n1+n2) exp(-(sigma^2/2)(n1+n2)^2 t).
    """
    if f1_0.dims != 1 or f20.dims != 2:
        raise ValueError("f1_0 must be 1D and f20 2D")
    g = f20.n_points
    if f1_0.n_points != g:
        raise ValueError("grid sizes do not match")
    n = _wavenumbers(g)
    n1 = n[:, None]
    n2 = n[None, :]
    half_s2 = 0.5 * p.sigma**2

    # F1 Fourier coefficients, zero outside the resolved band
    f1hat = np.fft.fft(f1_0.values) / g
    m = (n1 + n2).astype(int)
    in_band = np.abs(m) <= g // 2 - 1
    idx = np.where(in_band, np.mod(m, g), 0)
    s0 = np.where(in_band, 2.0 * f1hat[idx], 0.0)

    a = 2.0 + half_s2 * (n1**2 + n2**2)
    b = half_s2 * (n1 + n2) ** 2

    c = np.fft.fft2(f20.values) / (g * g)
    n_steps = int(round(p.t_end / p.dt))
    if not math.isclose(n_steps * p.dt, p.t_end, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("t_end must be an integer multiple of dt")
    decay = np.exp(-a * p.dt)
    kernel = _step_kernel(a, b, p.dt)
    t = 0.0
    for _ in range(n_steps):
        c = decay * c + s0 * np.exp(-b * t) * kernel
        t += p.dt
    return GridField(np.fft.ifft2(c * (g * g)).real)


def bdg_stable_dt(f: GridField, p: PdeParams, safety: float = 0.5) -> float:
    """Largest stable explicit step for the nonlinear diffusion, times safety."""
    dtheta = TWO_PI / f.n_points
    rate = 2.0 * (p.sigma**2 - p.tau**2)
    fmax = float(f.values.max())
    if rate <= 0 or fmax <= 0:
        raise ValueError("stable step defined only for sigma > tau and max F > 0")
    return safety * dtheta**2 / (4.0 * rate * fmax)


def bdg_nonlinear_diffusion_step(f: GridField, p: PdeParams) -> GridField:
    """One conservative finite-volume step of dF/dt = 2(s^2-t^2) (F F')'.

    Central flux with arithmetic-mean face values and explicit Euler in
    time; mass is conserved by construction and the discrete energy
    integral of F^2 is non-increasing for nonnegative F.  Refuses the
    backwards regime sigma < tau; sigma = tau is an identity step at the
    leading time scale (the dynamics there is slower than this scaling).
    """
    if f.dims != 1:
        raise ValueError("f must be one-dimensional")
    rate = 2.0 * (p.sigma**2 - p.tau**2)
    if rate < 0:
        raise ValueError("backwards diffusion: sigma < tau is refused")
    if rate == 0:
        warnings.warn("degenerate time scale: sigma = tau, identity step",
                      RuntimeWarning, stacklevel=2)
        return f.copy()
    dtheta = TWO_PI / f.n_points
    fmax = float(f.values.max())
    if fmax > 0 and p.dt > dtheta**2 / (4.0 * rate * fmax):
        raise ValueError("dt violates the CFL bound dtheta^2 / (8 (sigma^2 - tau^2) max F)")
    v = f.values
    vr = np.roll(v, -1)
    flux = rate * 0.5 * (v + vr) * (vr - v) / dtheta
    new = v + (p.dt / dtheta) * (flux - np.roll(flux, 1))
    return GridField(new)


def bdg_hierarchy_rhs(f_kplus1: GridField, p: PdeParams, k: int) -> GridField:
    """Right-hand side of level k of the midpoint-collision limit hierarchy.

    Applies ``(d/dtheta_i + d/dtheta_{k+1})^2`` to the (k+1)-particle field
    spectrally, restricts theta_{k+1} = theta_i, sums over i <= k and scales
    by (sigma^2 - tau^2) (unit collision rate).  Supports k + 1 <= 3.
    """
    if k + 1 != f_kplus1.dims:
        raise ValueError("field dimension must be k + 1")
    if k + 1 > 3:
        raise ValueError("unsupported: k + 1 > 3")
    g = f_kplus1.n_points
    n = _wavenumbers(g)
    fhat = np.fft.fftn(f_kplus1.values)
    rate = p.sigma**2 - p.tau**2
    if k == 1:
        sym = -((n[:, None] + n[None, :]) ** 2)
        field = np.fft.ifftn(fhat * sym).real
        return GridField(rate * np.diagonal(field).copy())
    # k == 2: i = 1 pairs axes (0, 2); i = 2 pairs axes (1, 2)
    out = np.zeros((g, g))
    n3 = n.reshape(1, 1, g)
    for axis_i in (0, 1):
        ni = n.reshape(g, 1, 1) if axis_i == 0 else n.reshape(1, g, 1)
        field = np.fft.ifftn(fhat * (-((ni + n3) ** 2))).real
        if axis_i == 0:
            out += np.diagonal(field, axis1=0, axis2=2).T
        else:
            out += np.diagonal(field, axis1=1, axis2=2)
    return GridField(rate * out)


def cl_hierarchy_residual_fourier(fm_k: FourierMarginal, fm_km1: FourierMarginal,
                                  p) -> float:
    """Max stationarity residual of the CL limit hierarchy at level k.

    For every zero-sum tuple with max|n_i| <= n_max - 1 evaluates

        sum_{i<j} [gain terms from level k-1] - k(k-1) c_k(n)
        - (sigma^2/2) (sum n_i^2) c_k(n)

    and returns the largest absolute value.  Lookups outside the truncation
    box contribute 0, matching the recursion's convention.
    """
    if fm_km1.k != fm_k.k - 1:
        raise ValueError("fm_km1 must be the level below fm_k")
    if fm_km1.n_max != fm_k.n_max:
        raise ValueError("inconsistent truncations")
    from .oracle import _zero_sum_canonical_tuples

    k = fm_k.k
    half_s2 = 0.5 * p.sigma**2
    worst = 0.0
    interior = fm_k.n_max - 1
    for canon in _zero_sum_canonical_tuples(k, interior):
        gain = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                merged = canon[i] + canon[j]
                drop_i = canon[:i] + canon[i + 1:j] + (merged,) + canon[j + 1:]
                drop_j = canon[:i] + (merged,) + canon[i + 1:j] + canon[j + 1:]
                gain += fm_km1.get(tuple(sorted(drop_i)))
                gain += fm_km1.get(tuple(sorted(drop_j)))
        ck = fm_k.get(canon)
        res = gain - k * (k - 1) * ck - half_s2 * sum(n * n for n in canon) * ck
        worst = max(worst, abs(res))
    return worst
