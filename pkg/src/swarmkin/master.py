"""Brute-force finite-N master equations on grids, for N in {2, 3}.

One unit of master time corresponds to N attempted pair interactions of the
simulator, with unit collision rate.  All integrals use trapezoid quadrature
on the uniform periodic grid (which for smooth periodic integrands is
spectrally accurate), with the dtheta/(2*pi) measure per axis, so quadrature
is a plain mean over grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .pde import GridField
from .torus import TWO_PI


@dataclass
class MasterField:
    """N-particle probability density sampled on the [0, 2*pi)^N grid."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = self.values.shape
        if self.values.ndim not in (2, 3) or any(s != shape[0] for s in shape):
            raise ValueError("master field must be a square grid of 2 or 3 axes")

    @property
    def n_particles(self) -> int:
        return self.values.ndim

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def grid(self) -> np.ndarray:
        return np.arange(self.n_points) * (TWO_PI / self.n_points)

    def symmetrize(self) -> "MasterField":
        """Average over coordinate permutations (exchangeability)."""
        n = self.values.ndim
        acc = np.zeros_like(self.values)
        perms = list(permutations(range(n)))
        for perm in perms:
            acc += np.transpose(self.values, perm)
        self.values = acc / len(perms)
        return self

    @classmethod
    def uniform(cls, n_particles: int, n_points: int) -> "MasterField":
        return cls(np.ones((n_points,) * n_particles))


def _diff_matrix_index(g: int) -> np.ndarray:
    """(i - j) mod g lookup for a g x g grid of pairwise index differences."""
    i = np.arange(g)
    return np.mod(i[:, None] - i[None, :], g)


def cl_master_rhs(field: MasterField, g_grid: np.ndarray) -> np.ndarray:
    """Time derivative of the N-particle density under leader-following jumps.

    Evaluates ``(2/(N-1)) sum_{i<j} { (1/2) g(theta_i - theta_j)
    ([F]_without_j + [F]_without_i) - F }`` where ``[F]_without_i`` is the
    marginal with coordinate i integrated out, broadcast back over axis i.
    ``g_grid`` is the noise density sampled on the grid.
    """
    vals = field.values
    n = field.n_particles
    g = field.n_points
    g_grid = np.asarray(g_grid, dtype=float)
    if g_grid.shape != (g,):
        raise ValueError("g_grid must match the field grid")
    dmat = g_grid[_diff_matrix_index(g)]
    rhs = np.zeros_like(vals)
    for i, j in combinations(range(n), 2):
        # g(theta_i - theta_j) broadcast over all axes
        shape = [1] * n
        shape[i] = g
        shape[j] = g
        gij = dmat.reshape(shape)
        marg_j = np.expand_dims(vals.mean(axis=j), axis=j)  # function of all but theta_j
        marg_i = np.expand_dims(vals.mean(axis=i), axis=i)
        rhs += 0.5 * gij * (marg_j + marg_i) - vals
    return (2.0 / (n - 1)) * rhs


def _half_angle_grid(g: int) -> np.ndarray:
    """Half-angle offsets of all grid differences, reduced to (-pi/2, pi/2]."""
    d = np.arange(g) * (TWO_PI / g)
    off = np.remainder(0.5 * d, math.pi)
    return np.where(off > 0.5 * math.pi, off - math.pi, off)


def bdg_master_rhs(field: MasterField, g_grid: np.ndarray, bias=None) -> np.ndarray:
    """Time derivative of the 2-particle density under midpoint collisions.

    Gain term: ``2 * integral over (u, z) of H(z) g(u - theta_1)
    g(u - theta_2) F(u + z, u - z)`` with u on the full grid and z on the
    grid points in (-pi/2, pi/2], both with the dtheta/(2*pi) measure; loss
    term: ``H(halfangle(theta_1, theta_2)) F``.  ``bias`` is a callable
    H(offsets) -> probabilities, or None for the unbiased case H = 1.
    Supports N = 2 only (N = 3 would cost O(G^5)).
    """
    if field.n_particles != 2:
        raise ValueError("unsupported N for the midpoint master equation")
    vals = field.values
    g = field.n_points
    g_grid = np.asarray(g_grid, dtype=float)
    if g_grid.shape != (g,):
        raise ValueError("g_grid must match the field grid")
    if g % 4 != 0:
        raise ValueError("grid size must be a multiple of 4")

    # z grid: multiples of the grid step inside (-pi/2, pi/2]
    zidx = np.arange(-g // 4 + 1, g // 4 + 1)
    zvals = zidx * (TWO_PI / g)
    hz = np.ones(zidx.size) if bias is None else np.asarray(bias(zvals), dtype=float)

    # C[u, i] = g(theta_u - theta_i)
    cmat = g_grid[_diff_matrix_index(g)]
    u = np.arange(g)
    gain = np.zeros((g, g))
    for w, j in zip(hz, zidx):
        a_u = vals[(u + j) % g, (u - j) % g]
        gain += w * (cmat.T @ (a_u[:, None] * cmat))
    gain *= 2.0 / (g * g)

    off = _half_angle_grid(g)[_diff_matrix_index(g)]
    h_loss = np.ones((g, g)) if bias is None else np.asarray(bias(off), dtype=float)
    return 2.0 * (gain - h_loss * vals)


def integrate_master(rhs_op, f0: MasterField, dt: float, t_end: float,
                     renormalize: bool = True):
    """Classical RK4 integration of dF/dt = rhs_op(F.values).

    The mean is renormalized to 1 after each step; the largest observed
    drift is reported in the diagnostics.  Aborts on blow-up (max |F| > 1e6).
    Returns (MasterField, diagnostics dict).
    """
    if dt <= 0 or t_end < 0:
        raise ValueError("dt must be > 0 and t_end >= 0")
    v = f0.values.copy()
    n_steps = int(round(t_end / dt))
    max_drift = 0.0
    for _ in range(n_steps):
        k1 = rhs_op(v)
        k2 = rhs_op(v + 0.5 * dt * k1)
        k3 = rhs_op(v + 0.5 * dt * k2)
        k4 = rhs_op(v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.max(np.abs(v)) > 1e6:
            raise RuntimeError("master equation blow-up: max |F| > 1e6")
        mean = v.mean()
        max_drift = max(max_drift, abs(mean - 1.0))
        if renormalize:
            v /= mean
    out = MasterField(v)
    return out, {"steps": n_steps, "max_mean_drift": max_drift}


def marginalize(field: MasterField, keep) -> GridField:
    """Integrate out all coordinates not in ``keep`` (0-based axis indices).

    ``keep`` must be nonempty, sorted ascending; the result keeps the axis
    order of ``keep`` and has mean 1 whenever the input does.
    """
    keep = tuple(keep)
    if len(keep) == 0:
        raise ValueError("keep must be nonempty")
    n = field.n_particles
    if sorted(keep) != list(keep) or len(set(keep)) != len(keep):
        raise ValueError("keep must be strictly increasing")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError("keep indices out of range")
    drop = tuple(ax for ax in range(n) if ax not in keep)
    vals = field.values.mean(axis=drop) if drop else field.values.copy()
    return GridField(vals)


def _rhs_op_for(kind: str, g_grid: np.ndarray, bias=None):
    if kind == "CL":
        return lambda v: cl_master_rhs(MasterField(v), g_grid)
    if kind == "BDG":
        return lambda v: bdg_master_rhs(MasterField(v), g_grid, bias)
    raise ValueError(f"unknown master dynamics kind: {kind!r}")


def _cl_hierarchy_rhs_k1(f1: np.ndarray, g_grid: np.ndarray) -> np.ndarray:
    """d/dt of the 1-marginal: convolution gain minus unit loss."""
    g = g_grid.size
    conv = (g_grid[_diff_matrix_index(g)] @ f1) / g
    return conv - f1


def _cl_hierarchy_rhs_k2_n3(f2: np.ndarray, f1: np.ndarray,
                            g_grid: np.ndarray) -> np.ndarray:
    """d/dt of the 2-marginal at N = 3 from the marginal hierarchy."""
    g = g_grid.size
    gmat = g_grid[_diff_matrix_index(g)]
    pair = 0.5 * gmat * (f1[:, None] + f1[None, :]) - f2
    conv1 = (f2 @ gmat.T) / g          # int g(t3 - t1) F2(t2, t3) dt3, axes (t1, t2) -> transpose
    conv1 = conv1.T
    conv2 = (f2 @ gmat.T) / g          # int g(t3 - t2) F2(t1, t3) dt3
    tail = 0.5 * (conv1 + conv2) - f2
    return pair + tail


def _bdg_hierarchy_rhs_k1_n2(f2: np.ndarray, g_grid: np.ndarray, bias=None) -> np.ndarray:
    """d/dt of the 1-marginal at N = 2 under midpoint collisions."""
    g = g_grid.size
    zidx = np.arange(-g // 4 + 1, g // 4 + 1)
    zvals = zidx * (TWO_PI / g)
    hz = np.ones(zidx.size) if bias is None else np.asarray(bias(zvals), dtype=float)
    cmat = g_grid[_diff_matrix_index(g)]
    u = np.arange(g)
    gain = np.zeros(g)
    for w, j in zip(hz, zidx):
        a_u = f2[(u + j) % g, (u - j) % g]
        gain += w * (cmat.T @ a_u)
    gain *= 2.0 / (g * g)
    off = _half_angle_grid(g)[_diff_matrix_index(g)]
    h_loss = np.ones((g, g)) if bias is None else np.asarray(bias(off), dtype=float)
    loss = (h_loss * f2).mean(axis=1)
    return 2.0 * (gain - loss)


def bbgky_consistency(field: MasterField, k: int, g_grid: np.ndarray,
                      kind: str = "CL", bias=None) -> float:
    """Max discrepancy between two routes to d/dt of the k-marginal.

    Route (a) marginalizes the full master right-hand side; route (b)
    applies the k-level marginal evolution formula to the marginals of F.
    The two are algebraically identical, so the residual is bounded by
    quadrature error.  Supported: (N=2, k=1) for CL and BDG; (N=3, k in
    {1, 2}) for CL.
    """
    n = field.n_particles
    if kind == "CL":
        rhs = cl_master_rhs(field, g_grid)
        if k == 1:
            a = marginalize(MasterField(rhs), (0,)).values
            f1 = marginalize(field, (0,)).values
            b = _cl_hierarchy_rhs_k1(f1, g_grid)
        elif k == 2 and n == 3:
            a = marginalize(MasterField(rhs), (0, 1)).values
            f1 = marginalize(field, (0,)).values
            f2 = marginalize(field, (0, 1)).values
            b = _cl_hierarchy_rhs_k2_n3(f2, f1, g_grid)
        else:
            raise ValueError(f"unsupported (N, k) = ({n}, {k}) for CL")
    elif kind == "BDG":
        if n != 2 or k != 1:
            raise ValueError(f"unsupported (N, k) = ({n}, {k}) for BDG")
        rhs = bdg_master_rhs(field, g_grid, bias)
        a = marginalize(MasterField(rhs), (0,)).values
        b = _bdg_hierarchy_rhs_k1_n2(field.values, g_grid, bias)
    else:
        raise ValueError(f"unknown dynamics kind: {kind!r}")
    return float(np.max(np.abs(a - b)))


def field_difference_profile(field2d: np.ndarray) -> np.ndarray:
    """Average of a 2D grid field along lines of constant theta_1 - theta_2.

    Entry d is the mean of F over grid pairs with index difference d; for a
    translation-invariant field this recovers its profile exactly.
    """
    f = np.asarray(field2d, dtype=float)
    g = f.shape[0]
    i = np.arange(g)
    return np.array([f[(i + d) % g, i].mean() for d in range(g)])
