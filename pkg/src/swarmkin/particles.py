"""Discrete-time pair-interaction dynamics and the ensemble sampling protocol.

One iteration is one attempted pair interaction (rejected biased collisions
included).  Runs draw their randomness from a numpy Generator owned by the
caller; the ensemble runner derives one counter-based stream per run from a
single master seed, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .histograms import Histogram1D, Histogram2D
from .torus import TWO_PI, BiasModel, NoiseModel, wrap

UNBIASED_BDG = "UnbiasedBDG"
BIASED_BDG = "BiasedBDG"
CL = "CL"
_KINDS = (UNBIASED_BDG, BIASED_BDG, CL)


@dataclass
class EnsembleState:
    """Phases of one N-particle realization plus its iteration counter."""

    phases: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        if self.phases.ndim != 1 or self.phases.size < 2:
            raise ValueError("need a 1D array of at least 2 phases")

    @property
    def n_particles(self) -> int:
        return self.phases.size

    def copy(self) -> "EnsembleState":
        return EnsembleState(self.phases.copy(), self.iteration)


@dataclass(frozen=True)
class DynamicsConfig:
    """Which dynamics to run and how to detect its equilibrium.

    ``max_iterations`` defaults to 5000 * N, a CPU guard rather than a
    physical scale; runs that hit it are reported but still usable.
    """

    kind: str
    n_particles: int
    noise: NoiseModel
    bias: BiasModel | None = None
    equil_tolerance: float = 1e-3
    kappa_factor: float = 1.2
    lambda_min: float = 3.0
    max_iterations: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown dynamics kind: {self.kind!r}")
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if self.noise.n_particles != self.n_particles:
            raise ValueError("noise model scaled for a different particle number")
        if self.kind == BIASED_BDG:
            if self.bias is None:
                raise ValueError("biased dynamics needs a bias model")
            if self.bias.n_particles != self.n_particles:
                raise ValueError("bias model scaled for a different particle number")
        if not self.equil_tolerance > 0:
            raise ValueError("equil_tolerance must be > 0 (inf disables the test)")
        if self.kappa_factor <= 0 or self.lambda_min <= 0:
            raise ValueError("kappa_factor and lambda_min must be > 0")

    @property
    def kappa(self) -> int:
        """Spacing of convergence checkpoints, round(kappa_factor * N) >= 1."""
        return max(1, round(self.kappa_factor * self.n_particles))

    @property
    def min_iterations(self) -> int:
        """Floor ceil(lambda_min * N) before equilibrium may be declared."""
        return math.ceil(self.lambda_min * self.n_particles)

    @property
    def iteration_cap(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return 5000 * self.n_particles


@dataclass
class MacroObservables:
    """Mean velocity, its direction (None when the mean velocity ~ 0) and
    the order parameter alpha = |mean velocity|^2."""

    mean_velocity: np.ndarray
    mean_direction: float | None
    order_parameter: float


@dataclass
class EquilibriumDiagnostics:
    iterations: int
    stop_reason: str  # "converged" | "max_iterations"
    final_alpha: float


def sample_unordered_pair(n: int, rng) -> tuple[int, int]:
    """Uniform unordered pair {i, j}, returned with i < j."""
    if n < 2:
        raise ValueError("need at least 2 particles")
    a, b = _kernels._decode_pair(int(rng.integers(0, n * (n - 1))), n)
    return (a, b) if a < b else (b, a)


def sample_ordered_pair(n: int, rng) -> tuple[int, int]:
    """Uniform ordered pair (i, j), i != j."""
    if n < 2:
        raise ValueError("need at least 2 particles")
    return _kernels._decode_pair(int(rng.integers(0, n * (n - 1))), n)


def macro_observables(state) -> MacroObservables:
    phases = state.phases if isinstance(state, EnsembleState) else np.asarray(state, float)
    vx = float(np.cos(phases).mean())
    vy = float(np.sin(phases).mean())
    speed = math.hypot(vx, vy)
    direction = wrap(math.atan2(vy, vx)) if speed >= 1e-12 else None
    return MacroObservables(
        mean_velocity=np.array([vx, vy]),
        mean_direction=direction,
        order_parameter=speed * speed,
    )


def _advance(phases: np.ndarray, cfg: DynamicsConfig, rng, n_steps: int) -> None:
    """Apply n_steps attempted interactions in place.

    Per-segment draw order: pair codes, then noise draws (two arrays for the
    midpoint dynamics), then acceptance uniforms for the biased dynamics.
    """
    if n_steps <= 0:
        return
    n = cfg.n_particles
    sigma = cfg.noise.sigma
    codes = rng.integers(0, n * (n - 1), size=n_steps)
    if cfg.kind == CL:
        w = rng.standard_normal(n_steps) * sigma
        _kernels.cl_chunk(phases, codes, w)
        return
    w1 = rng.standard_normal(n_steps) * sigma
    w2 = rng.standard_normal(n_steps) * sigma
    if cfg.kind == UNBIASED_BDG:
        _kernels.bdg_chunk(phases, codes, w1, w2)
        return
    u = rng.random(n_steps)
    tau = cfg.bias.tau
    h_peak = float(_kernels._periodized_gaussian(0.0, tau, math.pi, cfg.bias.truncation_k))
    _kernels.biased_bdg_chunk(phases, codes, w1, w2, u, tau, h_peak,
                              cfg.bias.truncation_k)


def _step(state: EnsembleState, cfg: DynamicsConfig, rng) -> EnsembleState:
    phases = state.phases.copy()
    _advance(phases, cfg, rng, 1)
    return EnsembleState(phases, state.iteration + 1)


def bdg_step(state: EnsembleState, cfg: DynamicsConfig, rng) -> EnsembleState:
    """One unbiased midpoint collision attempt (two phases move, or none if
    the sampled pair is antipodal)."""
    if cfg.kind != UNBIASED_BDG:
        raise ValueError("config is not for the unbiased midpoint dynamics")
    return _step(state, cfg, rng)


def biased_bdg_step(state: EnsembleState, cfg: DynamicsConfig, rng) -> EnsembleState:
    """One midpoint collision attempt gated by the half-angle acceptance law."""
    if cfg.kind != BIASED_BDG:
        raise ValueError("config is not for the biased midpoint dynamics")
    return _step(state, cfg, rng)


def cl_step(state: EnsembleState, cfg: DynamicsConfig, rng) -> EnsembleState:
    """One leader-following jump (exactly one phase moves)."""
    if cfg.kind != CL:
        raise ValueError("config is not for the leader-following dynamics")
    return _step(state, cfg, rng)


def _mean_velocity(phases: np.ndarray) -> tuple[float, float]:
    return float(np.cos(phases).mean()), float(np.sin(phases).mean())


def _velocity_stable(prev: tuple, curr: tuple, eps: float) -> bool:
    """Relative stability of the mean-velocity vector between checkpoints.

    ``|v_new - v_old| < eps * |v_old|`` stabilizes the order parameter and
    the mean direction together (each then moves by O(eps)), without the
    coordinate blow-ups of testing either alone: the direction is undefined
    near |v| = 0 and the order parameter is itself O(1/N) ~ eps in the
    isotropic transient, where a scalar test fires on noise.  When
    |v_old| < eps the test degrades to the absolute form |v_new - v_old| < eps.
    """
    dx = curr[0] - prev[0]
    dy = curr[1] - prev[1]
    delta = math.hypot(dx, dy)
    scale = math.hypot(prev[0], prev[1])
    if scale < eps:
        return delta < eps
    return delta < eps * scale


def run_to_equilibrium(cfg: DynamicsConfig, rng, initial: EnsembleState | None = None):
    """Iterate until the macroscopic observables stop drifting.

    Checkpoints are spaced kappa = round(1.2 N) iterations apart; the test
    compares consecutive checkpoints and may first fire at ceil(lambda * N)
    iterations (with an infinite tolerance it fires there exactly).  Returns
    (EnsembleState, EquilibriumDiagnostics); hitting the iteration cap is a
    reported stop reason, not an error.
    """
    n = cfg.n_particles
    if initial is None:
        phases = rng.random(n) * TWO_PI
        start_iter = 0
    else:
        if initial.n_particles != n:
            raise ValueError("initial state size does not match the config")
        phases = initial.phases.copy()
        start_iter = initial.iteration
    kappa = cfg.kappa
    n_min = cfg.min_iterations
    cap = cfg.iteration_cap
    eps = cfg.equil_tolerance

    done = 0
    prev = None
    stop = "max_iterations"
    next_cp = max(n_min - kappa, 0)
    while True:
        target = min(max(next_cp, done), cap)
        if target > done:
            _advance(phases, cfg, rng, target - done)
            done = target
        if done == next_cp:
            obs = _mean_velocity(phases)
            if prev is not None and done >= n_min and _velocity_stable(prev, obs, eps):
                stop = "converged"
                break
            prev = obs
            next_cp += kappa
        if done >= cap:
            break
    state = EnsembleState(phases, start_iter + done)
    vx, vy = _mean_velocity(phases)
    return state, EquilibriumDiagnostics(iterations=done, stop_reason=stop,
                                         final_alpha=vx * vx + vy * vy)


def run_stream(master_seed: int, run_index: int):
    """Counter-based per-run generator: Philox keyed by the master seed with
    the 256-bit block counter starting at run_index * 2**128."""
    bg = np.random.Philox(key=np.uint64(master_seed),
                          counter=[0, 0, int(run_index), 0])
    return np.random.Generator(bg)


@dataclass
class RunRecord:
    iterations: int
    stop_reason: str


@dataclass
class EnsembleDiagnostics:
    runs: list[RunRecord] = field(default_factory=list)

    @property
    def n_converged(self) -> int:
        return sum(1 for r in self.runs if r.stop_reason == "converged")

    @property
    def n_capped(self) -> int:
        return sum(1 for r in self.runs if r.stop_reason == "max_iterations")

    @property
    def mean_iterations(self) -> float:
        return float(np.mean([r.iterations for r in self.runs]))


def _ensemble_worker(args):
    cfg, master_seed, idx = args
    rng = run_stream(master_seed, idx)
    state, diag = run_to_equilibrium(cfg, rng)
    pick = int(rng.integers(cfg.n_particles))
    i, j = sample_unordered_pair(cfg.n_particles, rng)
    return (state.phases[pick], state.phases[i], state.phases[j],
            diag.iterations, diag.stop_reason)


def ensemble_marginals(cfg: DynamicsConfig, n_runs: int, master_seed: int,
                       n_bins: int = 64, n_jobs: int | None = None):
    """Equilibrium one- and two-particle marginals over independent runs.

    Each run starts from i.i.d. uniform phases, runs to equilibrium, then
    contributes one uniformly chosen phase to the 1D histogram and one
    uniformly chosen unordered pair to the 2D histogram (both orders, which
    enforces exchangeability at no extra run cost).  Runs that hit the
    iteration cap still contribute and are counted in the diagnostics.
    Accumulation happens in run order, so the result is independent of
    ``n_jobs``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    args = [(cfg, master_seed, i) for i in range(n_runs)]
    if n_jobs is None:
        n_jobs = os.cpu_count() or 1
    if n_jobs > 1 and n_runs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_ensemble_worker, args,
                                    chunksize=max(1, n_runs // (n_jobs * 8))))
    else:
        results = [_ensemble_worker(a) for a in args]

    hist1 = Histogram1D(n_bins=n_bins)
    hist2 = Histogram2D(n_bins=n_bins)
    diags = EnsembleDiagnostics()
    for theta, t1, t2, iters, reason in results:
        hist1.accumulate(theta)
        hist2.accumulate(t1, t2)
        hist2.accumulate(t2, t1)
        diags.runs.append(RunRecord(iterations=iters, stop_reason=reason))
    hist1.finalize()
    hist2.finalize()
    return hist1, hist2, diags
