"""Command line entry point: experiment orchestration and serialization.

``swarmkin <command> --config FILE [--seed U64] [--out DIR] [--set k=v ...]``

Every command writes its data files plus a ``manifest.json`` that echoes the
config, lists each file written, and records diagnostics and metric
summaries.  Outputs are a pure function of (config, seed): reruns are
byte-identical regardless of worker count.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, dataio
from .config import COMMANDS, ExperimentConfig, parse_config, serialize_config
from .histograms import Histogram1D, Histogram2D, compare, pair_difference_profile
from .master import (MasterField, bbgky_consistency, bdg_master_rhs,
                     cl_master_rhs, field_difference_profile, integrate_master,
                     marginalize)
from .oracle import (CorrelationParams, m_density, m_fourier, m_profile_binned,
                     marginal_recursion)
from .particles import BIASED_BDG, DynamicsConfig, ensemble_marginals
from .pde import GridField, PdeParams, cl_f2_solve, cl_hierarchy_residual_fourier
from .torus import BiasModel, NoiseModel


@dataclass
class RunManifest:
    command: str
    config_text: str
    version: str = __version__
    files: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


class _Writer:
    """Tracks written data files so failures can clean up partial output."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / name
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _dynamics_config(cfg: ExperimentConfig) -> DynamicsConfig:
    noise = NoiseModel(gamma=cfg.gamma, n_particles=cfg.n_particles)
    bias = None
    if cfg.kind == BIASED_BDG:
        bias = BiasModel(gamma_prime=cfg.gamma_prime, n_particles=cfg.n_particles)
    return DynamicsConfig(
        kind=cfg.kind,
        n_particles=cfg.n_particles,
        noise=noise,
        bias=bias,
        equil_tolerance=cfg.equil_tolerance,
        kappa_factor=cfg.kappa_factor,
        lambda_min=cfg.lambda_min,
        max_iterations=cfg.max_iterations,
    )


def _cmd_simulate(cfg: ExperimentConfig, w: _Writer, manifest: RunManifest) -> None:
    dyn = _dynamics_config(cfg)
    h1, h2, diags = ensemble_marginals(dyn, cfg.n_runs, cfg.seed,
                                       n_bins=cfg.bins, n_jobs=cfg.n_jobs)
    prof = pair_difference_profile(h2).finalize()
    dataio.save_histogram1d(w.path("hist1d.csv"), h1)
    dataio.save_histogram2d(w.path("hist2d.csv"), h2)
    dataio.save_histogram1d(w.path("difference_profile.csv"), prof)
    manifest.diagnostics = {
        "n_runs": cfg.n_runs,
        "n_converged": diags.n_converged,
        "n_max_iterations": diags.n_capped,
        "mean_iterations": diags.mean_iterations,
        "iterations": [r.iterations for r in diags.runs],
        "stop_reasons": [r.stop_reason for r in diags.runs],
    }
    manifest.metrics = {
        "uniform_chi2_1d": compare(h1, np.ones(cfg.bins))["chi2"],
    }


def _cmd_oracle(cfg: ExperimentConfig, w: _Writer, manifest: RunManifest) -> None:
    p = CorrelationParams.from_gamma(cfg.gamma)
    centers = (np.arange(cfg.bins) + 0.5) * (2.0 * math.pi / cfg.bins)
    dens = m_density(centers, p)
    with open(w.path("m_density.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta,density\n")
        for t, d in zip(centers, dens):
            fh.write(f"{t!r},{d!r}\n")
    ns = np.arange(-cfg.n_max, cfg.n_max + 1)
    with open(w.path("m_fourier.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,coefficient\n")
        for n in ns:
            fh.write(f"{n},{m_fourier(int(n), p)!r}\n")
    manifest.metrics = {
        "m_hat_1": m_fourier(1, p),
        "m_density_0": float(m_density(0.0, p)),
        "sigma_bar": p.sigma_bar,
    }
    if cfg.k is not None and cfg.k >= 2:
        fm = marginal_recursion(cfg.k, p, n_max=cfg.n_max)
        fm.to_csv(w.path(f"marginal_k{cfg.k}.csv"))
        manifest.metrics["marginal_k"] = cfg.k


def _cmd_hierarchy(cfg: ExperimentConfig, w: _Writer, manifest: RunManifest) -> None:
    p = CorrelationParams.from_gamma(cfg.gamma)
    k = cfg.k if cfg.k and cfg.k >= 2 else 2
    fm_prev = marginal_recursion(k - 1, p, n_max=cfg.n_max)
    fm = marginal_recursion(k, p, n_max=cfg.n_max)
    fm.to_csv(w.path(f"marginal_k{k}.csv"))
    residual = cl_hierarchy_residual_fourier(fm, fm_prev, p)
    manifest.metrics = {"stationarity_residual_fourier": residual, "k": k}
    if cfg.grid_points:
        g = cfg.grid_points
        params = PdeParams(sigma=p.sigma, dt=cfg.dt, t_end=cfg.t_end)
        f1 = GridField(np.ones(g))
        f2 = cl_f2_solve(f1, GridField(np.ones((g, g))), params)
        dataio.save_grid_field(w.path("f2_final.csv"), f2.values)
        n = np.fft.fftfreq(g, d=1.0 / g)
        band = GridField(np.fft.ifft2(
            np.where(n[:, None] + n[None, :] == 0,
                     m_fourier(n[:, None], p), 0.0) * g * g).real)
        manifest.metrics["f2_linf_error"] = float(np.max(np.abs(f2.values - band.values)))


def _cmd_master(cfg: ExperimentConfig, w: _Writer, manifest: RunManifest) -> None:
    n = cfg.n_particles
    grid = cfg.grid_points or (128 if n == 2 else 48)
    noise = NoiseModel(gamma=cfg.gamma, n_particles=n)
    g_grid = noise.density(np.arange(grid) * (2.0 * math.pi / grid))
    bias = None
    if cfg.kind == "BDG" and cfg.gamma_prime is not None:
        bias = BiasModel(gamma_prime=cfg.gamma_prime, n_particles=n).acceptance
    if cfg.kind == "CL":
        rhs_op = lambda v: cl_master_rhs(MasterField(v), g_grid)  # noqa: E731
    else:
        rhs_op = lambda v: bdg_master_rhs(MasterField(v), g_grid, bias)  # noqa: E731
    f0 = MasterField.uniform(n, grid)
    stationary, diag = integrate_master(rhs_op, f0, cfg.dt, cfg.t_end)
    dataio.save_grid_field(w.path("master_field.csv"), stationary.values)
    manifest.diagnostics = diag
    metrics = {
        "stationarity_residual": float(np.max(np.abs(rhs_op(stationary.values)))),
        "mean": stationary.mean,
    }
    if n == 2:
        profile = field_difference_profile(stationary.values)
        dataio.save_grid_field(w.path("master_profile.csv"), profile)
        metrics["bbgky_k1"] = bbgky_consistency(stationary, 1, g_grid,
                                                kind=cfg.kind, bias=bias)
    else:
        marg = marginalize(stationary, (0, 1))
        dataio.save_grid_field(w.path("master_marginal12.csv"), marg.values)
        metrics["bbgky_k1"] = bbgky_consistency(stationary, 1, g_grid, kind=cfg.kind)
        metrics["bbgky_k2"] = bbgky_consistency(stationary, 2, g_grid, kind=cfg.kind)
    manifest.metrics = metrics


def _cmd_compare(cfg: ExperimentConfig, w: _Writer, manifest: RunManifest) -> None:
    path = Path(cfg.empirical)
    if not path.exists():
        raise FileNotFoundError(f"empirical histogram not found: {path}")
    if cfg.reference == "pair_correlation" and cfg.gamma is None:
        raise ValueError("pair_correlation reference requires gamma")
    with open(path, "r", encoding="utf-8") as fh:
        first_data = next(line for line in fh if not line.startswith("#"))
    is_2d = "," in first_data and not any(c.isalpha() for c in first_data.split(",")[0])
    if is_2d:
        hist = dataio.load_histogram2d(path)
        centers = hist.bin_centers
        if cfg.reference == "uniform":
            ref = np.ones((hist.n_bins, hist.n_bins))
        elif cfg.reference == "pair_correlation":
            p = CorrelationParams.from_gamma(cfg.gamma)
            ref = m_density(centers[:, None] - centers[None, :], p)
        else:
            ref = dataio.load_histogram2d(Path(cfg.reference)).density
    else:
        hist = dataio.load_histogram1d(path)
        if cfg.reference == "uniform":
            ref = np.ones(hist.n_bins)
        elif cfg.reference == "pair_correlation":
            # reference for a pair difference profile at this bin resolution
            p = CorrelationParams.from_gamma(cfg.gamma)
            ref = m_profile_binned(p, hist.n_bins)
        else:
            ref = dataio.load_histogram1d(Path(cfg.reference)).density
    metrics = compare(hist, ref)
    if hist.total == 0:
        metrics.pop("chi2")
    with open(w.path("metrics.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    manifest.metrics = metrics


_RUNNERS = {
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "hierarchy": _cmd_hierarchy,
    "master": _cmd_master,
    "compare": _cmd_compare,
}


def run_command(cfg: ExperimentConfig) -> tuple[RunManifest, int]:
    """Dispatch a validated config; returns (manifest, exit_code).

    On failure the partial data files are removed and the manifest carries
    the error message.
    """
    out_dir = Path(cfg.output_dir)
    writer = _Writer(out_dir)
    manifest = RunManifest(command=cfg.command, config_text=serialize_config(cfg))
    start = time.monotonic()
    try:
        _RUNNERS[cfg.command](cfg, writer, manifest)
        code = 0
    except Exception as exc:  # pragma: no cover - exercised via CLI tests
        writer.cleanup()
        manifest.files = []
        manifest.error = f"{type(exc).__name__}: {exc}"
        code = 1
    else:
        manifest.files = [p.name for p in writer.written]
    manifest.wall_clock_s = time.monotonic() - start
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest.to_json())
    except OSError:
        code = code or 1
    return manifest, code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="swarmkin",
        description="Swarm consensus dynamics on the circle: simulator and oracles.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    args = parser.parse_args(argv)

    overrides: dict = {}
    for item in args.set:
        if "=" not in item:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out

    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, command=args.command, overrides=overrides)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    manifest, code = run_command(cfg)
    if manifest.error:
        print(f"error: {manifest.error}", file=sys.stderr)
    else:
        summary = {k: v for k, v in manifest.metrics.items()}
        print(f"{cfg.command}: wrote {len(manifest.files)} files to "
              f"{cfg.output_dir} in {manifest.wall_clock_s:.2f}s")
        if summary:
            print(json.dumps(summary, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
