"""Flat key = value experiment configuration with strict validation.

The format is one ``key = value`` pair per line, ``#`` comments, no nesting.
Unknown keys are rejected by name; every command fills documented defaults
so that a config plus a seed reproduces every output byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

COMMANDS = ("simulate", "oracle", "hierarchy", "master", "compare")

_REQUIRED = object()


@dataclass
class ExperimentConfig:
    """Typed union of the per-command options (unused fields stay None)."""

    command: str
    kind: str | None = None
    n_particles: int | None = None
    gamma: float | None = None
    gamma_prime: float | None = None
    n_runs: int = 1000
    seed: int = 0
    bins: int = 64
    equil_tolerance: float = 1e-3
    kappa_factor: float = 1.2
    lambda_min: float = 3.0
    max_iterations: int | None = None
    n_jobs: int | None = None
    n_max: int = 64
    k: int | None = None
    grid_points: int | None = None
    dt: float | None = None
    t_end: float | None = None
    output_dir: str = "swarmkin-out"
    empirical: str | None = None
    reference: str | None = None


# key -> (parser, default); _REQUIRED means the command must provide it
_COMMON = {
    "seed": (int, 0),
    "output_dir": (str, "swarmkin-out"),
}

_SCHEMAS: dict[str, dict] = {
    "simulate": {
        **_COMMON,
        "kind": (str, _REQUIRED),
        "n_particles": (int, _REQUIRED),
        "gamma": (float, _REQUIRED),
        "gamma_prime": (float, None),
        "n_runs": (int, 1000),
        "bins": (int, 64),
        "equil_tolerance": (float, 1e-3),
        "kappa_factor": (float, 1.2),
        "lambda_min": (float, 3.0),
        "max_iterations": (int, None),
        "n_jobs": (int, None),
    },
    "oracle": {
        **_COMMON,
        "gamma": (float, _REQUIRED),
        "n_max": (int, 64),
        "bins": (int, 64),
        "k": (int, None),
    },
    "hierarchy": {
        **_COMMON,
        "gamma": (float, _REQUIRED),
        "n_max": (int, 64),
        "k": (int, 2),
        "grid_points": (int, None),
        "dt": (float, 0.5),
        "t_end": (float, 12.0),
    },
    "master": {
        **_COMMON,
        "kind": (str, "CL"),
        "n_particles": (int, 2),
        "gamma": (float, _REQUIRED),
        "gamma_prime": (float, None),
        "grid_points": (int, None),
        "dt": (float, 0.05),
        "t_end": (float, 12.0),
        "bins": (int, 64),
    },
    "compare": {
        **_COMMON,
        "empirical": (str, _REQUIRED),
        "reference": (str, "uniform"),
        "gamma": (float, None),
    },
}

_VALID_KINDS = {
    "simulate": ("CL", "UnbiasedBDG", "BiasedBDG"),
    "master": ("CL", "BDG"),
}


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.gamma is not None and not cfg.gamma > 0:
        raise ValueError("gamma must be > 0")
    if cfg.gamma_prime is not None and not cfg.gamma_prime > 0:
        raise ValueError("gamma_prime must be > 0")
    if cfg.n_particles is not None and cfg.n_particles < 2:
        raise ValueError("n_particles must be >= 2")
    if cfg.n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if cfg.bins < 1:
        raise ValueError("bins must be >= 1")
    if not cfg.equil_tolerance > 0:
        raise ValueError("equil_tolerance must be > 0 (inf allowed)")
    if cfg.n_max < 1:
        raise ValueError("n_max must be >= 1")
    if cfg.k is not None and cfg.k < 1:
        raise ValueError("k must be >= 1")
    if cfg.seed < 0 or cfg.seed > 2**64 - 1:
        raise ValueError("seed must fit in 64 unsigned bits")
    if cfg.command in _VALID_KINDS and cfg.kind is not None:
        allowed = _VALID_KINDS[cfg.command]
        if cfg.kind not in allowed:
            raise ValueError(f"kind must be one of {allowed}, got {cfg.kind!r}")
    if cfg.command == "simulate" and cfg.kind == "BiasedBDG" and cfg.gamma_prime is None:
        raise ValueError("BiasedBDG requires gamma_prime")
    if cfg.command == "master":
        if cfg.n_particles not in (2, 3):
            raise ValueError("master command supports n_particles in {2, 3}")
        if cfg.kind == "BDG" and cfg.n_particles != 2:
            raise ValueError("BDG master equation supports n_particles = 2 only")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ValueError("dt must be > 0")
    if cfg.t_end is not None and cfg.t_end < 0:
        raise ValueError("t_end must be >= 0")


def parse_pairs(text: str) -> dict:
    """Parse the raw key = value lines, without schema interpretation."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ValueError(f"line {lineno}: empty key or value")
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def parse_config(text: str, command: str | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Validated config from flat text, with defaults filled per command.

    ``command`` may come from the file (``command = ...``) or the argument;
    if both are present they must agree.  ``overrides`` are applied on top
    of the file values (the CLI --set/--seed/--out path).
    """
    pairs = parse_pairs(text)
    if overrides:
        pairs.update({k: str(v) for k, v in overrides.items()})
    file_command = pairs.pop("command", None)
    if file_command is not None and command is not None and file_command != command:
        raise ValueError(f"config says command = {file_command!r}, called with {command!r}")
    command = command or file_command
    if command is None:
        raise ValueError("missing required key: command")
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}; expected one of {COMMANDS}")
    schema = _SCHEMAS[command]
    values: dict = {"command": command}
    for key, raw in pairs.items():
        if key not in schema:
            raise ValueError(f"unknown key for {command!r}: {key!r}")
        parser, _ = schema[key]
        try:
            values[key] = parser(raw)
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r}: {raw!r} ({exc})") from None
    for key, (_, default) in schema.items():
        if key in values:
            continue
        if default is _REQUIRED:
            raise ValueError(f"missing required key for {command!r}: {key!r}")
        values[key] = default
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Flat text that reparses to an equal config."""
    lines = [f"command = {cfg.command}"]
    schema = _SCHEMAS[cfg.command]
    for key in schema:
        value = getattr(cfg, key)
        if value is None:
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
