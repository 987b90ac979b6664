"""JSON kernel specifications and run configurations.

A kernel spec is either explicit::

    {"schema_version": 1, "kind": "explicit",
     "masses": [...], "points": [...],            # points optional
     "time_grid": {"times": [...]},
     "values": [[...], ...]}                       # n_times x n_points

or parametric::

    {"schema_version": 1, "kind": "parametric", "family": "lfsm",
     "params": {"H": 0.7, "alpha": 1.5, "a": 1, "b": 1},
     "time_grid": {"uniform": [-2, 2, 0.5]}, "resolution": 1}

``time_grid`` takes exactly one of ``times``, ``lattice: [start, stop]`` or
``uniform: [start, stop, step]``, plus optional ``lambda_weights``.  For the
``mixed_moving_average`` family ``params.G_csv`` names a CSV with columns
``x,u,value[,x_mass]``, resolved relative to the spec file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .exceptions import ConfigError, StabAssocError
from .kernels import FAMILIES, ParametricKernel, TabulatedG
from .measure import INTEGER_LATTICE, REAL_GRID, MeasureSpace, SpectralKernel, TimeGrid

SPEC_SCHEMA_VERSION = 1
COMMANDS = ("simulate", "check-associable", "classify", "compare")


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    version = data.get("schema_version", SPEC_SCHEMA_VERSION)
    if version != SPEC_SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema_version {version}")
    return data


def parse_time_grid(d: dict) -> TimeGrid:
    if not isinstance(d, dict):
        raise ConfigError("time_grid must be an object")
    keys = [k for k in ("times", "lattice", "uniform") if k in d]
    if len(keys) != 1:
        raise ConfigError("time_grid needs exactly one of times, lattice, uniform")
    try:
        if "lattice" in d:
            return TimeGrid.lattice(*map(int, d["lattice"]))
        if "uniform" in d:
            start, stop, step = map(float, d["uniform"])
            return TimeGrid.uniform(start, stop, step)
        kind = d.get("kind", REAL_GRID)
        if kind not in (REAL_GRID, INTEGER_LATTICE):
            raise ConfigError(f"unknown time grid kind {kind!r}")
        return TimeGrid(d["times"], d.get("lambda_weights"), kind)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad time_grid: {e}") from e


@dataclass
class KernelSpec:
    """A loaded spec: the fixed kernel and, for parametric specs, its family."""

    kernel: SpectralKernel
    family: ParametricKernel | None = None
    source: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def alpha_hint(self):
        if self.family is not None:
            return self.family.params.get("alpha")
        return None


def kernel_from_dict(d: dict, base_dir: str = ".") -> KernelSpec:
    kind = d.get("kind", "parametric" if "family" in d else "explicit")
    try:
        if kind == "explicit":
            for key in ("masses", "time_grid", "values"):
                if key not in d:
                    raise ConfigError(f"explicit kernel spec needs {key!r}")
            space = MeasureSpace(d["masses"], d.get("points"))
            grid = parse_time_grid(d["time_grid"])
            return KernelSpec(SpectralKernel(space, grid, d["values"]), None, raw=d)
        if kind != "parametric":
            raise ConfigError(f"unknown kernel spec kind {kind!r}")
        fam = d.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}; choose from {', '.join(FAMILIES)}")
        params = dict(d.get("params", {}))
        if fam == "mixed_moving_average":
            if "G_csv" not in params:
                raise ConfigError("mixed_moving_average needs params.G_csv")
            params["G"] = TabulatedG.from_csv(os.path.join(base_dir, params.pop("G_csv")))
        if "time_grid" not in d:
            raise ConfigError("parametric kernel spec needs 'time_grid'")
        pk = ParametricKernel(fam, params, int(d.get("resolution", 1)))
        grid = parse_time_grid(d["time_grid"])
        return KernelSpec(pk.evaluate(grid), pk, raw=d)
    except ConfigError:
        raise
    except KeyError as e:
        raise ConfigError(f"kernel spec missing parameter {e}") from e
    except (StabAssocError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid kernel spec: {e}") from e


def load_kernel_spec(path) -> KernelSpec:
    spec = kernel_from_dict(_read_json(path), os.path.dirname(os.path.abspath(path)))
    spec.source = str(path)
    return spec


@dataclass
class RunConfig:
    """One CLI run.  Paths are resolved relative to the config file."""

    command: str
    kernel: str
    kernel_b: str | None = None
    alpha: float | None = None
    regime: str = "sum"
    seed: int | None = None
    n_samples: int = 10000
    workers: int = 1
    probes: int = 64
    tolerance: float | None = None
    output_dir: str | None = None
    classify: dict = field(default_factory=dict)
    base_dir: str = "."

    def path(self, p):
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)


_CONFIG_KEYS = {"schema_version", "command", "kernel", "kernel_b", "alpha", "regime", "seed",
                "n_samples", "workers", "probes", "tolerance", "output_dir", "classify"}


def load_run_config(path, command: str | None = None) -> RunConfig:
    d = _read_json(path)
    unknown = set(d) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cmd = d.get("command", command)
    if command is not None and cmd != command:
        raise ConfigError(f"config is for {cmd!r}, not {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    if "kernel" not in d:
        raise ConfigError("config needs a 'kernel' spec path")
    cfg = RunConfig(command=cmd, kernel=d["kernel"], kernel_b=d.get("kernel_b"),
                    alpha=d.get("alpha"), regime=d.get("regime", "sum"), seed=d.get("seed"),
                    n_samples=d.get("n_samples", 10000), workers=d.get("workers", 1),
                    probes=d.get("probes", 64), tolerance=d.get("tolerance"),
                    output_dir=d.get("output_dir"), classify=d.get("classify", {}),
                    base_dir=os.path.dirname(os.path.abspath(path)))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.regime not in ("sum", "max"):
        raise ConfigError("regime must be 'sum' or 'max'")
    if cfg.command in ("simulate", "compare") and cfg.seed is None:
        raise ConfigError(f"{cfg.command} samples randomly and needs a 'seed'")
    if cfg.seed is not None and (not isinstance(cfg.seed, int) or cfg.seed < 0):
        raise ConfigError("seed must be a nonnegative integer")
    if not isinstance(cfg.n_samples, int) or cfg.n_samples < 1:
        raise ConfigError("n_samples must be a positive integer")
    if not isinstance(cfg.workers, int) or cfg.workers < 1:
        raise ConfigError("workers must be a positive integer")
    if not isinstance(cfg.probes, int) or cfg.probes < 1:
        raise ConfigError("probes must be a positive integer")
    if cfg.alpha is not None and not (isinstance(cfg.alpha, (int, float)) and cfg.alpha > 0):
        raise ConfigError("alpha must be a positive number")
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise ConfigError("tolerance must be positive")
    if cfg.command == "compare" and not cfg.kernel_b:
        raise ConfigError("compare needs 'kernel_b'")
    extra = set(cfg.classify) - {"n0", "doublings", "delta", "weights", "time_step",
                                 "finite_window"}
    if extra:
        raise ConfigError(f"unknown classify keys: {', '.join(sorted(extra))}")
