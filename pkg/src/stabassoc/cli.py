"""File-driven command-line runs.

Every run reads one JSON config (``--config``) and writes CSV/JSON outputs to
the config's ``output_dir``, else ``$STABASSOC_OUTPUT_DIR``, else
``./stabassoc_out``.  Outputs contain no timestamps, so identical configs
give byte-identical files.

Exit codes: 0 ok / associable / consistent, 1 not associable / fdd
difference found, 2 configuration error, 3 regime violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .association import check_max_associable
from .decomposition import WindowSchedule, classify
from .exceptions import ConfigError, RegimeError, StabAssocError
from .integrals import SCHEMA_VERSION, fdd_equal, simulate_max_process, simulate_sum_process
from .marginals import SeededStream
from .specfile import RunConfig, load_kernel_spec, load_run_config

EXIT_OK = 0
EXIT_FOUND = 1
EXIT_CONFIG = 2
EXIT_REGIME = 3
OUTPUT_ENV = "STABASSOC_OUTPUT_DIR"


def _plain(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_plain)
        fh.write("\n")


def _output_dir(cfg: RunConfig) -> str:
    if cfg.output_dir:
        out = cfg.path(cfg.output_dir)
    else:
        out = os.environ.get(OUTPUT_ENV) or "stabassoc_out"
    os.makedirs(out, exist_ok=True)
    return out


def _alpha(cfg: RunConfig, spec) -> float:
    a = cfg.alpha if cfg.alpha is not None else spec.alpha_hint
    if a is None:
        raise ConfigError("alpha is required (config 'alpha' or kernel params)")
    return float(a)


def _config_echo(cfg: RunConfig) -> dict:
    return {"command": cfg.command, "kernel": cfg.kernel, "kernel_b": cfg.kernel_b,
            "alpha": cfg.alpha, "regime": cfg.regime, "seed": cfg.seed,
            "n_samples": cfg.n_samples, "probes": cfg.probes, "tolerance": cfg.tolerance,
            "classify": cfg.classify}


def cmd_simulate(cfg: RunConfig) -> int:
    spec = load_kernel_spec(cfg.path(cfg.kernel))
    alpha = _alpha(cfg, spec)
    stream = SeededStream(cfg.seed)
    sim = simulate_sum_process if cfg.regime == "sum" else simulate_max_process
    paths = sim(spec.kernel, alpha, cfg.n_samples, stream, workers=cfg.workers)
    out = _output_dir(cfg)
    paths.to_csv(os.path.join(out, "paths.csv"))
    summary = paths.summary()
    summary["config"] = _config_echo(cfg)
    _write_json(os.path.join(out, "summary.json"), summary)
    print(f"simulate: {cfg.n_samples} samples, {summary['gap_kind']} gap "
          f"{summary['max_gap']:.4g} -> {out}")
    return EXIT_OK


def cmd_check_associable(cfg: RunConfig) -> int:
    spec = load_kernel_spec(cfg.path(cfg.kernel))
    rep = check_max_associable(spec.kernel)
    d = rep.to_dict()
    d["kernel"] = cfg.kernel
    d["n_times"], d["n_points"] = spec.kernel.n_times, spec.kernel.n_points
    out = _output_dir(cfg)
    _write_json(os.path.join(out, "associability.json"), d)
    if rep.associable:
        print("check-associable: associable")
        return EXIT_OK
    w = rep.violating_pair
    print(f"check-associable: not associable (t={w['t_i']:g}, t={w['t_j']:g}, "
          f"point {w['point_index']}, product {w['product']:.4g})")
    return EXIT_FOUND


def cmd_classify(cfg: RunConfig) -> int:
    spec = load_kernel_spec(cfg.path(cfg.kernel))
    alpha = _alpha(cfg, spec)
    c = cfg.classify
    try:
        schedule = WindowSchedule(int(c.get("n0", 8)), int(c.get("doublings", 6)),
                                  float(c.get("delta", 0.01)))
    except StabAssocError as e:
        raise ConfigError(str(e)) from e
    weights = c.get("weights", ["w1", "w2"])
    if not weights or any(w not in ("w1", "w2") for w in weights):
        raise ConfigError("classify.weights must be a nonempty subset of ['w1', 'w2']")
    finite = spec.family is None or bool(c.get("finite_window", False))
    source = spec.kernel if finite else spec.family
    labels = classify(source, alpha, weights, schedule, finite_window=finite,
                      time_step=float(c.get("time_step", 1.0)))
    out = _output_dir(cfg)
    labels.to_csv(os.path.join(out, "labels.csv"))
    d = labels.to_dict()
    d["finite_window"] = finite
    d["weights"] = list(weights)
    d["config"] = _config_echo(cfg)
    _write_json(os.path.join(out, "classification.json"), d)
    print("classify: " + ", ".join(f"{k[-1]}={d[k]}" for k in sorted(d) if k.startswith("count_")))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    a = load_kernel_spec(cfg.path(cfg.kernel))
    b = load_kernel_spec(cfg.path(cfg.kernel_b))
    alpha = _alpha(cfg, a)
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-9
    rep = fdd_equal(a.kernel, b.kernel, alpha, cfg.regime, trials=cfg.probes,
                    rng=SeededStream(cfg.seed), tol=tol)
    d = rep.to_dict()
    d["config"] = _config_echo(cfg)
    out = _output_dir(cfg)
    _write_json(os.path.join(out, "comparison.json"), d)
    print(f"compare: {d['verdict']} (max relative deviation {rep.max_rel_deviation:.3g})")
    return EXIT_OK if rep.equal else EXIT_FOUND


COMMAND_TABLE = {
    "simulate": (cmd_simulate, "simulate sample paths; writes paths.csv and summary.json"),
    "check-associable": (cmd_check_associable,
                         "test the max-associability sign condition; writes associability.json"),
    "classify": (cmd_classify,
                 "label atoms conservative/dissipative and positive/null; writes labels.csv"),
    "compare": (cmd_compare, "randomized fdd comparison of two kernels; writes comparison.json"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stabassoc",
        description="Simulate and analyse SaS and alpha-Frechet processes given by spectral "
                    "kernels.",
        epilog=f"Exit codes: 0 ok, 1 witness found, 2 config error, 3 regime violation. "
               f"Default output directory: ${OUTPUT_ENV} or ./stabassoc_out.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMAND_TABLE.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", required=True, help="JSON run configuration file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMAND_TABLE[args.command][0]
    try:
        cfg = load_run_config(args.config, args.command)
        return func(cfg)
    except RegimeError as e:
        print(f"regime error: {e}", file=sys.stderr)
        return EXIT_REGIME
    except (ConfigError, StabAssocError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
