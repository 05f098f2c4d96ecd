"""Command line entry points: run, preset, calibrate.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 calibration non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import report
from .harness import (
    ConfigError,
    PRESET_NAMES,
    build_config,
    calibrate_sources,
    emit_csv,
    parse_config_file,
    run_experiment,
    run_preset,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_NO_CONVERGENCE = 3


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uniflux",
                                     description="Particle-based diffusion with flux-calibrated boundary sources")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment described by a config file")
    p_run.add_argument("--config", required=True, help="path to a key = value config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=".", help="output directory")

    p_preset = sub.add_parser("preset", help="run a named published experiment")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--seed", type=int, default=None, help="override the preset seed")
    p_preset.add_argument("--out", default=".", help="output directory")

    p_cal = sub.add_parser("calibrate", help="shoot for target boundary concentrations")
    p_cal.add_argument("--config", required=True, help="path to a key = value config file")
    p_cal.add_argument("--cl", type=float, required=True, help="target concentration at the lo boundary")
    p_cal.add_argument("--cr", type=float, required=True, help="target concentration at the hi boundary")
    p_cal.add_argument("--tol", type=float, default=0.02, help="relative tolerance on achieved concentrations")
    p_cal.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_cal.add_argument("--out", default=".", help="output directory")
    return parser


def _cmd_run(args) -> int:
    raw = parse_config_file(args.config)
    overrides = {"seed": args.seed} if args.seed is not None else None
    config = build_config(raw, overrides)
    os.makedirs(args.out, exist_ok=True)
    if config.preset is not None:
        if config.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset: {config.preset!r}")
        files = run_preset(config.preset, args.out, seed=config.seed)
        for label, path in sorted(files.items()):
            print(f"{label}: {path}")
        return EXIT_OK
    result = run_experiment(config)
    paths = [emit_csv(result.profile, os.path.join(args.out, "profile.csv"))]
    if result.fluxes:
        paths.append(emit_csv(result.fluxes, os.path.join(args.out, "flux.csv")))
    paths.append(report.render_profile(result.profile, os.path.join(args.out, "profile.png")))
    led = result.ledger
    print(f"concentration_scale: {result.stat_scale:g}")
    print(f"injected: lo={led.injected_lo} hi={led.injected_hi}  "
          f"absorbed: lo={led.absorbed_lo} hi={led.absorbed_hi}")
    if led.elapsed > 0.0:
        print(f"net_flux: {result.net_flux:.6g}")
    for path in paths:
        print(f"wrote: {path}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    files = run_preset(args.name, args.out, seed=args.seed)
    for label, path in sorted(files.items()):
        print(f"{label}: {path}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    raw = parse_config_file(args.config)
    overrides = {"seed": args.seed} if args.seed is not None else None
    config = build_config(raw, overrides)
    os.makedirs(args.out, exist_ok=True)
    cal = calibrate_sources((args.cl, args.cr), config, args.tol)
    print(f"iterations: {cal.iterations}  converged: {cal.converged}")
    print(f"rates: lo={cal.rate_lo:.6g} hi={cal.rate_hi:.6g}")
    print(f"achieved: lo={cal.achieved_c_lo:.6g} hi={cal.achieved_c_hi:.6g}")
    print(f"net_flux: {cal.j_net_estimate:.6g}")
    if cal.result is not None:
        emit_csv(cal.result.profile, os.path.join(args.out, "calibrated_profile.csv"))
        report.render_calibration(cal.result.profile, (args.cl, args.cr),
                                  os.path.join(args.out, "calibrated_profile.png"))
        print(f"wrote: {os.path.join(args.out, 'calibrated_profile.csv')}")
    if not cal.converged:
        print("calibration did not converge; iterate history (rate_lo, rate_hi, achieved_lo, achieved_hi):",
              file=sys.stderr)
        for row in cal.history:
            print("  " + ", ".join(f"{v:.6g}" for v in row), file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def main(argv=None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset(args)
        return _cmd_calibrate(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures: I/O, numerical aborts
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
