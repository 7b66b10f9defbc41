"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 data mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .basis import BasisFileError
from .config import ConfigError, load_config, parse_override
from .mesh import MeshError
from .solver import NewtonFailure

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_DATA = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irkfsi", description="Monolithic FSI with Radau IIA stepping and reduced models")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help_, config=True):
        p = sub.add_parser(name, help=help_)
        if config:
            p.add_argument("config", nargs="?", help="INI configuration file (defaults apply when omitted)")
            p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                           help="override a configuration value")
            p.add_argument("-o", "--output", help="output directory (overrides run.output)")
        return p

    p = cmd("run-hf", "full-order simulation")
    p.add_argument("--resume", action="store_true", help="continue from output/checkpoint.npz")
    p.add_argument("--max-steps", type=int, help="stop after this many steps and leave a checkpoint")
    cmd("build-rom", "build a reduced basis from stored snapshots")
    cmd("run-rom", "reduced simulation over rom.window")
    cmd("sweep", "parametric train/test study")
    cmd("convergence", "time-step self-convergence study")
    p = cmd("spectrum", "amplitude spectrum of a time-series channel", config=False)
    p.add_argument("csv")
    p.add_argument("--channel", default="F_x")
    p.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    p.add_argument("-o", "--output", help="spectrum CSV path")
    p = cmd("export-vtk", "write stored fields as VTK files")
    p.add_argument("--steps", type=int, nargs="*", help="step indices (default: all)")
    p.add_argument("--undeformed", action="store_true")
    cmd("print-config", "print the full configuration with defaults")
    return ap


def _config(args):
    overrides = dict(parse_override(s) for s in args.set)
    if getattr(args, "output", None):
        overrides["run.output"] = args.output
    return load_config(args.config, overrides)


def _run(args) -> int:
    from . import workflow as wf

    if args.command == "spectrum":
        res = wf.spectrum(args.csv, args.channel, tuple(args.window) if args.window else None, args.output)
        print(f"dominant frequency {res['dominant']:.6g} (resolution {res['resolution']:.3g})")
        return EXIT_OK
    cfg = _config(args)
    out = Path(cfg["run.output"])
    if args.command == "print-config":
        print(f"# config_hash={cfg.hash()} version={__version__}")
        print(cfg.to_text())
        return EXIT_OK
    if args.command == "run-hf":
        res = wf.run_hf(cfg, out, resume=args.resume, max_steps=args.max_steps)
        print(f"{len(res.series.times)} steps written to {out / 'hf_series.csv'}")
        if res.failure:
            print(f"solver failure at {res.failure}", file=sys.stderr)
            return EXIT_SOLVER
        return EXIT_OK
    if args.command == "build-rom":
        _, rep = wf.build_rom(cfg, out)
        print(json.dumps(rep, sort_keys=True))
        return EXIT_OK
    if args.command == "run-rom":
        res, rep = wf.run_rom(cfg, out)
        print(json.dumps({k: v for k, v in rep.items() if k != "failure"}, sort_keys=True))
        if res.failure:
            print(f"reduced solver failure at {res.failure}", file=sys.stderr)
            return EXIT_SOLVER
        return EXIT_OK
    if args.command == "sweep":
        summary = wf.sweep(cfg, out)
        for f in summary["failures"]:
            print(f"failed point: {f}", file=sys.stderr)
        return EXIT_OK
    if args.command == "convergence":
        res = wf.convergence(cfg, out)
        for s, fit in res["fits"].items():
            print(f"s={s} rate={fit.rate:.3f} monotone={fit.monotone}")
        return EXIT_OK
    if args.command == "export-vtk":
        paths = wf.export_vtk(cfg, out, args.steps, not args.undeformed)
        print(f"{len(paths)} VTK files written")
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    from .workflow import DataMismatch

    try:
        return _run(args)
    except (ConfigError, MeshError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NewtonFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataMismatch, BasisFileError) as exc:
        print(f"data mismatch: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
