"""Command-line harness: scenario runner, config validator, debug dumps.

Exit codes: 0 success, 2 configuration error, 3 resource guard, 4 numerical
failure.  The default output directory comes from SHOTVQE_OUT_DIR.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, default_config, load_config, parse_config
from .scenarios import (SCENARIOS, NumericalFailure, ResourceGuardError,
                        run_scenario, scenario_config)
from .spectrum import SpectrumError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NUMERICAL = 4


def _parse_overrides(args) -> list[tuple[str, str, str]]:
    overrides: list[tuple[str, str, str]] = []
    if args.lattice:
        try:
            l1, l2 = args.lattice.lower().split("x")
        except ValueError:
            raise ConfigError(f"--lattice expects L1xL2, got {args.lattice!r}")
        overrides += [("lattice", "l1", l1), ("lattice", "l2", l2)]
    if args.geometry:
        overrides.append(("lattice", "geometry", args.geometry))
    if args.boundary:
        try:
            b1, b2 = args.boundary.split(",")
        except ValueError:
            raise ConfigError(f"--boundary expects b1,b2 got {args.boundary!r}")
        overrides += [("lattice", "boundary1", b1), ("lattice", "boundary2", b2)]
    if args.j2 is not None:
        overrides.append(("hamiltonian", "j2", str(args.j2)))
    if args.ns:
        overrides.append(("sweep", "ns_grid", args.ns))
    if args.eta is not None:
        overrides.append(("optimizer", "eta", str(args.eta)))
    if args.depth is not None:
        overrides.append(("circuit", "depth", str(args.depth)))
    if args.seed is not None:
        overrides.append(("run", "seed", str(args.seed)))
    if args.workers is not None:
        overrides.append(("run", "workers", str(args.workers)))
    if args.allow_large:
        overrides.append(("run", "allow_large", "true"))
    for item in args.set or ():
        try:
            key, value = item.split("=", 1)
            section, name = key.strip().split(".", 1)
        except ValueError:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        overrides.append((section.strip(), name.strip(), value.strip()))
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shotvqe",
        description="Shot-budget VQE experiments on frustrated Heisenberg lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute a named scenario")
    runp.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    runp.add_argument("--config", help="INI config file layered over scenario defaults")
    runp.add_argument("--seed", type=int)
    runp.add_argument("--workers", type=int)
    runp.add_argument("--out-dir", default=None)
    runp.add_argument("--allow-large", action="store_true")
    runp.add_argument("--lattice", help="extents as L1xL2, e.g. 2x4")
    runp.add_argument("--geometry", choices=("square", "triangular", "hexagonal"))
    runp.add_argument("--boundary", help="per-axis boundaries, e.g. open,periodic")
    runp.add_argument("--j2", type=float, help="j2/j1 coupling ratio")
    runp.add_argument("--ns", help="shot grid, e.g. 2:64 or 1,2,4,8")
    runp.add_argument("--eta", type=float)
    runp.add_argument("--depth", type=int)
    runp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")

    valp = sub.add_parser("validate", help="check a config file and echo it normalized")
    valp.add_argument("--config", required=True)

    sub.add_parser("scenarios", help="list scenario names")
    return parser


def _cmd_run(args) -> int:
    user_text = ""
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            user_text = fh.read()
    cfg = scenario_config(args.scenario, user_text, _parse_overrides(args))
    out_dir = args.out_dir or os.environ.get("SHOTVQE_OUT_DIR", ".")
    rows, files = run_scenario(args.scenario, cfg, out_dir)
    print(f"scenario {args.scenario}: {len(rows)} result rows")
    for f in files:
        print(f"  wrote {f}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    sys.stdout.write(cfg.to_ini())
    reparsed = parse_config(cfg.to_ini())
    if reparsed != cfg:
        print("round-trip mismatch", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "scenarios":
            for name in sorted(SCENARIOS):
                print(name)
            return EXIT_OK
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NumericalFailure, SpectrumError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
