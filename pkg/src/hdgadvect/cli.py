"""Command-line front end.

A single run prints a report summary; `--sweep p=.. levels=..` runs a
convergence study and writes its CSV, text table, and figure into the
output directory.  Options can also come from a line-oriented
`key = value` config file; explicit command-line flags win.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .condensation import BlockInversionError, SchurSolveError
from .driver import PhaseError, RunConfig, run, run_sweep

__all__ = ["main"]


class UsageError(Exception):
    """Bad command line or config file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # raise instead of sys.exit(2)
        raise UsageError(message)


# config-file key -> (converter, also a CLI destination)
_OPTION_TYPES = {
    "testcase": str,
    "p": int,
    "level": int,
    "cells": int,
    "dirk_order": int,
    "dt": float,
    "steps": int,
    "t_end": float,
    "alpha": float,
    "block_size": int,
    "out": str,
    "write_every": int,
    "mesh": str,
    "sweep": str,
}


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="hdgadvect",
        description="Hybridized DG solver for 2D linear advection on "
                    "triangular meshes with DIRK time stepping.",
    )
    parser.add_argument("--config", metavar="FILE",
                        help="key = value config file; flags override it")
    parser.add_argument("--testcase", choices=["steady", "unsteady_ode",
                                               "unsteady_pde", "solid_body"],
                        help="built-in problem (default: steady)")
    parser.add_argument("--p", type=int, help="polynomial degree 0..4")
    parser.add_argument("--level", type=int,
                        help="refinement level j (3*2^j cells per side)")
    parser.add_argument("--cells", type=int,
                        help="cells per side (alternative to --level)")
    parser.add_argument("--dirk-order", type=int, dest="dirk_order",
                        help="DIRK order 1..4 (default: min(p+1, 4))")
    parser.add_argument("--dt", type=float, help="time step size")
    parser.add_argument("--steps", type=int, help="number of time steps")
    parser.add_argument("--t-end", type=float, dest="t_end", help="end time")
    parser.add_argument("--alpha", type=float,
                        help="flux penalty (default: max |u . nu|)")
    parser.add_argument("--block-size", type=int, dest="block_size",
                        help="rows per batch in the block inversion")
    parser.add_argument("--out", help="output directory (default: .)")
    parser.add_argument("--write-every", type=int, dest="write_every",
                        help="steps between VTK writes (0: no field output)")
    parser.add_argument("--mesh", help="mesh file to import instead of the "
                                       "structured grid")
    parser.add_argument("--sweep", nargs="+", metavar="KEY=VALUE",
                        help="convergence study, e.g. --sweep p=1,2,3 "
                             "levels=1-4")
    return parser


def _parse_config_file(path) -> dict:
    """Line-oriented `key = value` settings; '#' starts a comment."""
    settings: dict = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}"
                )
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in _OPTION_TYPES:
                raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
            try:
                settings[key] = _OPTION_TYPES[key](value)
            except ValueError:
                raise UsageError(
                    f"{path}:{lineno}: bad value {value!r} for {key!r}"
                ) from None
    return settings


def _parse_int_list(text: str, what: str) -> list[int]:
    """Comma-separated integers, with a-b ranges allowed."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                values.extend(range(int(lo), int(hi) + 1))
            else:
                values.append(int(part))
        except ValueError:
            raise UsageError(
                f"bad {what} entry {part!r} in sweep specification"
            ) from None
    if not values:
        raise UsageError(f"empty {what} list in sweep specification")
    return values


def _parse_sweep(tokens: Sequence[str]) -> tuple[list[int], list[int]]:
    degrees: Optional[list[int]] = None
    levels: Optional[list[int]] = None
    for token in tokens:
        if "=" not in token:
            raise UsageError(f"sweep token {token!r} is not KEY=VALUE")
        key, value = token.split("=", 1)
        key = key.strip().lower()
        if key == "p":
            degrees = _parse_int_list(value, "degree")
        elif key == "levels":
            levels = _parse_int_list(value, "level")
        else:
            raise UsageError(f"unknown sweep key {key!r} (use p=, levels=)")
    if degrees is None or levels is None:
        raise UsageError("sweep needs both p=.. and levels=..")
    return degrees, levels


def _merge_settings(args: argparse.Namespace) -> dict:
    settings: dict = {}
    if args.config is not None:
        settings.update(_parse_config_file(args.config))
    for key in _OPTION_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _failure_exit_code(exc: PhaseError) -> int:
    if isinstance(exc.cause, OSError):
        return 3
    if exc.phase == "configure":
        return 1
    return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _merge_settings(args)
        sweep_spec = settings.pop("sweep", None)
        if isinstance(sweep_spec, str):
            sweep_spec = sweep_spec.split()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 3

    try:
        if sweep_spec is not None:
            try:
                degrees, levels = _parse_sweep(sweep_spec)
            except UsageError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 1
            result = run_sweep(
                settings.get("testcase", "steady"),
                degrees,
                levels,
                out_dir=settings.get("out", "."),
                dirk_order=settings.get("dirk_order"),
                alpha=settings.get("alpha"),
                block_size=settings.get("block_size"),
            )
            print(result.table, end="")
            print(f"wrote {result.csv_path}")
            print(f"wrote {result.table_path}")
            print(f"wrote {result.figure_path}")
        else:
            config = RunConfig(
                testcase=settings.get("testcase", "steady"),
                p=settings.get("p", 1),
                level=settings.get("level"),
                cells=settings.get("cells"),
                dirk_order=settings.get("dirk_order"),
                dt=settings.get("dt"),
                steps=settings.get("steps"),
                t_end=settings.get("t_end"),
                alpha=settings.get("alpha"),
                block_size=settings.get("block_size"),
                out_dir=settings.get("out", "."),
                write_every=settings.get("write_every", 0),
                mesh_path=settings.get("mesh"),
            )
            report = run(config)
            print(report.summary())
        return 0
    except PhaseError as exc:
        print(f"error in {exc.phase} phase: {exc.cause}", file=sys.stderr)
        return _failure_exit_code(exc)
    except (BlockInversionError, SchurSolveError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
