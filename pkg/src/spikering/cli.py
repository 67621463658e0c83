"""Command-line interface: ``spikering <command> --config PATH [--out DIR]``.

Exit status is 0 on success, 1 when the configuration is invalid and 2
when a run fails.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import scenario
from .errors import InvalidSpecError, ScenarioError, SpikeRingError, UsageError
from .influence import check_admissible, check_contraction_conditions

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

COMMANDS = ("simulate", "fixed-point", "classify", "rate", "measure", "sweep", "check")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= scenario.U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spikering",
                                 description="Pulse-coupled neurons on a circle: simulate, solve, classify.")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "run the event engine and write events + summary",
        "fixed-point": "solve the stationary configuration of isolated neurons",
        "classify": "simulate to termination and classify the terminal state",
        "rate": "simulate and fit the exponential convergence rate",
        "measure": "compare the fixed point's empirical measure with a limit regime",
        "sweep": "run a parameter sweep (config is a sweep file)",
        "check": "admissibility and contraction conditions of the influence",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, type=Path, help="scenario (or sweep) JSON file")
        p.add_argument("--out", type=Path, help="output directory; summary goes to stdout if omitted")
        p.add_argument("--seed", type=_u64, help="override the config seed (master seed for sweeps)")
        p.add_argument("--format", choices=("jsonl", "csv"), help="event log / sweep table format")
    return ap


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None


def _load(args) -> scenario.ScenarioConfig:
    cfg = scenario.parse_scenario(_read(args.config))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _emit(summary: dict, args, out=None):
    out = sys.stdout if out is None else out
    if args.out is None:
        json.dump(scenario.jsonable(summary), out, indent=2, sort_keys=True)
        out.write("\n")


def cmd_simulate(args, analyses=None) -> dict:
    cfg = _load(args)
    res = scenario.run_scenario(cfg, args.out, args.format or "jsonl", analyses)
    return res.summary


def cmd_fixed_point(args) -> dict:
    return scenario.solve_scenario(_load(args), args.out).summary


def cmd_measure(args) -> dict:
    return scenario.measure_scenario(_load(args), args.out).summary


def cmd_check(args) -> dict:
    cfg = _load(args)
    spec = scenario.realized_spec(cfg)
    adm = check_admissible(spec)
    summary = {"influence": scenario.scenario_to_dict(cfg)["influence"],
               "admissible": {**scenario.jsonable(adm), "ok": adm.ok}}
    if spec.epsilon is None:
        summary["contraction_conditions"] = {"ok": None, "skipped": "set influence.epsilon to check"}
    else:
        cc = check_contraction_conditions(spec)
        summary["contraction_conditions"] = {**scenario.jsonable(cc), "ok": cc.ok}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        scenario.write_json(summary, args.out / "check.json")
    return summary


def cmd_sweep(args) -> dict:
    sweep = scenario.parse_sweep(_read(args.config))
    if args.seed is not None:
        sweep = dataclasses.replace(sweep, master_seed=args.seed)
    rows = scenario.run_sweep(sweep)
    fmt = args.format or "csv"
    failed = sum(1 for r in rows if r["error"])
    summary = {"rows": len(rows), "cells": len(sweep.cells()), "failed_rows": failed}
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        scenario.write_sweep(rows, args.out / f"sweep.{fmt}", fmt)
        scenario.write_json(summary, args.out / "summary.json")
    else:
        summary["table"] = rows
    return summary


def dispatch(args) -> dict:
    if args.command == "simulate":
        return cmd_simulate(args)
    if args.command == "classify":
        return cmd_simulate(args, ("classify", "gap_audit"))
    if args.command == "rate":
        return cmd_simulate(args, ("rate",))
    if args.command == "fixed-point":
        return cmd_fixed_point(args)
    if args.command == "measure":
        return cmd_measure(args)
    if args.command == "sweep":
        return cmd_sweep(args)
    return cmd_check(args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = dispatch(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidSpecError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SpikeRingError, OSError, ArithmeticError, ValueError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _emit(summary, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
