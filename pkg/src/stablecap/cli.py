"""Command-line front end: ``stablecap <subcommand> --scenario file.toml ...``.

Exit codes: 0 success, 2 invalid input (nothing written), 3 solver did not
converge (report still written), 64 unknown subcommand, 66 unreadable
scenario or data file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .capstruct_p1 import solve_p1
from .capstruct_p2 import incentive_security_region, price_of_anarchy, solve_p2
from .cdp import CdpDataError, DEFAULT_CUTOFF, report_tables, run_pipeline
from .config import Scenario, expand_sweep, read_scenario
from .core import ValidationError
from .miner_p4 import linear_price_model, simulate_p4, trajectory_csv
from .portfolio_p3 import PRICE_MODELS, price_functions, solve_p3

log = logging.getLogger("stablecap")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_USAGE = 64
EXIT_NO_INPUT = 66

COMMANDS = ("solve-p1", "solve-p2", "solve-p3", "simulate-p4", "security-region",
            "estimate-rho", "price-of-anarchy")
REGION_COLUMNS = ("gamma", "zeta", "delta", "beta", "r", "analytic_secure", "empirical_secure")


class _NoInput(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    """Comma list ``0.1,0.2`` or inclusive range ``start:stop:num``."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return tuple(float(x) for x in np.linspace(float(start), float(stop), int(num)))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stablecap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help, scenario_required=True):
        p.add_argument("--scenario", required=scenario_required, help="scenario TOML file")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--samples", type=int, help="override the Monte Carlo sample count")
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--workers", type=int, default=1, help="worker threads for sweeps")

    for name in ("solve-p1", "solve-p2", "price-of-anarchy"):
        common(sub.add_parser(name), "output JSON (a directory when sweeping)")
    p3 = sub.add_parser("solve-p3")
    common(p3, "output JSON (a directory when sweeping)")
    p3.add_argument("--price-model", choices=sorted(PRICE_MODELS))
    p4 = sub.add_parser("simulate-p4")
    common(p4, "output CSV (a directory when sweeping)")
    p4.add_argument("--rounds", type=int)
    reg = sub.add_parser("security-region")
    common(reg, "output CSV")
    for axis in ("gamma", "zeta", "delta", "beta", "r"):
        reg.add_argument(f"--{axis}", type=_floats, help="comma list or start:stop:num")
    rho = sub.add_parser("estimate-rho")
    rho.add_argument("--scenario", help="optional scenario TOML with a [rho] table")
    rho.add_argument("--cdp-csv")
    rho.add_argument("--prices")
    rho.add_argument("--out", required=True, help="output directory for the CSV tables")
    rho.add_argument("--r-free", type=float, help="annual risk-free rate")
    rho.add_argument("--active-threshold", type=int)
    rho.add_argument("--min-collateral", type=float)
    rho.add_argument("--snapshot-mode", choices=("per-action", "final"))
    return parser


# --------------------------------------------------------------------------- output

def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(command: str, scenario: Scenario, body: dict, extra_header=None) -> str:
    header = {"artifact": "stablecap", "version": __version__, "command": command,
              **scenario.header()}
    if extra_header:
        header.update(extra_header)
    return json.dumps({"header": header, "result": body}, indent=2) + "\n"


# --------------------------------------------------------------------------- commands

def _solve_cell(command: str, sc: Scenario, args) -> tuple[str, bool]:
    """Run one scenario cell; returns (serialized output, converged)."""
    common = dict(seed=sc.seed, count=sc.samples, mode=sc.mode)
    if command == "solve-p1":
        rep = solve_p1(sc.params, sc.returns, sc.utility, grid=sc.grid, timing=sc.timing,
                       max_iterations=sc.max_iterations, **common)
        return _json_text(command, sc, rep.to_dict()), bool(rep.diagnostics["converged"])
    if command == "solve-p2":
        rep = solve_p2(sc.params, sc.returns, sc.utility, grid=sc.grid, **common)
        return _json_text(command, sc, rep.to_dict()), True
    if command == "price-of-anarchy":
        res = price_of_anarchy(sc.params, sc.returns, sc.utility, grid=sc.grid, **common)
        return _json_text(command, sc, res.to_dict()), True
    if command == "solve-p3":
        name = getattr(args, "price_model", None) or sc.price_model
        fns = price_functions(name, sc.params, **sc.price_options)
        rep = solve_p3(sc.params, sc.returns, sc.utility, fns, grid=sc.p3_grid, **common)
        extra = {"p3_grid": sc.p3_grid.describe(), "price_model": name}
        return (_json_text(command, sc, rep.to_dict(), extra),
                bool(rep.diagnostics["converged"]))
    if command == "simulate-p4":
        rounds = args.rounds if getattr(args, "rounds", None) is not None else sc.p4_rounds
        recs = simulate_p4(sc.params, linear_price_model(**sc.p4_price), rounds, sc.seed,
                           return_model=sc.returns, holder_u=sc.utility, config=sc.p4,
                           mode=sc.mode)
        return trajectory_csv(recs), True
    raise AssertionError(command)


def _cmd_solve(command: str, sc: Scenario, args) -> int:
    cells = expand_sweep(sc)
    if len(cells) == 1 and not sc.sweep:
        text, converged = _solve_cell(command, sc, args)
        _atomic_write(args.out, text)
        return EXIT_OK if converged else EXIT_NOT_CONVERGED

    out_dir = Path(args.out)
    suffix = ".csv" if command == "simulate-p4" else ".json"

    def run_cell(i_cell):
        i, (label, cell) = i_cell
        text, converged = _solve_cell(command, cell, args)
        _atomic_write(out_dir / f"cell_{i:04d}{suffix}", text)
        return {"cell": i, "file": f"cell_{i:04d}{suffix}", "sweep": label,
                "converged": converged}

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        index = list(pool.map(run_cell, enumerate(cells)))
    _atomic_write(out_dir / "sweep.json", _json_text(command, sc, {"cells": index}))
    return EXIT_OK if all(c["converged"] for c in index) else EXIT_NOT_CONVERGED


def _cmd_region(sc: Scenario, args) -> int:
    axes = {}
    for axis in ("gamma", "zeta", "delta", "beta", "r"):
        cli_value = getattr(args, axis)
        default = {"gamma": sc.params.gamma, "zeta": sc.params.zeta, "beta": sc.params.beta,
                   "r": sc.params.r_discount, "delta": None}[axis]
        vals = cli_value or sc.region.get(axis) or ((default,) if default is not None else None)
        if not vals:
            raise ValidationError([f"security-region needs a {axis} grid"])
        axes[axis] = vals
    errs = []
    if any(z * d == 0 for z in axes["zeta"] for d in axes["delta"]):
        errs.append("zeta and delta grids must be non-zero")
    if any(not 0 < z < 0.5 for z in axes["zeta"]):
        errs.append("zeta grid must lie in (0, 0.5)")
    if errs:
        raise ValidationError(errs)
    points = incentive_security_region(
        axes["gamma"], axes["zeta"], axes["delta"], axes["beta"], axes["r"], sc.params,
        sc.returns, sc.utility, sc.seed, grid=sc.grid, count=sc.samples, mode=sc.mode)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REGION_COLUMNS)
    for p in points:
        w.writerow([repr(p.gamma), repr(p.zeta), repr(p.delta), repr(p.beta), repr(p.r),
                    int(p.analytic_secure), int(p.empirical_secure)])
    _atomic_write(args.out, buf.getvalue())
    return EXIT_OK if all(p.kappa_converged for p in points) else EXIT_NOT_CONVERGED


def _cmd_rho(sc: Scenario | None, args) -> int:
    opts = dict(sc.rho) if sc is not None else {}
    cdp_csv = args.cdp_csv or opts.get("cdp_csv")
    prices = args.prices or opts.get("prices_csv")
    if not cdp_csv or not prices:
        raise ValidationError(["estimate-rho needs --cdp-csv and --prices (or a [rho] table)"])
    if sc is not None and sc.source:
        base = Path(sc.source).parent
        cdp_csv = args.cdp_csv or str(base / cdp_csv)
        prices = args.prices or str(base / prices)
    for path in (cdp_csv, prices):
        if not os.access(path, os.R_OK):
            raise _NoInput(f"cannot read {path}")
    report = run_pipeline(
        cdp_csv, prices,
        min_collateral_usd=_pick(args.min_collateral, opts.get("min_collateral_usd"), 50.0),
        cutoff=opts.get("cutoff_timestamp", DEFAULT_CUTOFF),
        eoa_only=opts.get("eoa_only", True),
        assume_reinvest=opts.get("assume_reinvest", True),
        r_free_annual=_pick(args.r_free, opts.get("r_free_annual_rate"), 0.02),
        active_threshold=_pick(args.active_threshold, opts.get("active_threshold"), 10),
        snapshot_mode=_pick(args.snapshot_mode, opts.get("snapshot_mode"), "per-action"))
    tables = report_tables(report, opts.get("hist_bins", 20), opts.get("outlier_cap", 1.0))
    summary = {
        "mean_rho_per_cdp": report.mean_rho_cdp,
        "mean_rho_per_address": report.mean_rho_address(),
        "mean_rho_per_active_address": report.mean_rho_address(active_only=True),
        "cdps": len(report.per_cdp),
        "addresses": len(report.per_address),
        "skipped_snapshots": report.skipped,
        "version": __version__,
    }
    tables["summary.json"] = json.dumps(summary, indent=2) + "\n"
    for name, text in tables.items():
        _atomic_write(Path(args.out) / name, text)
    return EXIT_OK


def _pick(*values):
    return next(v for v in values if v is not None)


def _load(args) -> Scenario | None:
    if not args.scenario:
        return None
    try:
        sc = read_scenario(args.scenario)
    except OSError as exc:
        raise _NoInput(f"cannot read scenario {args.scenario}: {exc.strerror or exc}") from None
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "samples", None) is not None:
        if args.samples < 1:
            raise ValidationError(["--samples must be >= 1"])
        changes["samples"] = args.samples
        changes["p4"] = replace(sc.p4, count=args.samples)
    return replace(sc, **changes) if changes else sc


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    first = next((a for a in argv if not a.startswith("-")), None)
    if first is not None and first not in COMMANDS:
        print(f"stablecap: unknown subcommand {first!r}; choose from {', '.join(COMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        sc = _load(args)
        if args.command == "estimate-rho":
            return _cmd_rho(sc, args)
        if args.command == "security-region":
            return _cmd_region(sc, args)
        return _cmd_solve(args.command, sc, args)
    except ValidationError as exc:
        for err in exc.errors:
            print(f"invalid: {err}", file=sys.stderr)
        return EXIT_INVALID
    except CdpDataError as exc:
        for err in exc.errors:
            print(f"invalid: {err}", file=sys.stderr)
        return EXIT_INVALID
    except _NoInput as exc:
        print(f"stablecap: {exc}", file=sys.stderr)
        return EXIT_NO_INPUT
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
