"""Batch command line front end.

Subcommands run the estimators on parsed spec files and emit deterministic
CSV or JSON reports (identical bytes for identical config and seed). Exit
codes: 0 success, 1 failed checks, 2 validation failure, 3 enumeration cap
exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import symbolic
from .checks import run_checks
from .errors import CapExceededError, SpecFileError, ThermoshiftError
from .formats import (read_cocycle, read_ifs, read_markov_measure,
                      read_potential, read_subshift)
from .geometry import box_dimension, ifs_dimension, moran_root, unstable_potential
from .potentials import (additive_sequence, cocycle_norm_sequence,
                         constant_potential, zero_sequence)
from .pressure import (PressureEstimate, perron_pressure,
                       periodic_orbit_pressure, caratheodory_pressure,
                       separated_pressure, sequence_pressure, spanning_pressure)
from .variational import (MarkovMeasure, equilibrium_measure, free_energy,
                          generic_branches, hyperbolic_gap,
                          spanning_free_energy, sup_over_basic_sets)

COLUMNS = ("command", "method", "status", "params", "value",
           "bracket_lo", "bracket_hi", "diagnostics")
REPORT_VERSION = "thermoshift-report-v1"


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _params_cell(params: dict) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()))


def _diag_cell(diagnostics) -> str:
    return "|".join(f"{_fmt(k)}:{_fmt(v)}" for k, v in diagnostics)


def _row(command, method, *, value=None, params=None, bracket=None,
         diagnostics=(), status=""):
    lo, hi = (bracket if bracket is not None else ("", ""))
    return {
        "command": command, "method": method, "status": status,
        "params": _params_cell(params or {}), "value": _fmt(value),
        "bracket_lo": _fmt(lo), "bracket_hi": _fmt(hi),
        "diagnostics": _diag_cell(diagnostics),
    }


def _estimate_row(command: str, est: PressureEstimate):
    return _row(command, est.method, value=est.value, params=est.params,
                bracket=est.bracket, diagnostics=est.diagnostics)


def _emit(rows, args) -> None:
    header = {"report": REPORT_VERSION, "command": args.command,
              "seed": args.seed, "format": args.format}
    if args.format == "json":
        payload = {"header": header,
                   "rows": [dict(zip(COLUMNS, (r[c] for c in COLUMNS)))
                            for r in rows]}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        for key in sorted(header):
            buf.write(f"# {key}={header[key]}\n")
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_potential(args, sft):
    if getattr(args, "potential", None):
        return read_potential(args.potential, sft)
    return constant_potential(sft, 0.0)


def cmd_pressure(args):
    sft = read_subshift(args.system)
    phi = _load_potential(args, sft)
    eps = 2.0 ** (-args.eps_exp)
    rows = [
        _row("pressure", "perron", value=perron_pressure(sft, phi),
             params={"range": phi.r}),
        _estimate_row("pressure", spanning_pressure(sft, phi, eps, args.n_max)),
        _estimate_row("pressure", separated_pressure(sft, phi, eps, args.n_max,
                                                     seed=args.seed)),
        _estimate_row("pressure", periodic_orbit_pressure(sft, phi, args.N_max)),
        _estimate_row("pressure", caratheodory_pressure(
            sft, additive_sequence(phi), depth=args.depth)),
    ]
    return rows, 0


def cmd_sequence_pressure(args):
    sft = read_subshift(args.system)
    if args.cocycle:
        seq = cocycle_norm_sequence(read_cocycle(args.cocycle, sft), args.sign)
    else:
        seq = additive_sequence(_load_potential(args, sft))
    est = sequence_pressure(sft, seq, args.n_max)
    return [_estimate_row("sequence-pressure", est)], 0


def cmd_bowen(args):
    ifs = read_ifs(args.ifs)
    root = ifs_dimension(ifs)
    rows = [_row("bowen", "bowen-root", value=root.t_star,
                 params={"residual": root.residual}, bracket=root.bracket)]
    return rows, 0


def cmd_dimension(args):
    ifs = read_ifs(args.ifs)
    rows = []
    if ifs.separated:
        root = ifs_dimension(ifs)
        rows.append(_row("dimension", "bowen-root", value=root.t_star,
                         params={"residual": root.residual},
                         bracket=root.bracket))
        if ifs.coding.transitions.all():
            rows.append(_row("dimension", "moran",
                             value=moran_root(ifs.ratios), params={}))
    box = box_dimension(ifs, args.depth)
    rows.append(_row("dimension", "box-counting", value=box.estimate,
                     params={"depth": box.depth}, diagnostics=box.scales))
    return rows, 0


def cmd_variational(args):
    sft = read_subshift(args.system)
    phi = _load_potential(args, sft)
    mu_star, fe = equilibrium_measure(sft, phi)
    p = perron_pressure(sft, phi)
    rows = [
        _row("variational", "perron", value=p, params={"range": phi.r}),
        _row("variational", "equilibrium-free-energy", value=fe,
             params={"defect": p - fe}),
    ]
    gap = hyperbolic_gap(sft, additive_sequence(phi), n_max=args.n_max)
    rows.append(_row("variational", "hyperbolic-gap", value=gap.gap,
                     params={"verdict": gap.verdict,
                             "mean_upper": gap.mean_upper,
                             "cycle_estimate": gap.cycle_estimate}))
    if args.measure:
        mu = read_markov_measure(args.measure, sft)
        rows.append(_row("variational", "measure-free-energy",
                         value=free_energy(mu, phi), params={}))
        est = spanning_free_energy(sft, mu, phi, epsilon=2.0 ** (-args.eps_exp),
                                   n=args.n_max, alpha=args.alpha)
        rows.append(_estimate_row("variational", est))
    return rows, 0


def cmd_horseshoe(args):
    sft = read_subshift(args.system)
    base = sft.word([int(c) for c in args.base])
    rho = math.inf if args.rho <= 0 else args.rho
    bs = symbolic.first_return_horseshoe(sft, base, args.n, rho,
                                         max_return=args.max_return)
    phi = _load_potential(args, sft)
    rows = [_row("horseshoe", "branch-system",
                 value=float(len(bs.branches)),
                 params={"base": args.base, "window_lo": bs.window[0],
                         "window_hi": bs.window[1]})]
    rows.append(_row("horseshoe", "saturate-pressure",
                     value=symbolic.saturate_pressure(bs, phi), params={}))
    mu_star, p_mu = equilibrium_measure(sft, phi)
    rho_g = args.rho if 0 < args.rho < 1 else 0.05
    try:
        generic = generic_branches(bs, mu_star, rho=rho_g)
        sat = symbolic.saturate_pressure(generic, phi)
        bound = 2 * rho_g + 4 * rho_g * phi.sup_norm + \
            rho_g * abs(p_mu) / (1 + rho_g)
        rows.append(_row("horseshoe", "sandwich-check", value=sat - p_mu,
                         params={"free_energy": p_mu, "bound": bound,
                                 "branches": len(generic.branches)},
                         bracket=(-bound, bound),
                         status="pass" if abs(sat - p_mu) <= bound else "fail"))
    except ThermoshiftError as exc:
        rows.append(_row("horseshoe", "sandwich-check",
                         params={"skipped": str(exc)}, status="skipped"))
    return rows, 0


def cmd_check(args):
    checks = run_checks(args.seed)
    rows = []
    failures = 0
    for c in checks:
        rows.append(_row("check", c.name, value=c.measured,
                         params={"expected": c.expected, "tol": c.tol},
                         bracket=(c.expected - c.tol, c.expected + c.tol),
                         status="pass" if c.passed else "fail"))
        failures += 0 if c.passed else 1
    return rows, (0 if failures == 0 else 1)


def _add_common(sub, *, n_max=12, N_max=12, depth=12):
    sub.add_argument("--n-max", type=int, default=n_max, dest="n_max")
    sub.add_argument("--N-max", type=int, default=N_max, dest="N_max")
    sub.add_argument("--eps-exp", type=int, default=2, dest="eps_exp",
                     help="epsilon = 2^-m (dyadic)")
    sub.add_argument("--alpha", type=float, default=0.5)
    sub.add_argument("--rho", type=float, default=0.05)
    sub.add_argument("--depth", type=int, default=depth)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoshift",
        description="Pressure, variational and dimension estimators for "
                    "symbolic and conformal IFS models")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("pressure", help="all pressure estimators side by side")
    p.add_argument("--system", required=True)
    p.add_argument("--potential")
    _add_common(p)
    p.set_defaults(fn=cmd_pressure)

    p = subs.add_parser("sequence-pressure", help="P* of a potential sequence")
    p.add_argument("--system", required=True)
    p.add_argument("--cocycle")
    p.add_argument("--potential")
    p.add_argument("--sign", choices=("+", "-"), default="+")
    _add_common(p, n_max=8)
    p.set_defaults(fn=cmd_sequence_pressure)

    p = subs.add_parser("bowen", help="Bowen-equation root of an IFS")
    p.add_argument("--ifs", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_bowen)

    p = subs.add_parser("dimension", help="Bowen, Moran and box dimensions")
    p.add_argument("--ifs", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_dimension)

    p = subs.add_parser("variational", help="equilibrium, gap and free energy")
    p.add_argument("--system", required=True)
    p.add_argument("--potential")
    p.add_argument("--measure")
    _add_common(p, n_max=8)
    p.set_defaults(fn=cmd_variational)

    p = subs.add_parser("horseshoe", help="first-return horseshoe diagnostics")
    p.add_argument("--system", required=True)
    p.add_argument("--potential")
    p.add_argument("--base", required=True, help="base cylinder word, e.g. 0")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--max-return", type=int, default=None, dest="max_return")
    _add_common(p)
    p.set_defaults(fn=cmd_horseshoe)

    p = subs.add_parser("check", help="run the full invariant suite")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    return parser


def main(argv=None) -> int:
    cap_env = os.environ.get("THERMOSHIFT_ENUM_CAP")
    if cap_env:
        try:
            symbolic.DEFAULT_ENUMERATION_CAP = int(cap_env)
        except ValueError:
            print(f"error: bad THERMOSHIFT_ENUM_CAP {cap_env!r}", file=sys.stderr)
            return 2
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows, status = args.fn(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SpecFileError, ThermoshiftError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(rows, args)
    return status


if __name__ == "__main__":
    sys.exit(main())
