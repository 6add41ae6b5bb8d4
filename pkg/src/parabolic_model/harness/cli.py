"""Command line entry point ``parabolic-model``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..errors import ModelError
from ..transforms import CharFunEvaluator, RationalFunction, rational_calculus
from .report import _clean, emit_report, render, report_json, run_scenario, write_contour_csv, \
    write_delta_csv
from .scenario import DEFAULT_TOLERANCES, Scenario, n3_fixture


def _parse_tol(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if k not in DEFAULT_TOLERANCES:
            raise argparse.ArgumentTypeError(f"unknown tolerance {k!r}")
        out[k] = float(v)
    return out


def load_scenario(args) -> Scenario:
    sc = Scenario.from_json(args.config) if args.config else n3_fixture()
    upd = {}
    if args.nodes is not None:
        upd["N"] = args.nodes
    if args.tmax is not None:
        upd["T_max"] = args.tmax
    if args.seed is not None:
        upd["seed"] = args.seed
    tol = dict(sc.tolerances)
    tol.update(_parse_tol(args.tol_override))
    upd["tolerances"] = tol
    return replace(sc, **upd)


def _complex_pairs(v):
    a = np.asarray(v, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _parse_q(text: str) -> RationalFunction:
    d = json.loads(text if text.lstrip().startswith("{") else Path(text).read_text())
    poles = _complex_pairs(d["poles"])
    res = _complex_pairs(d["residues"])
    const = complex(*d.get("const", [0.0, 0.0]))
    return RationalFunction.scalar(poles, res, const)


def cmd_geometry(args) -> int:
    sc = load_scenario(args)
    b = sc.build()
    print(json.dumps(_clean(b.constants.as_dict()), sort_keys=True, indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_contour_csv(b.contour, out / "contour.csv")
    return 0 if not b.constants.violations() else 1


def cmd_delta(args) -> int:
    sc = load_scenario(args)
    b = sc.build()
    ev = CharFunEvaluator(b.system, b.constants.kappa, b.constants, b.domain)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_delta_csv(ev, b.contour, out / "delta_along_gamma.csv")
    print(out / "delta_along_gamma.csv")
    return 0


def cmd_verify(args) -> int:
    sc = load_scenario(args)
    b = sc.build()
    rep = run_scenario(sc, b)
    if args.out:
        emit_report(rep, args.out, b)
    print(render(json.loads(report_json(rep))))
    return 0 if rep.passed else 1


def cmd_calculus(args) -> int:
    sc = load_scenario(args)
    b = sc.build()
    q = _parse_q(args.q)
    direct = rational_calculus(b.system, q, "direct", domain=b.domain)
    contour = rational_calculus(b.system, q, "contour", contour=b.contour)
    rel = float(np.linalg.norm(direct - contour, 2) / max(np.linalg.norm(direct, 2), 1e-300))
    tol = sc.tol("calculus")
    out = {"q_of_A": direct, "q_of_A_contour": contour, "relative_difference": rel, "tol": tol,
           "passed": rel <= tol}
    text = json.dumps(_clean(out), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "calculus.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if rel <= tol else 1


def cmd_report(args) -> int:
    d = json.loads(Path(args.input).read_text())
    print(render(d))
    return 0 if d.get("passed") else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parabolic-model",
                                description="Functional-model verification on parabolic contours")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON (default: the n=3 fixture)")
    common.add_argument("--nodes", type=int, help="number of contour nodes N")
    common.add_argument("--tmax", type=float, help="truncation abscissa T_max")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol-override", action="append", metavar="NAME=VALUE")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("geometry", parents=[common], help="print the constants bundle").set_defaults(
        fn=cmd_geometry)
    sub.add_parser("delta", parents=[common], help="sample delta along Gamma to CSV").set_defaults(
        fn=cmd_delta)
    sub.add_parser("verify", parents=[common], help="run the full check suite").set_defaults(
        fn=cmd_verify)
    c = sub.add_parser("calculus", parents=[common], help="evaluate q(A) for a rational q")
    c.add_argument("--q", required=True,
                   help='JSON (or file) {"poles": [[re, im], ...], "residues": [[re, im], ...], '
                        '"const": [re, im]}')
    c.set_defaults(fn=cmd_calculus)
    r = sub.add_parser("report", help="re-render a stored report JSON")
    r.add_argument("input")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelError, argparse.ArgumentTypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
