"""Run a scenario end to end and write the report artefacts."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..transforms import CharFunEvaluator
from . import checks as C
from .scenario import Built, Scenario

SCHEMA_VERSION = "1.0"

ALL_CHECKS = ("constants_chain", "separation", "spectral_inclusion", "norm_bounds",
              "inverse_identity", "delta_two_formulas", "delta_two_sided_admissible",
              "intertwining", "h_factorization", "transfer_difference", "exactness",
              "duality", "kernel", "k_bound", "membership_coherence", "model_operator", "plemelj")


@dataclass
class Report:
    scenario: dict
    constants: dict
    contour: dict
    checks: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def as_dict(self) -> dict:
        """Report content without timing (timing is kept apart for determinism)."""
        return {"schema_version": SCHEMA_VERSION, "scenario": self.scenario,
                "constants": self.constants, "contour": self.contour, "checks": self.checks,
                "bounds": self.bounds, "passed": self.passed}


def _clean(obj):
    """JSON-safe copy: complex -> [re, im], non-finite -> None, numpy -> python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def report_json(report: Report) -> str:
    return json.dumps(_clean(report.as_dict()), sort_keys=True, indent=2) + "\n"


def run_scenario(scenario: Scenario, built: Optional[Built] = None) -> Report:
    """Build constants, contour and characteristic function, then run the checks.

    Checks draw from independent seeded streams, so the report does not
    depend on which checks are enabled.
    """
    t_start = time.perf_counter()
    timing = {}
    b = built if built is not None else scenario.build()
    timing["build"] = time.perf_counter() - t_start
    cb, system, dom, contour = b.constants, b.system, b.domain, b.contour
    ev = CharFunEvaluator(system, cb.kappa, cb, dom)
    enabled = set(ALL_CHECKS if scenario.checks is None else scenario.checks)
    unknown = enabled - set(ALL_CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")

    def rng(i):
        return np.random.default_rng([scenario.seed, 1000 + i])

    results = {}
    bounds = {}

    def run(name, fn):
        if name not in enabled:
            return
        t0 = time.perf_counter()
        out = fn()
        for r in (out if isinstance(out, list) else [out]):
            results[r.name] = r.as_dict()
        timing[name] = time.perf_counter() - t0

    run("constants_chain", lambda: C.check_constants(cb))
    run("separation", lambda: C.check_separation(cb, system.weight))
    run("spectral_inclusion", lambda: C.check_spectral_inclusion(system, dom))
    run("norm_bounds", lambda: C.check_norm_bounds(system, dom, cb.eps, contour.T_max))
    run("inverse_identity",
        lambda: C.check_inverse_identity(ev, contour, scenario.tol("inverse_identity")))
    run("delta_two_formulas", lambda: C.check_delta_forms(ev, contour))
    run("delta_two_sided_admissible", lambda: C.check_delta_admissibility(ev, contour, dom, rng(1)))
    run("intertwining", lambda: C.check_intertwining(
        system, contour, scenario.n_trials("intertwining"), scenario.tol("intertwining"), rng(2)))
    run("h_factorization", lambda: C.check_h_factorization(
        system, dom, scenario.n_trials("h_factorization"), scenario.tol("h_factorization"),
        rng(3)))
    run("transfer_difference", lambda: C.check_transfer_difference(
        ev, dom, scenario.n_trials("transfer_difference"), scenario.tol("transfer_difference"),
        rng(4)))
    K = None
    if "exactness" in enabled or "k_bound" in enabled:
        t0 = time.perf_counter()
        try:
            ex = C.check_exactness(system, contour, scenario.tol("exactness_lower"))
            K = ex.K
            res = C.exactness_result(ex, scenario.tol("exactness_lower"))
            bounds.update(frame_lower=ex.frame_lower, frame_upper=ex.frame_upper,
                          K_frame_condition=ex.K,
                          K_interpretations={
                              "frame_condition_number": ex.K,
                              "frame_ratio_upper_over_lower": ex.frame_upper / ex.frame_lower})
        except Exception as exc:  # reported, not raised
            res = C.CheckResult("exactness", float("nan"), scenario.tol("exactness_lower"),
                                comparator="gt", details={"error": str(exc)})
        if "exactness" in enabled:
            results["exactness"] = res.as_dict()
        timing["exactness"] = time.perf_counter() - t0
    run("duality", lambda: C.check_duality(system, ev, contour, scenario.n_trials("duality"),
                                           scenario.tol("duality"), rng(5)))
    run("kernel", lambda: C.check_kernel(
        system, ev, contour, scenario.n_trials("kernel"), scenario.tol("kernel"),
        scenario.tol("adjointness"), scenario.tol("quadrature_vs_rational"), rng(6)))
    if K is not None:
        run("k_bound", lambda: C.check_k_bound(system, contour, K, scenario.n_trials("k_bound"),
                                               scenario.tol("calculus"), rng(7)))
    run("membership_coherence", lambda: C.check_membership_coherence(
        system, ev, contour, scenario.tol("membership")))
    run("model_operator", lambda: C.check_model_operator(
        system, ev, contour, scenario.tol("model_resolvent"), rng(8)))
    run("plemelj", lambda: C.check_plemelj(contour, scenario.n_trials("plemelj"),
                                           scenario.tol("membership"), rng(9)))
    for key in ("inverse_identity", "delta_two_sided_admissible"):
        if key in results:
            bounds.update({k: v for k, v in results[key]["details"].items() if k.startswith("sup")})
    if "norm_bounds" in results:
        bounds.update({k: v for k, v in results["norm_bounds"]["details"].items()
                       if k.startswith("sup")})
    timing["total"] = time.perf_counter() - t_start
    cdict = {"N": contour.N, "T_max": contour.T_max, "tail_bound": contour.tail_bound,
             "pieces": list(contour.piece_kinds),
             "gamma_nodes": int(np.count_nonzero(contour.on_gamma))}
    return Report(scenario=scenario.to_dict(), constants=cb.as_dict(), contour=cdict,
                  checks=results, bounds=bounds, timing=timing)


def write_contour_csv(contour, path) -> None:
    """Columns ``re_z, im_z, re_dz, im_dz, abs_dz, on_gamma``; one row per node."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_z", "im_z", "re_dz", "im_dz", "abs_dz", "on_gamma"])
        for z, dz, a, g in zip(contour.nodes, contour.dz, contour.arclen, contour.on_gamma):
            w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(dz.real)),
                        repr(float(dz.imag)), repr(float(a)), int(g)])


def write_delta_csv(ev: CharFunEvaluator, contour, path) -> None:
    rows = C.delta_along_gamma(ev, contour)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["arc_length", "re_z", "im_z", "sigma_min", "sigma_max"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def write_eigen_csv(system, path) -> None:
    ev = np.sort_complex(np.linalg.eigvals(system.A))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_lambda", "im_lambda"])
        for z in ev:
            w.writerow([repr(float(z.real)), repr(float(z.imag))])


def emit_report(report: Report, out_dir, built: Optional[Built] = None) -> dict:
    """Write ``report.json``, ``timing.json`` and (with ``built``) the CSV files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "timing": out / "timing.json"}
    paths["report"].write_text(report_json(report), encoding="utf-8")
    paths["timing"].write_text(json.dumps(_clean(report.timing), sort_keys=True, indent=2) + "\n",
                               encoding="utf-8")
    if built is not None:
        paths["contour"] = out / "contour.csv"
        write_contour_csv(built.contour, paths["contour"])
        ev = CharFunEvaluator(built.system, built.constants.kappa, built.constants, built.domain)
        paths["delta"] = out / "delta_along_gamma.csv"
        write_delta_csv(ev, built.contour, paths["delta"])
        paths["eigenvalues"] = out / "eigenvalues.csv"
        write_eigen_csv(built.system, paths["eigenvalues"])
    return paths


def render(report_dict: dict) -> str:
    """Plain-text summary of a stored report."""
    lines = [f"scenario: {report_dict['scenario'].get('name')}  "
             f"(schema {report_dict.get('schema_version')})"]
    for name in sorted(report_dict["checks"]):
        c = report_dict["checks"][name]
        op = "<=" if c["comparator"] == "le" else ">"
        lines.append(f"  {'PASS' if c['passed'] else 'FAIL'}  {name:<28} "
                     f"{c['residual']!s:>24} {op} {c['tol']}")
    lines.append("overall: " + ("PASS" if report_dict.get("passed") else "FAIL"))
    return "\n".join(lines)
