"""Command-line front end.

Exit codes: 0 success, 1 reproduction outside tolerance, 2 invalid input,
3 a hypothesis is infeasible or violated, 4 the solver did not converge.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, DomainError, TriplesolError, UnsupportedError
from .geometry import Ball
from .mesh import mesh_for
from .model import (
    VIOLATED,
    check_alpha,
    check_growth,
    check_h0,
    check_h1,
)
from .solver import (
    Problem,
    relative_distance,
    result_to_dict,
    solve_three_detailed,
    verify_weak_solution,
    write_field_csv,
)
from .theorem import (
    HOMOGENEOUS,
    AdmissibleInterval,
    compute_constants,
    lambda_threshold,
    interval,
    piecewise_h_instance,
    search_gamma_delta,
)

__all__ = ["main", "build_parser", "LOG_QUARTIC_CONFIG", "PIECEWISE_H_CONFIG"]

log = logging.getLogger("triplesol")

EXIT_OK, EXIT_MISS, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 1, 2, 3, 4

LOG_QUARTIC_CONFIG = {
    "domain": {"type": "ball", "N": 5, "radius": 1.0},
    "operator": {"type": "p-laplacian", "p": 4},
    "weight": {"type": "constant", "value": 1.0},
    "nonlinearity": {"builtin": "log-quartic"},
}
LOG_QUARTIC_PREFACTOR = 124.0
LOG_QUARTIC_RATIO = (6.00, 6.13)

PIECEWISE_H_CONFIG = {
    "domain": {"type": "ball", "N": 2, "radius": 1.0},
    "operator": {"type": "matrix", "matrix": [[1.0, 0.0], [0.0, 1.0]], "lambda1": 0.5, "lambda2": 0.5},
    "weight": {"type": "constant", "value": 1.0},
    "nonlinearity": {"builtin": "piecewise-h", "q": 3},
    "embedding": {"c1": "holder-descent", "cq": "holder-descent"},
    "lambda": "midpoint",
    "solver": {"mesh": "radial", "resolution": 256, "tol": 1e-6},
}


class Infeasible(TriplesolError):
    def __init__(self, message: str, document: dict):
        super().__init__(message)
        self.document = document


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, numpy scalars plain numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=False)


@dataclass
class Certified:
    constants: Any
    nl: Any
    interval: AdmissibleInterval | None
    search: dict | None
    r: float | None = None


def _constants(cfg: RunConfig):
    spec = cfg.nonlinearity_spec
    if spec.get("builtin") == "piecewise-h" and "r" not in spec:
        tc, nl, r, iv = piecewise_h_instance(cfg.domain, cfg.operator, cfg.weight, float(spec["q"]),
                                             cfg.c1, cfg.cq)
        return tc, nl, r, iv
    nl = cfg.nonlinearity()
    tc = compute_constants(cfg.domain, cfg.operator, cfg.weight, nl, cfg.c1, cfg.cq)
    return tc, nl, None, None


def certify(cfg: RunConfig) -> Certified:
    """Constants plus an interval from the configured witness, the hand witness, or a search."""
    tc, nl, r, hand = _constants(cfg)
    s = cfg.search
    if s.gamma is not None:
        return Certified(tc, nl, interval(tc, nl, s.gamma, s.delta), {"witness": "configured"}, r)
    if hand is not None:
        return Certified(tc, nl, hand, {"witness": "gamma = 1, delta = r"}, r)
    res = search_gamma_delta(tc, nl, s.objective, s.budget, s.gamma_range, s.delta_range)
    info = {"witness": "search", "objective": res.objective, "grid": res.grid, "nearest_miss": res.nearest_miss}
    return Certified(tc, nl, res.interval, info, r)


def _hypotheses(cfg: RunConfig, cert: Certified) -> dict:
    nl, p = cert.nl, cfg.operator.p
    delta = cert.interval.delta if cert.interval is not None else 1.0
    growth = check_growth(nl)
    h0 = check_h0(nl, delta)
    h1 = check_h1(nl, p)
    alpha = check_alpha(cfg.operator, cfg.domain.dim)
    return {
        "growth": growth.to_dict(),
        "h0": h0.to_dict(),
        "h1": h1.to_dict(),
        "alpha": alpha.to_dict(),
        "_failed": [name for name, ok in (("growth", growth.passed), ("h0", h0.passed),
                                          ("h1", h1.status != VIOLATED), ("alpha", alpha.passed)) if not ok],
    }


def _write_certificate(out: Path, doc: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "certificate.json"
    path.write_text(_dump(doc) + "\n")
    return path


# ---------------------------------------------------------------- commands


def cmd_constants(cfg: RunConfig, args) -> tuple[int, dict]:
    tc, nl, r, _ = _constants(cfg)
    doc = {"command": "constants", "config": cfg.to_dict(), "constants": tc.to_dict()}
    if r is not None:
        doc["r"] = r
    return EXIT_OK, doc


def cmd_interval(cfg: RunConfig, args) -> tuple[int, dict]:
    cert = certify(cfg)
    checks = _hypotheses(cfg, cert)
    failed = checks.pop("_failed")
    doc = {
        "command": "interval",
        "config": cfg.to_dict(),
        "constants": cert.constants.to_dict(),
        "interval": cert.interval.to_dict(),
        "witness": cert.search,
        "hypotheses": checks,
    }
    if cert.r is not None:
        doc["r"] = cert.r
    if failed:
        doc["status"] = "hypothesis check failed: " + ", ".join(failed)
        return EXIT_INFEASIBLE, doc
    if not cert.interval.feasible:
        miss = cert.search.get("nearest_miss", cert.interval.margin)
        doc["status"] = f"infeasible: {cert.interval.violated}; nearest miss {miss:.6g}"
        return EXIT_INFEASIBLE, doc
    doc["status"] = "feasible"
    return EXIT_OK, doc


def cmd_threshold(cfg: RunConfig, args) -> tuple[int, dict]:
    tc, nl, r, _ = _constants(cfg)
    th = lambda_threshold(tc, nl, cfg.search.delta_range)
    doc = {"command": "threshold", "mode": HOMOGENEOUS, "config": cfg.to_dict(),
           "constants": tc.to_dict(), "threshold": th.to_dict()}
    if not th.feasible:
        doc["status"] = "infeasible: F(delta) <= 0 on the searched range"
        return EXIT_INFEASIBLE, doc
    doc["status"] = "boundary-suspect" if th.boundary_suspect else "ok"
    return EXIT_OK, doc


def cmd_check_operator(cfg: RunConfig, args) -> tuple[int, dict]:
    rep = check_alpha(cfg.operator, cfg.domain.dim, seed=cfg.solver.seed)
    doc = {"command": "check-operator", "operator": cfg.operator.to_dict(), "report": rep.to_dict(),
           "status": "pass" if rep.passed else "fail"}
    return (EXIT_OK if rep.passed else EXIT_INFEASIBLE), doc


def _mesh(cfg: RunConfig):
    kind = cfg.solver.mesh
    if kind == "auto" and isinstance(cfg.domain, Ball):
        kind = "radial" if cfg.operator.isotropic and cfg.weight.radial else "triangulated"
    return mesh_for(cfg.domain, cfg.solver.resolution, kind)


def _lambda_key(lam: float) -> str:
    return f"{lam:.10g}"


def _solve_one(cfg: RunConfig, cert: Certified, mesh, lam: float) -> dict:
    s = cfg.solver
    iv = cert.interval if cert.interval is not None and cert.interval.feasible else None
    delta = iv.delta if iv is not None else cfg.search.delta
    problem = Problem(cfg.domain, cfg.operator, cfg.weight, cert.nl, lam)
    try:
        rep = solve_three_detailed(problem, mesh, iv, s.tol, s.mp_tol, s.seed, s.distinct, s.path_points,
                                   s.max_iter, s.mp_max_iter, delta)
    except TriplesolError as exc:
        return {"lambda": lam, "error": str(exc), "solutions": [], "attempts": [], "notes": [str(exc)]}
    verified = []
    for sol in rep.solutions:
        vr = verify_weak_solution(problem, mesh, sol.field, tol=10 * sol.tol)
        verified.append((sol, vr))
    return {"lambda": lam, "solutions": verified, "attempts": rep.attempts, "notes": rep.notes,
            "inside": iv is not None and iv.contains(lam)}


def _pairwise_min(solutions) -> float:
    best = math.inf
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            best = min(best, relative_distance(solutions[i].field, solutions[j].field))
    return best


def run_solve(cfg: RunConfig, out: Path) -> tuple[int, dict, list[dict]]:
    cert = None
    try:
        cert = certify(cfg)
    except UnsupportedError:
        if cfg.lambda_mode == "midpoint":
            raise
    if cfg.lambda_mode == "midpoint":
        if not cert.interval.feasible:
            raise Infeasible("lambda = midpoint needs a feasible interval",
                             {"interval": cert.interval.to_dict()})
        failed = _hypotheses(cfg, cert)["_failed"]
        if failed:
            raise Infeasible("lambda = midpoint needs every hypothesis to hold; failed: " + ", ".join(failed),
                             {"interval": cert.interval.to_dict()})
        lambdas = [float(cert.interval.midpoint)]
    elif cfg.lambdas:
        lambdas = list(cfg.lambdas)
    else:
        raise ConfigError("lambda", "solve needs lambda, a lambda list, 'midpoint' or a sweep")
    if cert is None:
        cert = Certified(None, cfg.nonlinearity(), None, None)
    mesh = _mesh(cfg)
    with ThreadPoolExecutor(max_workers=min(len(lambdas), 4)) as pool:
        runs = list(pool.map(lambda lam: _solve_one(cfg, cert, mesh, lam), lambdas))
    runs.sort(key=lambda r: r["lambda"])

    out.mkdir(parents=True, exist_ok=True)
    rows, summary = [], []
    all_ok = True
    for run in runs:
        lam = run["lambda"]
        key = _lambda_key(lam)
        sols = run["solutions"]
        ok = [s for s, vr in sols if s.converged]
        all_ok &= bool(ok)
        entries = []
        for idx, (sol, vr) in enumerate(sols):
            base = out / "solutions" / key
            write_field_csv(sol, base / f"{idx}.csv")
            meta = result_to_dict(sol)
            meta["lambda"] = lam
            meta["verification"] = vr.to_dict()
            (base / f"{idx}.json").write_text(_dump(meta) + "\n")
            rows.append([key, idx, sol.kind, repr(float(sol.energy)), repr(float(sol.residual_norm)), sol.converged])
            entries.append(meta)
        summary.append({
            "lambda": lam,
            "inside_interval": run.get("inside", False),
            "count": len(sols),
            "solutions": entries,
            "min_pairwise_distance": _pairwise_min([s for s, _ in sols]) if len(sols) > 1 else None,
            "attempts": [result_to_dict(a) for a in run["attempts"]],
            "notes": run["notes"],
        })
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "index", "kind", "energy", "residual", "converged"])
        w.writerows(rows)
    doc = {"command": "solve", "config": cfg.to_dict(), "mesh": {"kind": mesh.kind, "nodes": len(mesh.nodes)},
           "results": summary}
    if cert.interval is not None:
        doc["interval"] = cert.interval.to_dict()
    return (EXIT_OK if all_ok else EXIT_NONCONVERGED), doc, summary


def cmd_solve(cfg: RunConfig, args) -> tuple[int, dict]:
    code, doc, _ = run_solve(cfg, Path(cfg.output))
    return code, doc


def reproduce_log_quartic(args) -> tuple[int, dict]:
    t0 = time.perf_counter()
    cfg = RunConfig.from_dict(dict(LOG_QUARTIC_CONFIG, output=args.out or "out"))
    tc, nl, _, _ = _constants(cfg)
    th = lambda_threshold(tc, nl)
    lo, hi = LOG_QUARTIC_RATIO
    checks = {
        "prefactor_exact": abs(th.prefactor - LOG_QUARTIC_PREFACTOR) <= 1e-9 * LOG_QUARTIC_PREFACTOR,
        "ratio_in_range": lo <= th.threshold / LOG_QUARTIC_PREFACTOR <= hi,
    }
    doc = {
        "command": "reproduce log-quartic",
        "config": cfg.to_dict(),
        "constants": tc.to_dict(),
        "threshold": th.to_dict(),
        "ratio": th.threshold / LOG_QUARTIC_PREFACTOR,
        "checks": checks,
        "seconds": time.perf_counter() - t0,
    }
    return (EXIT_OK if all(checks.values()) else EXIT_MISS), doc


def reproduce_piecewise_h(args) -> tuple[int, dict]:
    t0 = time.perf_counter()
    base = dict(PIECEWISE_H_CONFIG, output=args.out or "out")
    cfg = RunConfig.from_dict(base).with_overrides(seed=args.seed, tol=args.tol)
    cert = certify(cfg)
    doc = {
        "command": "reproduce piecewise-h",
        "config": cfg.to_dict(),
        "constants": cert.constants.to_dict(),
        "r": cert.r,
        "interval": cert.interval.to_dict(),
    }
    if not cert.interval.feasible:
        doc["status"] = f"infeasible: {cert.interval.violated}"
        return EXIT_INFEASIBLE, doc
    code, solve_doc, summary = run_solve(cfg, Path(cfg.output))
    entry = summary[0]
    sols = [s for s in entry["solutions"] if s["converged"] and s["residual_norm"] <= cfg.solver.tol]
    minima = [s for s in sols if s["kind"] == "minimizer"]
    saddles = [s for s in entry["solutions"] if s["kind"] == "mountain-pass"]
    dist = entry["min_pairwise_distance"]
    checks = {
        "interval_feasible": True,
        "at_least_two_solutions": len(sols) >= 2,
        "pairwise_distance_gt_0.1": dist is not None and dist > 0.1,
    }
    if saddles:
        checks["third_above_minima"] = all(saddles[0]["energy"] > m["energy"] for m in minima)
    doc.update({"lambda": entry["lambda"], "solutions": entry["solutions"], "notes": entry["notes"],
                "min_pairwise_distance": dist, "checks": checks,
                "seconds": time.perf_counter() - t0})
    required = checks["at_least_two_solutions"] and checks["pairwise_distance_gt_0.1"]
    return (EXIT_OK if required and code == EXIT_OK else EXIT_NONCONVERGED), doc


# ---------------------------------------------------------------- output


_SHORT_KIND = {"minimizer": "min", "mountain-pass": "mp"}


def _human(doc: dict) -> str:
    cmd = doc.get("command", "")
    lines = [f"[{cmd}]"]
    c = doc.get("constants")
    if c:
        lines.append(f"  mode      {c['mode']}")
        lines.append(f"  kappa     {c['kappa']:.10g}")
        lines.append(f"  G1        {c['G1']:.10g}")
        lines.append(f"  G2        {c['G2']:.10g}")
        lines.append(f"  prefactor {c['prefactor']:.10g}")
        lines.append(f"  c1        {c['c1']:.10g} ({c['embedding']['c1']['regime']})")
        lines.append(f"  cq        {c['cq']:.10g} ({c['embedding']['cq']['regime']})")
    if doc.get("r") is not None:
        lines.append(f"  r         {doc['r']:.10g}")
    iv = doc.get("interval")
    if iv:
        lines.append(f"  interval  ]{iv['lower']:.10g}, {iv['upper']:.10g}[  gamma={iv['gamma']:.6g} "
                     f"delta={iv['delta']:.6g} feasible={iv['feasible']}")
    th = doc.get("threshold")
    if th:
        lines.append(f"  threshold {th['threshold']:.10g} (prefactor {th['prefactor']:.10g}, "
                     f"inf ratio {th['inf_ratio']:.10g} at delta={th['argmin_delta']:.6g})")
    hyp = doc.get("hypotheses")
    if hyp:
        for name in ("growth", "h0", "h1"):
            lines.append(f"  {name:<9} {hyp[name]['status']}")
        lines.append(f"  alpha     {'pass' if hyp['alpha']['passed'] else 'fail'}")
    rep = doc.get("report")
    if rep:
        for name, chk in rep["conditions"].items():
            lines.append(f"  {name:<9} {'pass' if chk['passed'] else 'fail'}  worst={chk['worst_violation']:.3e}")
    results = doc.get("results")
    if results:
        lines.append(f"  {'lambda':>14} {'#sol':>5}  energies / residuals")
        for res in results:
            parts = ", ".join(f"{_SHORT_KIND.get(s['kind'], s['kind'])}:{s['energy']:.8g}/{s['residual_norm']:.1e}" for s in res["solutions"])
            lines.append(f"  {res['lambda']:>14.8g} {res['count']:>5}  {parts}")
            for note in res["notes"]:
                lines.append(f"  {'':>14} note: {note}")
    elif doc.get("solutions"):
        for s in doc["solutions"]:
            lines.append(f"  {s['kind']:<13} J={s['energy']:.10g} residual={s['residual_norm']:.2e} "
                         f"max|u|={s['max_abs']:.6g}")
        for note in doc.get("notes", []):
            lines.append(f"  note: {note}")
    if "ratio" in doc:
        lines.append(f"  threshold / prefactor = {doc['ratio']:.6g}")
    for name, ok in doc.get("checks", {}).items():
        lines.append(f"  check {name}: {'ok' if ok else 'MISS'}")
    if "status" in doc:
        lines.append(f"  status    {doc['status']}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="run configuration (JSON)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="solver seed")
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="solver residual tolerance")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable stdout")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="triplesol", parents=[common],
                                     description="Certified intervals and multiple solutions for "
                                                 "-div a(x, grad u) = lambda k f(u), u = 0 on the boundary.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("constants", "embedding bounds, kappa, G1, G2 and the prefactor"),
        ("interval", "hypothesis checks and a certified lambda interval"),
        ("threshold", "lambda threshold for the pure p-homogeneous case"),
        ("solve", "solve at each configured lambda"),
        ("check-operator", "sample the structural conditions on the operator"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    rep = sub.add_parser("reproduce", parents=[common], help="rerun a worked example")
    rep.add_argument("which", choices=["log-quartic", "piecewise-h"])
    return parser


_COMMANDS = {
    "constants": cmd_constants,
    "interval": cmd_interval,
    "threshold": cmd_threshold,
    "solve": cmd_solve,
    "check-operator": cmd_check_operator,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, default in (("config", None), ("out", None), ("seed", None), ("tol", None),
                         ("json", False), ("verbose", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "reproduce":
            fn = reproduce_log_quartic if args.which == "log-quartic" else reproduce_piecewise_h
            code, doc = fn(args)
            out = Path(args.out or "out")
        else:
            if args.config is None:
                raise ConfigError("--config", f"'{args.command}' needs --config <path>")
            cfg = load_config(args.config).with_overrides(args.seed, args.tol, args.out)
            code, doc = _COMMANDS[args.command](cfg, args)
            out = Path(cfg.output)
        if args.command != "check-operator":
            _write_certificate(out, doc)
    except ConfigError as exc:
        return _fail(args, EXIT_INVALID, "invalid configuration", str(exc), getattr(exc, "path", None))
    except UnsupportedError as exc:
        return _fail(args, EXIT_INVALID, "unsupported", str(exc))
    except Infeasible as exc:
        return _fail(args, EXIT_INFEASIBLE, "infeasible", str(exc))
    except DomainError as exc:
        return _fail(args, EXIT_INVALID, "invalid input", str(exc))
    print(_dump(doc) if args.json else _human(doc))
    return code


def _fail(args, code: int, kind: str, message: str, path: str | None = None) -> int:
    if args.json:
        print(_dump({"error": kind, "message": message, "path": path, "exit_code": code}))
    else:
        print(f"error ({kind}): {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
