"""Discrete energy J = Phi - lambda Psi, descent to minimizers, and a mountain-pass search.

Phi is assembled from element gradients (piecewise constant), Psi by nodal
quadrature of k F(u). The gradient is the exact derivative of that discrete
energy, so finite-difference checks hold to rounding.

Descent runs in the H^1_0 metric: directions are ``-K^{-1} g`` with ``K`` the
Dirichlet stiffness matrix, which keeps iteration counts mesh independent.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .errors import CollapseError, DomainError
from .geometry import Domain, TentFunction
from .mathkit import minimize1d
from .mesh import Mesh
from .model import Nonlinearity, Operator, PLaplacian, Weight

__all__ = [
    "Problem",
    "DiscreteField",
    "SolveResult",
    "DiscreteEnergy",
    "assemble_energy",
    "gradient",
    "minimize",
    "mountain_pass",
    "solve_three",
    "solve_three_detailed",
    "verify_weak_solution",
    "relative_distance",
    "write_field_csv",
    "result_to_dict",
]

log = logging.getLogger(__name__)

MINIMIZER = "minimizer"
MOUNTAIN_PASS = "mountain-pass"

_GL6_X, _GL6_W = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True)
class Problem:
    domain: Domain
    op: Operator
    weight: Weight
    nl: Nonlinearity
    lam: float

    def with_lambda(self, lam: float) -> "Problem":
        return Problem(self.domain, self.op, self.weight, self.nl, float(lam))


@dataclass(frozen=True, eq=False)
class DiscreteField:
    mesh: Mesh
    values: np.ndarray  # free-node values; boundary values are zero by construction

    def full(self) -> np.ndarray:
        return self.mesh.full(self.values)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.mesh.node_weight * self.values**2)))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass(eq=False)
class SolveResult:
    field: DiscreteField
    energy: float
    phi: float
    psi: float
    residual_norm: float
    iterations: int
    converged: bool
    kind: str
    trace: list[dict] = field(default_factory=list)
    tol: float = math.nan
    note: str = ""


class DiscreteEnergy:
    """J = Phi - lambda Psi on a mesh, with its gradient and H^1_0 preconditioner."""

    def __init__(self, problem: Problem, mesh: Mesh, scale: float = 1.0):
        op = problem.op
        if mesh.kind == "radial":
            if not op.isotropic:
                raise DomainError("radial reduction needs an isotropic operator")
            if not problem.weight.radial:
                raise DomainError("radial reduction needs a radial weight")
        if mesh.dim != problem.domain.dim:
            raise DomainError("mesh and domain dimensions differ")
        self.problem = problem
        self.mesh = mesh
        self.lam = float(problem.lam)
        # kernel smoothing only where |xi|^(p-2) is singular
        self.eps = 1e-8 * max(scale, 1.0) if isinstance(op, PLaplacian) and op.p < 2 else 0.0
        self.k_nodes = problem.weight(mesh.free_nodes)
        self.wk = mesh.node_weight * self.k_nodes
        self._K = mesh.stiffness()
        self._lu = splu(self._K) if mesh.n_free else None
        E = len(mesh.element_measure)
        self._E = E

    # ---- pieces
    def _xi(self, u: np.ndarray) -> np.ndarray:
        g = (self.mesh.grad @ u).reshape(self.mesh.gdim, self._E).T
        if self.mesh.gdim == self.mesh.dim:
            return g
        xi = np.zeros((self._E, self.mesh.dim))
        xi[:, : self.mesh.gdim] = g
        return xi

    def phi(self, u: np.ndarray) -> float:
        A = self.problem.op.density(self.mesh.element_points, self._xi(u), self.eps)
        return float(np.dot(self.mesh.element_measure, A))

    def psi(self, u: np.ndarray) -> float:
        return float(np.dot(self.wk, self.problem.nl.F(u)))

    def energy(self, u: np.ndarray) -> tuple[float, float, float]:
        Phi, Psi = self.phi(u), self.psi(u)
        return Phi - self.lam * Psi, Phi, Psi

    def value(self, u: np.ndarray) -> float:
        return self.energy(u)[0]

    def gradient(self, u: np.ndarray) -> np.ndarray:
        a = self.problem.op.flux(self.mesh.element_points, self._xi(u), self.eps)
        weighted = (a[:, : self.mesh.gdim] * self.mesh.element_measure[:, None]).T.reshape(-1)
        dphi = self.mesh.grad.T @ weighted
        dpsi = self.wk * self.problem.nl(u)
        return dphi - self.lam * dpsi

    def residual_norm(self, g: np.ndarray) -> float:
        """Nodal residual scaled by the node weights (an L^2 proxy of the strong residual)."""
        return float(np.sqrt(np.sum(g * g / self.mesh.node_weight)))

    def precondition(self, g: np.ndarray) -> np.ndarray:
        return self._lu.solve(g)

    def k_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(a @ (self._K @ b))

    def energy_change(self, u: np.ndarray, v: np.ndarray, Ju: float | None = None,
                      Jv: float | None = None) -> float:
        """J(v) - J(u), robust when the change is below the rounding level of J.

        Large changes use the direct difference. Small ones integrate the
        gradient along the segment with a 6-point Gauss rule, which keeps
        the relative accuracy of the increment itself.
        """
        Ju = self.value(u) if Ju is None else Ju
        Jv = self.value(v) if Jv is None else Jv
        direct = Jv - Ju
        if abs(direct) > 1e-7 * (1.0 + abs(Ju)):
            return direct
        d = v - u
        total = 0.0
        for x, w in zip(_GL6_X, _GL6_W):
            total += w * float(self.gradient(u + 0.5 * (1 + x) * d) @ d)
        return 0.5 * total


def assemble_energy(problem: Problem, mesh: Mesh, u: DiscreteField | np.ndarray) -> tuple[float, float, float]:
    """(J, Phi, Psi) at ``u``."""
    vals = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)
    return DiscreteEnergy(problem, mesh, _scale(vals)).energy(vals)


def gradient(problem: Problem, mesh: Mesh, u: DiscreteField | np.ndarray) -> DiscreteField:
    """Discrete residual J'(u) tested against every free nodal basis function."""
    vals = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)
    return DiscreteField(mesh, DiscreteEnergy(problem, mesh, _scale(vals)).gradient(vals))


def _scale(u: np.ndarray) -> float:
    return float(np.max(np.abs(u))) if u.size else 1.0


def _result(E: DiscreteEnergy, u, it, converged, kind, trace, tol, note="") -> SolveResult:
    J, Phi, Psi = E.energy(u)
    res = E.residual_norm(E.gradient(u))
    return SolveResult(DiscreteField(E.mesh, u.copy()), J, Phi, Psi, res, it, converged, kind, trace, tol, note)


DIVERGENCE_CAP = 1e10


def minimize(
    problem: Problem,
    mesh: Mesh,
    u0: DiscreteField | np.ndarray | None = None,
    tol: float = 1e-6,
    max_iter: int = 2000,
    armijo: float = 1e-4,
    energy: DiscreteEnergy | None = None,
) -> SolveResult:
    """Preconditioned steepest descent with Armijo backtracking.

    The trial step is a Barzilai-Borwein estimate in the stiffness metric;
    backtracking halves it until sufficient decrease holds, so every
    accepted step lowers the energy. The trace logs J(u_0) plus the
    accumulated accurate decrements.
    """
    if not 0 < armijo < 0.5:
        raise DomainError("sufficient-decrease parameter must lie in (0, 1/2)")
    if u0 is None:
        u = np.zeros(mesh.n_free)
    else:
        u = np.array(u0.values if isinstance(u0, DiscreteField) else u0, dtype=float)
    E = energy or DiscreteEnergy(problem, mesh, _scale(u))
    J = E.value(u)
    g = E.gradient(u)
    logged = J
    trace = [{"iteration": 0, "energy": logged, "residual": E.residual_norm(g), "step": 0.0}]
    alpha = 1.0
    note = ""
    for it in range(max_iter + 1):
        res = E.residual_norm(g)
        if res <= tol:
            return _result(E, u, it, True, MINIMIZER, trace, tol)
        if it == max_iter:
            note = "iteration budget exhausted"
            break
        d = -E.precondition(g)
        slope = float(g @ d)
        if not slope < 0:
            note = "no descent direction"
            break
        a = alpha
        while True:
            v = u + a * d
            Jv = E.value(v)
            dJ = E.energy_change(u, v, J, Jv) if math.isfinite(Jv) else math.inf
            if dJ <= armijo * a * slope:
                break
            a *= 0.5
            if a < 1e-14 * max(alpha, 1.0):
                note = "line search failed"
                return _result(E, u, it, False, MINIMIZER, trace, tol, note)
        gv = E.gradient(v)
        s, y = v - u, gv - g
        sy = float(s @ y)
        alpha = E.k_inner(s, s) / sy if sy > 0 else 2.0 * a
        alpha = min(max(alpha, 1e-8), 1e8)
        u, g, J = v, gv, Jv
        logged += dJ
        trace.append({"iteration": it + 1, "energy": logged, "residual": E.residual_norm(g), "step": a})
        if np.max(np.abs(u), initial=0.0) > DIVERGENCE_CAP:
            note = f"max|u| passed {DIVERGENCE_CAP:.0e}; the energy looks unbounded below"
            return _result(E, u, it + 1, False, MINIMIZER, trace, tol, note)
    return _result(E, u, max_iter, False, MINIMIZER, trace, tol, note)


def relative_distance(u: DiscreteField, v: DiscreteField) -> float:
    """||u - v||_L2 / max(||u||, ||v||); zero when both fields vanish."""
    nu, nv = u.l2_norm(), v.l2_norm()
    scale = max(nu, nv)
    if scale == 0:
        return 0.0
    return DiscreteField(u.mesh, u.values - v.values).l2_norm() / scale


def _remaximize(E: DiscreteEnergy, v: np.ndarray, tau: np.ndarray) -> float:
    """Maximizer s of J(v + s tau) over [-1/2, 1/2]."""

    def slope(s):
        return float(E.gradient(v + s * tau) @ tau)

    lo, hi = slope(-0.5), slope(0.5)
    if lo > 0 > hi:
        return brentq(slope, -0.5, 0.5, xtol=1e-14, maxiter=200)
    return minimize1d(lambda s: -E.value(v + s * tau), -0.5, 0.5, tol=1e-12, grid_points=16).argmin


def mountain_pass(
    problem: Problem,
    mesh: Mesh,
    uA: DiscreteField | np.ndarray,
    uB: DiscreteField | np.ndarray,
    path_points: int = 21,
    tol: float = 1e-4,
    max_iter: int = 500,
    endpoint_tol: float | None = None,
    energy: DiscreteEnergy | None = None,
) -> SolveResult:
    """Deform a discrete path between two minimizers down to a saddle.

    Each sweep takes the highest interior path point, moves it along the
    negative (preconditioned) gradient, and re-maximizes along the chord
    through its neighbours. A step is kept only if the path maximum drops.
    """
    a_vals = np.array(uA.values if isinstance(uA, DiscreteField) else uA, dtype=float)
    b_vals = np.array(uB.values if isinstance(uB, DiscreteField) else uB, dtype=float)
    if path_points < 3:
        raise DomainError("a path needs at least 3 points")
    fa, fb = DiscreteField(mesh, a_vals), DiscreteField(mesh, b_vals)
    if np.array_equal(a_vals, b_vals) or relative_distance(fa, fb) == 0:
        raise DomainError("mountain pass needs two distinct endpoints")
    E = energy or DiscreteEnergy(problem, mesh, max(_scale(a_vals), _scale(b_vals)))
    endpoint_tol = tol if endpoint_tol is None else endpoint_tol
    for name, u in (("uA", a_vals), ("uB", b_vals)):
        res = E.residual_norm(E.gradient(u))
        if res > endpoint_tol:
            raise DomainError(f"{name} is not a critical point (residual {res:.3e} > {endpoint_tol:.1e})")

    ts = np.linspace(0.0, 1.0, path_points)
    path = [a_vals + t * (b_vals - a_vals) for t in ts]
    J = np.array([E.value(u) for u in path])
    base = max(J[0], J[-1])
    collapse_tol = tol * (1.0 + abs(base))
    trace = []
    step = 1.0
    k = 1
    for it in range(max_iter + 1):
        k = 1 + int(np.argmax(J[1:-1]))
        if J[k] - base <= collapse_tol:
            raise CollapseError(
                f"path maximum {J[k]:.6g} is within {collapse_tol:.1e} of the endpoint level {base:.6g}"
            )
        g = E.gradient(path[k])
        res = E.residual_norm(g)
        trace.append({"iteration": it, "energy": float(J[k]), "residual": res, "index": k, "step": step})
        if res <= tol:
            return _result(E, path[k], it, True, MOUNTAIN_PASS, trace, tol)
        if it == max_iter:
            break
        d = -E.precondition(g)
        tau = path[k + 1] - path[k - 1]
        moved = False
        while step > 1e-12:
            v = path[k] + step * d
            s = _remaximize(E, v, tau)
            w = v + s * tau
            Jw = E.value(w)
            if E.energy_change(path[k], w, J[k], Jw) < 0:
                path[k], J[k] = w, Jw
                moved = True
                break
            step *= 0.5
        if not moved:
            # every trial was re-maximized but the current point was not: lift it to its chord
            # maximum (the path maximum was underestimated) and try again
            s0 = _remaximize(E, path[k], tau)
            w = path[k] + s0 * tau
            Jw = E.value(w)
            if not E.energy_change(path[k], w, J[k], Jw) > 0:
                return _result(E, path[k], it, False, MOUNTAIN_PASS, trace, tol, "deformation stalled")
            path[k], J[k] = w, Jw
            step = 1.0
            continue
        step = min(2.0 * step, 1e3)
    return _result(E, path[k], max_iter, False, MOUNTAIN_PASS, trace, tol, "iteration budget exhausted")


def _same(u: DiscreteField, v: DiscreteField, threshold: float, floor: float) -> bool:
    gap = DiscreteField(u.mesh, u.values - v.values).l2_norm()
    return gap <= floor or relative_distance(u, v) <= threshold


def _dedup(results: Sequence[SolveResult], threshold: float, floor: float = 0.0) -> list[SolveResult]:
    """Keep the first of each cluster; ``floor`` merges fields that differ only at solver-noise level."""
    kept: list[SolveResult] = []
    for r in results:
        if not any(_same(r.field, o.field, threshold, floor) for o in kept):
            kept.append(r)
    return kept


@dataclass
class ThreeSolveReport:
    solutions: list[SolveResult]
    attempts: list[SolveResult]
    notes: list[str]


def solve_three_detailed(
    problem: Problem,
    mesh: Mesh,
    interval=None,
    tol: float = 1e-6,
    mp_tol: float = 1e-4,
    seed: int = 0,
    distinct: float = 0.05,
    path_points: int = 21,
    max_iter: int = 2000,
    mp_max_iter: int = 500,
    delta: float | None = None,
) -> ThreeSolveReport:
    """Minimize from a small random start and from the tent u_delta; join distinct minima by a mountain pass."""
    notes: list[str] = []
    lam = problem.lam
    if interval is not None and not interval.lower < lam < interval.upper:
        msg = f"lambda = {lam:g} lies outside the certified interval ]{interval.lower:g}, {interval.upper:g}["
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    if delta is None and interval is not None:
        delta = interval.delta
    rng = np.random.default_rng(seed)
    E = DiscreteEnergy(problem, mesh, delta or 1.0)
    attempts: list[SolveResult] = []

    small = minimize(problem, mesh, 1e-3 * rng.standard_normal(mesh.n_free), tol, max_iter, energy=E)
    attempts.append(small)
    if delta is not None:
        tent = TentFunction.for_domain(problem.domain, delta)
        big = minimize(problem, mesh, mesh.interpolate(tent), tol, max_iter, energy=E)
        attempts.append(big)
    minima = [r for r in attempts if r.converged]
    for r in attempts:
        if not r.converged:
            notes.append(f"minimizer did not converge: residual {r.residual_norm:.3e} ({r.note})")
    floor = 10.0 * tol
    distinct_minima = _dedup(sorted(minima, key=lambda r: r.energy), distinct, floor)
    if len(distinct_minima) >= 2:
        uA, uB = distinct_minima[0], distinct_minima[1]
        try:
            mp = mountain_pass(problem, mesh, uA.field, uB.field, path_points, mp_tol, mp_max_iter,
                               endpoint_tol=max(tol, mp_tol), energy=E)
            attempts.append(mp)
            if not mp.converged:
                notes.append(f"mountain pass stopped at residual {mp.residual_norm:.3e} ({mp.note})")
        except CollapseError as exc:
            notes.append(f"mountain pass collapsed: {exc}")
    else:
        notes.append("fewer than two distinct minimizers; mountain pass skipped")
    for n in notes:
        log.info(n)
    solutions = _dedup(sorted((r for r in attempts if r.converged), key=lambda r: r.energy), distinct, floor)
    return ThreeSolveReport(sorted(solutions, key=lambda r: r.energy), attempts, notes)


def solve_three(problem: Problem, mesh: Mesh, interval=None, tol: float = 1e-6, **kwargs) -> list[SolveResult]:
    """Converged, deduplicated critical points sorted by energy (may be fewer than three)."""
    return solve_three_detailed(problem, mesh, interval, tol, **kwargs).solutions


@dataclass
class WeakSolutionReport:
    passed: bool
    max_residual: float
    rms_residual: float
    worst_node: int
    worst_point: list[float]
    tol: float
    field_scale: float

    def to_dict(self):
        return dict(self.__dict__)


def verify_weak_solution(problem: Problem, mesh: Mesh, u: DiscreteField | np.ndarray,
                         tol: float = 1e-8) -> WeakSolutionReport:
    """Test J'(u) against every free nodal basis function."""
    vals = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)
    g = DiscreteEnergy(problem, mesh, _scale(vals)).gradient(vals)
    absg = np.abs(g)
    i = int(np.argmax(absg)) if absg.size else 0
    scale = _scale(vals) if vals.size else 0.0
    mx = float(absg[i]) if absg.size else 0.0
    rms = float(np.sqrt(np.mean(g * g))) if g.size else 0.0
    point = mesh.free_nodes[i].tolist() if absg.size else []
    return WeakSolutionReport(mx <= tol * (1 + scale), mx, rms, i, point, tol, scale)


def write_field_csv(result: SolveResult | DiscreteField, path: str | Path) -> None:
    """Node coordinates and values, boundary nodes included."""
    fld = result.field if isinstance(result, SolveResult) else result
    mesh = fld.mesh
    vals = fld.full()
    header = [f"x{i}" for i in range(mesh.dim)] + (["r"] if mesh.kind == "radial" else []) + ["u"]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for node, val in zip(mesh.nodes, vals):
            row = list(node)
            if mesh.kind == "radial":
                row.append(node[0] - 0.0)
            w.writerow([repr(float(x)) for x in row] + [repr(float(val))])


def result_to_dict(result: SolveResult, include_field: bool = False) -> dict[str, Any]:
    out = {
        "kind": result.kind,
        "energy": result.energy,
        "phi": result.phi,
        "psi": result.psi,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "tol": result.tol,
        "max_abs": result.field.max_abs,
        "l2_norm": result.field.l2_norm(),
        "note": result.note,
    }
    if include_field:
        out["nodes"] = result.field.mesh.nodes.tolist()
        out["values"] = result.field.full().tolist()
    return out


def write_result_json(result: SolveResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result_to_dict(result, include_field=True), indent=2))
