"""Explicit constants and admissible parameter intervals for the three-solution result.

For the Dirichlet problem ``-div a(x, grad u) = lambda k(x) f(u)`` this module
evaluates kappa, G1, G2 and the prefactor

    C = 2^p (2^N - 1) Lambda2 / (tau^p min k),

checks the hypothesis

    delta > gamma kappa  and  F(delta)/delta^p > a1 G1/gamma^(p-1) + a2 G2 gamma^(q-p),

and returns the open interval ``C ] delta^p/F(delta), 1/(a1 G1/gamma^(p-1) + a2 G2 gamma^(q-p)) [``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .embedding import (
    EmbeddingBound,
    cq_bound,
    critical_exponent,
    holder_descent_bound,
    user_bound,
)
from .errors import DomainError
from .geometry import Domain, ball_volume
from .mathkit import minimize1d
from .model import Nonlinearity, Operator, PLaplacian, Weight, piecewise_h

__all__ = [
    "TheoremConstants",
    "AdmissibleInterval",
    "SearchResult",
    "LambdaThreshold",
    "compute_constants",
    "p_laplacian_constants",
    "h2_holds",
    "interval",
    "search_gamma_delta",
    "lambda_threshold",
    "l_bound",
    "piecewise_h_radius",
    "piecewise_h_instance",
    "FORMULAS",
]

THEOREM = "general"
P_LAPLACIAN = "p-laplacian"
HOMOGENEOUS = "homogeneous-threshold"

FORMULAS = {
    "kappa": "kappa = (2^(N-p) / (omega_tau (2^N - 1) Lambda1))^(1/p) * tau",
    "prefactor": "C = 2^p (2^N - 1) Lambda2 / (tau^p min k)",
    "G1": "G1 = C * ||k||_inf * c_1 / Lambda1^(1/p)",
    "G2": "G2 = C * ||k||_inf * c_q^q / (q Lambda1^(q/p))",
    "G1_pLaplacian": "G1 = 2^p (2^N - 1) / (tau^p min k) * ||k||_inf c_1 / p^((p-1)/p)",
    "G2_pLaplacian": "G2 = 2^p (2^N - 1) / (tau^p min k) * ||k||_inf c_q^q / (q p^((p-q)/p))",
    "h2": "delta > gamma kappa and F(delta)/delta^p > a1 G1/gamma^(p-1) + a2 G2 gamma^(q-p)",
    "interval": "C ] delta^p/F(delta), 1/(a1 G1/gamma^(p-1) + a2 G2 gamma^(q-p)) [",
    "threshold": "lambda > C * inf_{delta>0} delta^p/F(delta)",
    "L": "L(r) = c_1 a1 r^(1/p-1)/Lambda1^(1/p) + c_q^q a2 r^(q/p-1)/(q Lambda1^(q/p))",
}


@dataclass(frozen=True)
class TheoremConstants:
    kappa: float
    G1: float
    G2: float
    prefactor: float
    c1: float
    cq: float
    N: int
    p: float
    q: float
    tau: float
    lambda1: float
    lambda2: float
    k_min: float
    k_sup: float
    a1: float
    a2: float
    omega_tau: float
    mode: str = THEOREM
    c1_bound: EmbeddingBound | None = field(default=None, compare=False)
    cq_bound: EmbeddingBound | None = field(default=None, compare=False)
    p_laplacian_agreement: float | None = None

    def rhs(self, gamma) -> Any:
        """a1 G1/gamma^(p-1) + a2 G2 gamma^(q-p)."""
        gamma = np.asarray(gamma, dtype=float)
        return self.a1 * self.G1 / gamma ** (self.p - 1) + self.a2 * self.G2 * gamma ** (self.q - self.p)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "kappa": self.kappa,
            "G1": self.G1,
            "G2": self.G2,
            "prefactor": self.prefactor,
            "c1": self.c1,
            "cq": self.cq,
            "mode": self.mode,
            "inputs": {
                "N": self.N, "p": self.p, "q": self.q, "tau": self.tau,
                "lambda1": self.lambda1, "lambda2": self.lambda2,
                "k_min": self.k_min, "k_sup": self.k_sup, "a1": self.a1, "a2": self.a2,
                "omega_tau": self.omega_tau,
            },
            "embedding": {
                "c1": None if self.c1_bound is None else self.c1_bound.to_dict(),
                "cq": None if self.cq_bound is None else self.cq_bound.to_dict(),
                "note": "embedding constants are upper bounds; a sharper c_q only widens the interval",
            },
            "formulas": {k: FORMULAS[k] for k in ("kappa", "prefactor", "G1", "G2")},
        }
        if self.p_laplacian_agreement is not None:
            out["p_laplacian_agreement"] = self.p_laplacian_agreement
            out["formulas"]["G1_pLaplacian"] = FORMULAS["G1_pLaplacian"]
            out["formulas"]["G2_pLaplacian"] = FORMULAS["G2_pLaplacian"]
        return out


def _resolve_bound(source, N, p, q, measure) -> EmbeddingBound:
    if isinstance(source, EmbeddingBound):
        return source
    if source is None or source == "auto":
        return cq_bound(N, p, q, measure)
    if source == "holder-descent":
        return holder_descent_bound(N, p, q, measure)
    if isinstance(source, (int, float)):
        return user_bound(N, p, q, float(source))
    raise DomainError(f"unknown embedding source {source!r}")


def p_laplacian_constants(N, p, q, tau, k_min, k_sup, c1, cq) -> dict[str, float]:
    """The simplified p-Laplacian expressions (Lambda1 = Lambda2 = 1/p)."""
    base = 2**p * (2**N - 1) / (tau**p * k_min)
    return {
        "prefactor": base / p,
        "G1": base * k_sup * c1 / p ** ((p - 1) / p),
        "G2": base * k_sup * cq**q / (q * p ** ((p - q) / p)),
    }


def compute_constants(
    domain: Domain,
    op: Operator,
    weight: Weight,
    nl: Nonlinearity,
    c1=None,
    cq=None,
) -> TheoremConstants:
    """Evaluate kappa, G1, G2 and the interval prefactor.

    ``c1``/``cq`` are ``None``/``"auto"`` (explicit bounds; unsupported at
    p = N), ``"holder-descent"``, a number (user-supplied) or an
    :class:`EmbeddingBound`.
    """
    N, p, q = domain.dim, op.p, nl.q
    pstar = critical_exponent(N, p)
    if not 1 < q < pstar:
        raise DomainError(f"growth exponent q = {q} must lie in ]1, p*[ = ]1, {pstar}[")
    tau = domain.inradius
    measure = domain.measure
    b1 = _resolve_bound(c1, N, p, 1.0, measure)
    bq = _resolve_bound(cq, N, p, q, measure)
    L1, L2 = op.lambda1, op.lambda2
    omega = ball_volume(N, tau)
    kappa = (2.0 ** (N - p) / (omega * (2**N - 1) * L1)) ** (1 / p) * tau
    C = 2**p * (2**N - 1) * L2 / (tau**p * weight.k_min)
    G1 = C * weight.k_sup * b1.cq / L1 ** (1 / p)
    G2 = C * weight.k_sup * bq.cq**q / (q * L1 ** (q / p))
    mode, agreement = THEOREM, None
    if isinstance(op, PLaplacian):
        alt = p_laplacian_constants(N, p, q, tau, weight.k_min, weight.k_sup, b1.cq, bq.cq)
        agreement = max(abs(alt["G1"] / G1 - 1), abs(alt["G2"] / G2 - 1), abs(alt["prefactor"] / C - 1))
        mode = P_LAPLACIAN
    return TheoremConstants(
        kappa, G1, G2, C, b1.cq, bq.cq, N, p, q, tau, L1, L2,
        weight.k_min, weight.k_sup, nl.a1, nl.a2, omega, mode, b1, bq, agreement,
    )


@dataclass(frozen=True)
class AdmissibleInterval:
    lower: float
    upper: float
    gamma: float
    delta: float
    feasible: bool
    mode: str
    lhs: float
    rhs: float
    violated: str | None = None

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def midpoint(self) -> float:
        return float(0.5 * (self.lower + self.upper))

    def contains(self, lam: float) -> bool:
        return self.lower < lam < self.upper

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "gamma": self.gamma,
            "delta": self.delta,
            "feasible": self.feasible,
            "mode": self.mode,
            "h2_lhs": self.lhs,
            "h2_rhs": self.rhs,
            "margin": self.margin,
            "violated": self.violated,
            "endpoints": "excluded (open interval)",
            "formula": FORMULAS["interval"],
        }


def _primitive_at(nl: Nonlinearity, s: float) -> float:
    return float(nl.F(np.array([s]))[0])


def h2_holds(tc: TheoremConstants, nl: Nonlinearity, gamma: float, delta: float) -> bool:
    """Strict form of the (gamma, delta) hypothesis."""
    if gamma <= 0 or delta <= 0:
        raise DomainError("gamma and delta must be positive")
    if not delta > gamma * tc.kappa:
        return False
    return _primitive_at(nl, delta) / delta**tc.p > float(tc.rhs(gamma))


def interval(tc: TheoremConstants, nl: Nonlinearity, gamma: float, delta: float,
             mode: str | None = None) -> AdmissibleInterval:
    """The certified open interval for a witness (gamma, delta).

    An infeasible witness is returned as a value with ``feasible = False``,
    both endpoints, and the name of the violated inequality.
    """
    if gamma <= 0 or delta <= 0:
        raise DomainError("gamma and delta must be positive")
    p, C = tc.p, tc.prefactor
    Fd = _primitive_at(nl, delta)
    lhs = Fd / delta**p
    rhs = float(tc.rhs(gamma))
    lower = C * delta**p / Fd if Fd > 0 else math.inf
    upper = C / rhs if rhs > 0 else math.inf
    violated = None
    if not delta > gamma * tc.kappa:
        violated = "delta > gamma * kappa"
    elif not lhs > rhs:
        violated = "F(delta)/delta^p > a1 G1/gamma^(p-1) + a2 G2 gamma^(q-p)"
    feasible = violated is None and lower < upper
    if violated is None and not feasible:
        violated = "lower < upper (rounding)"
    return AdmissibleInterval(lower, upper, float(gamma), float(delta), feasible, mode or tc.mode, lhs, rhs, violated)


@dataclass(frozen=True)
class SearchResult:
    interval: AdmissibleInterval
    objective: str
    nearest_miss: float
    grid: int

    @property
    def feasible(self) -> bool:
        return self.interval.feasible

    def to_dict(self):
        return {"objective": self.objective, "nearest_miss": self.nearest_miss, "grid": self.grid,
                "interval": self.interval.to_dict()}


_OBJECTIVES = ("maxUpper", "maxWidth")


def search_gamma_delta(
    tc: TheoremConstants,
    nl: Nonlinearity,
    objective: str = "maxUpper",
    budget: int = 64,
    gamma_range: tuple[float, float] = (1e-3, 1e3),
    delta_range: tuple[float, float] = (1e-3, 1e3),
    refine_rounds: int = 3,
) -> SearchResult:
    """Pick (gamma, delta) on a log grid, then polish by coordinate descent.

    ``budget`` is the number of grid points per axis. Ties go to the
    lexicographically smaller (gamma, delta). If no grid point is feasible
    the result carries the largest (h2 lhs - rhs) seen with delta > gamma kappa.
    """
    if objective not in _OBJECTIVES:
        raise DomainError(f"objective must be one of {_OBJECTIVES}")
    if budget < 1:
        raise DomainError("budget must be >= 1")
    p, C = tc.p, tc.prefactor
    gammas = np.geomspace(*gamma_range, budget)
    deltas = np.geomspace(*delta_range, budget)
    Fd = nl.F(deltas)
    lhs = Fd / deltas**p
    rhs = tc.rhs(gammas)
    with np.errstate(divide="ignore"):
        lower = np.where(Fd > 0, C / np.where(Fd > 0, lhs, 1.0), np.inf)
        upper = np.where(rhs > 0, C / np.where(rhs > 0, rhs, 1.0), np.inf)

    order_ok = deltas[None, :] > gammas[:, None] * tc.kappa
    margin = lhs[None, :] - rhs[:, None]
    ok = order_ok & (margin > 0) & (lower[None, :] < upper[:, None])

    def score(g_up, d_low):
        if objective == "maxUpper":
            # secondary key: smaller lower endpoint
            return (g_up, -d_low)
        return (g_up - d_low, g_up)

    nearest = float(np.max(np.where(order_ok, margin, -np.inf))) if order_ok.any() else -math.inf
    if not ok.any():
        i, j = np.unravel_index(np.argmax(np.where(order_ok, margin, -np.inf)), margin.shape) \
            if order_ok.any() else (0, budget - 1)
        iv = interval(tc, nl, float(gammas[i]), float(deltas[j]))
        return SearchResult(iv, objective, nearest, budget)

    best = None
    for i in range(budget):  # lexicographic scan: strict improvement keeps the smaller pair
        for j in range(budget):
            if ok[i, j]:
                s = score(upper[i], lower[j])
                if best is None or s > best[0]:
                    best = (s, i, j)
    _, i, j = best
    g, d = float(gammas[i]), float(deltas[j])

    def total(gv, dv):
        iv = interval(tc, nl, gv, dv)
        if not iv.feasible:
            return None
        return score(iv.upper, iv.lower)

    for _ in range(refine_rounds):
        glo, ghi = gammas[max(i - 1, 0)], gammas[min(i + 1, budget - 1)]
        if glo < ghi:
            def neg_g(gv, d=d):
                s = total(gv, d)
                return math.inf if s is None else -s[0]
            cand = minimize1d(neg_g, glo, ghi, tol=1e-10 * ghi).argmin
            if total(cand, d) is not None and total(cand, d) >= total(g, d):
                g = cand
        dlo, dhi = deltas[max(j - 1, 0)], deltas[min(j + 1, budget - 1)]
        if dlo < dhi:
            def neg_d(dv, g=g):
                s = total(g, dv)
                if s is None:
                    return math.inf
                return -s[0] if objective == "maxWidth" else -s[1]
            cand = minimize1d(neg_d, dlo, dhi, tol=1e-10 * dhi).argmin
            if total(g, cand) is not None and total(g, cand) >= total(g, d):
                d = cand
    return SearchResult(interval(tc, nl, g, d), objective, nearest, budget)


@dataclass(frozen=True)
class LambdaThreshold:
    threshold: float
    prefactor: float
    ratio: float
    argmin: float
    feasible: bool
    boundary_suspect: bool
    delta_range: tuple[float, float]

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "prefactor": self.prefactor,
            "inf_ratio": self.ratio,
            "argmin_delta": self.argmin,
            "feasible": self.feasible,
            "boundary_suspect": self.boundary_suspect,
            "delta_range": list(self.delta_range),
            "formula": FORMULAS["threshold"],
        }


def lambda_threshold(tc: TheoremConstants, nl: Nonlinearity,
                        delta_range: tuple[float, float] = (1e-3, 1e3)) -> LambdaThreshold:
    """C * inf delta^p / F(delta), the infimum taken over ``delta_range``."""
    lo, hi = delta_range
    p = tc.p
    probe = np.geomspace(lo, hi, 256)
    if not np.any(nl.F(probe) > 0):
        return LambdaThreshold(math.inf, tc.prefactor, math.inf, math.nan, False, False, (lo, hi))

    def phi(d):
        Fd = _primitive_at(nl, d)
        return d**p / Fd if Fd > 0 else math.inf

    res = minimize1d(phi, lo, hi, tol=1e-10)
    # a minimizer pinned to either edge means the true infimum may lie outside
    suspect = res.argmin <= lo * (1 + 1e-6) or res.argmin >= hi * (1 - 1e-6)
    return LambdaThreshold(tc.prefactor * res.minimum, tc.prefactor, res.minimum, res.argmin,
                              True, suspect, (lo, hi))


def l_bound(tc: TheoremConstants, r: float) -> float:
    """Upper bound L(r) for the sublevel ratio sup{Psi : Phi <= r} / (r ||k||_inf)."""
    if r <= 0:
        raise DomainError("r must be positive")
    p, q = tc.p, tc.q
    return (tc.c1 * tc.a1 * r ** (1 / p - 1) / tc.lambda1 ** (1 / p)
            + tc.cq**q * tc.a2 * r ** (q / p - 1) / (q * tc.lambda1 ** (q / p)))


def piecewise_h_radius(tc: TheoremConstants, factor: float = 1.05) -> float:
    """An r with r > max{kappa, (q (G1 + G2))^(1/(q-2))}, scaled by ``factor`` > 1."""
    if factor <= 1:
        raise DomainError("factor must exceed 1 for a strict inequality")
    q = tc.q
    return factor * max(tc.kappa, (q * (tc.G1 + tc.G2)) ** (1 / (q - 2)))


def piecewise_h_instance(domain: Domain, op: Operator, weight: Weight, q: float = 3.0,
                         c1="holder-descent", cq="holder-descent", factor: float = 1.05):
    """Constants, r, nonlinearity and the hand witness (gamma = 1, delta = r) for h."""
    probe = piecewise_h(q, 1.0)
    tc = compute_constants(domain, op, weight, probe, c1, cq)
    r = piecewise_h_radius(tc, factor)
    nl = piecewise_h(q, r)
    return tc, nl, r, interval(tc, nl, 1.0, r)
