"""Scalar numerical primitives: Gamma function, adaptive quadrature, 1-D minimization."""
from __future__ import annotations

import heapq
import math
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "gamma",
    "integrate",
    "minimize1d",
    "QuadratureResult",
    "MinimizeResult",
]

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def gamma(t: float) -> float:
    """Gamma function for real ``t > 0``.

    Uses the Lanczos series for ``t >= 0.5`` and the upward recurrence
    ``Gamma(t) = Gamma(t + 1) / t`` below that.
    """
    t = float(t)
    if not t > 0.0 or not math.isfinite(t):
        raise DomainError(f"gamma requires a finite t > 0, got {t!r}")
    if t < 0.5:
        return gamma(t + 1.0) / t
    z = t - 1.0
    series = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        series += c / (z + i)
    base = z + _LANCZOS_G + 0.5
    log_val = _HALF_LOG_2PI + (z + 0.5) * math.log(base) - base + math.log(series)
    return math.exp(log_val)


class QuadratureResult(NamedTuple):
    value: float
    error_estimate: float
    evaluations: int


_GL_ORDER = 10
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape).astype(float)
    except (TypeError, ValueError):
        y = np.array([float(f(float(xi))) for xi in x])
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise DomainError(f"integrand is not finite at t = {bad!r}")
    return y


def _panel(f: Callable, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(_GL_W, _evaluate(f, mid + half * _GL_X)))


def integrate(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    breakpoints: Sequence[float] = (),
    max_evaluations: int = 200_000,
) -> QuadratureResult:
    """Adaptive Gauss-Legendre quadrature of ``f`` over ``[a, b]``.

    Every panel is compared against its two halves; the panel with the
    largest discrepancy is bisected until the summed discrepancy is below
    ``max(tol, tol * |value|)``. Interior ``breakpoints`` become initial
    panel boundaries, which keeps kinks and jumps out of panel interiors.

    ``f`` should accept numpy arrays; scalar-only callables are evaluated
    point by point.
    """
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if a > b:
        raise DomainError(f"integrate requires a <= b, got [{a}, {b}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)

    edges = sorted({a, b, *(float(c) for c in breakpoints if a < c < b)})
    evaluations = 0
    heap: list[tuple[float, float, float, float, float]] = []
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        coarse = _panel(f, lo, hi)
        mid = 0.5 * (lo + hi)
        fine = _panel(f, lo, mid) + _panel(f, mid, hi)
        evaluations += 3 * _GL_ORDER
        err = abs(fine - coarse)
        total += fine
        total_err += err
        heapq.heappush(heap, (-err, lo, hi, fine, err))

    while total_err > max(tol, tol * abs(total)):
        if evaluations >= max_evaluations:
            raise ConvergenceError(
                f"quadrature budget exhausted on [{a}, {b}]: "
                f"error estimate {total_err:.3e} after {evaluations} evaluations"
            )
        _, lo, hi, fine, err = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # panel cannot be split further in floating point
            raise ConvergenceError(f"quadrature panel [{lo}, {hi}] underflowed")
        total -= fine
        total_err -= err
        for plo, phi in ((lo, mid), (mid, hi)):
            coarse = _panel(f, plo, phi)
            pmid = 0.5 * (plo + phi)
            pfine = _panel(f, plo, pmid) + _panel(f, pmid, phi)
            evaluations += 3 * _GL_ORDER
            perr = abs(pfine - coarse)
            total += pfine
            total_err += perr
            heapq.heappush(heap, (-perr, plo, phi, pfine, perr))
        total_err = max(total_err, 0.0)

    # re-sum to shed the drift of the running totals
    value = math.fsum(item[3] for item in heap)
    err = math.fsum(item[4] for item in heap)
    return QuadratureResult(value, err, evaluations)


class MinimizeResult(NamedTuple):
    argmin: float
    minimum: float


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _checked(phi: Callable[[float], float], x: float) -> float:
    y = float(phi(x))
    if math.isnan(y) or y == -math.inf:
        raise DomainError(f"objective is not a number at x = {x!r}")
    return y


def minimize1d(
    phi: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-8,
    grid_points: int = 64,
    log_grid: bool | None = None,
) -> MinimizeResult:
    """Locate a minimizer of ``phi`` on ``[lo, hi]``.

    A coarse grid (logarithmic when ``lo > 0``) picks the best cell, golden
    section narrows that bracket to ``tol``, and one parabolic step through
    the final triple polishes the estimate. ``+inf`` values are allowed and
    treated as "worse than anything"; NaN raises.
    """
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise DomainError(f"minimize1d requires lo < hi, got [{lo}, {hi}]")
    if log_grid is None:
        log_grid = lo > 0
    if log_grid:
        if lo <= 0:
            raise DomainError("a logarithmic grid needs lo > 0")
        grid = np.geomspace(lo, hi, grid_points)
    else:
        grid = np.linspace(lo, hi, grid_points)
    grid[0], grid[-1] = lo, hi
    values = np.array([_checked(phi, x) for x in grid])
    j = int(np.argmin(values))
    if not math.isfinite(values[j]):
        raise DomainError("objective is +inf on the whole search grid")

    a = grid[max(j - 1, 0)]
    b = grid[min(j + 1, grid_points - 1)]
    best_x, best_y = grid[j], values[j]

    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = _checked(phi, x1), _checked(phi, x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = _checked(phi, x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = _checked(phi, x2)
    for x, y in ((x1, f1), (x2, f2)):
        if y < best_y:
            best_x, best_y = x, y

    # parabolic polish through (x1, x2, midpoint)
    xm = 0.5 * (a + b)
    fm = _checked(phi, xm)
    if fm < best_y:
        best_x, best_y = xm, fm
    pts = sorted(((x1, f1), (xm, fm), (x2, f2)))
    (u, fu), (v, fv), (w, fw) = pts
    denom = (v - u) * (fv - fw) - (v - w) * (fv - fu)
    if denom != 0.0 and all(math.isfinite(y) for y in (fu, fv, fw)):
        xp = v - 0.5 * ((v - u) ** 2 * (fv - fw) - (v - w) ** 2 * (fv - fu)) / denom
        if lo <= xp <= hi:
            fp = _checked(phi, xp)
            if fp < best_y:
                best_x, best_y = xp, fp

    for edge in (lo, hi):
        fe = values[0] if edge == lo else values[-1]
        if fe <= best_y:
            best_x, best_y = edge, fe
    return MinimizeResult(float(best_x), float(best_y))
