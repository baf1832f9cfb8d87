"""Operators, nonlinearities and weights, plus numeric spot-checks of their hypotheses."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .expressions import ExpressionError, compile_expression
from .geometry import Ball, Box2D, Domain
from .mathkit import integrate

__all__ = [
    "Operator",
    "PLaplacian",
    "MatrixForm",
    "GeneralA",
    "ConditionCheck",
    "AlphaReport",
    "check_alpha",
    "Nonlinearity",
    "primitive",
    "log_quartic",
    "piecewise_h",
    "expression_nonlinearity",
    "BUILTIN_NONLINEARITIES",
    "Verdict",
    "check_growth",
    "check_h0",
    "check_h1",
    "check_potential_bound",
    "Weight",
    "operator_from_dict",
    "nonlinearity_from_dict",
    "weight_from_dict",
]


def _norm(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(xi * xi, axis=-1))


# ---------------------------------------------------------------- operators


class Operator:
    """Density A(x, xi) with flux a = grad_xi A, evaluated row-wise on (m, N) arrays."""

    name = "operator"
    p: float
    lambda1: float
    lambda2: float
    growth_c: float
    convexity_modulus: float | None
    isotropic: bool = False

    def density(self, x: np.ndarray, xi: np.ndarray, eps: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def flux(self, x: np.ndarray, xi: np.ndarray, eps: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def _check_bounds(self):
        if self.p <= 1:
            raise DomainError("operator exponent p must exceed 1")
        if not self.lambda1 > 0 or self.lambda2 < self.lambda1:
            raise DomainError("ellipticity bounds need 0 < lambda1 <= lambda2")
        if not self.growth_c > 0:
            raise DomainError("growth constant must be positive")

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PLaplacian(Operator):
    """A = |xi|^p / p. For p < 2 a positive ``eps`` smooths the kernel at xi = 0."""

    p: float
    name = "p-laplacian"
    isotropic = True

    def __post_init__(self):
        self._check_bounds()

    @property
    def lambda1(self):
        return 1.0 / self.p

    @property
    def lambda2(self):
        return 1.0 / self.p

    @property
    def growth_c(self):
        return 1.0

    @property
    def convexity_modulus(self):
        # Clarkson-type inequality for p >= 2
        return 1.0 / (self.p * 2.0**self.p) if self.p >= 2 else None

    def density(self, x, xi, eps=0.0):
        s2 = np.sum(xi * xi, axis=-1)
        if self.p < 2 and eps > 0:
            return ((s2 + eps * eps) ** (self.p / 2) - eps**self.p) / self.p
        return s2 ** (self.p / 2) / self.p

    def flux(self, x, xi, eps=0.0):
        s2 = np.sum(xi * xi, axis=-1)
        if self.p == 2:
            return np.array(xi, dtype=float)
        if self.p < 2:
            if eps > 0:
                scale = (s2 + eps * eps) ** ((self.p - 2) / 2)
            else:
                with np.errstate(divide="ignore"):
                    scale = np.where(s2 > 0, s2 ** ((self.p - 2) / 2), 0.0)
        else:
            scale = s2 ** ((self.p - 2) / 2)
        return scale[..., None] * xi

    def to_dict(self):
        return {"type": "p-laplacian", "p": self.p}


@dataclass(frozen=True)
class MatrixForm(Operator):
    """A = (1/2) xi . a(x) xi with symmetric coefficients a(x); p = 2.

    ``matrix`` is either a constant (N, N) array-like or a callable mapping
    points (m, N) to coefficients (m, N, N).
    """

    matrix: Any
    lambda1: float
    lambda2: float
    growth_c_: float | None = None
    modulus_: float | None = None
    name = "matrix"

    def __post_init__(self):
        if not callable(self.matrix):
            a = np.asarray(self.matrix, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise DomainError("coefficient matrix must be square")
            if not np.allclose(a, a.T):
                raise DomainError("coefficient matrix must be symmetric")
            object.__setattr__(self, "matrix", a)
        self._check_bounds()

    @property
    def p(self):
        return 2.0

    @property
    def growth_c(self):
        # (1/2) a <= lambda2 I gives |a xi| <= 2 lambda2 |xi|
        return self.growth_c_ if self.growth_c_ is not None else 2.0 * self.lambda2

    @property
    def convexity_modulus(self):
        # quadratic A: midpoint defect is A(xi - eta) / 4 >= lambda1 |xi - eta|^2 / 4
        return self.modulus_ if self.modulus_ is not None else self.lambda1 / 4.0

    @property
    def isotropic(self):
        if callable(self.matrix):
            return False
        a = self.matrix
        return bool(np.allclose(a, a[0, 0] * np.eye(a.shape[0])))

    def _coeff(self, x, n):
        if callable(self.matrix):
            return np.asarray(self.matrix(x), dtype=float)
        a = self.matrix
        if a.shape[0] < n:
            raise DomainError(f"coefficient matrix is {a.shape[0]}x{a.shape[0]}, need {n}")
        return a[:n, :n]

    def flux(self, x, xi, eps=0.0):
        a = self._coeff(x, xi.shape[-1])
        if a.ndim == 2:
            return xi @ a.T
        return np.einsum("mij,mj->mi", a, xi)

    def density(self, x, xi, eps=0.0):
        return 0.5 * np.sum(xi * self.flux(x, xi), axis=-1)

    def to_dict(self):
        if callable(self.matrix):
            raise DomainError("a callable coefficient field cannot be serialized")
        return {
            "type": "matrix",
            "matrix": self.matrix.tolist(),
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
        }


@dataclass(frozen=True)
class GeneralA(Operator):
    """User-supplied density and flux callables ``(x, xi) -> values``."""

    density_fn: Callable
    flux_fn: Callable
    p: float
    lambda1: float
    lambda2: float
    growth_c: float
    convexity_modulus: float | None = None
    isotropic: bool = False
    source: dict | None = None
    name = "general"

    def __post_init__(self):
        self._check_bounds()

    @classmethod
    def from_profile(cls, profile: Callable, dprofile: Callable, p, lambda1, lambda2, growth_c,
                     convexity_modulus=None, source=None):
        """Isotropic operator A = profile(|xi|), a = profile'(|xi|) xi / |xi|."""

        def dens(x, xi):
            return np.asarray(profile(_norm(xi)), dtype=float)

        def flx(x, xi):
            s = _norm(xi)
            ds = np.asarray(dprofile(s), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                unit = np.where(s[..., None] > 0, xi / s[..., None], 0.0)
            return ds[..., None] * unit

        return cls(dens, flx, p, lambda1, lambda2, growth_c, convexity_modulus, True, source)

    def density(self, x, xi, eps=0.0):
        return np.asarray(self.density_fn(x, xi), dtype=float)

    def flux(self, x, xi, eps=0.0):
        return np.asarray(self.flux_fn(x, xi), dtype=float)

    def to_dict(self):
        if self.source is None:
            raise DomainError("only expression-based general operators serialize")
        return dict(self.source)


def operator_from_dict(d: dict, path: str = "operator") -> Operator:
    kind = d.get("type")
    try:
        if kind == "p-laplacian":
            return PLaplacian(float(d["p"]))
        if kind == "matrix":
            return MatrixForm(d["matrix"], float(d["lambda1"]), float(d["lambda2"]))
        if kind == "general":
            prof = compile_expression(d["density"], ("s",))
            dprof = compile_expression(d["flux"], ("s",))
            mod = d.get("convexity_modulus")
            return GeneralA.from_profile(
                prof, dprof, float(d["p"]), float(d["lambda1"]), float(d["lambda2"]),
                float(d["growth_c"]), None if mod is None else float(mod), source=dict(d),
            )
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing field") from None
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown operator type {kind!r}")


@dataclass
class ConditionCheck:
    name: str
    passed: bool
    worst_violation: float
    witness: dict | None = None
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "note": self.note,
        }


@dataclass
class AlphaReport:
    conditions: dict[str, ConditionCheck]
    samples: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self):
        return {
            "passed": self.passed,
            "samples": self.samples,
            "conditions": {k: c.to_dict() for k, c in self.conditions.items()},
        }


def _worst(viol: np.ndarray) -> int:
    # first index attaining the max up to rounding, so ties resolve to the deterministic probes
    top = np.max(viol)
    return int(np.argmax(viol >= top - 1e-12 * max(abs(top), 1.0)))


def check_alpha(
    op: Operator,
    N: int,
    samples: int = 1000,
    tol: float = 1e-9,
    seed: int = 0,
    xi_range: tuple[float, float] = (1e-2, 1e2),
    x_radius: float = 1.0,
) -> AlphaReport:
    """Spot-check the structural conditions on random (x, xi, eta) triples.

    Unit vectors ``e_i`` come first as deterministic probes. Each condition
    reports its worst relative violation and the triple attaining it.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    probes = np.eye(N)
    m = samples + N

    def directions(k):
        v = rng.standard_normal((k, N))
        return v / _norm(v)[:, None]

    lo, hi = np.log(xi_range[0]), np.log(xi_range[1])
    xi = np.vstack([probes, directions(samples) * np.exp(rng.uniform(lo, hi, samples))[:, None]])
    eta = directions(m) * np.exp(rng.uniform(lo, hi, m))[:, None]
    x = directions(m) * (x_radius * rng.uniform(0, 1, m) ** (1 / N))[:, None]
    p = op.p

    A_xi = op.density(x, xi)
    A_eta = op.density(x, eta)
    a_xi = op.flux(x, xi)
    nxi = _norm(xi)
    tiny = 1e-300

    def witness(i):
        return {"x": x[i].tolist(), "xi": xi[i].tolist(), "eta": eta[i].tolist(), "|xi|": float(nxi[i])}

    out: dict[str, ConditionCheck] = {}

    def record(key, viol, note=""):
        i = _worst(viol)
        worst = float(viol[i])
        ok = worst <= tol
        out[key] = ConditionCheck(key, ok, max(worst, 0.0), None if ok else witness(i), note)

    A0 = op.density(x, np.zeros_like(xi))
    record("alpha1", np.abs(A0))

    bound = op.growth_c * (1.0 + nxi ** (p - 1))
    record("alpha2", (_norm(a_xi) - bound) / bound)

    mid = op.density(x, 0.5 * (xi + eta))
    k = op.convexity_modulus
    defect = mid - 0.5 * A_xi - 0.5 * A_eta + (k or 0.0) * _norm(xi - eta) ** p
    note = "" if k is not None else "modulus not supplied; only midpoint convexity (k = 0) verified"
    record("alpha3", defect / (np.abs(A_xi) + np.abs(A_eta) + tiny), note)

    axi = np.sum(a_xi * xi, axis=-1)
    scale = np.abs(p * A_xi) + np.abs(axi) + tiny
    record("alpha4", np.maximum(-axi, axi - p * A_xi) / scale)

    np_ = nxi**p
    record("alpha5", np.maximum(op.lambda1 * np_ - A_xi, A_xi - op.lambda2 * np_) / (op.lambda2 * np_ + tiny))
    return AlphaReport(out, m)


# ---------------------------------------------------------------- nonlinearities

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_UNIFORM_EXTENT = 16.0
_UNIFORM_STEP = 0.125
_GEOMETRIC_RATIO = 1.05


def _anchor_grid(extent: float, breakpoints: Sequence[float]) -> np.ndarray:
    pos = list(np.arange(_UNIFORM_STEP, _UNIFORM_EXTENT + 0.5 * _UNIFORM_STEP, _UNIFORM_STEP))
    t = _UNIFORM_EXTENT
    while t < extent:
        t *= _GEOMETRIC_RATIO
        pos.append(t)
    pos = np.array(pos)
    bps = [b for b in breakpoints if abs(b) <= pos[-1]]
    return np.unique(np.concatenate([-pos, [0.0], pos, bps]))


class Nonlinearity:
    """A continuous f with growth certificate |f(t)| <= a1 + a2 |t|^(q-1).

    ``F`` evaluates the primitive on arrays. It uses ``primitive_exact``
    when one is known; otherwise a table of F at anchor points (zero, the
    breakpoints, and a grid) is integrated adaptively once, and each value
    adds a 10-point Gauss rule from its nearest anchor below. The table
    only grows, under a lock.
    """

    def __init__(
        self,
        f: Callable,
        a1: float,
        a2: float,
        q: float,
        breakpoints: Sequence[float] = (),
        name: str = "",
        primitive_exact: Callable | None = None,
        spec: dict | None = None,
        tol: float = 1e-13,
    ):
        if a1 < 0 or a2 < 0:
            raise DomainError("growth constants a1, a2 must be nonnegative")
        if q <= 1:
            raise DomainError("growth exponent q must exceed 1")
        self.f = f
        self.a1 = float(a1)
        self.a2 = float(a2)
        self.q = float(q)
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.name = name
        self.primitive_exact = primitive_exact
        self.spec = spec
        self.tol = tol
        self._lock = threading.Lock()
        self._anchors = np.array([0.0])
        self._table = np.array([0.0])
        self._extent = 0.0

    def __repr__(self):
        return f"Nonlinearity({self.name or 'f'}, a1={self.a1}, a2={self.a2}, q={self.q})"

    def __call__(self, t):
        return np.asarray(self.f(np.asarray(t, dtype=float)), dtype=float)

    def _ensure(self, extent: float) -> tuple[np.ndarray, np.ndarray]:
        with self._lock:
            if extent <= self._extent:
                return self._anchors, self._table
            target = max(2.0 * extent, _UNIFORM_EXTENT)
            anchors = _anchor_grid(target, self.breakpoints)
            table = np.zeros_like(anchors)
            zero = int(np.searchsorted(anchors, 0.0))
            for i in range(zero + 1, len(anchors)):
                seg = integrate(self.f, anchors[i - 1], anchors[i], self.tol, self.breakpoints)
                table[i] = table[i - 1] + seg.value
            for i in range(zero - 1, -1, -1):
                seg = integrate(self.f, anchors[i], anchors[i + 1], self.tol, self.breakpoints)
                table[i] = table[i + 1] - seg.value
            self._anchors, self._table, self._extent = anchors, table, anchors[-1]
            return anchors, table

    def F(self, s):
        """Primitive F(s) = integral of f over [0, s], elementwise."""
        s = np.asarray(s, dtype=float)
        if self.primitive_exact is not None:
            return np.asarray(self.primitive_exact(s), dtype=float)
        if s.size == 0:
            return np.zeros_like(s)
        anchors, table = self._ensure(float(np.max(np.abs(s))))
        j = np.clip(np.searchsorted(anchors, s, side="right") - 1, 0, len(anchors) - 1)
        base = anchors[j]
        half = 0.5 * (s - base)
        mid = 0.5 * (s + base)
        nodes = mid[..., None] + half[..., None] * _GL_X
        rest = half * np.sum(self.f(nodes) * _GL_W, axis=-1)
        return table[j] + rest

    def to_dict(self):
        if self.spec is None:
            raise DomainError("this nonlinearity has no serializable description")
        return dict(self.spec)


def primitive(nl: Nonlinearity, s: float, tol: float = 1e-10) -> float:
    """F(s) by adaptive quadrature with the breakpoints as panel edges."""
    s = float(s)
    if s >= 0:
        return integrate(nl.f, 0.0, s, tol, nl.breakpoints).value
    return -integrate(nl.f, s, 0.0, tol, nl.breakpoints).value


def log_quartic(a1: float = 1.0, a2: float = 1.0, q: float = 6.0) -> Nonlinearity:
    """g(t) = log(1 + t^4) with its closed-form potential.

    Default certificate: a1 = a2 = 1 and q = 6, so that both the growth
    class bound and the potential bound G(s) <= s^(q-p) = s^2 (p = 4) hold.
    """
    r2 = math.sqrt(2.0)

    def g(t):
        return np.log1p(np.asarray(t, dtype=float) ** 4)

    def G(s):
        s = np.asarray(s, dtype=float)
        return (
            r2 * np.arctan(r2 * s - 1)
            + r2 * np.arctan(r2 * s + 1)
            - (r2 / 2) * np.log((s * s - r2 * s + 1) / (s * s + r2 * s + 1))
            + s * np.log1p(s**4)
            - 4 * s
        )

    spec = {"builtin": "log-quartic", "a1": a1, "a2": a2, "q": q}
    return Nonlinearity(g, a1, a2, q, (), "log-quartic", G, spec)


def piecewise_h(q: float, r: float) -> Nonlinearity:
    """h(t) = 1 + |t|^(q-1) for |t| <= r, (1 + r^2)(1 + r^(q-1)) / (1 + t^2) beyond."""
    if q <= 2:
        raise DomainError("piecewise-h needs q > 2")
    if r <= 0:
        raise DomainError("piecewise-h needs r > 0")
    tail = (1 + r * r) * (1 + r ** (q - 1))
    H_r = r + r**q / q

    def h(t):
        a = np.abs(np.asarray(t, dtype=float))
        with np.errstate(over="ignore"):
            inner = 1 + np.minimum(a, r) ** (q - 1)
        return np.where(a <= r, inner, tail / (1 + a * a))

    def H(s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        inner = np.minimum(a, r)
        out = np.where(a <= r, inner + inner**q / q, H_r + tail * (np.arctan(a) - np.arctan(r)))
        return np.sign(s) * out

    spec = {"builtin": "piecewise-h", "q": q, "r": r}
    return Nonlinearity(h, 1.0, 1.0, q, (-r, r), "piecewise-h", H, spec)


def expression_nonlinearity(expr: str, a1: float, a2: float, q: float,
                            breakpoints: Sequence[float] = ()) -> Nonlinearity:
    f = compile_expression(expr, ("t",))
    spec = {"expr": expr, "a1": a1, "a2": a2, "q": q, "breakpoints": list(breakpoints)}
    return Nonlinearity(f, a1, a2, q, breakpoints, expr, None, spec)


BUILTIN_NONLINEARITIES = {"log-quartic": log_quartic, "piecewise-h": piecewise_h}


def nonlinearity_from_dict(d: dict, path: str = "nonlinearity", r_default: float | None = None) -> Nonlinearity:
    try:
        if "builtin" in d:
            name = d["builtin"]
            if name == "log-quartic":
                return log_quartic(float(d.get("a1", 1.0)), float(d.get("a2", 1.0)), float(d.get("q", 6.0)))
            if name == "piecewise-h":
                r = d.get("r", r_default)
                if r is None:
                    raise ConfigError(f"{path}.r", "piecewise-h needs r (or let the CLI choose it)")
                return piecewise_h(float(d["q"]), float(r))
            raise ConfigError(f"{path}.builtin", f"unknown builtin {name!r}")
        return expression_nonlinearity(
            d["expr"], float(d["a1"]), float(d["a2"]), float(d["q"]), [float(b) for b in d.get("breakpoints", [])]
        )
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing field") from None
    except ExpressionError as exc:
        raise ConfigError(f"{path}.expr", str(exc)) from None
    except (DomainError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None


# ---------------------------------------------------------------- verdicts

PASS, FAIL = "pass", "fail"
CONSISTENT, INCONCLUSIVE, VIOLATED = "numerically-consistent", "inconclusive", "violated"


@dataclass
class Verdict:
    status: str
    witness: float | None = None
    margin: float | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status in (PASS, CONSISTENT)

    def to_dict(self):
        return {"status": self.status, "witness": self.witness, "margin": self.margin, "note": self.note}


def check_growth(nl: Nonlinearity, T: float = 100.0, samples: int = 4001, tol: float = 1e-12) -> Verdict:
    """Sampled test of |f(t)| <= a1 + a2 |t|^(q-1) on [-T, T]."""
    if T <= 0:
        raise DomainError("T must be positive")
    t = np.unique(np.concatenate([np.linspace(-T, T, samples), [b for b in nl.breakpoints if abs(b) <= T]]))
    bound = nl.a1 + nl.a2 * np.abs(t) ** (nl.q - 1)
    excess = np.abs(nl(t)) - bound
    rel = excess / np.maximum(bound, 1e-300)
    i = int(np.argmax(rel))
    margin = float(rel[i])
    if margin > tol:
        return Verdict(FAIL, float(t[i]), margin, "growth bound exceeded")
    return Verdict(PASS, None, margin)


def check_h0(nl: Nonlinearity, delta: float, samples: int = 2000, strict: bool = False,
             tol: float = 1e-10, probe_max: float = 1e3) -> Verdict:
    """F(s) >= 0 on ]0, delta[ (sign relaxation); ``strict`` probes all of ]0, probe_max]."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    s = np.linspace(0.0, delta, samples + 2)[1:-1]
    if strict:
        s = np.unique(np.concatenate([s, np.geomspace(min(delta, 1.0) * 1e-6, max(probe_max, delta), samples)]))
    F = nl.F(s)
    slack = tol * (1 + abs(float(nl.F(np.array([delta]))[0])))
    i = int(np.argmin(F))
    note = "strict sign condition on ]0, %g]" % s[-1] if strict else "sign condition on ]0, delta["
    if F[i] < -slack:
        return Verdict(FAIL, float(s[i]), float(F[i]), note)
    return Verdict(PASS, None, float(F[i]), note)


_H1_NOTE = "asymptotic hypothesis: the probe is numerical evidence only; certification is the user's"


def check_h1(nl: Nonlinearity, p: float, probe_max: float = 1e8, decay_factor: float = 2.0) -> Verdict:
    """Probe |f(t)| / |t|^(p-1) along t = probe_max / 100, / 10, probe_max, both signs.

    Consistent if the ratio drops by at least ``decay_factor`` over each of
    the last two decades; violated if it does not decrease at all.
    """
    if probe_max <= 1:
        raise DomainError("probe_max must exceed 1")
    statuses = []
    witness = None
    worst = None
    for sign in (1.0, -1.0):
        t = sign * probe_max / np.array([100.0, 10.0, 1.0])
        r = np.abs(nl(t)) / np.abs(t) ** (p - 1)
        if r[-1] == 0:
            statuses.append(CONSISTENT)
            continue
        with np.errstate(divide="ignore"):
            d1, d2 = r[0] / r[1], r[1] / r[2]
        if d1 >= decay_factor and d2 >= decay_factor:
            statuses.append(CONSISTENT)
        elif d1 <= 1 + 1e-9 and d2 <= 1 + 1e-9:
            statuses.append(VIOLATED)
            witness, worst = float(t[-1]), float(r[-1])
        else:
            statuses.append(INCONCLUSIVE)
            if witness is None:
                witness, worst = float(t[-1]), float(r[-1])
    for status in (VIOLATED, INCONCLUSIVE, CONSISTENT):
        if status in statuses:
            return Verdict(status, witness, worst, _H1_NOTE)
    raise AssertionError("unreachable")


def check_potential_bound(nl: Nonlinearity, p: float, s_max: float = 1e3, samples: int = 2000) -> Verdict:
    """Pointwise test of F(s) <= a2 s^(q-p) on ]0, s_max] (taken literally)."""
    s = np.geomspace(1e-4, s_max, samples)
    F = nl.F(s)
    bound = nl.a2 * s ** (nl.q - p)
    excess = F - bound
    i = int(np.argmax(excess))
    if excess[i] > 1e-12 * max(1.0, abs(bound[i])):
        return Verdict(FAIL, float(s[i]), float(excess[i]), "F(s) <= a2 s^(q-p) fails")
    return Verdict(PASS, None, float(excess[i]), "F(s) <= a2 s^(q-p) on sampled s")


# ---------------------------------------------------------------- weights


@dataclass(frozen=True)
class Weight:
    """Positive weight k on the closed domain with certified bounds kMin <= k <= kSup."""

    k: Callable
    k_min: float
    k_sup: float
    exact: bool
    radial: bool = False
    spec: dict | None = field(default=None, compare=False)
    samples: int = 0

    def __post_init__(self):
        if not self.k_min > 0:
            raise DomainError(f"weight minimum must be positive, got {self.k_min}")
        if self.k_sup < self.k_min:
            raise DomainError("weight supremum below its minimum")

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self.k(x), dtype=float), x.shape[:1]).copy()

    @classmethod
    def constant(cls, c: float = 1.0) -> "Weight":
        c = float(c)
        return cls(lambda x: np.full(np.shape(x)[0], c), c, c, True, True, {"type": "constant", "value": c})

    @classmethod
    def affine(cls, c0: float, gradient: Sequence[float], domain: Domain) -> "Weight":
        """k(x) = c0 + g . (x - x0), exact extrema over a ball or a box."""
        g = np.asarray(gradient, dtype=float)
        x0 = np.asarray(domain.incenter)
        if isinstance(domain, Ball):
            off = g @ (np.asarray(domain.center) - x0)
            spread = np.linalg.norm(g) * domain.radius
            lo, hi = c0 + off - spread, c0 + off + spread
        elif isinstance(domain, Box2D):
            spread = 0.5 * (abs(g[0]) * domain.width + abs(g[1]) * domain.height)
            lo, hi = c0 - spread, c0 + spread
        else:
            raise DomainError("affine weights need a ball or box domain for exact bounds")
        spec = {"type": "affine", "c0": c0, "gradient": g.tolist()}
        return cls(lambda x: c0 + (np.atleast_2d(x) - x0) @ g, float(lo), float(hi), True,
                   bool(np.allclose(g, 0)), spec)

    @classmethod
    def sampled(cls, k: Callable, domain: Domain, samples: int = 4096, radial: bool = False,
                spec: dict | None = None) -> "Weight":
        """Bounds from a grid over the domain, widened by the largest neighbour jump."""
        if isinstance(domain, Ball):
            c, R = np.asarray(domain.center), domain.radius
            lo, hi = c - R, c + R
        elif isinstance(domain, Box2D):
            c = np.asarray(domain.center)
            half = np.array([domain.width, domain.height]) / 2
            lo, hi = c - half, c + half
        else:
            raise DomainError("sampled weights need a ball or box domain")
        N = domain.dim
        n = max(3, int(round(samples ** (1 / N))))
        axes = [np.linspace(lo[i], hi[i], n) for i in range(N)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        pts = mesh.reshape(-1, N)
        inside = domain.contains(pts).reshape((n,) * N)
        vals = np.asarray(k(pts), dtype=float).reshape((n,) * N)
        if not np.all(np.isfinite(vals[inside])):
            raise DomainError("weight is not finite on the domain")
        slack = 0.0
        for ax in range(N):
            dv = np.abs(np.diff(vals, axis=ax))
            both = inside.take(range(n - 1), axis=ax) & inside.take(range(1, n), axis=ax)
            if both.any():
                slack = max(slack, float(dv[both].max()))
        kmin = float(vals[inside].min()) - slack
        ksup = float(vals[inside].max()) + slack
        return cls(k, kmin, ksup, False, radial, spec, int(inside.sum()))

    def scaled(self, c: float) -> "Weight":
        base = self.k
        spec = None if self.spec is None else {"type": "scaled", "factor": c, "base": self.spec}
        return Weight(lambda x: c * np.asarray(base(x)), c * self.k_min, c * self.k_sup, self.exact,
                      self.radial, spec, self.samples)

    def to_dict(self):
        if self.spec is None:
            raise DomainError("this weight has no serializable description")
        return dict(self.spec)


def weight_from_dict(d: dict, domain: Domain, path: str = "weight") -> Weight:
    kind = d.get("type", "constant")
    try:
        if kind == "constant":
            return Weight.constant(float(d.get("value", 1.0)))
        if kind == "affine":
            return Weight.affine(float(d["c0"]), d["gradient"], domain)
        if kind == "scaled":
            return weight_from_dict(d["base"], domain, f"{path}.base").scaled(float(d["factor"]))
        if kind == "expression":
            expr = d["expr"]
            N = domain.dim
            x0 = np.asarray(domain.incenter)
            try:
                fr = compile_expression(expr, ("r",))
                k = lambda x: fr(np.linalg.norm(np.atleast_2d(x) - x0, axis=-1))  # noqa: E731
                radial = True
            except ExpressionError:
                names = tuple(f"x{i}" for i in range(N)) + ("r",)
                fx = compile_expression(expr, names)

                def k(x):
                    x = np.atleast_2d(x)
                    return fx(*(x[:, i] for i in range(N)), np.linalg.norm(x - x0, axis=-1))

                radial = False
            w = Weight.sampled(k, domain, int(d.get("samples", 4096)), radial, dict(d))
            return w
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing field") from None
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown weight type {kind!r}")
