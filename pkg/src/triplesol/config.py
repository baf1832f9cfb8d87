"""Run configuration: one JSON document, validated before any computation."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import Domain, domain_from_dict
from .model import Nonlinearity, Operator, Weight, nonlinearity_from_dict, operator_from_dict, weight_from_dict

__all__ = ["RunConfig", "SolverSettings", "SearchSettings", "load_config"]


def _pos(d: dict, key: str, path: str, default, cast=float, allow_zero=False):
    val = d.get(key, default)
    try:
        val = cast(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}") from None
    if isinstance(val, float) and not math.isfinite(val):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if val < 0 or (val == 0 and not allow_zero):
        raise ConfigError(f"{path}.{key}", f"must be positive, got {val}")
    return val


def _range(d: dict, key: str, path: str, default) -> tuple[float, float]:
    val = d.get(key, default)
    try:
        lo, hi = (float(v) for v in val)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", "expected [low, high]") from None
    if not 0 < lo < hi or not math.isfinite(hi):
        raise ConfigError(f"{path}.{key}", "need 0 < low < high")
    return lo, hi


@dataclass(frozen=True)
class SolverSettings:
    mesh: str = "auto"
    resolution: int = 256
    tol: float = 1e-6
    mp_tol: float = 1e-4
    max_iter: int = 2000
    mp_max_iter: int = 500
    path_points: int = 21
    distinct: float = 0.05
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict, path: str = "solver") -> "SolverSettings":
        mesh = d.get("mesh", "auto")
        if mesh not in ("auto", "radial", "triangulated"):
            raise ConfigError(f"{path}.mesh", f"unknown mesh kind {mesh!r}")
        out = cls(
            mesh,
            _pos(d, "resolution", path, 256, int),
            _pos(d, "tol", path, 1e-6),
            _pos(d, "mp_tol", path, 1e-4),
            _pos(d, "max_iter", path, 2000, int),
            _pos(d, "mp_max_iter", path, 500, int),
            _pos(d, "path_points", path, 21, int),
            _pos(d, "distinct", path, 0.05),
            _pos(d, "seed", path, 0, int, allow_zero=True),
        )
        if out.path_points < 3:
            raise ConfigError(f"{path}.path_points", "need at least 3 path points")
        return out

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SearchSettings:
    objective: str = "maxUpper"
    budget: int = 64
    gamma_range: tuple[float, float] = (1e-3, 1e3)
    delta_range: tuple[float, float] = (1e-3, 1e3)
    gamma: float | None = None
    delta: float | None = None

    @classmethod
    def from_dict(cls, d: dict, path: str = "search") -> "SearchSettings":
        obj = d.get("objective", "maxUpper")
        if obj not in ("maxUpper", "maxWidth"):
            raise ConfigError(f"{path}.objective", f"unknown objective {obj!r}")
        gamma = d.get("gamma")
        delta = d.get("delta")
        if (gamma is None) != (delta is None):
            raise ConfigError(path, "give both gamma and delta, or neither")
        if gamma is not None:
            gamma, delta = _pos(d, "gamma", path, None), _pos(d, "delta", path, None)
        return cls(obj, _pos(d, "budget", path, 64, int), _range(d, "gamma_range", path, (1e-3, 1e3)),
                   _range(d, "delta_range", path, (1e-3, 1e3)), gamma, delta)

    def to_dict(self) -> dict:
        out = {"objective": self.objective, "budget": self.budget,
               "gamma_range": list(self.gamma_range), "delta_range": list(self.delta_range)}
        if self.gamma is not None:
            out["gamma"], out["delta"] = self.gamma, self.delta
        return out


def _embedding_source(val, path):
    if val is None or val in ("auto", "holder-descent"):
        return val or "auto"
    try:
        v = float(val)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected 'auto', 'holder-descent' or a number, got {val!r}") from None
    if not v > 0:
        raise ConfigError(path, "embedding constant must be positive")
    return v


@dataclass
class RunConfig:
    """Validated run description. ``to_dict`` emits the normalized document."""

    domain: Domain
    operator: Operator
    weight: Weight
    nonlinearity_spec: dict
    c1: Any = "auto"
    cq: Any = "auto"
    search: SearchSettings = field(default_factory=SearchSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    lambdas: list[float] | None = None
    lambda_mode: str | None = None  # "midpoint" when lambda follows the certified interval
    sweep: dict | None = None
    output: str = "out"

    # -- construction
    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("$", "configuration must be a JSON object")
        for key in ("domain", "operator", "nonlinearity"):
            if key not in d:
                raise ConfigError(key, "missing section")
        domain = domain_from_dict(d["domain"], "domain")
        op = operator_from_dict(d["operator"], "operator")
        if op.name == "matrix" and not callable(op.matrix) and op.matrix.shape[0] != domain.dim:
            raise ConfigError("operator.matrix", f"matrix must be {domain.dim}x{domain.dim}")
        weight = weight_from_dict(d.get("weight", {"type": "constant", "value": 1.0}), domain, "weight")
        nl_spec = copy.deepcopy(d["nonlinearity"])
        if not isinstance(nl_spec, dict):
            raise ConfigError("nonlinearity", "expected an object")
        # validate now; piecewise-h without r is resolved later from the constants
        if not (nl_spec.get("builtin") == "piecewise-h" and "r" not in nl_spec):
            nonlinearity_from_dict(nl_spec, "nonlinearity")
        elif "q" not in nl_spec:
            raise ConfigError("nonlinearity.q", "missing field")
        emb = d.get("embedding", {})
        c1 = _embedding_source(emb.get("c1", "auto"), "embedding.c1")
        cq = _embedding_source(emb.get("cq", "auto"), "embedding.cq")
        search = SearchSettings.from_dict(d.get("search", {}))
        solver = SolverSettings.from_dict(d.get("solver", {}))
        lambdas, mode, sweep = None, None, None
        if "lambda" in d and "sweep" in d:
            raise ConfigError("lambda", "give lambda or sweep, not both")
        if "lambda" in d:
            lam = d["lambda"]
            if lam == "midpoint":
                mode = "midpoint"
            else:
                vals = lam if isinstance(lam, list) else [lam]
                try:
                    lambdas = [float(v) for v in vals]
                except (TypeError, ValueError):
                    raise ConfigError("lambda", "expected a number, a list of numbers or 'midpoint'") from None
                if any(not (v >= 0 and math.isfinite(v)) for v in lambdas):
                    raise ConfigError("lambda", "lambda must be finite and non-negative")
        elif "sweep" in d:
            sw = d["sweep"]
            lo = _pos(sw, "from", "sweep", None, allow_zero=True)
            hi = _pos(sw, "to", "sweep", None)
            count = _pos(sw, "count", "sweep", None, int)
            if hi < lo:
                raise ConfigError("sweep.to", "must not be below sweep.from")
            sweep = {"from": lo, "to": hi, "count": count}
            lambdas = [float(v) for v in np.linspace(lo, hi, count)]
        output = d.get("output", "out")
        if not isinstance(output, str):
            raise ConfigError("output", "expected a directory path")
        return cls(domain, op, weight, nl_spec, c1, cq, search, solver, lambdas, mode, sweep, output)

    def to_dict(self) -> dict:
        out = {
            "domain": self.domain.to_dict(),
            "operator": self.operator.to_dict(),
            "weight": self.weight.to_dict(),
            "nonlinearity": copy.deepcopy(self.nonlinearity_spec),
            "embedding": {"c1": self.c1, "cq": self.cq},
            "search": self.search.to_dict(),
            "solver": self.solver.to_dict(),
            "output": self.output,
        }
        if self.lambda_mode == "midpoint":
            out["lambda"] = "midpoint"
        elif self.sweep is not None:
            out["sweep"] = dict(self.sweep)
        elif self.lambdas is not None:
            out["lambda"] = list(self.lambdas)
        return out

    def nonlinearity(self, r_default: float | None = None) -> Nonlinearity:
        return nonlinearity_from_dict(self.nonlinearity_spec, "nonlinearity", r_default)

    def with_overrides(self, seed: int | None = None, tol: float | None = None,
                       output: str | None = None) -> "RunConfig":
        d = self.to_dict()
        if seed is not None:
            d["solver"]["seed"] = seed
        if tol is not None:
            d["solver"]["tol"] = tol
        if output is not None:
            d["output"] = output
        return RunConfig.from_dict(d)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    try:
        return RunConfig.from_dict(doc)
    except DomainError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("$", str(exc)) from None
