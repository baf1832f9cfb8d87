"""Domains and the tent test function u_delta."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, DomainError
from .mathkit import gamma

__all__ = [
    "ball_volume",
    "tent_energy_p",
    "Domain",
    "Ball",
    "Box2D",
    "CustomDomain",
    "TentFunction",
    "eval_tent",
    "domain_from_dict",
]


def ball_volume(N: int, s: float) -> float:
    """Lebesgue measure of the N-dimensional ball of radius ``s``."""
    if N < 1:
        raise DomainError("dimension must be >= 1")
    if s < 0:
        raise DomainError("radius must be >= 0")
    return s**N * math.pi ** (N / 2) / gamma(1 + N / 2)


def tent_energy_p(delta: float, tau: float, N: int, p: float) -> float:
    """Closed form of the integral of |grad u_delta|^p over the domain."""
    if delta <= 0 or tau <= 0 or N < 2 or p <= 1:
        raise DomainError("tent energy needs delta, tau > 0, N >= 2, p > 1")
    return 2**p * delta**p * ball_volume(N, tau) * (1 - 2.0**-N) / tau**p


def _center(center, N: int) -> tuple[float, ...]:
    if center is None:
        return (0.0,) * N
    c = tuple(float(v) for v in center)
    if len(c) != N:
        raise DomainError(f"center must have {N} coordinates, got {len(c)}")
    return c


class Domain:
    """Common surface: ``dim``, ``measure``, ``inradius`` (tau), ``incenter`` (x0)."""

    dim: int

    @property
    def measure(self) -> float:
        raise NotImplementedError

    @property
    def inradius(self) -> float:
        raise NotImplementedError

    @property
    def incenter(self) -> tuple[float, ...]:
        raise NotImplementedError

    def contains(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def _validate(self) -> None:
        if self.dim < 2:
            raise DomainError("domains must have dimension N >= 2")
        if not self.inradius > 0:
            raise DomainError("inradius must be positive")
        # inscribed ball must fit (small slack for rounding)
        if ball_volume(self.dim, self.inradius) > self.measure * (1 + 1e-12):
            raise DomainError(
                f"inscribed ball volume {ball_volume(self.dim, self.inradius):.6g} "
                f"exceeds domain measure {self.measure:.6g}"
            )


@dataclass(frozen=True)
class Ball(Domain):
    dim: int
    radius: float
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "center", _center(self.center, self.dim))
        self._validate()

    @property
    def measure(self) -> float:
        return ball_volume(self.dim, self.radius)

    @property
    def inradius(self) -> float:
        return self.radius

    @property
    def incenter(self) -> tuple[float, ...]:
        return self.center

    def contains(self, x):
        x = np.atleast_2d(x)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) <= self.radius

    def to_dict(self):
        return {"type": "ball", "N": self.dim, "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Box2D(Domain):
    width: float
    height: float
    center: tuple[float, ...] | None = None
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DomainError("box side lengths must be positive")
        object.__setattr__(self, "center", _center(self.center, 2))
        self._validate()

    @property
    def measure(self) -> float:
        return self.width * self.height

    @property
    def inradius(self) -> float:
        return 0.5 * min(self.width, self.height)

    @property
    def incenter(self) -> tuple[float, ...]:
        # the center is a distance-to-boundary maximizer; unique only for squares
        return self.center

    def contains(self, x):
        x = np.atleast_2d(x) - np.asarray(self.center)
        return (np.abs(x[:, 0]) <= 0.5 * self.width) & (np.abs(x[:, 1]) <= 0.5 * self.height)

    def to_dict(self):
        return {"type": "box2d", "sides": [self.width, self.height], "center": list(self.center)}


@dataclass(frozen=True)
class CustomDomain(Domain):
    """User-described domain; measure, inradius and incenter are taken on trust."""

    dim: int
    measure_: float
    inradius_: float
    incenter_: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.measure_ <= 0:
            raise DomainError("measure must be positive")
        object.__setattr__(self, "incenter_", _center(self.incenter_, self.dim))
        self._validate()

    @property
    def measure(self) -> float:
        return self.measure_

    @property
    def inradius(self) -> float:
        return self.inradius_

    @property
    def incenter(self) -> tuple[float, ...]:
        return self.incenter_

    def contains(self, x):
        raise DomainError("membership is unknown for a custom domain")

    def to_dict(self):
        return {
            "type": "custom",
            "N": self.dim,
            "measure": self.measure_,
            "inradius": self.inradius_,
            "incenter": list(self.incenter_),
        }


def domain_from_dict(d: dict[str, Any], path: str = "domain") -> Domain:
    kind = d.get("type")
    try:
        if kind == "ball":
            return Ball(int(d["N"]), float(d.get("radius", 1.0)), d.get("center"))
        if kind == "box2d":
            a, b = d["sides"]
            return Box2D(float(a), float(b), d.get("center"))
        if kind == "custom":
            return CustomDomain(int(d["N"]), float(d["measure"]), float(d["inradius"]), d.get("incenter"))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing field") from None
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown domain type {kind!r}")


@dataclass(frozen=True)
class TentFunction:
    """delta on B(x0, tau/2), linear ramp to zero on the shell, zero outside B(x0, tau)."""

    delta: float
    tau: float
    center: tuple[float, ...]

    def __post_init__(self):
        if self.delta <= 0 or self.tau <= 0:
            raise DomainError("tent needs delta > 0 and tau > 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    @classmethod
    def for_domain(cls, domain: Domain, delta: float) -> "TentFunction":
        return cls(delta, domain.inradius, domain.incenter)

    def radial(self, rho):
        rho = np.asarray(rho, dtype=float)
        ramp = 2.0 * self.delta * (self.tau - rho) / self.tau
        return np.where(rho <= 0.5 * self.tau, self.delta, np.where(rho < self.tau, ramp, 0.0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return self.radial(rho)


def eval_tent(u: TentFunction, x) -> np.ndarray | float:
    """Evaluate the tent at point(s) ``x`` (last axis = coordinates)."""
    val = u(x)
    return float(val) if np.ndim(val) == 0 else val
