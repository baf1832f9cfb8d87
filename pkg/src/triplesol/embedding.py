"""Upper bounds for the Sobolev embedding constants c_q and the sup-norm constant m.

For ``1 < p < N`` the bounds come from Talenti's sharp constant at the
critical exponent and Hoelder's inequality; for ``p > N`` from the
sup-norm estimate. ``p == N`` has no closed form here: callers supply
``c_q`` themselves, or use :func:`holder_descent_bound`, which goes
through an exponent ``s < N`` instead.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, UnsupportedError
from .mathkit import gamma

__all__ = [
    "EmbeddingBound",
    "critical_exponent",
    "talenti_critical",
    "subcritical_bound",
    "sup_norm_constant",
    "cq_bound",
    "holder_descent_bound",
    "user_bound",
]

SUBCRITICAL = "subcritical-talenti"
SUPNORM = "supnorm-based"
USER = "user-supplied"
DESCENT = "holder-descent"

# distance from the singular exponent p = N below which constants are refused
SINGULAR_GAP = 1e-6


@dataclass(frozen=True)
class EmbeddingBound:
    N: int
    p: float
    q: float
    cq: float
    regime: str
    provenance: str = ""

    def __post_init__(self):
        if not (self.cq > 0 and math.isfinite(self.cq)):
            raise DomainError(f"embedding constant must be positive and finite, got {self.cq}")

    def to_dict(self):
        return asdict(self)


def critical_exponent(N: int, p: float) -> float:
    """p* = pN/(N - p) for p < N, infinity otherwise."""
    if N < 2 or p <= 1:
        raise DomainError("critical exponent needs N >= 2 and p > 1")
    return p * N / (N - p) if p < N else math.inf


def talenti_critical(N: int, p: float) -> float:
    """Sharp constant of the embedding into L^{p*} (Talenti)."""
    if N < 2 or p <= 1:
        raise DomainError("need N >= 2 and p > 1")
    if p > N - SINGULAR_GAP:
        raise DomainError(f"Talenti constant needs p < N (p = {p}, N = {N})")
    eta = N * (p - 1) / (N - p)
    ratio = math.factorial(N) * gamma(N / 2) / (2 * gamma(N / p) * gamma(N + 1 - N / p))
    return ratio ** (1 / N) * eta ** (1 - 1 / p) / (N * math.sqrt(math.pi))


def subcritical_bound(N: int, p: float, q: float, measure: float) -> float:
    """c_q <= measure^((p*-q)/(p* q)) * c_{p*} for 1 <= q <= p*."""
    if measure <= 0:
        raise DomainError("measure must be positive")
    pstar = critical_exponent(N, p)
    if not 1 <= q <= pstar:
        raise DomainError(f"q = {q} outside [1, p*] = [1, {pstar}]")
    return measure ** ((pstar - q) / (pstar * q)) * talenti_critical(N, p)


def _supnorm_factor(N: int, p: float) -> float:
    if p < N + SINGULAR_GAP:
        raise DomainError(f"sup-norm constant needs p > N (p = {p}, N = {N})")
    return (
        N ** (-1 / p)
        / math.sqrt(math.pi)
        * gamma(1 + N / 2) ** (1 / N)
        * ((p - 1) / (p - N)) ** (1 - 1 / p)
    )


def sup_norm_constant(N: int, p: float, measure: float) -> float:
    """m with max|u| <= m ||grad u||_p, p > N (equality for balls)."""
    if measure <= 0:
        raise DomainError("measure must be positive")
    return _supnorm_factor(N, p) * measure ** (1 / N - 1 / p)


def cq_bound(N: int, p: float, q: float, measure: float) -> EmbeddingBound:
    """Explicit upper bound for c_q in either regime; p = N is unsupported."""
    if N < 2 or p <= 1:
        raise DomainError("need N >= 2 and p > 1")
    if abs(p - N) < SINGULAR_GAP:
        raise UnsupportedError(
            f"no explicit c_q for p = N = {N}; supply c_q (and c_1) manually "
            "or request the holder-descent bound"
        )
    if p < N:
        c = subcritical_bound(N, p, q, measure)
        return EmbeddingBound(N, p, q, c, SUBCRITICAL, "Talenti constant at p* with Hoelder to L^q")
    if q < 1:
        raise DomainError("q must be >= 1")
    # m * meas^(1/q), identical to meas^(1/N + (p-q)/(qp)) times the m prefactor
    c = _supnorm_factor(N, p) * measure ** (1 / N + (p - q) / (q * p))
    return EmbeddingBound(N, p, q, c, SUPNORM, "sup-norm bound m with Hoelder to L^q")


def holder_descent_bound(
    N: int, p: float, q: float, measure: float, grid: int = 400
) -> EmbeddingBound:
    """Bound c_q for ``p <= N`` by passing through W^{1,s}_0 with ``s < min(p, N)``.

    Uses ||grad u||_s <= meas^(1/s - 1/p) ||grad u||_p together with the
    subcritical bound at exponent ``s``; the best ``s`` on a grid wins.
    Every candidate is a valid bound, so the minimum is as well.
    """
    if measure <= 0:
        raise DomainError("measure must be positive")
    if q < 1:
        raise DomainError("q must be >= 1")
    s_hi = min(p, N) - 1e-3
    best = math.inf
    best_s = None
    for s in np.linspace(1.0 + 1e-3, s_hi, grid):
        sstar = s * N / (N - s)
        if q > sstar:
            continue
        c = subcritical_bound(N, s, q, measure) * measure ** (1 / s - 1 / p)
        if c < best:
            best, best_s = c, float(s)
    if best_s is None:
        raise DomainError(f"no admissible intermediate exponent for q = {q}")
    return EmbeddingBound(N, p, q, best, DESCENT, f"Hoelder descent through s = {best_s:.4f}")


def user_bound(N: int, p: float, q: float, cq: float) -> EmbeddingBound:
    return EmbeddingBound(N, p, q, float(cq), USER, "supplied by the user")
