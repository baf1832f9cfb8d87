"""Certified parameter intervals and numerical multiple solutions for

    -div a(x, grad u) = lambda k(x) f(u)  in Omega,   u = 0 on the boundary.
"""
from .errors import (
    CollapseError,
    ConfigError,
    ConvergenceError,
    DomainError,
    TriplesolError,
    UnsupportedError,
)
from .geometry import Ball, Box2D, CustomDomain, TentFunction, ball_volume, tent_energy_p
from .embedding import EmbeddingBound, cq_bound, critical_exponent, talenti_critical
from .model import (
    GeneralA,
    MatrixForm,
    Nonlinearity,
    PLaplacian,
    Weight,
    check_alpha,
    check_growth,
    check_h0,
    check_h1,
    log_quartic,
    piecewise_h,
)
from .theorem import (
    AdmissibleInterval,
    TheoremConstants,
    compute_constants,
    lambda_threshold,
    h2_holds,
    interval,
    search_gamma_delta,
)
from .mesh import Mesh, mesh_for
from .solver import Problem, SolveResult, minimize, mountain_pass, solve_three, verify_weak_solution

__version__ = "0.1.0"
