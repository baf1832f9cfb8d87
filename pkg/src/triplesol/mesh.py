"""Structured meshes for W^{1,p}_0: radial grids for balls, P1 triangulations in 2-D."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .geometry import Ball, Box2D, Domain

__all__ = ["Mesh", "radial_mesh", "box_mesh", "disk_mesh", "mesh_for"]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes, elements, and the linear maps the energy assembly needs.

    ``grad`` maps free-node values to element gradients stacked component
    by component (shape ``(gdim * E, n_free)``); ``gdim`` is 1 for radial
    grids, where the gradient is the radial derivative.
    """

    kind: str
    dim: int
    nodes: np.ndarray  # (n_nodes, dim) ambient coordinates
    boundary: np.ndarray  # (n_nodes,) bool Dirichlet mask
    elements: np.ndarray  # (E, 2) or (E, 3) node indices
    element_measure: np.ndarray  # (E,)
    element_points: np.ndarray  # (E, dim)
    grad: sp.csr_matrix
    gdim: int
    node_weight: np.ndarray  # (n_free,) integral of each hat function
    radius: float | None = None

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def n_free(self) -> int:
        return int((~self.boundary).sum())

    @property
    def free_nodes(self) -> np.ndarray:
        return self.nodes[~self.boundary]

    @property
    def h(self) -> float:
        """Largest element diameter."""
        pts = self.nodes[self.elements]
        diam = 0.0
        k = self.elements.shape[1]
        for a in range(k):
            for b in range(a + 1, k):
                diam = max(diam, float(np.max(np.linalg.norm(pts[:, a] - pts[:, b], axis=-1))))
        return diam

    def stiffness(self) -> sp.csc_matrix:
        """Dirichlet Laplacian: sum over elements of |e| grad(phi_i) . grad(phi_j)."""
        W = sp.diags(np.tile(self.element_measure, self.gdim))
        return (self.grad.T @ W @ self.grad).tocsc()

    def full(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.nodes))
        out[~self.boundary] = values
        return out

    def interpolate(self, fn) -> np.ndarray:
        """Nodal interpolant of ``fn`` on the free nodes."""
        return np.asarray(fn(self.free_nodes), dtype=float)

    def radial_coordinate(self, center) -> np.ndarray:
        return np.linalg.norm(self.nodes - np.asarray(center), axis=-1)


def _sparse_grad(rows, cols, vals, shape, boundary):
    G = sp.csr_matrix((vals, (rows, cols)), shape=shape)
    return G[:, np.flatnonzero(~boundary)].tocsr()


def radial_mesh(domain: Ball, n: int) -> Mesh:
    """Uniform grid 0 = r_0 < ... < r_n = R, weighted by the shell factor r^(N-1).

    Element measures are exact shell volumes; node weights are the exact
    integrals of the hat functions against r^(N-1).
    """
    if not isinstance(domain, Ball):
        raise DomainError("radial meshes need a ball")
    if n < 1:
        raise DomainError("need at least one radial element")
    N, R = domain.dim, domain.radius
    sigma = 2 * np.pi ** (N / 2) / _gamma_half(N)  # surface area of the unit sphere
    r = np.linspace(0.0, R, n + 1)
    a, b = r[:-1], r[1:]
    h = b - a
    shell = sigma * (b**N - a**N) / N
    # hat integrals: int_a^b (b - s)/h s^(N-1) ds and int_a^b (s - a)/h s^(N-1) ds
    m_n = sigma * (b ** (N + 1) - a ** (N + 1)) / (N + 1)
    right = (m_n - a * shell) / h
    left = shell - right
    weight = np.zeros(n + 1)
    weight[:-1] += left
    weight[1:] += right
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[-1] = True
    e = np.arange(n)
    rows = np.concatenate([e, e])
    cols = np.concatenate([e, e + 1])
    vals = np.concatenate([-1.0 / h, 1.0 / h])
    grad = _sparse_grad(rows, cols, vals, (n, n + 1), boundary)
    center = np.asarray(domain.center)
    nodes = np.zeros((n + 1, N))
    nodes[:, 0] = r
    nodes += center
    pts = np.zeros((n, N))
    pts[:, 0] = 0.5 * (a + b)
    pts += center
    elements = np.stack([e, e + 1], axis=1)
    return Mesh("radial", N, nodes, boundary, elements, shell, pts, grad, 1, weight[:-1], R)


def _gamma_half(N: int) -> float:
    from .mathkit import gamma

    return gamma(N / 2)


def _triangulate(nodes: np.ndarray, tris: np.ndarray, boundary: np.ndarray, kind: str,
                 radius: float | None = None) -> Mesh:
    p0, p1, p2 = (nodes[tris[:, i]] for i in range(3))
    d1, d2 = p1 - p0, p2 - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(det <= 0):
        raise DomainError("triangulation has non-positive element areas")
    area = 0.5 * det
    # gradients of barycentric coordinates
    gx = np.stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], axis=1) / det[:, None]
    gy = np.stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], axis=1) / det[:, None]
    E = len(tris)
    e = np.repeat(np.arange(E), 3)
    cols = tris.reshape(-1)
    rows = np.concatenate([e, e + E])
    grad = _sparse_grad(rows, np.concatenate([cols, cols]),
                        np.concatenate([gx.reshape(-1), gy.reshape(-1)]), (2 * E, len(nodes)), boundary)
    weight = np.bincount(cols, weights=np.repeat(area / 3.0, 3), minlength=len(nodes))
    centroids = (p0 + p1 + p2) / 3.0
    return Mesh(kind, 2, nodes, boundary, tris, area, centroids, grad, 2, weight[~boundary], radius)


def _grid_triangles(nx: int, ny: int, union_jack: bool) -> np.ndarray:
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            # diagonals toward the grid centre keep mapped corner cells well shaped
            flip = union_jack and ((i < nx / 2) != (j < ny / 2))
            if flip:
                tris += [(a, b, d), (b, c, d)]
            else:
                tris += [(a, b, c), (a, c, d)]
    return np.array(tris)


def box_mesh(domain: Box2D, nx: int, ny: int | None = None) -> Mesh:
    """Uniform grid on the box, each cell split into two right triangles."""
    if not isinstance(domain, Box2D):
        raise DomainError("box meshes need a Box2D domain")
    ny = nx if ny is None else ny
    if nx < 2 or ny < 2:
        raise DomainError("need at least 2 cells per side")
    cx, cy = domain.center
    xs = np.linspace(cx - domain.width / 2, cx + domain.width / 2, nx + 1)
    ys = np.linspace(cy - domain.height / 2, cy + domain.height / 2, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    I, Jg = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    boundary = ((I == 0) | (I == nx) | (Jg == 0) | (Jg == ny)).ravel()
    return _triangulate(nodes, _grid_triangles(nx, ny, False), boundary, "box")


def disk_mesh(domain: Ball, n: int) -> Mesh:
    """Square grid mapped onto the disk; boundary nodes land exactly on the circle.

    The map (u, v) -> (u sqrt(1 - v^2/2), v sqrt(1 - u^2/2)) sends the square
    edge onto the unit circle. ``n`` is the number of cells per side.
    """
    if not isinstance(domain, Ball) or domain.dim != 2:
        raise DomainError("disk meshes need a 2-D ball")
    if n < 2:
        raise DomainError("need at least 2 cells per side")
    s = np.linspace(-1.0, 1.0, n + 1)
    U, V = np.meshgrid(s, s, indexing="ij")
    x = U * np.sqrt(1 - V**2 / 2)
    y = V * np.sqrt(1 - U**2 / 2)
    nodes = domain.radius * np.stack([x.ravel(), y.ravel()], axis=1) + np.asarray(domain.center)
    I, Jg = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    boundary = ((I == 0) | (I == n) | (Jg == 0) | (Jg == n)).ravel()
    return _triangulate(nodes, _grid_triangles(n, n, True), boundary, "disk", domain.radius)


def mesh_for(domain: Domain, resolution: int, kind: str = "auto") -> Mesh:
    """``kind``: ``radial``, ``triangulated`` or ``auto`` (radial for balls)."""
    if kind == "auto":
        kind = "radial" if isinstance(domain, Ball) else "triangulated"
    if kind == "radial":
        return radial_mesh(domain, resolution)
    if kind == "triangulated":
        if isinstance(domain, Box2D):
            return box_mesh(domain, resolution)
        if isinstance(domain, Ball) and domain.dim == 2:
            return disk_mesh(domain, resolution)
        raise DomainError("triangulated meshes exist for Box2D and 2-D balls only")
    raise DomainError(f"unknown mesh kind {kind!r}")
