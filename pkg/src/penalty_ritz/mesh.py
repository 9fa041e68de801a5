"""Structured meshes of (0, 1), the unit square and the unit disk.

The disk is discretised by an ``n_r x n_theta`` tensor grid in polar
coordinates. Cells are exact annular sectors and quadrature weights carry
the polar Jacobian ``r``; there is no polygonal approximation of the
boundary. All nodes at ``r = 0`` are merged into a single center node.
"""

from dataclasses import dataclass
from functools import cached_property
from math import pi, sqrt

import numpy as np

from .errors import ConfigurationError
from .quadrature import gauss_segment, tensor_gauss, triangle_rule

DOMAIN_KINDS = ("interval", "unit_square", "unit_disk_polar")
DOMAIN_MEASURE = {"interval": 1.0, "unit_square": 1.0, "unit_disk_polar": pi}


@dataclass(frozen=True, eq=False)
class MeshQuadrature:
    """Quadrature points on a mesh, tagged with their cell and reference coordinates."""

    points: np.ndarray
    weights: np.ndarray
    cells: np.ndarray
    local: np.ndarray

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class DomainMesh:
    """A conforming mesh with boundary facets.

    ``boundary_facets`` holds node indices of each facet, ``facet_cells`` the
    parent cell and ``facet_normals`` the outward unit normal at the facet
    midpoint.
    """

    domain_kind: str
    resolution: int
    nodes: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray
    facet_cells: np.ndarray
    facet_normals: np.ndarray
    h: float
    quad_order: int = 3
    n_theta: int = 0

    def __post_init__(self):
        for arr in (self.nodes, self.cells, self.boundary_facets, self.facet_cells, self.facet_normals):
            arr.setflags(write=False)

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def measure(self):
        return DOMAIN_MEASURE[self.domain_kind]

    @property
    def n_r(self):
        return self.resolution

    # -- geometry ---------------------------------------------------------

    @cached_property
    def cell_volumes(self):
        if self.domain_kind == "interval":
            x = self.nodes[self.cells, 0]
            return x[:, 1] - x[:, 0]
        if self.domain_kind == "unit_square":
            p = self.nodes[self.cells]
            e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
            return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        ri, _ = self._polar_cell_origin()
        dr, dt = 1.0 / self.n_r, 2 * pi / self.n_theta
        return 0.5 * ((ri + dr) ** 2 - ri**2) * dt

    def _polar_cell_origin(self):
        idx = np.arange(len(self.cells))
        i, j = idx // self.n_theta, idx % self.n_theta
        return i / self.n_r, j * (2 * pi / self.n_theta)

    def map_to_physical(self, cells, local):
        """Map reference coordinates within ``cells`` to physical points."""
        cells = np.asarray(cells)
        if self.domain_kind == "interval":
            x0 = self.nodes[self.cells[cells, 0], 0]
            return (x0 + local[:, 0] / self.resolution)[:, None]
        if self.domain_kind == "unit_square":
            p = self.nodes[self.cells[cells]]
            return p[:, 0] + local[:, :1] * (p[:, 1] - p[:, 0]) + local[:, 1:2] * (p[:, 2] - p[:, 0])
        r, theta = self.polar_of(cells, local)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    def polar_of(self, cells, local):
        i, j = cells // self.n_theta, cells % self.n_theta
        r = (i + local[:, 0]) / self.n_r
        theta = (j + local[:, 1]) * (2 * pi / self.n_theta)
        return r, theta

    def locate(self, points):
        """Return ``(cells, local)`` containing each physical point.

        Points on shared facets are assigned to one neighbour deterministically.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.resolution
        if self.domain_kind == "interval":
            y = points[:, 0] * n
            c = np.clip(np.floor(y).astype(int), 0, n - 1)
            return c, (y - c)[:, None]
        if self.domain_kind == "unit_square":
            gx, gy = points[:, 0] * n, points[:, 1] * n
            i = np.clip(np.floor(gx).astype(int), 0, n - 1)
            j = np.clip(np.floor(gy).astype(int), 0, n - 1)
            xi, eta = gx - i, gy - j
            below_main = eta <= xi
            below_anti = eta <= 1 - xi
            # 0 bottom, 1 right, 2 top, 3 left
            tri = np.where(below_main & below_anti, 0, np.where(below_main, 1, np.where(below_anti, 3, 2)))
            cells = 4 * (j * n + i) + tri
            return cells, self._triangle_local(cells, points)
        r = np.hypot(points[:, 0], points[:, 1])
        theta = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2 * pi)
        dt = 2 * pi / self.n_theta
        i = np.clip(np.floor(r * n).astype(int), 0, n - 1)
        j = np.clip(np.floor(theta / dt).astype(int), 0, self.n_theta - 1)
        local = np.column_stack([r * n - i, theta / dt - j])
        return i * self.n_theta + j, local

    def _triangle_local(self, cells, points):
        p = self.nodes[self.cells[cells]]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        d = points - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        xi = (d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]) / det
        eta = (e1[:, 0] * d[:, 1] - e1[:, 1] * d[:, 0]) / det
        return np.column_stack([xi, eta])

    # -- quadrature -------------------------------------------------------

    @cached_property
    def volume_rule(self):
        if self.domain_kind == "interval":
            return gauss_segment(self.quad_order)
        if self.domain_kind == "unit_square":
            return triangle_rule(None if self.quad_order == 3 else self.quad_order)
        return tensor_gauss(self.quad_order)

    @cached_property
    def volume_quadrature(self):
        rule = self.volume_rule
        ncell, nq = len(self.cells), len(rule.weights)
        cells = np.repeat(np.arange(ncell), nq)
        local = np.tile(rule.points, (ncell, 1))
        points = self.map_to_physical(cells, local)
        if self.domain_kind == "interval":
            scale = np.repeat(self.cell_volumes, nq)
            weights = np.tile(rule.weights, ncell) * scale
        elif self.domain_kind == "unit_square":
            scale = np.repeat(2 * self.cell_volumes, nq)
            weights = np.tile(rule.weights, ncell) * scale
        else:
            r, _ = self.polar_of(cells, local)
            jac = (1.0 / self.n_r) * (2 * pi / self.n_theta)
            weights = np.tile(rule.weights, ncell) * jac * r
        return _frozen_quadrature(points, weights, cells, local)

    @cached_property
    def boundary_quadrature(self):
        nf = len(self.boundary_facets)
        if self.domain_kind == "interval":
            cells = self.facet_cells.copy()
            local = np.array([[0.0], [1.0]])
            weights = np.ones(2)
        else:
            rule = gauss_segment(self.quad_order)
            q = rule.points[:, 0]
            nq = len(q)
            cells = np.repeat(self.facet_cells, nq)
            s = np.tile(q, nf)
            if self.domain_kind == "unit_square":
                local = np.column_stack([s, np.zeros_like(s)])
                weights = np.tile(rule.weights, nf) / self.resolution
            else:
                local = np.column_stack([np.ones_like(s), s])
                weights = np.tile(rule.weights, nf) * (2 * pi / self.n_theta)
        points = self.map_to_physical(cells, local)
        return _frozen_quadrature(points, weights, cells, local)

    def boundary_distance(self, points):
        """Distance of ``points`` to the boundary of the domain."""
        points = np.atleast_2d(points)
        if self.domain_kind == "interval":
            return np.minimum(np.abs(points[:, 0]), np.abs(points[:, 0] - 1))
        if self.domain_kind == "unit_square":
            return np.min(np.column_stack([points, 1 - points]), axis=1)
        return np.abs(np.hypot(points[:, 0], points[:, 1]) - 1)


def _frozen_quadrature(points, weights, cells, local):
    for arr in (points, weights, cells, local):
        arr.setflags(write=False)
    return MeshQuadrature(points, weights, cells, local)


def build_mesh(domain_kind, resolution, quad_order=3, n_theta=None):
    """Build a uniform mesh with ``h ~ 1/resolution``.

    ``unit_square`` is a criss-cross triangulation (each grid square is split
    by both diagonals); ``unit_disk_polar`` uses ``resolution`` radial and
    ``n_theta`` (default ``4 * resolution``) angular cells.
    """
    if domain_kind not in DOMAIN_KINDS:
        raise ConfigurationError(f"unsupported domain kind {domain_kind!r}; expected one of {DOMAIN_KINDS}")
    if int(resolution) != resolution or resolution < 2:
        raise ConfigurationError(f"resolution must be an integer >= 2, got {resolution!r}")
    n = int(resolution)
    if domain_kind == "interval":
        return _interval(n, quad_order)
    if domain_kind == "unit_square":
        return _criss_cross(n, quad_order)
    return _polar_disk(n, quad_order, n_theta or 4 * n)


def _interval(n, quad_order):
    nodes = np.linspace(0.0, 1.0, n + 1)[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return DomainMesh(
        "interval", n, nodes, cells,
        boundary_facets=np.array([[0], [n]]),
        facet_cells=np.array([0, n - 1]),
        facet_normals=np.array([[-1.0], [1.0]]),
        h=1.0 / n, quad_order=quad_order,
    )


def _criss_cross(n, quad_order):
    g = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(g, g)  # row j is y = g[j]
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    c = (g[:-1] + g[1:]) / 2
    cx, cy = np.meshgrid(c, c)
    centers = np.column_stack([cx.ravel(), cy.ravel()])
    nodes = np.vstack([grid, centers])

    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    v00 = jj * (n + 1) + ii
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    ctr = (n + 1) ** 2 + jj * n + ii
    cells = np.stack(
        [np.column_stack(t) for t in ((v00, v10, ctr), (v10, v11, ctr), (v11, v01, ctr), (v01, v00, ctr))],
        axis=1,
    ).reshape(-1, 3)
    square = jj * n + ii

    facets, parents, normals = [], [], []
    for side, tri, normal, mask in (
        ("bottom", 0, (0.0, -1.0), jj == 0),
        ("right", 1, (1.0, 0.0), ii == n - 1),
        ("top", 2, (0.0, 1.0), jj == n - 1),
        ("left", 3, (-1.0, 0.0), ii == 0),
    ):
        cid = 4 * square[mask] + tri
        facets.append(cells[cid, :2])
        parents.append(cid)
        normals.append(np.tile(normal, (mask.sum(), 1)))
    return DomainMesh(
        "unit_square", n, nodes, cells,
        boundary_facets=np.vstack(facets),
        facet_cells=np.concatenate(parents),
        facet_normals=np.vstack(normals),
        h=1.0 / n, quad_order=quad_order,
    )


def _polar_disk(n_r, quad_order, n_theta):
    dt = 2 * pi / n_theta
    r = np.arange(1, n_r + 1) / n_r
    t = np.arange(n_theta) * dt
    rr, tt = np.meshgrid(r, t, indexing="ij")
    ring = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    nodes = np.vstack([np.zeros((1, 2)), ring])

    def node(i, j):
        # i: radial index 0..n_r, j: angular index (periodic)
        return np.where(i == 0, 0, 1 + (i - 1) * n_theta + np.mod(j, n_theta))

    ii, jj = np.meshgrid(np.arange(n_r), np.arange(n_theta), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    cells = np.column_stack([node(ii, jj), node(ii + 1, jj), node(ii + 1, jj + 1), node(ii, jj + 1)])

    jb = np.arange(n_theta)
    facets = np.column_stack([node(np.full(n_theta, n_r), jb), node(np.full(n_theta, n_r), jb + 1)])
    mid = (jb + 0.5) * dt
    return DomainMesh(
        "unit_disk_polar", n_r, nodes, cells,
        boundary_facets=facets,
        facet_cells=(n_r - 1) * n_theta + jb,
        facet_normals=np.column_stack([np.cos(mid), np.sin(mid)]),
        h=sqrt((1.0 / n_r) ** 2 + dt**2), quad_order=quad_order, n_theta=n_theta,
    )
