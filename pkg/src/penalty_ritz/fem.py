"""Piecewise-linear finite element families without built-in boundary conditions.

On the polar disk mesh the elements are bilinear in ``(r, theta)``; the
inner ring of cells shares the single center node.
"""

from dataclasses import dataclass
from functools import cached_property
from math import pi

import numpy as np
from scipy import sparse

from .functions import DiscreteFunction


@dataclass(frozen=True, eq=False)
class BasisTable:
    """Basis data at a set of quadrature points: global dofs, values, gradients."""

    dofs: np.ndarray  # (Q, k)
    values: np.ndarray  # (Q, k)
    grads: np.ndarray  # (Q, k, d)


def basis_table(mesh, cells, local):
    cells = np.asarray(cells)
    kind = mesh.domain_kind
    if kind == "interval":
        s = local[:, 0]
        n = mesh.resolution
        values = np.column_stack([1 - s, s])
        grads = np.broadcast_to(np.array([-n, n], dtype=float), (len(s), 2))[:, :, None]
        return BasisTable(mesh.cells[cells], values, np.array(grads))
    if kind == "unit_square":
        xi, eta = local[:, 0], local[:, 1]
        values = np.column_stack([1 - xi - eta, xi, eta])
        p = mesh.nodes[mesh.cells[cells]]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns e1, e2
        inv = np.linalg.inv(jac)  # rows are grad(xi), grad(eta)
        g1, g2 = inv[:, 0, :], inv[:, 1, :]
        grads = np.stack([-g1 - g2, g1, g2], axis=1)
        return BasisTable(mesh.cells[cells], values, grads)
    return _polar_table(mesh, cells, local)


def _polar_table(mesh, cells, local):
    s, t = local[:, 0], local[:, 1]
    dr, dt = 1.0 / mesh.n_r, 2 * pi / mesh.n_theta
    r, theta = mesh.polar_of(cells, local)
    center = cells < mesh.n_theta

    values = np.column_stack([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t])
    d_r = np.column_stack([-(1 - t), 1 - t, t, -t]) / dr
    with np.errstate(divide="ignore", invalid="ignore"):
        d_ang = np.column_stack([-(1 - s), -s, s, 1 - s]) / (r * dt)[:, None]

    # inner ring: corners 0 and 3 are the same center node; merge them so the
    # 1/r factor cancels analytically
    if np.any(center):
        c = center
        values[c, 0] = 1 - s[c]
        values[c, 3] = 0.0
        d_r[c, 0] = -1.0 / dr
        d_r[c, 3] = 0.0
        d_ang[c] = np.array([0.0, -1.0, 1.0, 0.0]) / (dr * dt)

    er = np.column_stack([np.cos(theta), np.sin(theta)])
    et = np.column_stack([-np.sin(theta), np.cos(theta)])
    grads = d_r[:, :, None] * er[:, None, :] + d_ang[:, :, None] * et[:, None, :]
    return BasisTable(mesh.cells[cells], values, grads)


class FiniteElementFamily:
    """The space ``V_h`` of continuous piecewise-linear (or polar bilinear) functions on a mesh."""

    def __init__(self, mesh):
        self.mesh = mesh

    @property
    def dof_count(self):
        return len(self.mesh.nodes)

    @cached_property
    def volume_table(self):
        q = self.mesh.volume_quadrature
        return basis_table(self.mesh, q.cells, q.local)

    @cached_property
    def boundary_table(self):
        q = self.mesh.boundary_quadrature
        return basis_table(self.mesh, q.cells, q.local)

    def table_at(self, points):
        if points is self.mesh.volume_quadrature.points:
            return self.volume_table
        if points is self.mesh.boundary_quadrature.points:
            return self.boundary_table
        cells, local = self.mesh.locate(points)
        return basis_table(self.mesh, cells, local)

    def function(self, coeffs):
        return FEFunction(self, coeffs)

    def interpolate(self, g):
        return fe_interpolate(self, g)

    # -- assembly ---------------------------------------------------------

    def _assemble(self, table, weights, integrand):
        local = weights[:, None, None] * integrand
        k = table.dofs.shape[1]
        rows = np.repeat(table.dofs[:, :, None], k, axis=2)
        cols = np.repeat(table.dofs[:, None, :], k, axis=1)
        n = self.dof_count
        mat = sparse.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))
        return mat.tocsr()

    def stiffness_matrix(self, coefficient):
        """``K_ij = int A grad(phi_j) . grad(phi_i) dx``."""
        q = self.mesh.volume_quadrature
        t = self.volume_table
        a = coefficient(q.points)
        integrand = np.einsum("qid,qde,qje->qij", t.grads, a, t.grads)
        return self._assemble(t, q.weights, integrand)

    def mass_matrix(self):
        q = self.mesh.volume_quadrature
        t = self.volume_table
        return self._assemble(t, q.weights, t.values[:, :, None] * t.values[:, None, :])

    def boundary_mass_matrix(self):
        q = self.mesh.boundary_quadrature
        t = self.boundary_table
        return self._assemble(t, q.weights, t.values[:, :, None] * t.values[:, None, :])

    def load_vector(self, rhs):
        q = self.mesh.volume_quadrature
        t = self.volume_table
        f = rhs(q.points)
        contrib = (q.weights * f)[:, None] * t.values
        return np.bincount(t.dofs.ravel(), weights=contrib.ravel(), minlength=self.dof_count)


class FEFunction(DiscreteFunction):
    def __init__(self, family, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (family.dof_count,):
            raise ValueError(f"expected {family.dof_count} coefficients, got shape {coeffs.shape}")
        self.family = family
        self.coeffs = coeffs
        self.domain_kind = family.mesh.domain_kind

    def evaluate(self, points):
        t = self.family.table_at(points)
        c = self.coeffs[t.dofs]
        return np.sum(c * t.values, axis=1), np.einsum("qk,qkd->qd", c, t.grads)

    def __repr__(self):
        return f"FEFunction(n={len(self.coeffs)}, {self.domain_kind})"


def fe_interpolate(family, g):
    """Nodal interpolant of ``g`` (a ``DiscreteFunction`` or ``points -> values`` callable)."""
    values = g(family.mesh.nodes)
    return FEFunction(family, np.asarray(values, dtype=float).reshape(-1))
