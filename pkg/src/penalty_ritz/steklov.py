"""Steklov eigenpairs of the Laplacian on the unit disk and the penalty-gap formula.

With ``a(u, v) = int grad u . grad v`` the Steklov problem
``a(w, phi) = mu int_{circle} w phi ds`` has eigenvalues ``0, 1, 1, 2, 2, ...``
with eigenfunctions ``1`` and ``r^k cos(k theta)``, ``r^k sin(k theta)``.
They are normalised in ``a_1(u, v) = a(u, v) + int_{circle} u v ds``.
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import pi, sqrt

import numpy as np
from scipy.sparse.linalg import spsolve

from .errors import ConfigurationError, DomainError
from .forms import identity
from .functions import AnalyticFunction, LinearCombination
from .mesh import build_mesh


class SteklovTruncationWarning(UserWarning):
    pass


@lru_cache(maxsize=None)
def analysis_mesh(resolution=16, quad_order=8):
    """Polar disk mesh with a high-order rule for integrating analytic modes."""
    return build_mesh("unit_disk_polar", resolution, quad_order=quad_order)


@dataclass(frozen=True)
class SteklovMode:
    index: int
    frequency: int
    kind: str  # "const", "cos" or "sin"
    eigenvalue: float
    normalization: float

    def function(self):
        k, c, kind = self.frequency, self.normalization, self.kind
        if kind == "const":
            return AnalyticFunction(
                lambda x: np.full(len(x), c), lambda x: np.zeros((len(x), 2)), "unit_disk_polar", "e_0"
            )

        def value(x):
            zk = (x[:, 0] + 1j * x[:, 1]) ** k
            return c * (zk.real if kind == "cos" else zk.imag)

        def grad(x):
            dz = k * (x[:, 0] + 1j * x[:, 1]) ** (k - 1)
            if kind == "cos":
                return c * np.column_stack([dz.real, -dz.imag])
            return c * np.column_stack([dz.imag, dz.real])

        return AnalyticFunction(value, grad, "unit_disk_polar", f"e_{self.index} ({kind} {k})")


def steklov_modes_disk(count, A=None):
    """First ``count`` Steklov modes of the unit disk, ordered ``0, 1c, 1s, 2c, 2s, ...``."""
    if A is not None and A.name != "identity":
        raise ConfigurationError("analytic Steklov modes are only available for A = identity")
    if count < 1:
        raise DomainError("need at least one mode")
    modes = [SteklovMode(0, 0, "const", 0.0, 1 / sqrt(2 * pi))]
    k = 1
    while len(modes) < count:
        for kind in ("cos", "sin"):
            if len(modes) < count:
                modes.append(SteklovMode(len(modes), k, kind, float(k), 1 / sqrt(pi * (k + 1))))
        k += 1
    return modes


def a1_inner(u, v, mesh):
    """``int grad u . grad v dx + int_{bdry} u v ds``."""
    q, b = mesh.volume_quadrature, mesh.boundary_quadrature
    _, gu = u.evaluate(q.points)
    _, gv = v.evaluate(q.points)
    return q.integrate(np.sum(gu * gv, axis=1)) + b.integrate(u.evaluate(b.points)[0] * v.evaluate(b.points)[0])


def gram_matrix(modes, mesh=None):
    mesh = mesh or analysis_mesh()
    fns = [m.function() for m in modes]
    q, b = mesh.volume_quadrature, mesh.boundary_quadrature
    gv = np.stack([f.evaluate(q.points)[1] for f in fns])
    bv = np.stack([f.evaluate(b.points)[0] for f in fns])
    return np.einsum("iqd,jqd,q->ij", gv, gv, q.weights) + np.einsum("iq,jq,q->ij", bv, bv, b.weights)


def eigen_residuals(modes, tests, mesh=None):
    """``|a(e_j, phi) - mu_j int e_j phi ds|`` for every mode and test function."""
    mesh = mesh or analysis_mesh()
    q, b = mesh.volume_quadrature, mesh.boundary_quadrature
    out = np.empty((len(modes), len(tests)))
    tv = [(t.evaluate(q.points)[1], t.evaluate(b.points)[0]) for t in tests]
    for i, m in enumerate(modes):
        e = m.function()
        _, ge = e.evaluate(q.points)
        be = e.evaluate(b.points)[0]
        for j, (gt, bt) in enumerate(tv):
            lhs = q.integrate(np.sum(ge * gt, axis=1))
            rhs = m.eigenvalue * b.integrate(be * bt)
            out[i, j] = abs(lhs - rhs)
    return out


def fourier_coeffs(w, modes, mesh=None):
    """``c_j = (1 + mu_j) int_{circle} w e_j ds``; exact for weakly harmonic ``w``.

    Harmonicity of ``w`` is the caller's responsibility.
    """
    mesh = mesh or analysis_mesh()
    b = mesh.boundary_quadrature
    wb = w.evaluate(b.points)[0]
    return np.array([(1 + m.eigenvalue) * b.integrate(wb * m.function()(b.points)) for m in modes])


def expand(coeffs, modes, scale=1.0):
    return LinearCombination([(scale * c, m.function()) for c, m in zip(coeffs, modes)])


@dataclass(frozen=True, eq=False)
class SteklovReconstruction:
    """``v_lam = u* - u_lam = (1/lam) sum_j c(lam)_j e_j`` truncated to ``len(modes)`` terms."""

    function: object
    lam: float
    modes: list
    coefficients: np.ndarray  # c(lam)_j
    flux_coefficients: np.ndarray  # int (d_A u*) e_j ds
    tail_bound: float


def penalty_gap_via_formula(case, lam, count=32, mesh=None, tol=None):
    """Reconstruct ``u* - u_lam`` from the Steklov solution formula.

    ``c(lam)_j = (1 + mu_j) / (1 + mu_j / lam) * int (d_A u*) e_j ds``.
    The tail bound is the ``a_1``-norm contributed by the last retained
    mode; a warning is issued when it exceeds ``tol``.
    """
    if case.domain_kind != "unit_disk_polar" or case.normal_flux is None:
        raise ConfigurationError(f"case {case.case_id!r} has no analytic Steklov data (disk cases only)")
    if not lam > 0:
        raise DomainError("lam must be positive")
    mesh = mesh or analysis_mesh()
    modes = steklov_modes_disk(count, case.A)
    b = mesh.boundary_quadrature
    flux = case.normal_flux(b.points)
    flux_c = np.array([b.integrate(flux * m.function()(b.points)) for m in modes])
    mu = np.array([m.eigenvalue for m in modes])
    c = (1 + mu) / (1 + mu / lam) * flux_c
    tail = abs(c[-1]) / lam
    if tol is not None and tail > tol:
        warnings.warn(
            f"{count} Steklov modes may be too few: last retained term has size {tail:.3e} > {tol:.3e}",
            SteklovTruncationWarning,
            stacklevel=2,
        )
    return SteklovReconstruction(expand(c, modes, 1.0 / lam), lam, modes, c, flux_c, tail)


def orthogonal_decomposition(u, family=None):
    """Split an FE function into a discrete harmonic part and a zero-trace part.

    The harmonic part matches ``u`` on boundary nodes and satisfies
    ``a(u_a, phi) = 0`` for every interior basis function ``phi``.
    """
    family = family or u.family
    mesh = family.mesh
    k = family.stiffness_matrix(identity(mesh.dim)).tocsr()
    bnodes = np.unique(mesh.boundary_facets)
    interior = np.setdiff1d(np.arange(family.dof_count), bnodes)
    c = np.array(u.coeffs)
    harmonic = np.zeros_like(c)
    harmonic[bnodes] = c[bnodes]
    rhs = -k[interior][:, bnodes] @ c[bnodes]
    harmonic[interior] = spsolve(k[interior][:, interior].tocsc(), rhs)
    return family.function(harmonic), family.function(c - harmonic)


def steklov_projection(u, modes, mesh):
    """``a_1``-orthogonal projection of ``u`` onto the span of ``modes``."""
    coeffs = np.array([a1_inner(u, m.function(), mesh) for m in modes])
    return coeffs, expand(coeffs, modes)



def random_test_functions(count, seed=0, degree=3):
    """Random cubic (by default) polynomials on the disk, used as test functions."""
    rng = np.random.default_rng(seed)
    exps = [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    out = []
    for i in range(count):
        c = rng.standard_normal(len(exps))

        def value(x, c=c):
            return sum(ck * x[:, 0] ** a * x[:, 1] ** b for ck, (a, b) in zip(c, exps))

        def grad(x, c=c):
            gx = sum(ck * a * x[:, 0] ** max(a - 1, 0) * x[:, 1] ** b for ck, (a, b) in zip(c, exps))
            gy = sum(ck * b * x[:, 0] ** a * x[:, 1] ** max(b - 1, 0) for ck, (a, b) in zip(c, exps))
            return np.column_stack([gx, gy])

        out.append(AnalyticFunction(value, grad, "unit_disk_polar", f"phi_{i}"))
    return out
