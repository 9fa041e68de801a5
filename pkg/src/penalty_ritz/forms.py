"""Coefficient fields, right-hand sides, penalized problems and their energies."""

from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .tolerances import TOLERANCES


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric, uniformly elliptic matrix field ``A(x)``.

    ``evaluator`` maps points ``(N, d)`` to matrices ``(N, d, d)``;
    ``alpha`` and ``bound`` bound its spectrum from below and above.
    """

    name: str
    evaluator: object
    alpha: float
    bound: float

    def __call__(self, points):
        return self.evaluator(np.atleast_2d(points))


@dataclass(frozen=True)
class RightHandSide:
    name: str
    evaluator: object

    def __call__(self, points):
        return np.asarray(self.evaluator(np.atleast_2d(points)), dtype=float)


def identity(dim):
    eye = np.eye(dim)
    return CoefficientField("identity", lambda x: np.broadcast_to(eye, (len(x), dim, dim)).copy(), 1.0, 1.0)


def scaled_identity(dim, c):
    if c <= 0:
        raise ConfigurationError("scale of the identity must be positive")
    eye = c * np.eye(dim)
    return CoefficientField(f"scaled_identity({c:g})", lambda x: np.broadcast_to(eye, (len(x), dim, dim)).copy(), c, c)


def anisotropic(dim):
    """Smooth anisotropic field: ``diag(1 + x_k^2)`` plus 0.25 off-diagonal coupling in 2D.

    Valid bounds on ``[0, 1]^d`` and on the unit disk.
    """
    if dim == 1:
        return CoefficientField("anisotropic", lambda x: (1 + x[:, 0] ** 2)[:, None, None], 1.0, 2.0)

    def evaluate(x):
        a = np.empty((len(x), 2, 2))
        a[:, 0, 0] = 1 + x[:, 0] ** 2
        a[:, 1, 1] = 1 + x[:, 1] ** 2
        a[:, 0, 1] = a[:, 1, 0] = 0.25
        return a

    return CoefficientField("anisotropic", evaluate, 0.75, 2.25)


COEFFICIENT_CATALOG = {
    "identity": identity,
    "scaled_identity": lambda dim: scaled_identity(dim, 2.0),
    "anisotropic": anisotropic,
}


def coefficient(name, dim):
    try:
        return COEFFICIENT_CATALOG[name](dim)
    except KeyError:
        raise ConfigurationError(f"unknown coefficient field {name!r}; known: {sorted(COEFFICIENT_CATALOG)}") from None


def constant_rhs(c=1.0):
    return RightHandSide(f"const({c:g})", lambda x: np.full(len(x), float(c)))


def square_sine_rhs():
    return RightHandSide(
        "2 pi^2 sin(pi x) sin(pi y)",
        lambda x: 2 * pi**2 * np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1]),
    )


@dataclass(frozen=True, eq=False)
class PenalizedProblem:
    """``-div(A grad u) = f`` with the boundary treated by penalty or naturally.

    In ``penalty`` mode the bilinear form is
    ``a_lam(u, v) = int A grad u . grad v dx + lam int_{bdry} u v ds``.
    ``mass=True`` adds ``int u v dx`` to ``a`` (the Neumann problem
    ``-div(A grad u) + u = f``).
    """

    mesh: object
    A: CoefficientField
    f: RightHandSide
    lam: float = 0.0
    boundary_mode: str = "penalty"
    mass: bool = False

    def __post_init__(self):
        if self.boundary_mode not in ("penalty", "natural"):
            raise ConfigurationError(f"boundary_mode must be 'penalty' or 'natural', got {self.boundary_mode!r}")
        if self.boundary_mode == "penalty" and not self.lam > 0:
            raise ConfigurationError(f"penalty mode needs lam > 0, got {self.lam!r}")

    @property
    def penalized(self):
        return self.boundary_mode == "penalty"

    def with_lambda(self, lam):
        return PenalizedProblem(self.mesh, self.A, self.f, lam, self.boundary_mode, self.mass)


def bilinear_a(p, u, v):
    q = p.mesh.volume_quadrature
    uv, ug = u.evaluate(q.points)
    vv, vg = v.evaluate(q.points)
    a = p.A(q.points)
    integrand = np.einsum("qi,qij,qj->q", ug, a, vg)
    if p.mass:
        integrand = integrand + uv * vv
    return q.integrate(integrand)


def boundary_inner(mesh, u, v):
    q = mesh.boundary_quadrature
    return q.integrate(u.evaluate(q.points)[0] * v.evaluate(q.points)[0])


def bilinear_a_lambda(p, u, v):
    if not p.penalized:
        raise ContractViolation("a_lambda is undefined for a problem with natural boundary treatment")
    return bilinear_a(p, u, v) + p.lam * boundary_inner(p.mesh, u, v)


def load(p, u):
    q = p.mesh.volume_quadrature
    return q.integrate(p.f(q.points) * u.evaluate(q.points)[0])


def energy(p, u):
    """``E_lam(u) = a_lam(u, u)/2 - int f u``, or ``a(u, u)/2 - f(u)`` in natural mode."""
    quad = bilinear_a_lambda(p, u, u) if p.penalized else bilinear_a(p, u, u)
    return 0.5 * quad - load(p, u)


@dataclass(frozen=True)
class OptimizationGap:
    """``delta = E(candidate) - reference``, clamped at zero.

    ``inconsistent`` is set when the reference lay above the candidate by
    more than the clamp tolerance, i.e. the reference was not a valid
    lower value.
    """

    delta: float
    raw: float
    inconsistent: bool
    reference_label: str = "exact minimum over the family"

    def __float__(self):
        return self.delta


def gap_from_energies(candidate_energy, reference_min, label="exact minimum over the family"):
    raw = candidate_energy - reference_min
    return OptimizationGap(max(raw, 0.0), raw, raw < -TOLERANCES.gap_clamp, label)


def optimization_gap(p, u, reference_min, label="exact minimum over the family"):
    return gap_from_energies(energy(p, u), reference_min, label)
