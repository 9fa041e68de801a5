"""Numerical experiments around the error estimates: Cea bound, norm equivalence, low regularity."""

from dataclasses import dataclass
from math import pi

import numpy as np

from .cases import get_case
from .errors import DomainError
from .fem import FiniteElementFamily, fe_interpolate
from .forms import PenalizedProblem, RightHandSide, bilinear_a, energy, identity, scaled_identity
from .functions import AnalyticFunction, h1_norm, l2_norm
from .mesh import build_mesh
from .rates import fit_rate
from .solvers import solve_linear


def cea_bound(delta, inf_term, alpha=1.0):
    """``sqrt(2 delta / alpha + inf_term / alpha)``, the distance bound for any candidate.

    ``inf_term`` is the squared energy-norm best approximation error of the
    ansatz class.
    """
    if alpha <= 0 or delta < 0 or inf_term < 0:
        raise DomainError("cea_bound needs alpha > 0 and nonnegative delta and inf_term")
    return float(np.sqrt((2 * delta + inf_term) / alpha))


def neumann_cosine_problem(resolution=64, stiffness=1.0, quad_order=5):
    """``-c u'' + u = (1 + c pi^2) cos(pi x)`` on (0, 1) with natural boundary conditions.

    The solution is ``cos(pi x)``; with ``c = 1`` the bilinear form is the
    H1 inner product.
    """
    mesh = build_mesh("interval", resolution, quad_order=quad_order)
    A = identity(1) if stiffness == 1.0 else scaled_identity(1, stiffness)
    f = RightHandSide("(1 + c pi^2) cos(pi x)", lambda x: (1 + stiffness * pi**2) * np.cos(pi * x[:, 0]))
    problem = PenalizedProblem(mesh, A, f, boundary_mode="natural", mass=True)
    exact = AnalyticFunction(
        lambda x: np.cos(pi * x[:, 0]), lambda x: (-pi * np.sin(pi * x[:, 0]))[:, None], "interval", "cos(pi x)"
    )
    return problem, exact


@dataclass(frozen=True)
class CeaSample:
    distance: float  # ||v - u*||_{H1}
    bound: float
    delta: float


def cea_experiment(n_candidates=100, resolution=64, stiffness=1.0, seed=0):
    """Check the Cea bound for random FE candidates on the Neumann model problem.

    The coercivity constant is 1 for every ``stiffness >= 1``; for
    ``stiffness == 1`` the bound is an identity.
    """
    problem, exact = neumann_cosine_problem(resolution, stiffness)
    family = FiniteElementFamily(problem.mesh)
    sol = solve_linear(problem, family)
    err = sol.function - exact
    inf_term = bilinear_a(problem, err, err)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_candidates):
        scale = 10 ** rng.uniform(-3, 0)
        v = family.function(sol.coeffs + scale * rng.standard_normal(family.dof_count))
        delta = energy(problem, v) - sol.energy
        samples.append(CeaSample(h1_norm(v - exact, problem.mesh), cea_bound(max(delta, 0.0), inf_term), delta))
    return samples


def random_smooth_fe(family, n_samples, seed=0, max_freq=3):
    """Nodal interpolants of random low-frequency cosine series, as a coefficient array."""
    rng = np.random.default_rng(seed)
    x = family.mesh.nodes
    freqs = np.arange(max_freq + 1)
    if x.shape[1] == 1:
        basis = np.cos(pi * np.outer(x[:, 0], freqs)) / (1 + freqs)
    else:
        a, b = np.meshgrid(freqs, freqs, indexing="ij")
        a, b = a.ravel(), b.ravel()
        # shift disk coordinates into [0, 1]^2 so the series is not symmetric
        y = (x + 1) / 2 if family.mesh.domain_kind == "unit_disk_polar" else x
        basis = np.cos(pi * np.outer(y[:, 0], a)) * np.cos(pi * np.outer(y[:, 1], b)) / (1 + a + b)
    coeffs = rng.standard_normal((basis.shape[1], n_samples))
    return basis @ coeffs


def friedrichs_ratio(mesh, n_samples=500, seed=0):
    """Empirical sup of ``||u||_{H1}^2 / (||grad u||^2 + ||u||_{L2(bdry)}^2)`` over random FE functions."""
    fam = FiniteElementFamily(mesh)
    c = random_smooth_fe(fam, n_samples, seed)
    m, s, b = fam.mass_matrix(), fam.stiffness_matrix(identity(mesh.dim)), fam.boundary_mass_matrix()
    cm = np.sum(c * (m @ c), axis=0)
    cs = np.sum(c * (s @ c), axis=0)
    cb = np.sum(c * (b @ c), axis=0)
    return float(np.max((cm + cs) / (cs + cb)))


def low_regularity_rate_experiment(lambdas, case_id="interval_signflip", resolution=512):
    """Fit the decay rate in ``lam`` of ``||u_lam,h - u*||_{L2}`` for a rough right-hand side.

    ``u_lam,h`` is the FE minimiser at the given resolution; ``u*`` the
    closed-form Dirichlet solution. The returned fit is against ``lam``
    (``rate = -slope``).
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise DomainError("empty lambda grid")
    case = get_case(case_id)
    mesh = build_mesh(case.domain_kind, resolution)
    fam = FiniteElementFamily(mesh)
    points = []
    for lam in lambdas:
        p = PenalizedProblem(mesh, case.A, case.f, lam)
        u = solve_linear(p, fam).function
        points.append((lam, l2_norm(u - case.u_star, mesh)))
    return fit_rate(points)


def interpolation_errors(u, domain_kind, resolutions):
    """``(h, ||I_h u - u||_{H1}, ||I_h u - u||_{L2(bdry)})`` for nodal interpolation on each mesh."""
    from .functions import boundary_l2_norm

    out = []
    for n in resolutions:
        mesh = build_mesh(domain_kind, n)
        e = fe_interpolate(FiniteElementFamily(mesh), u) - u
        out.append((mesh.h, h1_norm(e, mesh), boundary_l2_norm(e, mesh)))
    return out
