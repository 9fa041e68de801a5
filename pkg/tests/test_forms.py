import numpy as np
import pytest
from hypothesis import given, strategies as st

from penalty_ritz.analysis import friedrichs_ratio, random_smooth_fe
from penalty_ritz.errors import ConfigurationError, ContractViolation
from penalty_ritz.fem import FiniteElementFamily
from penalty_ritz.forms import (
    COEFFICIENT_CATALOG,
    PenalizedProblem,
    bilinear_a,
    bilinear_a_lambda,
    coefficient,
    constant_rhs,
    energy,
    gap_from_energies,
    identity,
    load,
    optimization_gap,
    scaled_identity,
)
from penalty_ritz.functions import AnalyticFunction, boundary_l2_norm, constant, h1_norm
from penalty_ritz.mesh import build_mesh
from penalty_ritz.solvers import solve_linear

MESH = build_mesh("interval", 16)


def fn(value, grad):
    return AnalyticFunction(value, grad, "interval")


X = fn(lambda x: x[:, 0], lambda x: np.ones((len(x), 1)))
ONE_MINUS_X = fn(lambda x: 1 - x[:, 0], lambda x: -np.ones((len(x), 1)))
USTAR = fn(lambda x: x[:, 0] * (1 - x[:, 0]) / 2, lambda x: (0.5 - x[:, 0])[:, None])


def u_lam(lam):
    return fn(lambda x: -0.5 * x[:, 0] ** 2 + 0.5 * x[:, 0] + 1 / (2 * lam), lambda x: (0.5 - x[:, 0])[:, None])


def problem(lam=10.0, A=None, **kw):
    return PenalizedProblem(MESH, A or identity(1), constant_rhs(1.0), lam, **kw)


def test_bilinear_examples():
    p = problem()
    assert bilinear_a(p, X, X) == pytest.approx(1.0, abs=1e-14)
    assert bilinear_a(p, X, ONE_MINUS_X) == pytest.approx(-1.0, abs=1e-14)
    assert bilinear_a(problem(A=scaled_identity(1, 2.0)), USTAR, USTAR) == pytest.approx(1 / 6, abs=1e-14)


def test_bilinear_lambda_examples():
    p = problem(10.0)
    one = constant(1.0, 1)
    assert bilinear_a_lambda(p, one, one) == pytest.approx(20.0, abs=1e-13)
    assert bilinear_a_lambda(p, USTAR, USTAR) == pytest.approx(bilinear_a(p, USTAR, USTAR), abs=1e-15)
    assert bilinear_a_lambda(p, u_lam(10), u_lam(10)) == pytest.approx(1 / 12 + 1 / 20, abs=1e-14)


def test_bilinear_lambda_rejects_natural_mode():
    with pytest.raises(ContractViolation):
        bilinear_a_lambda(problem(boundary_mode="natural"), X, X)


def test_energy_examples():
    assert energy(problem(10.0), u_lam(10)) == pytest.approx(-1 / 24 - 1 / 40, abs=1e-14)
    assert energy(problem(boundary_mode="natural"), USTAR) == pytest.approx(-1 / 24, abs=1e-14)
    assert energy(problem(), constant(0.0, 1)) == 0.0


def test_problem_validation():
    with pytest.raises(ConfigurationError):
        problem(0.0)
    with pytest.raises(ConfigurationError):
        problem(1.0, boundary_mode="dirichlet")
    # lam ignored in natural mode
    assert not problem(0.0, boundary_mode="natural").penalized


def test_optimization_gap():
    assert gap_from_energies(-0.05, -1 / 15).delta == pytest.approx(1 / 60)
    g = gap_from_energies(-0.1 - 1e-12, -0.1)
    assert g.delta == 0.0 and not g.inconsistent
    g = gap_from_energies(-0.2, -0.1)
    assert g.delta == 0.0 and g.inconsistent
    p = problem(10.0)
    assert optimization_gap(p, u_lam(10), energy(p, u_lam(10))).delta == 0.0


@pytest.mark.parametrize("name", sorted(COEFFICIENT_CATALOG))
@pytest.mark.parametrize("dim", [1, 2])
def test_coefficient_fields_symmetric_and_elliptic(name, dim):
    A = coefficient(name, dim)
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, (200, dim))
    mats = A(pts)
    assert np.max(np.abs(mats - np.swapaxes(mats, 1, 2))) <= 1e-14
    xi = rng.standard_normal((200, dim))
    quad = np.einsum("ni,nij,nj->n", xi, mats, xi)
    norm2 = np.sum(xi * xi, axis=1)
    assert np.all(quad >= A.alpha * norm2 * (1 - 1e-12))
    assert np.all(quad <= A.bound * norm2 * (1 + 1e-12))


def _random_fe(fam, seed, scale=1.0):
    return fam.function(scale * np.random.default_rng(seed).standard_normal(fam.dof_count))


@given(seed=st.integers(0, 10_000))
def test_bilinear_symmetry(seed):
    fam = FiniteElementFamily(build_mesh("unit_square", 4))
    p = PenalizedProblem(fam.mesh, coefficient("anisotropic", 2), constant_rhs(), 3.0)
    u, v = _random_fe(fam, seed), _random_fe(fam, seed + 1)
    a_uv, a_vu = bilinear_a_lambda(p, u, v), bilinear_a_lambda(p, v, u)
    assert abs(a_uv - a_vu) <= 1e-12 * (1 + abs(a_uv))


@given(seed=st.integers(0, 10_000), lam=st.floats(0.1, 1e4))
def test_quadratic_expansion_around_minimiser(seed, lam):
    fam = FiniteElementFamily(build_mesh("interval", 16))
    p = PenalizedProblem(fam.mesh, identity(1), constant_rhs(), lam)
    uh, e0 = solve_linear(p, fam)
    h = _random_fe(fam, seed)
    lhs = energy(p, uh + h) - e0 - 0.5 * bilinear_a_lambda(p, h, h)
    assert abs(lhs) <= 1e-10 * (1 + abs(e0))


@given(seed=st.integers(0, 10_000), lam=st.floats(0.01, 100), factor=st.floats(1.01, 10))
def test_energy_strictly_increasing_in_lambda(seed, lam, factor):
    fam = FiniteElementFamily(build_mesh("unit_square", 3))
    u = _random_fe(fam, seed)
    p = PenalizedProblem(fam.mesh, identity(2), constant_rhs(), lam)
    assert boundary_l2_norm(u, fam.mesh) > 0
    assert energy(p.with_lambda(lam * factor), u) > energy(p, u)


def test_energy_linear_in_lambda_through_boundary_term():
    fam = FiniteElementFamily(build_mesh("unit_disk_polar", 4))
    u = _random_fe(fam, 5)
    p = PenalizedProblem(fam.mesh, identity(2), constant_rhs(), 7.0)
    diff = energy(p.with_lambda(14.0), u) - energy(p, u)
    assert diff == pytest.approx(0.5 * 7.0 * boundary_l2_norm(u, fam.mesh) ** 2, rel=1e-12)


@pytest.mark.parametrize("kind", ["interval", "unit_square", "unit_disk_polar"])
def test_coercivity_with_measured_friedrichs_constant(kind):
    mesh = build_mesh(kind, 8)
    ratio = friedrichs_ratio(mesh, n_samples=500)
    alpha1 = 1.0 / ratio
    fam = FiniteElementFamily(mesh)
    coeffs = random_smooth_fe(fam, 200, seed=11)
    for lam in (1.0, 10.0):
        p = PenalizedProblem(mesh, identity(mesh.dim), constant_rhs(), lam)
        for c in coeffs.T[:50]:
            u = fam.function(c)
            assert bilinear_a_lambda(p, u, u) >= alpha1 * h1_norm(u, mesh) ** 2 * (1 - 1e-12)


def test_load_of_constant():
    assert load(problem(), constant(2.0, 1)) == pytest.approx(2.0)
