from fractions import Fraction
from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from penalty_ritz.analysis import (
    cea_bound,
    friedrichs_ratio,
    low_regularity_rate_experiment,
    neumann_cosine_problem,
)
from penalty_ritz.cases import get_case
from penalty_ritz.errors import DomainError
from penalty_ritz.fem import FiniteElementFamily
from penalty_ritz.forms import PenalizedProblem
from penalty_ritz.functions import h1_norm, l2_norm
from penalty_ritz.mesh import build_mesh
from penalty_ritz.rates import (
    RateFit,
    fit_rate,
    rho_nonuniform,
    rho_star_nonuniform,
    rho_star_uniform,
    rho_uniform,
)
from penalty_ritz.solvers import solve_linear

pos = st.floats(1e-3, 20, allow_nan=False)


def test_rho_examples():
    assert rho_uniform(1, 1, 1.5) == 1
    assert rho_uniform(0.5, 1, 1.5) == 0.5
    assert rho_star_uniform(1, 1.5) == (1.0, 1.0)
    assert rho_nonuniform(1.5, 1, 1.5) == 0.75
    assert rho_star_nonuniform(1, 1.5) == (1.5, 0.75)
    assert rho_nonuniform(0, 2, 3) == 0 and rho_uniform(0, 2, 3) == 0


def test_theorem_level_rate_instance():
    # r~ = (r+1)/d, s~ = (2r+3)/(2d) with r=1, d=2; at sigma = s~ the rate is (2r+3)/(4d) = 5/8
    r, d = 1, 2
    rt, st_ = Fraction(r + 1, d), Fraction(2 * r + 3, 2 * d)
    assert rho_nonuniform(st_, rt, st_) == Fraction(5, 8)
    assert rho_nonuniform(float(st_), float(rt), float(st_)) == 0.625


@pytest.mark.parametrize("fn", [rho_uniform, rho_nonuniform, lambda s, r, t: rho_star_uniform(r, t)])
def test_nonpositive_inputs_rejected(fn):
    with pytest.raises(DomainError):
        fn(0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        fn(0.5, 1.0, -1.0)


@given(r=pos, s=pos)
def test_optimal_sigma_identities(r, s):
    assume(s >= r)
    sig, rho = rho_star_nonuniform(r, s)
    assert sig == s and rho == min(s / 2, r) == rho_nonuniform(sig, r, s)
    sig, rho = rho_star_uniform(r, s)
    assert rho == min(2 * s / 3, r)
    assert rho_uniform(sig, r, s) == pytest.approx(min(2 * s / 3, r), rel=1e-15)


@given(r=pos, s=pos)
def test_rho_concave_piecewise_linear_and_maximised_at_sigma_star(r, s):
    grid = np.linspace(0, 3 * s, 100)
    for fn, star in ((rho_uniform, rho_star_uniform), (rho_nonuniform, rho_star_nonuniform)):
        vals = np.array([fn(x, r, s) for x in grid])
        second = np.diff(vals, 2)
        assert np.all(second <= 1e-12 * s)
        assert np.count_nonzero(np.abs(second) > 1e-12 * s) <= 4
        assert vals.max() <= star(r, s)[1] * (1 + 1e-14)


@given(
    expo=st.floats(0.1, 3),
    c=st.floats(1e-3, 1e3),
)
def test_fit_reproduces_power_law(expo, c):
    n = np.array([8, 16, 32, 64, 128])
    f = fit_rate(list(zip(n, c * n**-expo)), window=None)
    assert f.slope == pytest.approx(-expo, abs=1e-12)
    assert f.rate == pytest.approx(expo, abs=1e-12)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_examples_and_window():
    n = [8, 16, 32, 64, 128]
    f = fit_rate([(k, k**-0.75) for k in n])
    assert f.slope == pytest.approx(-0.75, abs=1e-12)
    assert len(f.points) == 4 and f.points[0][0] == 16 and "last 4 of 5" in f.window
    h = [1 / k for k in n]
    assert fit_rate([(x, 3 * x) for x in h]).slope == pytest.approx(1.0, abs=1e-12)
    assert isinstance(f, RateFit)


def test_fit_of_disk_mode1_gaps():
    gap = get_case("disk_mode1").gap
    lams = [4, 8, 16, 32]
    f = fit_rate([(lam, gap(lam)) for lam in lams])
    # independent oracle: numpy's least-squares line fit
    expected = np.polyfit(np.log(lams), np.log([2 / (lam + 1) for lam in lams]), 1)[0]
    assert f.slope == pytest.approx(expected, abs=1e-12)
    assert -0.95 < f.slope < -0.85
    far = fit_rate([(lam, gap(lam)) for lam in (1e3, 2e3, 4e3, 8e3)])
    assert far.slope == pytest.approx(-1.0, abs=0.02)


def test_fit_errors():
    with pytest.raises(DomainError):
        fit_rate([(1, 1), (2, 0.5)])
    with pytest.raises(DomainError):
        fit_rate([(1, 1), (2, 0.0), (4, 0.2)])
    with pytest.raises(DomainError):
        fit_rate([(1, 1), (2, np.nan), (4, 0.2)])


# -- analysis experiments -------------------------------------------------------


def test_one_dimensional_gap_identity():
    case = get_case("interval_poisson")
    mesh = build_mesh("interval", 16)
    for lam in (1, 10, 100, 1000):
        assert h1_norm(case.u_lambda(lam) - case.u_star, mesh) == pytest.approx(1 / (2 * lam), abs=1e-10)


def test_cea_bound_formula():
    assert cea_bound(0.5, 0.0) == 1.0
    assert cea_bound(0.0, 4.0, alpha=4.0) == 1.0
    with pytest.raises(DomainError):
        cea_bound(-1.0, 0.0)


def test_neumann_model_solution():
    problem, exact = neumann_cosine_problem(128)
    u, _ = solve_linear(problem, FiniteElementFamily(problem.mesh))
    assert h1_norm(u - exact, problem.mesh) < 0.02


def test_low_regularity_rate():
    fit = low_regularity_rate_experiment((8, 16, 32, 64, 128))
    assert fit.rate >= 0.45
    with pytest.raises(DomainError):
        low_regularity_rate_experiment([])


def test_interval_poisson_l2_rate_is_one():
    fit = low_regularity_rate_experiment((8, 16, 32, 64), case_id="interval_poisson", resolution=64)
    assert fit.rate == pytest.approx(1.0, abs=0.01)


def test_signflip_gap_matches_closed_form():
    # FE oracle at h = 1/512 against the analytic u_lambda - u*
    case = get_case("interval_signflip")
    mesh = build_mesh("interval", 512)
    for lam in (4.0, 64.0):
        u, _ = solve_linear(PenalizedProblem(mesh, case.A, case.f, lam), FiniteElementFamily(mesh))
        exact = l2_norm(case.u_lambda(lam) - case.u_star, mesh)
        assert l2_norm(u - case.u_star, mesh) == pytest.approx(exact, rel=0.05)
        assert exact == pytest.approx(sqrt(1 / 12) / (4 + 2 * lam), rel=1e-12)


@pytest.mark.parametrize("kind", ["interval", "unit_square", "unit_disk_polar"])
def test_friedrichs_ratio_finite_and_stable(kind):
    ratios = [friedrichs_ratio(build_mesh(kind, n), n_samples=500) for n in (8, 16, 32)]
    assert all(np.isfinite(ratios)) and min(ratios) > 0
    assert max(ratios) / min(ratios) < 1.02
    print(f"{kind}: empirical Friedrichs ratios {ratios}")


def test_disk_measure_pi():
    assert build_mesh("unit_disk_polar", 16).measure == pi
