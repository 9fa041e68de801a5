"""Catalog of model problems with closed-form solutions.

Each case carries the Dirichlet solution ``u_star`` and, where known, the
penalized solution ``u_lambda`` and the gap ``||u_lambda - u_star||_{H1}``.
Disk cases also carry the conormal derivative of ``u_star`` on the circle.
"""

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from .errors import ConfigurationError
from .forms import RightHandSide, anisotropic, constant_rhs, identity, square_sine_rhs
from .functions import AnalyticFunction


@dataclass(frozen=True, eq=False)
class ExactSolutionCase:
    case_id: str
    domain_kind: str
    A: object
    f: RightHandSide
    u_star: AnalyticFunction = None
    u_lambda: object = None  # lam -> AnalyticFunction
    gap: object = None  # lam -> ||u_lambda - u_star||_{H1}
    normal_flux: object = None  # boundary points -> d_A u_star
    kinks: tuple = ()  # interior locations where u_star is only C^1

    @property
    def dim(self):
        return 1 if self.domain_kind == "interval" else 2

    @property
    def has_closed_form(self):
        return self.u_star is not None


def _interval_poisson():
    def u_star(lam=None):
        shift = 0.0 if lam is None else 1.0 / (2 * lam)
        return AnalyticFunction(
            lambda x: -0.5 * x[:, 0] ** 2 + 0.5 * x[:, 0] + shift,
            lambda x: (0.5 - x[:, 0])[:, None],
            "interval",
            "u_lambda" if lam else "u_star",
        )

    return ExactSolutionCase(
        "interval_poisson", "interval", identity(1), constant_rhs(1.0),
        u_star=u_star(), u_lambda=u_star, gap=lambda lam: 1.0 / (2 * lam),
        normal_flux=lambda x: np.full(len(x), -0.5),
    )


def _disk_radial():
    def u(lam=None):
        shift = 0.0 if lam is None else 1.0 / (2 * lam)
        return AnalyticFunction(
            lambda x: 0.25 * (1 - x[:, 0] ** 2 - x[:, 1] ** 2) + shift,
            lambda x: -0.5 * x,
            "unit_disk_polar",
            "u_lambda" if lam else "u_star",
        )

    return ExactSolutionCase(
        "disk_radial", "unit_disk_polar", identity(2), constant_rhs(1.0),
        u_star=u(), u_lambda=u, gap=lambda lam: sqrt(pi) / (2 * lam),
        normal_flux=lambda x: np.full(len(x), -0.5),
    )


def _disk_mode1():
    def u(lam=None):
        # (r - r^3) cos(theta) = x (1 - x^2 - y^2), plus 2/(lam + 1) * x
        c = 0.0 if lam is None else 2.0 / (lam + 1)

        def value(x):
            return x[:, 0] * (1 - x[:, 0] ** 2 - x[:, 1] ** 2) + c * x[:, 0]

        def grad(x):
            return np.column_stack([1 - 3 * x[:, 0] ** 2 - x[:, 1] ** 2 + c, -2 * x[:, 0] * x[:, 1]])

        return AnalyticFunction(value, grad, "unit_disk_polar", "u_lambda" if lam else "u_star")

    return ExactSolutionCase(
        "disk_mode1", "unit_disk_polar", identity(2),
        RightHandSide("8 r cos(theta)", lambda x: 8 * x[:, 0]),
        u_star=u(), u_lambda=u, gap=lambda lam: sqrt(5 * pi) / (lam + 1),
        normal_flux=lambda x: -2 * x[:, 0] / np.hypot(x[:, 0], x[:, 1]),
    )


def _square_sine():
    u_star = AnalyticFunction(
        lambda x: np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1]),
        lambda x: pi * np.column_stack([
            np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1]),
            np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1]),
        ]),
        "unit_square", "u_star",
    )
    return ExactSolutionCase("square_sine", "unit_square", identity(2), square_sine_rhs(), u_star=u_star)


def _signflip_rhs():
    return RightHandSide("sign(1/2 - x)", lambda x: np.sign(0.5 - x[:, 0]))


def _interval_signflip():
    # -u'' = sign(1/2 - x): u* is odd about 1/2 and piecewise quadratic;
    # u_lambda - u* is the linear function -(x - 1/2) / (4 + 2 lam)
    def u(lam=None):
        kappa = 0.0 if lam is None else -1.0 / (4 + 2 * lam)

        def value(x):
            t = x[:, 0]
            left = -0.5 * t**2 + 0.25 * t
            s = 1 - t
            right = 0.5 * s**2 - 0.25 * s
            return np.where(t <= 0.5, left, right) + kappa * (t - 0.5)

        def grad(x):
            t = x[:, 0]
            return (np.where(t <= 0.5, -t + 0.25, -(1 - t) + 0.25) + kappa)[:, None]

        return AnalyticFunction(value, grad, "interval", "u_lambda" if lam else "u_star")

    return ExactSolutionCase(
        "interval_signflip", "interval", identity(1), _signflip_rhs(),
        u_star=u(), u_lambda=u,
        gap=lambda lam: sqrt(1 / 12 + 1) / (4 + 2 * lam),
        normal_flux=lambda x: np.where(x[:, 0] < 0.5, -0.25, 0.25),
        kinks=(0.5,),
    )


def _square_aniso():
    return ExactSolutionCase("square_aniso", "unit_square", anisotropic(2), constant_rhs(1.0))


CASES = {
    "interval_poisson": _interval_poisson,
    "disk_radial": _disk_radial,
    "disk_mode1": _disk_mode1,
    "square_sine": _square_sine,
    "interval_signflip": _interval_signflip,
    "square_aniso": _square_aniso,
}


def get_case(case_id):
    try:
        return CASES[case_id]()
    except KeyError:
        raise ConfigurationError(f"unknown case {case_id!r}; known cases: {sorted(CASES)}") from None


def pde_residual(case, points, step=1e-4):
    """``|-div(A grad u*) - f|`` at interior points, by central differences of the flux."""
    points = np.atleast_2d(points)
    div = np.zeros(len(points))
    for k in range(points.shape[1]):
        e = np.zeros(points.shape[1])
        e[k] = step
        fp = np.einsum("nij,nj->ni", case.A(points + e), case.u_star.gradient(points + e))[:, k]
        fm = np.einsum("nij,nj->ni", case.A(points - e), case.u_star.gradient(points - e))[:, k]
        div += (fp - fm) / (2 * step)
    return np.abs(-div - case.f(points))
