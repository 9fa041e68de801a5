"""Reference-element quadrature rules.

Reference elements are the unit segment ``[0, 1]``, the unit right triangle
with vertices ``(0, 0), (1, 0), (0, 1)`` and the unit square ``[0, 1]^2``.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt

import numpy as np
from numpy.polynomial.legendre import leggauss

REFERENCE_MEASURE = {"segment": 1.0, "triangle": 0.5, "square": 1.0}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    element: str
    points: np.ndarray  # shape (n, dim)
    weights: np.ndarray  # shape (n,)
    exactness_degree: int

    def __post_init__(self):
        if self.element not in REFERENCE_MEASURE:
            raise ValueError(f"unknown reference element {self.element!r}")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def dim(self):
        return self.points.shape[1]

    def integrate(self, fn):
        """Apply the rule to ``fn(points) -> values`` on the reference element."""
        return float(np.dot(self.weights, fn(self.points)))


def gauss_segment(n=3):
    """``n``-point Gauss-Legendre rule on ``[0, 1]``; exact to degree ``2n - 1``."""
    x, w = leggauss(n)
    return QuadratureRule("segment", ((x + 1) / 2)[:, None], w / 2, 2 * n - 1)


def _strang_fix_6():
    # closed forms of the 6-point degree-4 rule (weights normalised to sum 1)
    root = sqrt(38 - 44 * sqrt(2 / 5))
    a = (8 - sqrt(10) + root) / 18
    b = (8 - sqrt(10) - root) / 18
    disc = sqrt(213125 - 53320 * sqrt(10))
    wa = (620 + disc) / 3720
    wb = (620 - disc) / 3720
    pts = [(a, a), (1 - 2 * a, a), (a, 1 - 2 * a), (b, b), (1 - 2 * b, b), (b, 1 - 2 * b)]
    wts = [wa] * 3 + [wb] * 3
    return np.array(pts), 0.5 * np.array(wts)


def triangle_rule(order=None):
    """Quadrature on the unit right triangle.

    The default is the symmetric 6-point rule of degree 4. Passing ``order``
    returns a collapsed (Duffy) ``order x order`` Gauss product rule, exact to
    degree ``2*order - 2``.
    """
    if order is None:
        pts, wts = _strang_fix_6()
        return QuadratureRule("triangle", pts, wts, 4)
    x, w = leggauss(order)
    u, wu = (x + 1) / 2, w / 2
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(wu, wu)
    # (u, v) -> (u, v (1 - u)), Jacobian (1 - u)
    pts = np.column_stack([uu.ravel(), (vv * (1 - uu)).ravel()])
    wts = (ww * (1 - uu)).ravel()
    return QuadratureRule("triangle", pts, wts, 2 * order - 2)


def tensor_gauss(n=3):
    """``n x n`` Gauss product rule on ``[0, 1]^2``."""
    x, w = leggauss(n)
    u, wu = (x + 1) / 2, w / 2
    uu, vv = np.meshgrid(u, u, indexing="ij")
    pts = np.column_stack([uu.ravel(), vv.ravel()])
    return QuadratureRule("square", pts, np.outer(wu, wu).ravel(), 2 * n - 1)


def reference_monomial_integral(element, exponents):
    """Exact integral of ``x^a`` (or ``x^a y^b``) over a reference element, as a Fraction."""
    if element == "segment":
        (a,) = exponents
        return Fraction(1, a + 1)
    a, b = exponents
    if element == "square":
        return Fraction(1, (a + 1) * (b + 1))
    if element == "triangle":
        return Fraction(factorial(a) * factorial(b), factorial(a + b + 2))
    raise ValueError(f"unknown reference element {element!r}")


def exactness_defect(rule):
    """Largest relative error of ``rule`` over all monomials up to its exactness degree."""
    worst = 0.0
    deg = rule.exactness_degree
    if rule.dim == 1:
        exps = [(a,) for a in range(deg + 1)]
    elif rule.element == "square":
        # tensor rules are exact per variable
        exps = [(a, b) for a in range(deg + 1) for b in range(deg + 1)]
    else:
        exps = [(a, b) for a in range(deg + 1) for b in range(deg + 1 - a)]
    for e in exps:
        exact = float(reference_monomial_integral(rule.element, e))
        approx = float(np.dot(rule.weights, np.prod(rule.points ** np.array(e), axis=1)))
        worst = max(worst, abs(approx - exact) / abs(exact))
    return worst
