"""Functions paired with their gradients, and the discrete norms built on them."""

import numpy as np


class DiscreteFunction:
    """A function on a domain that returns values and spatial gradients.

    Subclasses implement ``evaluate(points) -> (values, gradients)`` with
    ``points`` of shape ``(N, d)``, ``values`` of shape ``(N,)`` and
    ``gradients`` of shape ``(N, d)``. Linear combinations are formed
    lazily with ``+``, ``-`` and scalar ``*``.
    """

    domain_kind = None

    def evaluate(self, points):
        raise NotImplementedError

    def __call__(self, points):
        return self.evaluate(np.atleast_2d(points))[0]

    def gradient(self, points):
        return self.evaluate(np.atleast_2d(points))[1]

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __mul__(self, scalar):
        return LinearCombination([(float(scalar), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return LinearCombination([(-1.0, self)])


class AnalyticFunction(DiscreteFunction):
    """Closed-form function given by separate value and gradient callables."""

    def __init__(self, value, grad, domain_kind=None, name=None):
        self._value = value
        self._grad = grad
        self.domain_kind = domain_kind
        self.name = name

    def evaluate(self, points):
        points = np.atleast_2d(points)
        v = np.broadcast_to(np.asarray(self._value(points), dtype=float), (len(points),))
        g = np.broadcast_to(np.asarray(self._grad(points), dtype=float), points.shape)
        return np.array(v), np.array(g)

    def __repr__(self):
        return f"AnalyticFunction({self.name or '?'})"


def constant(c, dim, domain_kind=None):
    return AnalyticFunction(
        lambda x: np.full(len(x), float(c)), lambda x: np.zeros((len(x), dim)), domain_kind, f"const {c}"
    )


class LinearCombination(DiscreteFunction):
    def __init__(self, terms):
        flat = []
        for coef, fn in terms:
            if isinstance(fn, LinearCombination):
                flat.extend((coef * c, f) for c, f in fn.terms)
            else:
                flat.append((coef, fn))
        self.terms = flat
        kinds = {f.domain_kind for _, f in flat} - {None}
        self.domain_kind = kinds.pop() if len(kinds) == 1 else None

    def evaluate(self, points):
        points = np.atleast_2d(points)
        val = np.zeros(len(points))
        grad = np.zeros(points.shape)
        for coef, fn in self.terms:
            v, g = fn.evaluate(points)
            val += coef * v
            grad += coef * g
        return val, grad


def check_gradient_field(u, points, step=1e-5):
    """Largest relative mismatch between ``u.gradient`` and central differences."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _, grad = u.evaluate(points)
    fd = np.empty_like(grad)
    for k in range(points.shape[1]):
        e = np.zeros(points.shape[1])
        e[k] = step
        fd[:, k] = (u(points + e) - u(points - e)) / (2 * step)
    scale = np.maximum(np.abs(fd), 1.0)
    return float(np.max(np.abs(grad - fd) / scale))


# -- norms -----------------------------------------------------------------


def l2_norm(u, mesh):
    q = mesh.volume_quadrature
    v, _ = u.evaluate(q.points)
    return float(np.sqrt(q.integrate(v * v)))


def grad_l2_norm(u, mesh):
    q = mesh.volume_quadrature
    _, g = u.evaluate(q.points)
    return float(np.sqrt(q.integrate(np.sum(g * g, axis=1))))


def h1_norm(u, mesh):
    """``(||u||_{L2}^2 + ||grad u||_{L2}^2)^{1/2}`` by the mesh volume quadrature."""
    q = mesh.volume_quadrature
    v, g = u.evaluate(q.points)
    return float(np.sqrt(q.integrate(v * v + np.sum(g * g, axis=1))))


def boundary_l2_norm(u, mesh):
    """L2 norm of the trace of ``u``; on (0, 1) this is ``sqrt(u(0)^2 + u(1)^2)``."""
    q = mesh.boundary_quadrature
    v, _ = u.evaluate(q.points)
    return float(np.sqrt(q.integrate(v * v)))
