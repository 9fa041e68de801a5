"""Fully connected networks with hand-written reverse-mode differentiation.

A network maps ``R^d -> R`` through ``x -> T_L(rho(T_{L-1}(... rho(T_1 x))))``.
The energy needs the spatial gradient of the network inside the objective,
so the forward pass carries the input Jacobian of every layer alongside
the activations, and the backward pass differentiates through both.
"""

import re
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import ConfigurationError, NumericalFailure
from .functions import DiscreteFunction

ACTIVATIONS = ("relu", "tanh")

_ARCH = re.compile(r"^\s*(\d+(?:\s*-\s*\d+)+)\s*:\s*([a-z]+)\s*$")


def parse_architecture(spec):
    """Parse ``"1-16-16-1:tanh"`` into ``((1, 16, 16, 1), "tanh")``."""
    m = _ARCH.match(spec)
    if not m:
        raise ConfigurationError(f"cannot parse architecture {spec!r}; expected e.g. '1-16-16-1:tanh'")
    widths = tuple(int(w) for w in m.group(1).split("-"))
    activation = m.group(2)
    if activation not in ACTIVATIONS:
        raise ConfigurationError(f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")
    if widths[-1] != 1 or min(widths) < 1:
        raise ConfigurationError(f"architecture {spec!r} must end in a single output and have positive widths")
    return widths, activation


def parameter_count(widths):
    return sum(n * m + n for m, n in zip(widths[:-1], widths[1:]))


def glorot_uniform(widths, seed):
    """Weights uniform in ``+-sqrt(6 / (fan_in + fan_out))``, zero biases."""
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_out * fan_in))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


@dataclass(frozen=True, eq=False)
class NetworkFamily:
    widths: tuple
    activation: str
    theta: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        theta = np.array(self.theta, dtype=float)
        expected = parameter_count(self.widths)
        if theta.shape != (expected,):
            raise ConfigurationError(
                f"architecture {self.widths} needs {expected} parameters, got {theta.shape}"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def initialize(cls, architecture, seed):
        widths, activation = parse_architecture(architecture) if isinstance(architecture, str) else architecture
        return cls(tuple(widths), activation, glorot_uniform(widths, seed), seed)

    @property
    def input_dim(self):
        return self.widths[0]

    @property
    def architecture(self):
        return "-".join(map(str, self.widths)) + ":" + self.activation

    def with_params(self, theta):
        return NetworkFamily(self.widths, self.activation, theta, self.seed)

    def layers(self, theta=None):
        """Split a flat parameter vector into ``[(W_1, b_1), ..., (W_L, b_L)]`` views."""
        theta = self.theta if theta is None else theta
        out, k = [], 0
        for m, n in zip(self.widths[:-1], self.widths[1:]):
            w = theta[k : k + n * m].reshape(n, m)
            k += n * m
            out.append((w, theta[k : k + n]))
            k += n
        return out

    def function(self):
        return NetworkFunction(self)


def _activate(kind, z):
    """Return ``rho(z), rho'(z), rho''(z)``."""
    if kind == "tanh":
        t = np.tanh(z)
        d1 = 1 - t * t
        return t, d1, -2 * t * d1
    # relu with the convention rho'(0) = 0
    pos = z > 0
    return np.where(pos, z, 0.0), pos.astype(float), np.zeros_like(z)


class GradientTape:
    """Forward record of one batch evaluation.

    Holds, per layer, the pre-activations, activations and their input
    Jacobians. ``values`` and ``input_grads`` are available right after
    construction; ``backward`` returns the flat parameter gradient of
    ``sum(value_bar * u) + sum(grad_bar * grad_x u)``.
    """

    def __init__(self, family, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != family.input_dim:
            raise ConfigurationError(
                f"network expects {family.input_dim}-dimensional inputs, got {points.shape[1]}"
            )
        self.family = family
        self.points = points
        layers = family.layers()
        n, d = points.shape
        acts = [points]
        jacs = [None]  # d a_0 / dx is the identity, never materialised
        pre, pre_jacs, d1s, d2s = [], [], [], []
        for l, (w, b) in enumerate(layers[:-1]):
            z = acts[-1] @ w.T + b
            gz = np.broadcast_to(w.T, (n, d, w.shape[0])) if l == 0 else jacs[-1] @ w.T
            a, d1, d2 = _activate(family.activation, z)
            pre.append(z)
            pre_jacs.append(gz)
            d1s.append(d1)
            d2s.append(d2)
            acts.append(a)
            jacs.append(d1[:, None, :] * gz)
        w, b = layers[-1]
        self.values = (acts[-1] @ w.T + b)[:, 0]
        last_jac = np.broadcast_to(w.T, (n, d, 1)) if len(layers) == 1 else jacs[-1] @ w.T
        self.input_grads = np.array(last_jac[:, :, 0])
        self._layers = layers
        self._acts, self._jacs = acts, jacs
        self._pre_jacs, self._d1s, self._d2s = pre_jacs, d1s, d2s

    def check_finite(self):
        bad = ~(np.isfinite(self.values) & np.all(np.isfinite(self.input_grads), axis=1))
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            raise NumericalFailure(f"non-finite network output at point {self.points[idx]}", self.points[idx])

    def backward(self, value_bar, grad_bar):
        layers = self._layers
        nl = len(layers)
        grads = [None] * nl
        acts, jacs = self._acts, self._jacs

        w, _ = layers[-1]
        dw = value_bar @ acts[-1]
        if nl > 1:
            dw = dw + np.einsum("nk,nki->i", grad_bar, jacs[-1])
        else:
            dw = dw + grad_bar.sum(axis=0)
        grads[-1] = (dw[None, :], np.array([value_bar.sum()]))
        a_bar = value_bar[:, None] * w
        j_bar = grad_bar[:, :, None] * w[0][None, None, :]

        for l in range(nl - 2, -1, -1):
            w, _ = layers[l]
            d1, d2 = self._d1s[l], self._d2s[l]
            gz = self._pre_jacs[l]
            z_bar = a_bar * d1 + np.einsum("nki,nki->ni", j_bar, gz) * d2
            gz_bar = j_bar * d1[:, None, :]
            dw = z_bar.T @ acts[l]
            if l == 0:
                dw = dw + gz_bar.sum(axis=0).T
            else:
                dw = dw + np.einsum("nki,nkj->ij", gz_bar, jacs[l])
                a_bar = z_bar @ w
                j_bar = gz_bar @ w
            grads[l] = (dw, z_bar.sum(axis=0))
        return np.concatenate([np.concatenate([dw.ravel(), db]) for dw, db in grads])


def eval_network(family, points):
    """Values and spatial gradients of the network at ``points``."""
    tape = GradientTape(family, points)
    tape.check_finite()
    return tape.values, tape.input_grads


class NetworkFunction(DiscreteFunction):
    def __init__(self, family):
        self.family = family

    def evaluate(self, points):
        return eval_network(self.family, points)

    def __repr__(self):
        return f"NetworkFunction({self.family.architecture})"


# -- volume sampling -------------------------------------------------------


@dataclass(frozen=True)
class MonteCarlo:
    """Seeded uniform sample of ``size`` points in the domain with equal weights."""

    size: int
    seed: int = 0


def sample_domain(domain_kind, size, seed):
    rng = np.random.default_rng(seed)
    if domain_kind == "interval":
        pts, measure = rng.uniform(size=(size, 1)), 1.0
    elif domain_kind == "unit_square":
        pts, measure = rng.uniform(size=(size, 2)), 1.0
    elif domain_kind == "unit_disk_polar":
        u = rng.uniform(size=(size, 2))
        r, th = np.sqrt(u[:, 0]), 2 * pi * u[:, 1]
        pts, measure = np.column_stack([r * np.cos(th), r * np.sin(th)]), pi
    else:
        raise ConfigurationError(f"unsupported domain kind {domain_kind!r}")
    return pts, np.full(size, measure / size)


def volume_rule(problem, quad=None):
    """Return ``(points, weights)`` of the volume rule: mesh quadrature or Monte Carlo."""
    if quad is None or quad == "mesh":
        q = problem.mesh.volume_quadrature
        return q.points, q.weights
    if isinstance(quad, MonteCarlo):
        return sample_domain(problem.mesh.domain_kind, quad.size, quad.seed)
    raise ConfigurationError(f"unsupported quadrature spec {quad!r}")


class EnergyObjective:
    """Penalized energy of a network as a function of its parameters.

    The volume rule is fixed at construction; the boundary term always uses
    the mesh boundary facets.
    """

    def __init__(self, problem, family, quad=None):
        self.problem = problem
        self.template = family
        vol_pts, vol_w = volume_rule(problem, quad)
        bq = problem.mesh.boundary_quadrature
        self.n_vol = len(vol_w)
        self.points = np.vstack([vol_pts, bq.points])
        self.vol_weights = vol_w
        self.bdry_weights = bq.weights
        self.A = problem.A(vol_pts)
        self.f = problem.f(vol_pts)

    def __call__(self, theta):
        return self.value_and_grad(theta)

    def value_and_grad(self, theta, need_grad=True):
        p = self.problem
        tape = GradientTape(self.template.with_params(theta), self.points)
        tape.check_finite()
        nv = self.n_vol
        u, g = tape.values[:nv], tape.input_grads[:nv]
        ag = np.einsum("qij,qj->qi", self.A, g)
        w = self.vol_weights
        dens = 0.5 * np.sum(g * ag, axis=1) - self.f * u
        u_bar = w * (-self.f)
        if p.mass:
            dens = dens + 0.5 * u * u
            u_bar = u_bar + w * u
        value = float(np.dot(w, dens))
        ub = tape.values[nv:]
        if p.penalized:
            value += 0.5 * p.lam * float(np.dot(self.bdry_weights, ub * ub))
            ub_bar = p.lam * self.bdry_weights * ub
        else:
            ub_bar = np.zeros_like(ub)
        if not need_grad:
            return value, None
        value_bar = np.concatenate([u_bar, ub_bar])
        grad_bar = np.vstack([w[:, None] * ag, np.zeros((len(ub), g.shape[1]))])
        return value, tape.backward(value_bar, grad_bar)


def energy_gradient(family, problem, quad=None):
    """``(E_lam(u_theta), dE/dtheta)`` of the discretised objective."""
    return EnergyObjective(problem, family, quad).value_and_grad(family.theta)


def directional_check(objective, theta, direction, step=1e-5):
    """Relative error between ``grad . direction`` and a central difference of the objective."""
    _, grad = objective.value_and_grad(theta)
    exact = float(grad @ direction)
    plus, _ = objective.value_and_grad(theta + step * direction, need_grad=False)
    minus, _ = objective.value_and_grad(theta - step * direction, need_grad=False)
    fd = (plus - minus) / (2 * step)
    return abs(fd - exact) / max(abs(exact), abs(fd), 1e-12)
