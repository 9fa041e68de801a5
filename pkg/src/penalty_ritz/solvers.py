"""Minimisers of the penalized energy over linear and network ansatz families."""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import cg, splu

from .errors import ContractViolation, FactorizationError, NumericalFailure, TrainingDiverged
from .forms import gap_from_energies
from .network import EnergyObjective, MonteCarlo, NetworkFamily
from .tolerances import TOLERANCES

ENVELOPE_LABEL = "empirical lower envelope"
OPTIMIZER_LABEL = "RMSProp with bias-corrected second moment (artifact choice; no training procedure is prescribed)"


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    """``K_lam c = F`` with ``(K_lam)_ij = a_lam(phi_i, phi_j)`` and ``F_i = int f phi_i``."""

    matrix: object
    load: np.ndarray

    @property
    def dof_count(self):
        return len(self.load)

    def energy(self, coeffs):
        return 0.5 * float(coeffs @ (self.matrix @ coeffs)) - float(self.load @ coeffs)


def assemble_system(problem, family):
    k = family.stiffness_matrix(problem.A)
    if problem.mass:
        k = k + family.mass_matrix()
    if problem.penalized:
        k = k + problem.lam * family.boundary_mass_matrix()
    return GalerkinSystem(k.tocsc(), family.load_vector(problem.f))


@dataclass(eq=False)
class LinearSolution:
    function: object
    energy: float
    system: GalerkinSystem
    method: str
    residual: float

    @property
    def coeffs(self):
        return self.function.coeffs

    def __iter__(self):
        return iter((self.function, self.energy))


def _cholesky_like(matrix, rhs):
    # SuperLU restricted to symmetric diagonal pivoting is an LDL^T
    # factorisation; a nonpositive pivot means the matrix is not SPD.
    lu = splu(
        matrix,
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    pivots = lu.U.diagonal()
    bad = np.flatnonzero(~(pivots > 0))
    if len(bad) or not np.array_equal(lu.perm_r, lu.perm_c):
        k = int(bad[0]) if len(bad) else int(np.flatnonzero(lu.perm_r != lu.perm_c)[0])
        raise FactorizationError(
            f"matrix is not positive definite: pivot {k} (dof {int(lu.perm_c[k])}) is {pivots[k]:.3e}",
            pivot_index=int(lu.perm_c[k]),
        )
    return lu.solve


def _jacobi_cg(matrix, rhs):
    precond = diags(1.0 / matrix.diagonal())

    def solve(b):
        x, info = cg(matrix, b, rtol=TOLERANCES.cg_rtol, atol=0.0, M=precond, maxiter=20 * len(b))
        if info != 0:
            raise NumericalFailure(f"conjugate gradients did not converge (info={info})")
        return x

    return solve


def solve_linear(problem, family, method="auto"):
    """Exact minimiser of ``E_lam`` over a finite element family.

    ``method`` is ``"cholesky"``, ``"cg"`` or ``"auto"`` (factorisation,
    falling back to Jacobi-preconditioned CG if memory runs out).
    """
    if not (problem.penalized or problem.mass):
        raise ContractViolation("natural boundary treatment without a mass term gives a singular system")
    system = assemble_system(problem, family)
    k, f = system.matrix, system.load
    if method in ("auto", "cholesky"):
        try:
            solve = _cholesky_like(k, f)
            used = "cholesky"
        except MemoryError:
            if method == "cholesky":
                raise
            solve, used = _jacobi_cg(k, f), "cg-jacobi (memory fallback)"
    elif method == "cg":
        solve, used = _jacobi_cg(k, f), "cg-jacobi"
    else:
        raise ValueError(f"unknown method {method!r}")

    c = solve(f)
    fnorm = max(np.linalg.norm(f), np.finfo(float).tiny)
    res = np.linalg.norm(k @ c - f) / fnorm
    if res > TOLERANCES.solve_residual:
        c = c + solve(f - k @ c)
        res = np.linalg.norm(k @ c - f) / fnorm
    if not res <= TOLERANCES.solve_residual:
        raise NumericalFailure(f"linear solve residual {res:.3e} exceeds {TOLERANCES.solve_residual:g}")
    return LinearSolution(family.function(c), system.energy(c), system, used, float(res))


# -- network training -------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    iters: int = 1000
    lr: float = 1e-3
    decay: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    mc_samples: int = 0
    log_every: int = 100

    def quadrature(self):
        return "mesh" if self.mc_samples == 0 else MonteCarlo(self.mc_samples, self.seed)


@dataclass(eq=False)
class TrainReport:
    family: NetworkFamily
    energy_trace: list
    best_trace: list
    final_energy: float
    final_grad_norm: float
    walltime: float
    best_iteration: int
    delta: object = None
    reference: float = None
    optimizer: str = OPTIMIZER_LABEL
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def function(self):
        return self.family.function()


def train_network(problem, family, config=TrainConfig(), reference_min=None):
    """Minimise ``E_lam`` over network parameters; returns the best parameters seen.

    Ties in energy keep the earliest iterate.
    """
    objective = EnergyObjective(problem, family, config.quadrature())
    theta = np.array(family.theta)
    second = np.zeros_like(theta)
    trace, best_trace = [], []
    best_energy, best_theta, best_iter = np.inf, theta.copy(), 0
    start = time.perf_counter()
    for it in range(config.iters + 1):
        try:
            value, grad = objective.value_and_grad(theta)
        except NumericalFailure as exc:
            raise TrainingDiverged(f"non-finite forward pass at iteration {it}: {exc}", trace) from exc
        if not np.isfinite(value) or value > TOLERANCES.divergence_energy or not np.all(np.isfinite(grad)):
            trace.append((it, value))
            raise TrainingDiverged(f"training diverged at iteration {it} (energy {value})", trace)
        if value < best_energy:
            best_energy, best_theta, best_iter = value, theta.copy(), it
        if it % config.log_every == 0 or it == config.iters:
            trace.append((it, value))
            best_trace.append((it, best_energy))
        if it == config.iters:
            break
        second = config.decay * second + (1 - config.decay) * grad * grad
        corrected = second / (1 - config.decay ** (it + 1))
        theta = theta - config.lr * grad / (np.sqrt(corrected) + config.eps)

    final = family.with_params(best_theta)
    final_energy, final_grad = objective.value_and_grad(final.theta)
    report = TrainReport(
        family=final,
        energy_trace=trace,
        best_trace=best_trace,
        final_energy=final_energy,
        final_grad_norm=float(np.linalg.norm(final_grad)),
        walltime=time.perf_counter() - start,
        best_iteration=best_iter,
        config=config,
    )
    if reference_min is not None:
        report.delta = certify_gap(report, reference_min)
        report.reference = reference_min
    return report


def certify_gap(result, reference_min):
    """Optimisation gap of a training report (or linear solution) against a reference energy.

    For networks the reference is only ever an empirical lower envelope.
    """
    if isinstance(result, TrainReport):
        return gap_from_energies(result.final_energy, reference_min, ENVELOPE_LABEL)
    return gap_from_energies(result.energy, reference_min)


def empirical_envelope(problem, architecture, config, seeds=(0, 1, 2, 3, 4), budget_factor=3):
    """Lowest energy over independent seeds with an enlarged iteration budget."""
    long_cfg = replace(config, iters=budget_factor * config.iters)
    energies = []
    for s in seeds:
        fam = NetworkFamily.initialize(architecture, s)
        energies.append(train_network(problem, fam, replace(long_cfg, seed=s)).final_energy)
    return min(energies), energies
