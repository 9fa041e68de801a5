"""Acceptance runner: quadrature preflight plus the nine numbered criteria.

Each check returns a ``CheckResult``; failures (including exceptions) are
collected rather than short-circuited.
"""

import csv
import json
import time
import traceback
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import cea_experiment, low_regularity_rate_experiment
from .cases import get_case
from .forms import PenalizedProblem
from .functions import h1_norm
from .mesh import build_mesh
from .network import EnergyObjective, NetworkFamily, directional_check
from .quadrature import exactness_defect, gauss_segment, tensor_gauss, triangle_rule
from .rates import rho_nonuniform, rho_star_nonuniform, rho_star_uniform, rho_uniform
from .solvers import TrainConfig, train_network
from .steklov import (
    analysis_mesh,
    eigen_residuals,
    gram_matrix,
    penalty_gap_via_formula,
    random_test_functions,
    steklov_modes_disk,
)
from .sweep import SweepConfig, run_sweep

FE_LAMBDA0 = 10.0
SIGNFLIP_LAMBDAS = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class CheckResult:
    key: str
    name: str
    passed: bool
    value: float
    threshold: str
    seconds: float
    budget: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.key:>2} {self.name}: value={self.value:.6g} "
            f"(need {self.threshold}), {self.seconds:.2f} s of {self.budget:g} s"
            + (f" -- {self.detail}" if self.detail else "")
        )


def load_fixture(name="deep_ritz_1d.json"):
    return json.loads(resources.files("penalty_ritz").joinpath("data", name).read_text())


def default_rules():
    return {
        "gauss_segment(3)": gauss_segment(3),
        "triangle_rule()": triangle_rule(),
        "triangle_rule(8)": triangle_rule(8),
        "tensor_gauss(3)": tensor_gauss(3),
    }


# -- individual checks: each returns (passed, value, threshold, detail) -----


def check_quadrature(rules=None):
    rules = default_rules() if rules is None else rules
    defects = {k: exactness_defect(r) for k, r in rules.items()}
    worst = max(defects, key=defects.get)
    return defects[worst] < 1e-12, defects[worst], "< 1e-12", f"worst rule {worst}"


def check_exact_gap():
    case = get_case("interval_poisson")
    mesh = build_mesh("interval", 16)
    devs = [abs(h1_norm(case.u_lambda(lam) - case.u_star, mesh) - 1 / (2 * lam)) for lam in (1, 10, 100, 1000)]
    return max(devs) < 1e-10, max(devs), "< 1e-10", "lambda in {1, 10, 100, 1000}"


def check_solution_formula():
    mesh = analysis_mesh()
    dists = []
    for cid in ("disk_radial", "disk_mode1"):
        case = get_case(cid)
        for lam in (1, 10, 100):
            rec = penalty_gap_via_formula(case, lam, count=8, mesh=mesh)
            dists.append(h1_norm(rec.function - (case.u_star - case.u_lambda(lam)), mesh))
    return max(dists) < 1e-8, max(dists), "< 1e-8", "K = 8, both disk cases, lambda in {1, 10, 100}"


def check_steklov_spectrum():
    modes = steklov_modes_disk(21)
    gram = np.abs(gram_matrix(modes) - np.eye(21)).max()
    res = eigen_residuals(modes, random_test_functions(20, seed=7)).max()
    ok = gram < 1e-10 and res < 1e-8
    return ok, max(gram, res), "Gram < 1e-10, residual < 1e-8", f"Gram {gram:.2e}, residual {res:.2e}"


def _fe_rate(sigma):
    cfg = SweepConfig("square_sine", grid=(8, 16, 32, 64), sigma=sigma, lambda0=FE_LAMBDA0, output="unused.csv")
    return run_sweep(cfg, write=False).fit.rate


def check_fe_optimal():
    rate = _fe_rate(1.0)
    return 0.85 <= rate <= 1.15, rate, "in [0.85, 1.15]", f"square_sine, sigma 1, lambda0 {FE_LAMBDA0:g}"


def check_fe_suboptimal():
    rates = {s: _fe_rate(s) for s in (0.25, 0.5)}
    margins = {s: r - (rho_uniform(s, 1, 1.5) - 0.1) for s, r in rates.items()}
    worst = min(margins, key=margins.get)
    detail = ", ".join(f"sigma {s}: rate {r:.3f} vs {rho_uniform(s, 1, 1.5) - 0.1:.2f}" for s, r in rates.items())
    return margins[worst] >= 0, rates[worst], f">= {rho_uniform(worst, 1, 1.5) - 0.1:.2f}", detail


def check_rate_algebra(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        r = rng.uniform(1e-3, 5)
        s = rng.uniform(r, 10)
        sig_n, rho_n = rho_star_nonuniform(r, s)
        sig_u, rho_u = rho_star_uniform(r, s)
        bad += rho_n != min(s / 2, r) or rho_nonuniform(sig_n, r, s) != min(s / 2, r)
        bad += rho_u != min(2 * s / 3, r)
        bad += abs(rho_uniform(sig_u, r, s) - min(2 * s / 3, r)) > 4e-16 * s
        grid = np.linspace(0, 2 * s, 100)
        for fn in (rho_uniform, rho_nonuniform):
            vals = np.array([fn(x, r, s) for x in grid])
            second = np.diff(vals, 2)
            # concave, and linear except near at most two kinks
            bad += np.any(second > 1e-12 * s) or np.count_nonzero(np.abs(second) > 1e-12 * s) > 4
    return bad == 0, float(bad), "0 violations", f"{n} random (r, s) with s >= r > 0"


def check_cea():
    eq = cea_experiment(100, stiffness=1.0, seed=0)
    ineq = cea_experiment(100, stiffness=2.0, seed=1)
    dev = max(abs(s.distance - s.bound) for s in eq)
    viol = max(s.distance - s.bound for s in ineq)
    ok = dev < 1e-9 and viol <= 1e-12
    return ok, dev, "identity < 1e-9 and bound holds", f"A = 2: max(dist - bound) = {viol:.2e}"


def check_training(fixture=None):
    fixture = fixture or load_fixture()
    worst = 0.0
    # 67 + 67 + 66 = 200 directional checks
    for kind, cid, arch, count in (
        ("interval", "interval_poisson", "1-8-8-1:tanh", 67),
        ("unit_square", "square_sine", "2-6-6-1:tanh", 67),
        ("unit_disk_polar", "disk_mode1", "2-5-5-5-1:tanh", 66),
    ):
        c = get_case(cid)
        p = PenalizedProblem(build_mesh(kind, 8), c.A, c.f, 50.0)
        for seed in range(count):
            fam = NetworkFamily.initialize(arch, seed)
            d = np.random.default_rng(seed).standard_normal(len(fam.theta))
            worst = max(worst, directional_check(EnergyObjective(p, fam), fam.theta, d / np.linalg.norm(d)))

    cfg = fixture["config"]
    case = get_case(cfg["case"])
    mesh = build_mesh(case.domain_kind, cfg["mesh_resolution"])
    p = PenalizedProblem(mesh, case.A, case.f, cfg["lambda"])
    tc = TrainConfig(iters=cfg["iters"], seed=cfg["seed"])
    rep = train_network(p, NetworkFamily.initialize(cfg["architecture"], cfg["seed"]), tc, fixture["envelope_energy"])
    err = h1_norm(rep.function - case.u_star, mesh)
    best = [e for _, e in rep.best_trace]
    monotone = all(b <= a for a, b in zip(best, best[1:]))
    ok = worst < 1e-6 and err < fixture["h1_threshold"] and monotone
    detail = f"200 gradient checks max rel err {worst:.2e}; monotone best trace {monotone}; delta {rep.delta.delta:.2e}"
    return ok, err, f"H1 < {fixture['h1_threshold']}", detail


def check_low_regularity():
    fit = low_regularity_rate_experiment(SIGNFLIP_LAMBDAS)
    return fit.rate >= 0.45, fit.rate, ">= 0.45", f"sign-flip f, h = 1/512, fit {fit.window}"


CHECKS = (
    ("0", "quadrature exactness preflight", check_quadrature, 5),
    ("1", "exact penalty gap", check_exact_gap, 1),
    ("2", "Steklov solution-formula reconstruction", check_solution_formula, 10),
    ("3", "Steklov spectrum", check_steklov_spectrum, 10),
    ("4", "FE sweep at sigma = 1", check_fe_optimal, 300),
    ("5", "FE sweeps at sigma in {0.25, 0.5}", check_fe_suboptimal, 600),
    ("6", "rate-algebra identities", check_rate_algebra, 1),
    ("7", "Cea property suite", check_cea, 30),
    ("8", "autodiff and Deep Ritz training", check_training, 300),
    ("9", "low-regularity L2 rate", check_low_regularity, 120),
)


def run_check(key, name, fn, budget, **kwargs):
    start = time.perf_counter()
    try:
        ok, value, threshold, detail = fn(**kwargs)
    except Exception as exc:  # noqa: BLE001 - a crashing check is a failing check
        ok, value, threshold = False, float("nan"), "no exception"
        detail = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
    return CheckResult(key, name, bool(ok), float(value), threshold, time.perf_counter() - start, budget, detail)


def verify_all(out_dir=None, only=None, rules=None, echo=print):
    """Run the preflight and every criterion; returns ``(exit_status, results)``.

    ``rules`` replaces the quadrature rules of the preflight (fault
    injection). Exit status is 0 when everything passes, 1 otherwise.
    """
    results = []
    for key, name, fn, budget in CHECKS:
        if only is not None and key not in only:
            continue
        kwargs = {"rules": rules} if fn is check_quadrature else {}
        res = run_check(key, name, fn, budget, **kwargs)
        results.append(res)
        if echo:
            echo(res.line())
    status = 0 if all(r.passed for r in results) else 1
    if out_dir is not None:
        write_reports(results, Path(out_dir))
    return status, results


def write_reports(results, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    passed = sum(r.passed for r in results)
    text = [r.line() for r in results] + [f"{passed}/{len(results)} checks passed"]
    (out_dir / "verify_report.txt").write_text("\n".join(text) + "\n")
    with open(out_dir / "verify_report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["criterion", "name", "status", "value", "threshold", "seconds", "budget_seconds"])
        for r in results:
            w.writerow([r.key, r.name, "pass" if r.passed else "fail", "%.17g" % r.value, r.threshold,
                        "%.3f" % r.seconds, r.budget])


def corrupted_rules(scale=1.01):
    """Default preflight rules with the triangle weights scaled (for fault injection)."""
    rules = default_rules()
    r = rules["triangle_rule()"]
    rules["triangle_rule()"] = replace(r, weights=r.weights * scale)
    return rules
