"""Command line entry point: ``penalty-ritz {solve,sweep,steklov,verify,rates}``."""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cases import CASES, get_case
from .errors import ConfigurationError, DomainError
from .fem import FiniteElementFamily
from .forms import PenalizedProblem
from .functions import boundary_l2_norm, h1_norm
from .mesh import build_mesh
from .network import NetworkFamily
from .rates import rho_nonuniform, rho_star_nonuniform, rho_star_uniform, rho_uniform
from .solvers import TrainConfig, solve_linear, train_network
from .steklov import analysis_mesh, penalty_gap_via_formula
from .sweep import SweepConfig, SweepFailed, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _train_flags(p, defaults=True):
    d = TrainConfig() if defaults else None
    p.add_argument("--iters", type=int, default=d and d.iters)
    p.add_argument("--lr", type=float, default=d and d.lr)
    p.add_argument("--mc-samples", type=int, default=d and d.mc_samples, help="0 = mesh quadrature")
    p.add_argument("--log-every", type=int, default=d and d.log_every)


def build_parser():
    parser = argparse.ArgumentParser(prog="penalty-ritz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="minimise the penalized energy for one case and lambda")
    p.add_argument("--case", required=True, choices=sorted(CASES))
    p.add_argument("--ansatz", choices=("fe", "network"), default="fe")
    p.add_argument("--lambda", dest="lam", type=float, default=100.0)
    p.add_argument("--resolution", type=int, default=32)
    p.add_argument("--arch", help="network architecture, e.g. 1-16-16-1:tanh")
    p.add_argument("--seed", type=int, default=0)
    _train_flags(p)
    p.add_argument("--out", help="write a JSON summary here")

    p = sub.add_parser("sweep", help="run a refinement sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the CSV output path")
    p.add_argument("--case")
    p.add_argument("--sigma", type=float)
    p.add_argument("--lambda", dest="lam", type=float, help="override lambda0")
    p.add_argument("--seed", type=int, help="run a single seed")
    p.add_argument("--threads", type=int)
    _train_flags(p, defaults=False)

    p = sub.add_parser("steklov", help="Steklov reconstruction of u* - u_lambda on the disk")
    p.add_argument("--case", default="disk_mode1", choices=("disk_radial", "disk_mode1"))
    p.add_argument("--lambda", dest="lam", type=float, default=10.0)
    p.add_argument("--modes", type=int, default=8)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--out", default="verify_out", help="directory for the text and CSV reports")
    p.add_argument("--only", nargs="+", help="criterion numbers to run (0 is the quadrature preflight)")

    p = sub.add_parser("rates", help="tabulate rho(sigma) for given approximation rates")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--s", type=float, default=1.5)
    p.add_argument("--sigma", type=float, nargs="*", help="sigma values (default: 0 to 2s in 9 steps)")
    return parser


def cmd_solve(args):
    case = get_case(args.case)
    mesh = build_mesh(case.domain_kind, args.resolution)
    problem = PenalizedProblem(mesh, case.A, case.f, args.lam)
    summary = {"case": args.case, "ansatz": args.ansatz, "lambda": args.lam, "resolution": args.resolution}
    if args.ansatz == "fe":
        u, energy = solve_linear(problem, FiniteElementFamily(mesh))
    else:
        arch = args.arch or f"{case.dim}-16-16-1:tanh"
        cfg = TrainConfig(args.iters, args.lr, seed=args.seed, mc_samples=args.mc_samples, log_every=args.log_every)
        report = train_network(problem, NetworkFamily.initialize(arch, args.seed), cfg)
        u, energy = report.function, report.final_energy
        summary.update(architecture=arch, seed=args.seed, iters=args.iters, best_iteration=report.best_iteration)
    summary["energy"] = energy
    if case.has_closed_form:
        summary["h1_error"] = h1_norm(u - case.u_star, mesh)
        summary["bdry_l2_error"] = boundary_l2_norm(u - case.u_star, mesh)
    for k, v in summary.items():
        print(f"{k:>14}: {v}")
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args):
    path = Path(args.config)
    cfg = SweepConfig.from_toml(path)
    overrides = {
        "output": args.out, "case": args.case, "sigma": args.sigma, "lambda0": args.lam,
        "threads": args.threads, "iters": args.iters, "lr": args.lr,
        "mc_samples": args.mc_samples, "log_every": args.log_every,
        "seeds": None if args.seed is None else (args.seed,),
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    try:
        result = run_sweep(cfg, config_text=path.read_text())
    except SweepFailed as exc:
        print(f"sweep failed: {exc}; partial results in {cfg.output}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{len(result.records)} records written to {cfg.output} ({result.reference})")
    if result.fit is not None:
        f = result.fit
        print(f"fitted H1 rate {f.rate:.4f} (R^2 {f.r_squared:.4f}, {f.window})")
    return EXIT_OK


def cmd_steklov(args):
    case = get_case(args.case)
    mesh = analysis_mesh()
    rec = penalty_gap_via_formula(case, args.lam, count=args.modes, mesh=mesh)
    print(f"{'j':>3} {'mu':>4} {'kind':>5} {'flux coeff':>14} {'c(lam)':>14}")
    for m, fc, c in zip(rec.modes, rec.flux_coefficients, rec.coefficients):
        print(f"{m.index:>3} {m.eigenvalue:>4g} {m.kind:>5} {fc:>14.6e} {c:>14.6e}")
    err = h1_norm(rec.function - (case.u_star - case.u_lambda(args.lam)), mesh)
    print(f"tail bound {rec.tail_bound:.3e}")
    print(f"H1 distance to closed-form u* - u_lambda: {err:.3e}")
    return EXIT_OK


def cmd_verify(args):
    from .verify import verify_all

    status, results = verify_all(out_dir=args.out, only=args.only)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed; reports in {args.out}")
    return status


def cmd_rates(args):
    r, s = args.r, args.s
    sigmas = args.sigma if args.sigma else list(np.linspace(0, 2 * s, 9))
    print(f"r = {r:g}, s = {s:g}")
    print(f"{'sigma':>8} {'rho_uniform':>12} {'rho_nonuniform':>15}")
    for sig in sigmas:
        print(f"{sig:>8.4f} {rho_uniform(sig, r, s):>12.4f} {rho_nonuniform(sig, r, s):>15.4f}")
    print("optimal (uniform):     sigma* = %.4f, rho* = %.4f" % rho_star_uniform(r, s))
    print("optimal (non-uniform): sigma* = %.4f, rho* = %.4f" % rho_star_nonuniform(r, s))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "steklov": cmd_steklov, "verify": cmd_verify, "rates": cmd_rates}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, ConfigurationError, DomainError) as exc:
        print(f"penalty-ritz: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
