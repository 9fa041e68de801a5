"""Refinement sweeps with penalty schedules ``lam_h = lam0 h^-sigma`` (FE) or ``lam_n = lam0 n^sigma`` (networks)."""

import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .cases import get_case
from .errors import ConfigurationError
from .fem import FiniteElementFamily
from .forms import PenalizedProblem
from .functions import boundary_l2_norm, h1_norm
from .mesh import build_mesh
from .network import NetworkFamily
from .rates import fit_rate
from .solvers import TrainConfig, empirical_envelope, solve_linear, train_network

CSV_HEADER = "scale,lambda,h1_error,bdry_l2_error,energy,delta,seed,walltime_ms"
ANSATZ_KINDS = ("fe", "network")
REFERENCE_LABEL = "reference"


@dataclass(frozen=True)
class SweepConfig:
    case: str
    ansatz: str = "fe"
    grid: tuple = (8, 16, 32, 64)
    sigma: float = 1.0
    lambda0: float = 10.0
    seeds: tuple = (0,)
    output: str = "sweep.csv"
    # network-only keys
    activation: str = "tanh"
    mesh_resolution: int = 32
    envelope: bool = False
    iters: int = 1000
    lr: float = 1e-3
    decay: float = 0.999
    eps: float = 1e-8
    mc_samples: int = 0
    log_every: int = 100
    # bookkeeping
    threads: int = 1
    window: int = 4
    record_walltime: bool = False

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        get_case(self.case)
        if self.ansatz not in ANSATZ_KINDS:
            raise ConfigurationError(f"ansatz must be one of {ANSATZ_KINDS}, got {self.ansatz!r}")
        if len(self.grid) == 0 or any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigurationError(f"grid must be nonempty and strictly increasing, got {self.grid}")
        if self.ansatz == "fe" and self.grid[0] < 2:
            raise ConfigurationError("FE mesh resolutions must be at least 2")
        if self.ansatz == "network" and self.grid[0] < 1:
            raise ConfigurationError("network widths must be positive")
        if not self.sigma >= 0:
            raise ConfigurationError(f"sigma must be nonnegative, got {self.sigma}")
        if not self.lambda0 > 0:
            raise ConfigurationError(f"lambda0 must be positive, got {self.lambda0}")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if self.threads < 1:
            raise ConfigurationError("threads must be at least 1")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "case" not in data:
            raise ConfigurationError("config needs a 'case' key")
        return cls(**data)

    @classmethod
    def from_toml(cls, path):
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def train_config(self, seed):
        return TrainConfig(self.iters, self.lr, self.decay, self.eps, seed, self.mc_samples, self.log_every)

    def resolved(self):
        d = asdict(self)
        d["grid"], d["seeds"] = list(self.grid), list(self.seeds)
        return d


@dataclass(frozen=True)
class SweepRecord:
    scale: float  # h for FE, width n for networks
    lam: float
    h1_error: float
    bdry_l2_error: float
    energy: float
    delta: float
    seed: int
    walltime_ms: float

    def csv_row(self, with_walltime=True):
        wt = self.walltime_ms if with_walltime else math.nan
        vals = [self.scale, self.lam, self.h1_error, self.bdry_l2_error, self.energy, self.delta]
        return ",".join([*(_fmt(v) for v in vals), str(self.seed), _fmt(wt)])


@dataclass
class SweepResult:
    config: SweepConfig
    records: list
    fit: object
    reference: str
    failure: str = None
    extra: dict = field(default_factory=dict)


class SweepFailed(RuntimeError):
    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


def _fmt(x):
    return "%.17g" % x


def penalty_for(cfg, scale):
    if cfg.ansatz == "fe":
        return cfg.lambda0 * scale ** (-cfg.sigma)
    return cfg.lambda0 * scale**cfg.sigma


def _reference_solution(cfg, case):
    """Closed-form u* when known, otherwise a finer FE solve labelled as a reference."""
    if case.has_closed_form:
        return case.u_star, "closed form"
    finest = cfg.grid[-1] if cfg.ansatz == "fe" else cfg.mesh_resolution
    mesh = build_mesh(case.domain_kind, 2 * finest)
    lam = 16 * max(penalty_for(cfg, _scale(cfg, case, g)) for g in cfg.grid)
    u = solve_linear(PenalizedProblem(mesh, case.A, case.f, lam), FiniteElementFamily(mesh)).function
    return u, f"{REFERENCE_LABEL}: FE solve at resolution {2 * finest} with lambda {lam:.6g}"


def _scale(cfg, case, g):
    if cfg.ansatz == "fe":
        return build_mesh(case.domain_kind, g).h
    return float(g)


def _errors(u, u_star, mesh):
    e = u - u_star
    return h1_norm(e, mesh), boundary_l2_norm(e, mesh)


def _fe_point(cfg, case, u_star, n):
    start = time.perf_counter()
    mesh = build_mesh(case.domain_kind, n)
    lam = penalty_for(cfg, mesh.h)
    sol = solve_linear(PenalizedProblem(mesh, case.A, case.f, lam), FiniteElementFamily(mesh))
    h1, bd = _errors(sol.function, u_star, mesh)
    # the Galerkin solution is the exact minimiser over V_h
    ms = 1e3 * (time.perf_counter() - start)
    return [SweepRecord(mesh.h, lam, h1, bd, sol.energy, 0.0, cfg.seeds[0], ms)]


def _network_point(cfg, case, u_star, width):
    mesh = build_mesh(case.domain_kind, cfg.mesh_resolution)
    lam = penalty_for(cfg, width)
    problem = PenalizedProblem(mesh, case.A, case.f, lam)
    d = case.dim
    arch = f"{d}-{width}-{width}-1:{cfg.activation}"
    envelope = None
    if cfg.envelope:
        envelope, _ = empirical_envelope(problem, arch, cfg.train_config(cfg.seeds[0]))
    out = []
    for seed in cfg.seeds:
        start = time.perf_counter()
        report = train_network(problem, NetworkFamily.initialize(arch, seed), cfg.train_config(seed), envelope)
        h1, bd = _errors(report.function, u_star, mesh)
        delta = report.delta.delta if report.delta is not None else math.nan
        ms = 1e3 * (time.perf_counter() - start)
        out.append(SweepRecord(float(width), lam, h1, bd, report.final_energy, delta, seed, ms))
    return out


def _fit(cfg, records):
    best = {}
    for r in records:
        if r.scale not in best or r.energy < best[r.scale].energy:
            best[r.scale] = r
    pts = sorted((1.0 / s if cfg.ansatz == "fe" else s, r.h1_error) for s, r in best.items())
    if len(pts) < 3:
        return None
    return fit_rate(pts, cfg.window)


def run_sweep(cfg, write=True, config_text=None):
    """Run every grid point, fit the H1 rate and (optionally) write CSV, sidecar and plot data.

    FE rates are fitted against ``1/h``, network rates against ``n``, so
    ``fit.rate`` is the decay exponent in both cases. On failure the
    completed rows and a failure row are written before ``SweepFailed``.
    """
    started = datetime.now(timezone.utc).isoformat()
    case = get_case(cfg.case)
    u_star, ref_label = _reference_solution(cfg, case)
    point = _fe_point if cfg.ansatz == "fe" else _network_point
    records, failure = [], None
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(point, cfg, case, u_star, g) for g in cfg.grid]
        for g, fut in zip(cfg.grid, futures):
            try:
                records.extend(fut.result())
            except Exception as exc:  # noqa: BLE001 - any solve failure aborts the sweep
                failure = f"grid point {g}: {type(exc).__name__}: {exc}"
                for rest in futures:
                    rest.cancel()
                break
    fit = _fit(cfg, records) if failure is None else None
    result = SweepResult(cfg, records, fit, ref_label, failure)
    if write:
        write_outputs(result, started, config_text)
    if failure is not None:
        raise SweepFailed(failure, result)
    return result


def write_outputs(result, started=None, config_text=None):
    cfg = result.config
    csv_path = Path(cfg.output)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER] + [r.csv_row(cfg.record_walltime) for r in result.records]
    if result.failure is not None:
        nan = _fmt(math.nan)
        lines.append(",".join([nan] * 6 + ["-1", nan]))
    csv_path.write_text("\n".join(lines) + "\n")

    stem = csv_path.with_suffix("")
    by_seed = {}
    for r in result.records:
        by_seed.setdefault(r.seed, []).append(r)
    for seed, recs in by_seed.items():
        suffix = "" if len(by_seed) == 1 else f"_seed{seed}"
        for name, attr in (("h1", "h1_error"), ("bdry", "bdry_l2_error")):
            body = "".join(f"{_fmt(r.scale)} {_fmt(getattr(r, attr))}\n" for r in recs)
            Path(f"{stem}_{name}{suffix}.dat").write_text(body)

    fit = result.fit
    sidecar = {
        "config": cfg.resolved(),
        "config_text": config_text,
        "reference": result.reference,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "status": "failed" if result.failure else "ok",
        "failure": result.failure,
        "walltime_ms": [r.walltime_ms for r in result.records],
        "fit": None if fit is None else {
            "rate": fit.rate, "slope": fit.slope, "intercept": fit.intercept,
            "r_squared": fit.r_squared, "window": fit.window,
            "against": "1/h" if cfg.ansatz == "fe" else "n",
        },
    }
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x))


def read_csv(path):
    """Parse a sweep CSV back into records (failure rows are kept with seed -1)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigurationError(f"{path}: unexpected header")
    out = []
    for line in lines[1:]:
        v = line.split(",")
        out.append(SweepRecord(*(float(x) for x in v[:6]), int(v[6]), float(v[7])))
    return out
