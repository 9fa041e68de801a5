import json

import numpy as np
import pytest

from penalty_ritz import sweep as sweep_mod
from penalty_ritz.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from penalty_ritz.errors import ConfigurationError, NumericalFailure
from penalty_ritz.sweep import CSV_HEADER, SweepConfig, SweepFailed, read_csv, run_sweep
from penalty_ritz.verify import corrupted_rules, verify_all


def fe_cfg(tmp_path, **kw):
    base = dict(case="square_sine", grid=(4, 8, 16), sigma=1.0, lambda0=10.0, output=str(tmp_path / "fe.csv"))
    base.update(kw)
    return SweepConfig(**base)


def test_csv_schema_and_number_format(tmp_path):
    res = run_sweep(fe_cfg(tmp_path))
    lines = (tmp_path / "fe.csv").read_text().splitlines()
    assert lines[0] == "scale,lambda,h1_error,bdry_l2_error,energy,delta,seed,walltime_ms" == CSV_HEADER
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "0.25" and first[1] == "40"
    assert float(first[2]) == res.records[0].h1_error  # 17 significant digits round-trip
    assert first[-1] == "nan"
    back = read_csv(tmp_path / "fe.csv")
    assert [r.h1_error for r in back] == [r.h1_error for r in res.records]
    assert all(r.h1_error >= 0 and r.bdry_l2_error >= 0 for r in back)


def test_rerun_is_byte_identical(tmp_path):
    cfg = fe_cfg(tmp_path)
    run_sweep(cfg)
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.suffix in (".csv", ".dat")}
    run_sweep(cfg)
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir() if p.suffix in (".csv", ".dat")}
    assert first == second and len(first) == 3


def test_sidecar_contents(tmp_path):
    run_sweep(fe_cfg(tmp_path), config_text='case = "square_sine"\n')
    side = json.loads((tmp_path / "fe.json").read_text())
    assert side["config"]["sigma"] == 1.0 and side["config"]["grid"] == [4, 8, 16]
    assert side["config_text"] == 'case = "square_sine"\n'
    assert side["started"] and side["finished"] and side["status"] == "ok"
    assert len(side["walltime_ms"]) == 3 and side["fit"]["against"] == "1/h"
    assert side["reference"] == "closed form"


def test_plot_files_two_columns(tmp_path):
    run_sweep(fe_cfg(tmp_path))
    rows = np.loadtxt(tmp_path / "fe_h1.dat")
    assert rows.shape == (3, 2)
    np.testing.assert_allclose(rows[:, 0], [0.25, 0.125, 0.0625])


def test_threads_do_not_change_output(tmp_path):
    run_sweep(fe_cfg(tmp_path, output=str(tmp_path / "a.csv"), threads=1))
    run_sweep(fe_cfg(tmp_path, output=str(tmp_path / "b.csv"), threads=3))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_record_walltime_opt_in(tmp_path):
    run_sweep(fe_cfg(tmp_path, record_walltime=True))
    assert all(np.isfinite(r.walltime_ms) and r.walltime_ms > 0 for r in read_csv(tmp_path / "fe.csv"))


def test_schedule_values(tmp_path):
    res = run_sweep(fe_cfg(tmp_path, sigma=0.5, lambda0=3.0), write=False)
    for r in res.records:
        assert r.lam == pytest.approx(3.0 * r.scale**-0.5, rel=1e-15)
        assert r.delta == 0.0


def test_reference_solve_for_case_without_closed_form(tmp_path):
    res = run_sweep(fe_cfg(tmp_path, case="square_aniso", grid=(4, 8, 16)), write=False)
    assert res.reference.startswith("reference") and "32" in res.reference
    assert res.fit.rate > 0.8


def test_failure_flushes_partial_csv(tmp_path, monkeypatch):
    real = sweep_mod.solve_linear

    def flaky(problem, family, method="auto"):
        if family.mesh.resolution == 16:
            raise NumericalFailure("injected")
        return real(problem, family, method)

    monkeypatch.setattr(sweep_mod, "solve_linear", flaky)
    with pytest.raises(SweepFailed) as info:
        run_sweep(fe_cfg(tmp_path, grid=(4, 8, 16, 32)))
    assert len(info.value.result.records) == 2
    rows = read_csv(tmp_path / "fe.csv")
    assert len(rows) == 3 and rows[-1].seed == -1 and np.isnan(rows[-1].h1_error)
    side = json.loads((tmp_path / "fe.json").read_text())
    assert side["status"] == "failed" and "injected" in side["failure"]


def test_network_sweep_deterministic(tmp_path):
    cfg = SweepConfig("interval_poisson", ansatz="network", grid=(4, 8, 16), sigma=0.5, lambda0=10.0,
                      seeds=(3,), iters=40, mesh_resolution=16, output=str(tmp_path / "nn.csv"), threads=3)
    a = run_sweep(cfg)
    first = (tmp_path / "nn.csv").read_bytes()
    run_sweep(cfg)
    assert (tmp_path / "nn.csv").read_bytes() == first
    assert [r.lam for r in a.records] == pytest.approx([10 * n**0.5 for n in (4, 8, 16)])
    assert a.fit is not None and all(np.isnan(r.delta) for r in a.records)


def test_network_sweep_with_envelope_delta(tmp_path):
    cfg = SweepConfig("interval_poisson", ansatz="network", grid=(2, 3, 4), lambda0=10.0, iters=10,
                      mesh_resolution=8, envelope=True, output=str(tmp_path / "e.csv"))
    res = run_sweep(cfg, write=False)
    assert all(r.delta >= 0 for r in res.records)


@pytest.mark.parametrize("bad", [
    dict(grid=(8, 8, 16)), dict(grid=(16, 8)), dict(grid=()), dict(sigma=-0.1), dict(lambda0=0.0),
    dict(ansatz="spline"), dict(case="nope"), dict(seeds=()), dict(grid=(1, 2, 4)),
])
def test_config_validation(tmp_path, bad):
    with pytest.raises(ConfigurationError):
        fe_cfg(tmp_path, **bad)


def test_config_from_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('case = "disk_radial"\ngrid = [4, 8, 16]\nsigma = 0.5\nseeds = [1, 2]\n')
    cfg = SweepConfig.from_toml(p)
    assert cfg.grid == (4, 8, 16) and cfg.seeds == (1, 2) and cfg.sigma == 0.5
    p.write_text('case = "disk_radial"\ncolour = "red"\n')
    with pytest.raises(ConfigurationError):
        SweepConfig.from_toml(p)
    p.write_text("case = \n")
    with pytest.raises(ConfigurationError):
        SweepConfig.from_toml(p)
    with pytest.raises(FileNotFoundError):
        SweepConfig.from_toml(tmp_path / "missing.toml")


# -- CLI -------------------------------------------------------------------------


def test_cli_missing_config_is_usage_error(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "none.toml")]) == EXIT_USAGE
    assert "not found" in capsys.readouterr().err


def test_cli_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == EXIT_USAGE


def test_cli_sweep_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text('case = "square_sine"\ngrid = [4, 8, 16]\noutput = "ignored.csv"\n')
    out = tmp_path / "o" / "run.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--sigma", "0.5", "--lambda", "20"]) == EXIT_OK
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["config"]["sigma"] == 0.5 and side["config"]["lambda0"] == 20.0
    assert side["config_text"] == cfg.read_text()
    assert "fitted H1 rate" in capsys.readouterr().out


def test_cli_sweep_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalFailure("injected")

    monkeypatch.setattr(sweep_mod, "solve_linear", boom)
    cfg = tmp_path / "s.toml"
    cfg.write_text(f'case = "square_sine"\ngrid = [4, 8]\noutput = "{tmp_path / "x.csv"}"\n')
    assert main(["sweep", "--config", str(cfg)]) == EXIT_FAIL


def test_cli_solve_and_json(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["solve", "--case", "interval_poisson", "--lambda", "10", "--resolution", "64", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["h1_error"] == pytest.approx(0.0501827763638, rel=1e-8)
    assert main(["solve", "--case", "disk_radial", "--ansatz", "network", "--iters", "5", "--seed", "2"]) == 0
    assert "best_iteration" in capsys.readouterr().out


def test_cli_steklov_and_rates(capsys):
    assert main(["steklov", "--case", "disk_radial", "--lambda", "10", "--modes", "3"]) == 0
    out = capsys.readouterr().out
    assert "H1 distance" in out
    assert main(["rates", "--r", "1", "--s", "1.5", "--sigma", "1"]) == 0
    out = capsys.readouterr().out
    assert "sigma* = 1.0000, rho* = 1.0000" in out and "sigma* = 1.5000, rho* = 0.7500" in out


def test_cli_verify_subset(tmp_path):
    assert main(["verify", "--out", str(tmp_path), "--only", "0", "1", "6"]) == EXIT_OK
    text = (tmp_path / "verify_report.txt").read_text()
    assert text.count("[PASS]") == 3
    assert (tmp_path / "verify_report.csv").read_text().startswith("criterion,name,status")


def test_verify_fault_injection(tmp_path):
    status, results = verify_all(out_dir=tmp_path, only=["0", "1"], rules=corrupted_rules(), echo=None)
    assert status != 0
    assert [r.passed for r in results] == [False, True]
    assert ",fail," in (tmp_path / "verify_report.csv").read_text()


def test_verify_collects_crashing_checks(monkeypatch):
    from penalty_ritz import verify

    def broken():
        raise RuntimeError("boom")

    checks = tuple((k, n, broken if k == "1" else f, b) for k, n, f, b in verify.CHECKS)
    monkeypatch.setattr(verify, "CHECKS", checks)
    status, results = verify.verify_all(only=["1", "6"], echo=None)
    assert status == 1 and not results[0].passed and results[1].passed
    assert "boom" in results[0].detail
