import csv
import io

import numpy as np
import pytest

from gatherfv import ConfigError, SolverError, compute_geometry, generate_block_mesh, write_polymesh
from gatherfv.case import PHASES, CaseConfig, benchmark, load_case, parse_case, run_case
from gatherfv.cli import main
from gatherfv.fields import read_csv
from gatherfv.policy import Policy

SMALL = """
# a comment
mesh.nx = 4
mesh.ny = 3
mesh.nz = 2
time.dt = 0.2
time.endTime = 1.0
bc.xmin = fixedValue:1   # hot side
bc.xmax = fixedValue:0
"""


def write_case(path, text):
    path.write_text(text)
    return path


# ---------------------------------------------------------------- config

def test_parse_defaults_and_values():
    cfg = parse_case(SMALL)
    assert (cfg.nx, cfg.ny, cfg.nz) == (4, 3, 2)
    assert cfg.bcs["xmin"].value == 1.0 and cfg.bcs["xmax"].kind == "fixedValue"
    assert cfg.n_steps == 5
    assert (cfg.tol, cfg.max_iter, cfg.policy, cfg.threads) == (1e-6, 1000, "seq", 1)


def test_hotplate_step_count(tmp_path):
    from pathlib import Path
    cfg = load_case(Path(__file__).parents[1] / "docs" / "examples" / "hotplate.case")
    assert cfg.n_steps == 500
    assert (cfg.nx, cfg.DT, cfg.dt, cfg.end_time) == (20, 1.0, 0.2, 100.0)


@pytest.mark.parametrize("text, match", [
    ("time.dt = 0", "dt"),
    ("time.dt = 1\ntime.endTime = 0.5", "endTime"),
    ("execution.threads = 0", "threads"),
    ("execution.policy = gpu", "policy"),
    ("mesh.nx = two", "line 1"),
    ("bogus.key = 1", "unknown key"),
    ("no equals sign", "key = value"),
    ("bc.xmin = robin:1", "boundary"),
    ("mesh.source = read", "mesh.dir"),
    ("mesh.extent = 1 2", "three"),
    ("output.vtk = maybe", "boolean"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_case(text)


def test_relative_paths_resolve_against_case(tmp_path):
    case = write_case(tmp_path / "c.case", "mesh.source = read\nmesh.dir = pm\noutput.dir = out\n")
    cfg = load_case(case)
    assert cfg.mesh_dir == str(tmp_path / "pm") and cfg.output_dir == str(tmp_path / "out")


def test_unknown_patch_bc():
    with pytest.raises(ConfigError, match="unknown patch"):
        run_case(parse_case("bc.top = zeroGradient\nmesh.nx=2\nmesh.ny=2\nmesh.nz=2\ntime.endTime=0.2"))


# ---------------------------------------------------------------- time loop

def test_constant_field_is_preserved():
    cfg = parse_case("mesh.nx=4\nmesh.ny=4\nmesh.nz=4\nphysics.initialT=0.7\ntime.endTime=2")
    seen = []
    run_case(cfg, on_step=lambda step, t, T, st: seen.append(np.abs(T.internal - 0.7).max()))
    assert len(seen) == 10 and max(seen) <= 1e-9


def test_conservation_zero_gradient():
    cfg = parse_case("mesh.nx=3\nmesh.ny=3\nmesh.nz=3\ntime.endTime=4")
    rng = np.random.default_rng(5)
    T0 = rng.uniform(0, 2, 27)
    V = compute_geometry(generate_block_mesh(3, 3, 3)).cell_volume
    totals = [float(V @ T0)]
    bound = []
    run_case(cfg, initial=T0, on_step=lambda s, t, T, st: (totals.append(float(V @ T.internal)),
                                                           bound.append(cfg.tol * float(V @ np.abs(T.internal)))))
    drift = np.abs(np.diff(totals))
    assert np.all(drift <= np.array(bound))


def test_monotone_decay():
    zero = "\n".join(f"bc.{p} = fixedValue:0" for p in ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax"))
    cfg = parse_case(f"mesh.nx=5\nmesh.ny=4\nmesh.nz=3\ntime.dt=0.01\ntime.endTime=0.3\nsolver.tol=1e-10\n{zero}")
    T0 = np.random.default_rng(2).uniform(-1, 1, 60)
    peaks = [np.abs(T0).max()]
    run_case(cfg, initial=T0, on_step=lambda s, t, T, st: peaks.append(np.abs(T.internal).max()))
    assert all(b <= a * (1 + 1e-8) for a, b in zip(peaks, peaks[1:]))
    assert peaks[-1] < peaks[0]


def test_hotplate_small_reaches_steady_state():
    cfg = parse_case("mesh.nx=8\nmesh.ny=2\nmesh.nz=2\ntime.dt=0.2\ntime.endTime=20\n"
                     "bc.xmin=fixedValue:1\nbc.xmax=fixedValue:0")
    res = run_case(cfg)
    x = compute_geometry(res.mesh).cell_centre[:, 0]
    assert np.abs(res.T.internal - (1 - x)).max() <= 1e-6
    assert len(res.stats) == 100 and all(s.converged for s in res.stats)
    np.testing.assert_allclose(res.grad.internal, np.tile([-1.0, 0, 0], (32, 1)), atol=1e-5)


def test_source_term():
    # uniform source with insulated walls raises T by S per unit time
    cfg = parse_case("mesh.nx=2\nmesh.ny=2\nmesh.nz=2\nphysics.source=3\ntime.dt=0.25\ntime.endTime=1\nsolver.tol=1e-12")
    res = run_case(cfg)
    np.testing.assert_allclose(res.T.internal, 3.0, rtol=1e-10)


def test_timers():
    res = run_case(parse_case(SMALL))
    t = res.timers
    assert set(t.as_dict()) == set(PHASES)
    assert min(t.io, t.assembly, t.solver) > 0
    assert t.total >= t.io + t.assembly + t.solver
    assert t.unattributed >= 0


def test_non_convergence_aborts():
    cfg = parse_case(SMALL + "solver.maxIter = 1\nsolver.tol = 1e-14\n")
    with pytest.raises(SolverError) as err:
        run_case(cfg)
    assert err.value.step == 1 and err.value.residual > 0


def test_field_writes(tmp_path):
    cfg = parse_case(SMALL + f"time.writeInterval = 2\noutput.vtk = true\noutput.dir = {tmp_path}\n")
    run_case(cfg)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["T_000002.csv", "T_000002.vtk", "T_000004.csv", "T_000004.vtk"]


def test_read_mesh_source(tmp_path):
    write_polymesh(generate_block_mesh(4, 3, 2), tmp_path / "pm")
    generated = run_case(parse_case(SMALL))
    read = run_case(parse_case(SMALL + "mesh.source = read\nmesh.dir = pm\n", base_dir=tmp_path))
    assert read.T.internal.tobytes() == generated.T.internal.tobytes()


def test_run_deterministic_across_policies():
    cfg = parse_case(SMALL)
    ref = run_case(cfg)
    for kind, n in (("par", 1), ("par", 2), ("par", 8)):
        res = run_case(cfg.replace(policy=kind, threads=n))
        assert res.T.internal.tobytes() == ref.T.internal.tobytes()
        assert [s.iterations for s in res.stats] == [s.iterations for s in ref.stats]


def test_benchmark_report():
    cfg = parse_case(SMALL)
    rep = benchmark(cfg, [Policy(), Policy("par", 2)], repeats=3)
    assert rep.deterministic
    assert all(len(v) == 3 for per in rep.samples.values() for v in per.values())
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["policy", "threads", "phase", "mean_s", "std_s"]
    assert [(r[0], r[1], r[2]) for r in rows[1:]] == [
        (k, n, p) for k, n in (("seq", "1"), ("par", "2")) for p in PHASES]
    assert all(float(r[3]) >= 0 and float(r[4]) >= 0 for r in rows[1:])
    with pytest.raises(ValueError):
        benchmark(cfg, [Policy()], repeats=0)


def test_config_invariants_direct():
    with pytest.raises(ConfigError):
        CaseConfig(dt=-1)
    with pytest.raises(ConfigError):
        CaseConfig(threads=0)


# ---------------------------------------------------------------- CLI

def test_cli_run(tmp_path, capsys):
    case = write_case(tmp_path / "c.case", SMALL + "output.vtk = true\n")
    out = tmp_path / "res"
    assert main(["run", "--case", str(case), "--policy", "par", "--threads", "2", "--out", str(out)]) == 0
    assert {"T.csv", "gradT.csv", "timing.csv", "T.vtk"} <= {p.name for p in out.iterdir()}
    T = read_csv(out / "T.csv")
    assert T.shape == (24,)
    assert read_csv(out / "gradT.csv").shape == (24, 3)
    timing = list(csv.reader((out / "timing.csv").open()))
    assert timing[0] == ["phase", "seconds"] and [r[0] for r in timing[1:]] == list(PHASES)
    assert "5 steps" in capsys.readouterr().out


def test_cli_bench(tmp_path):
    case = write_case(tmp_path / "c.case", SMALL)
    report = tmp_path / "b.csv"
    assert main(["bench", "--case", str(case), "--policies", "seq,par", "--threads", "2",
                 "--repeats", "2", "--csv", str(report)]) == 0
    rows = list(csv.reader(report.open()))
    assert rows[0] == ["policy", "threads", "phase", "mean_s", "std_s"]
    assert len(rows) == 1 + 2 * len(PHASES)
    assert {r[1] for r in rows[1:] if r[0] == "par"} == {"2"}


def test_cli_mesh_gen_and_check(tmp_path, capsys):
    assert main(["mesh", "gen", "3", "2", "2", "--extent", "3", "2", "2", "--out", str(tmp_path / "pm")]) == 0
    assert main(["mesh", "check", str(tmp_path / "pm")]) == 0
    out = capsys.readouterr().out
    assert "cells 12" in out and "mesh OK" in out
    (tmp_path / "pm" / "neighbour").write_text("2 ( 1 )\n")
    assert main(["mesh", "check", str(tmp_path / "pm")]) == 1
    assert main(["mesh", "gen", "0", "2", "2", "--out", str(tmp_path / "bad")]) == 1


@pytest.mark.parametrize("text", ["time.dt = -1\n", "nonsense\n", "bc.xmin = fixedValue\n"])
def test_cli_config_error_exit(tmp_path, text, capsys):
    case = write_case(tmp_path / "c.case", text)
    assert main(["run", "--case", str(case), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_cli_missing_case(tmp_path):
    assert main(["run", "--case", str(tmp_path / "nope.case")]) == 1


def test_cli_numerical_failure_exit(tmp_path, capsys):
    case = write_case(tmp_path / "c.case", SMALL + "solver.maxIter = 1\nsolver.tol = 1e-14\n")
    assert main(["run", "--case", str(case), "--out", str(tmp_path / "o")]) == 2
    assert "step 1" in capsys.readouterr().err


def test_cli_usage_errors():
    with pytest.raises(SystemExit) as err:
        main(["run"])
    assert err.value.code == 2  # argparse usage error
