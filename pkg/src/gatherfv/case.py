"""Case configuration, the implicit time loop and the phase benchmark.

A case file is flat ``key = value`` text; ``#`` starts a comment. Keys::

    mesh.source = generate | read      mesh.dir = <polyMesh dir>
    mesh.nx, mesh.ny, mesh.nz          mesh.extent = 1 1 1
    physics.DT  physics.source  physics.initialT
    time.dt  time.endTime  time.writeInterval
    bc.<patch> = zeroGradient | fixedValue:<value>
    solver.tol  solver.maxIter
    execution.policy = seq | par       execution.threads  execution.backend
    output.dir  output.vtk = true | false
"""
from __future__ import annotations

import dataclasses
import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .assembly import assemble_laplacian_ddt, fvc_grad
from .errors import ConfigError, SolverError
from .fields import CellField, evaluate_boundaries, write_csv, write_vtk
from .fvmesh import FvMesh
from .mesh import BoundaryCondition, Mesh, generate_block_mesh
from .policy import Policy
from .polymesh import read_polymesh
from .solver import SolverStats, pcg_solve

log = logging.getLogger(__name__)

PHASES = ("io", "assembly", "solver", "total")


@dataclass(frozen=True)
class CaseConfig:
    mesh_source: str = "generate"
    nx: int = 20
    ny: int = 20
    nz: int = 20
    extent: tuple[float, float, float] = (1.0, 1.0, 1.0)
    mesh_dir: str | None = None
    DT: float = 1.0
    dt: float = 0.2
    end_time: float = 100.0
    write_interval: int = 0
    source: float = 0.0
    initial_T: float = 0.0
    bcs: dict[str, BoundaryCondition] = field(default_factory=dict)
    tol: float = 1e-6
    max_iter: int = 1000
    policy: str = "seq"
    threads: int = 1
    backend: str | None = None
    output_dir: str = "output"
    vtk: bool = False

    def __post_init__(self):
        if self.mesh_source not in ("generate", "read"):
            raise ConfigError(f"mesh.source must be generate or read, not {self.mesh_source!r}")
        if self.mesh_source == "read" and not self.mesh_dir:
            raise ConfigError("mesh.source = read needs mesh.dir")
        if not self.dt > 0:
            raise ConfigError("time.dt must be positive")
        if not self.end_time >= self.dt:
            raise ConfigError("time.endTime must be >= time.dt")
        if not self.DT > 0:
            raise ConfigError("physics.DT must be positive")
        if self.threads < 1:
            raise ConfigError("execution.threads must be >= 1")
        if self.policy not in ("seq", "par"):
            raise ConfigError(f"execution.policy must be seq or par, not {self.policy!r}")
        if self.write_interval < 0:
            raise ConfigError("time.writeInterval must be >= 0")
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigError("solver.tol must be positive and solver.maxIter >= 1")

    @property
    def execution(self) -> Policy:
        return Policy(self.policy, self.threads, self.backend)

    @property
    def n_steps(self) -> int:
        # steps at t = dt, 2 dt, ... <= endTime, tolerant of 100/0.2 = 499.99..
        return int(math.floor(self.end_time / self.dt * (1 + 1e-12)))

    def replace(self, **changes) -> "CaseConfig":
        return dataclasses.replace(self, **changes)


_SCALARS = {
    "mesh.source": ("mesh_source", str),
    "mesh.dir": ("mesh_dir", str),
    "mesh.nx": ("nx", int),
    "mesh.ny": ("ny", int),
    "mesh.nz": ("nz", int),
    "physics.DT": ("DT", float),
    "physics.source": ("source", float),
    "physics.initialT": ("initial_T", float),
    "time.dt": ("dt", float),
    "time.endTime": ("end_time", float),
    "time.writeInterval": ("write_interval", int),
    "solver.tol": ("tol", float),
    "solver.maxIter": ("max_iter", int),
    "execution.policy": ("policy", str),
    "execution.threads": ("threads", int),
    "execution.backend": ("backend", str),
    "output.dir": ("output_dir", str),
}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_case(text: str, base_dir=None) -> CaseConfig:
    """Parse case-file text; relative paths resolve against base_dir."""
    values: dict = {}
    bcs: dict[str, BoundaryCondition] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        try:
            if key.startswith("bc."):
                bcs[key[3:]] = BoundaryCondition.parse(value)
            elif key == "mesh.extent":
                parts = tuple(float(v) for v in value.replace(",", " ").split())
                if len(parts) != 3:
                    raise ValueError("mesh.extent needs three numbers")
                values["extent"] = parts
            elif key == "output.vtk":
                values["vtk"] = _bool(value)
            elif key in _SCALARS:
                name, conv = _SCALARS[key]
                values[name] = conv(value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if values.get("backend") == "auto":
        values["backend"] = None
    if base_dir is not None:
        for name in ("mesh_dir", "output_dir"):
            if name in values and not Path(values[name]).is_absolute():
                values[name] = str(Path(base_dir) / values[name])
    return CaseConfig(bcs=bcs, **values)


def load_case(path) -> CaseConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read case file {path}: {exc}") from None
    return parse_case(text, base_dir=path.parent)


@dataclass
class PhaseTimers:
    io: float = 0.0
    assembly: float = 0.0
    solver: float = 0.0
    total: float = 0.0

    @property
    def unattributed(self) -> float:
        return self.total - (self.io + self.assembly + self.solver)

    def as_dict(self) -> dict[str, float]:
        return {p: getattr(self, p) for p in PHASES}


@dataclass
class CaseResult:
    T: CellField
    grad: CellField | None
    timers: PhaseTimers
    stats: list[SolverStats]
    mesh: Mesh


def build_mesh(config: CaseConfig) -> Mesh:
    if config.mesh_source == "generate":
        try:
            mesh = generate_block_mesh(config.nx, config.ny, config.nz, config.extent)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        mesh = read_polymesh(config.mesh_dir)
    try:
        return mesh.with_boundary_conditions(config.bcs)
    except KeyError as exc:
        raise ConfigError(f"bc for unknown patch: {exc.args[0]}") from None


def run_case(config: CaseConfig, on_step: Callable | None = None, write: bool = True,
             initial=None) -> CaseResult:
    """Run the implicit time loop; one linear solve per step.

    ``initial`` optionally replaces the uniform physics.initialT with per-cell
    values. ``on_step(step, time, T, stats)`` is called after every step.
    """
    policy = config.execution
    timers = PhaseTimers()
    clock = time.perf_counter
    t_start = clock()

    mesh = build_mesh(config)
    fvm = FvMesh(mesh, policy)
    fvm.geometry, fvm.adjacency, fvm.weights, fvm.internal_diffusion, fvm.patch_diffusion  # build caches now
    if initial is None:
        T = CellField.uniform(mesh, config.initial_T, policy)
    else:
        initial = np.array(initial, dtype=np.float64)
        if initial.shape != (mesh.n_cells,):
            raise ConfigError(f"initial field has shape {initial.shape}, mesh has {mesh.n_cells} cells")
        T = CellField.from_internal(mesh, initial)
    evaluate_boundaries(T, mesh)
    out_dir = Path(config.output_dir)
    writing = write and (config.write_interval > 0 or config.vtk)
    if writing:
        out_dir.mkdir(parents=True, exist_ok=True)
    timers.io += clock() - t_start

    stats: list[SolverStats] = []
    grad = None
    for step in range(1, config.n_steps + 1):
        t = step * config.dt
        t0 = clock()
        evaluate_boundaries(T, mesh)
        system = assemble_laplacian_ddt(T.internal, config.DT, config.dt, fvm, policy, config.source)
        t1 = clock()
        x, st = pcg_solve(system, T.internal, config.tol, config.max_iter, policy)
        t2 = clock()
        stats.append(st)
        if not st.converged:
            raise SolverError(f"linear solver did not converge at step {step} (t={t:g}): "
                              f"residual {st.final_residual:.3e}", step, st.final_residual)
        T.internal = x
        grad = fvc_grad(T, fvm, policy)
        t3 = clock()
        timers.assembly += (t1 - t0) + (t3 - t2)
        timers.solver += t2 - t1
        if writing and config.write_interval and step % config.write_interval == 0:
            t4 = clock()
            _write_fields(out_dir, step, mesh, T, grad, config.vtk)
            timers.io += clock() - t4
        if on_step is not None:
            on_step(step, t, T, st)
        log.debug("step %d t=%g iters=%d residual=%.3e", step, t, st.iterations, st.final_residual)

    timers.total = clock() - t_start
    return CaseResult(T, grad, timers, stats, mesh)


def _write_fields(out_dir: Path, step: int, mesh: Mesh, T: CellField, grad: CellField, vtk: bool):
    write_csv(out_dir / f"T_{step:06d}.csv", T.internal)
    if vtk and mesh.block is not None:
        write_vtk(out_dir / f"T_{step:06d}.vtk", mesh, {"T": T.internal, "gradT": grad.internal})


def write_timing_csv(path, timers: PhaseTimers) -> None:
    with open(path, "w") as fh:
        fh.write("phase,seconds\n")
        for phase, value in timers.as_dict().items():
            fh.write(f"{phase},{value:.6f}\n")


# ---------------------------------------------------------------- benchmark

@dataclass
class BenchmarkReport:
    samples: dict[str, dict[str, list[float]]]   # policy label -> phase -> seconds per repeat
    policies: list[Policy]
    deterministic: bool

    def rows(self):
        for policy in self.policies:
            label = str(policy)
            for phase in PHASES:
                xs = self.samples[label][phase]
                std = statistics.stdev(xs) if len(xs) > 1 else 0.0
                yield policy.kind, policy.nthreads, phase, statistics.fmean(xs), std

    def mean(self, policy: Policy, phase: str) -> float:
        return statistics.fmean(self.samples[str(policy)][phase])

    def to_csv(self) -> str:
        lines = ["policy,threads,phase,mean_s,std_s"]
        lines += [f"{k},{n},{ph},{m:.6f},{s:.6f}" for k, n, ph, m, s in self.rows()]
        return "\n".join(lines) + "\n"


def benchmark(config: CaseConfig, policies: list[Policy], repeats: int = 5) -> BenchmarkReport:
    """Run the case repeats times per policy with field output disabled."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    samples: dict[str, dict[str, list[float]]] = {}
    reference = None
    deterministic = True
    for policy in policies:
        cfg = config.replace(policy=policy.kind, threads=policy.threads,
                             backend=policy.backend or config.backend, write_interval=0, vtk=False)
        bucket = samples.setdefault(str(policy), {p: [] for p in PHASES})
        for _ in range(repeats):
            result = run_case(cfg, write=False)
            for phase, value in result.timers.as_dict().items():
                bucket[phase].append(value)
            fingerprint = (result.T.internal.tobytes(), tuple(s.iterations for s in result.stats))
            if reference is None:
                reference = fingerprint
            elif fingerprint != reference:
                deterministic = False
    return BenchmarkReport(samples, list(policies), deterministic)
