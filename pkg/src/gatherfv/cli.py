"""Command-line entry point.

    gatherfv run   --case FILE [--policy seq|par] [--threads N] [--out DIR]
    gatherfv bench --case FILE --policies seq,par --repeats 5 --csv PATH
    gatherfv mesh gen NX NY NZ [--extent X Y Z] --out DIR
    gatherfv mesh check DIR

Exit status: 0 success, 1 config or parse error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .case import benchmark, load_case, run_case, write_timing_csv
from .errors import ConfigError, GeometryError, ParseError, SolverError
from .fields import write_csv, write_vtk
from .mesh import compute_geometry, generate_block_mesh
from .policy import Policy, parse_policy
from .polymesh import read_polymesh, write_polymesh

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

log = logging.getLogger("gatherfv")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gatherfv", description="Gather-based finite-volume heat diffusion solver.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log every time step")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a case")
    run.add_argument("--case", required=True, type=Path)
    run.add_argument("--policy", choices=("seq", "par"))
    run.add_argument("--threads", type=int)
    run.add_argument("--backend", choices=("auto", "compiled", "python"))
    run.add_argument("--out", type=Path, help="output directory (overrides output.dir)")

    bench = sub.add_parser("bench", help="time a case under several policies")
    bench.add_argument("--case", required=True, type=Path)
    bench.add_argument("--policies", default="seq,par",
                       help="comma list of seq, par, par:N (default seq,par)")
    bench.add_argument("--threads", type=int, default=None, help="threads for a bare 'par'")
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--backend", choices=("auto", "compiled", "python"))
    bench.add_argument("--csv", type=Path, help="write the report here (default stdout)")

    mesh = sub.add_parser("mesh", help="generate or validate polyMesh directories")
    msub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = msub.add_parser("gen", help="write a block mesh")
    gen.add_argument("nx", type=int)
    gen.add_argument("ny", type=int)
    gen.add_argument("nz", type=int)
    gen.add_argument("--extent", type=float, nargs=3, default=(1.0, 1.0, 1.0), metavar=("X", "Y", "Z"))
    gen.add_argument("--out", required=True, type=Path)
    check = msub.add_parser("check", help="read and validate a polyMesh directory")
    check.add_argument("dir", type=Path)
    return ap


def _backend(name):
    return None if name in (None, "auto") else name


def cmd_run(args) -> int:
    config = load_case(args.case)
    changes = {}
    if args.policy:
        changes["policy"] = args.policy
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.backend:
        changes["backend"] = _backend(args.backend)
    if args.out:
        changes["output_dir"] = str(args.out)
    if changes:
        config = config.replace(**changes)

    result = run_case(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "T.csv", result.T.internal)
    write_csv(out / "gradT.csv", result.grad.internal)
    write_timing_csv(out / "timing.csv", result.timers)
    if config.vtk and result.mesh.block is not None:
        write_vtk(out / "T.vtk", result.mesh, {"T": result.T.internal, "gradT": result.grad.internal})

    t = result.timers
    iters = sum(s.iterations for s in result.stats)
    print(f"{len(result.stats)} steps, {iters} CG iterations, policy {config.execution}")
    print(f"io {t.io:.3f}s  assembly {t.assembly:.3f}s  solver {t.solver:.3f}s  "
          f"total {t.total:.3f}s  (unattributed {t.unattributed:.3f}s)")
    print(f"fields written to {out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = load_case(args.case)
    if args.repeats < 1:
        raise ConfigError("--repeats must be >= 1")
    backend = _backend(args.backend) if args.backend else config.backend
    policies = []
    for item in args.policies.split(","):
        item = item.strip()
        if not item:
            continue
        threads = args.threads if args.threads is not None else max(config.threads, 1)
        try:
            p = parse_policy(item, threads)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        policies.append(Policy(p.kind, p.threads, backend))
    if not policies:
        raise ConfigError("--policies is empty")

    report = benchmark(config, policies, args.repeats)
    text = report.to_csv()
    if args.csv:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        args.csv.write_text(text)
        print(f"report written to {args.csv}")
    else:
        sys.stdout.write(text)
    if not report.deterministic:
        print("warning: final fields differ between policies", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_mesh(args) -> int:
    if args.mesh_command == "gen":
        try:
            mesh = generate_block_mesh(args.nx, args.ny, args.nz, tuple(args.extent))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        write_polymesh(mesh, args.out)
        print(f"wrote {mesh.n_cells} cells, {mesh.n_faces} faces to {args.out}")
        return EXIT_OK
    mesh = read_polymesh(args.dir)
    geometry = compute_geometry(mesh)
    print(f"points {mesh.n_points}  faces {mesh.n_faces}  internal faces {mesh.n_internal_faces}  "
          f"cells {mesh.n_cells}")
    for p in mesh.patches:
        print(f"  patch {p.name}: {p.n_faces} faces from {p.start_face}")
    print(f"total volume {geometry.cell_volume.sum():.12g}")
    print("mesh OK")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "bench": cmd_bench, "mesh": cmd_mesh}[args.command]
    try:
        return handler(args)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ParseError, GeometryError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
