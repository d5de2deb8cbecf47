"""Compiled vs numpy kernels on block meshes.

    python benchmarks/bench_backends.py [--sizes 16 32 48] [--repeats 5] [--threads 1 4]

Times the gradient gather, the matrix assembly, one SpMV and one full CG
solve per backend and policy, and checks the backends agree bitwise.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from gatherfv import FvMesh, Policy, assemble_laplacian_ddt, available_backends, generate_block_mesh, pcg_solve, spmv
from gatherfv.assembly import fvc_grad
from gatherfv.fields import CellField


def _time(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        samples.append(time.perf_counter() - t0)
    return statistics.fmean(samples), (statistics.stdev(samples) if repeats > 1 else 0.0), out


def bench_size(n, repeats, thread_counts):
    mesh = generate_block_mesh(n, n, n, (1.0, 1.0, 1.0)).with_boundary_conditions(
        {"xmin": "fixedValue:1", "xmax": "fixedValue:0"})
    rng = np.random.default_rng(n)
    T0 = rng.random(mesh.n_cells)
    rows, results = [], {}
    for backend in available_backends():
        for nt in thread_counts:
            policy = Policy("seq" if nt == 1 else "par", nt, backend)
            fvm = FvMesh(mesh, policy)
            fvm.weights, fvm.internal_diffusion, fvm.patch_diffusion
            T = CellField.from_internal(mesh, T0)
            g_mean, g_std, grad = _time(lambda: fvc_grad(T, fvm, policy), repeats)
            a_mean, a_std, system = _time(lambda: assemble_laplacian_ddt(T0, 1.0, 0.2, fvm, policy), repeats)
            s_mean, s_std, y = _time(lambda: spmv(system, T0, policy), repeats)
            c_mean, c_std, (x, stats) = _time(lambda: pcg_solve(system, T0, 1e-6, 1000, policy), repeats)
            results[(backend, nt)] = (grad.internal.tobytes(), system.diag.tobytes(), y.tobytes(), x.tobytes())
            for kernel, m, s in (("gradient", g_mean, g_std), ("assembly", a_mean, a_std),
                                 ("spmv", s_mean, s_std), ("pcg", c_mean, c_std)):
                rows.append((n, backend, str(policy), kernel, m, s))
    identical = len(set(results.values())) == 1
    return rows, identical


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 48])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 4])
    ap.add_argument("--csv", help="also write rows to this file")
    args = ap.parse_args(argv)

    header = "n,backend,policy,kernel,mean_s,std_s"
    lines = [header]
    print(f"backends: {', '.join(available_backends())}")
    print(f"{'n':>4} {'backend':>9} {'policy':>7} {'kernel':>9} {'mean ms':>10} {'std ms':>8}")
    for n in args.sizes:
        rows, identical = bench_size(n, args.repeats, args.threads)
        for n_, backend, policy, kernel, m, s in rows:
            print(f"{n_:>4} {backend:>9} {policy:>7} {kernel:>9} {m * 1e3:>10.3f} {s * 1e3:>8.3f}")
            lines.append(f"{n_},{backend},{policy},{kernel},{m:.6f},{s:.6f}")
        print(f"     results bitwise identical across backends/policies: {identical}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
