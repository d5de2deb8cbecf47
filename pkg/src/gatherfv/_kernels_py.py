"""Pure numpy kernels, the fallback for the compiled ``_kernels`` module.

Signatures and accumulation order match ``_kernels.pyx`` exactly so the two
backends agree bitwise. Segmented sums are evaluated column by column over
the ragged groups (``acc[c] += v[items[start[c] + j]]`` for j = 0, 1, ...),
which reproduces the sequential per-cell loop order without Python loops
over cells. ``nthreads > 1`` splits the cell range into contiguous chunks
run on a thread pool; chunking never changes any per-cell result.
"""
import numpy as np

from ._threads import run as _run

NAME = "python"


def _ragged_accumulate(acc, starts, items, values_of, sign, lo, hi):
    """acc[c] (+|-)= values_of(items[i]) for i in group c, in item order."""
    first = starts[lo:hi]
    counts = starts[lo + 1:hi + 1] - first
    if counts.size == 0:
        return
    cells = np.arange(lo, hi)
    for j in range(int(counts.max())):
        live = counts > j
        idx = cells[live]
        faces = items[first[live] + j]
        if sign > 0:
            acc[idx] += values_of(faces)
        else:
            acc[idx] -= values_of(faces)


# ---------------------------------------------------------------- elementwise

def fill_rows(out, row, nthreads):
    def work(a, b):
        out[a:b] = row
    _run(out.shape[0], nthreads, work)


def divide_rows(f1, f3, nthreads):
    def work(a, b):
        f1[a:b] /= f3[a:b, None]
    _run(f1.shape[0], nthreads, work)


def binary(op, x, y, out, nthreads):
    ufunc = {0: np.add, 1: np.subtract, 2: np.multiply}[op]

    def work(a, b):
        ufunc(x[a:b], y[a:b], out=out[a:b])
    _run(out.shape[0], nthreads, work)


def axpy(alpha, x, y, nthreads):
    """y += alpha * x"""
    def work(a, b):
        y[a:b] += alpha * x[a:b]
    _run(y.shape[0], nthreads, work)


def xpay(x, beta, y, nthreads):
    """y = x + beta * y"""
    def work(a, b):
        y[a:b] = x[a:b] + beta * y[a:b]
    _run(y.shape[0], nthreads, work)


def divide(x, d, out, nthreads):
    def work(a, b):
        np.divide(x[a:b], d[a:b], out=out[a:b])
    _run(out.shape[0], nthreads, work)


# ---------------------------------------------------------------- reductions

def pairwise_dot(x, y, nthreads):
    """Fixed binary-tree sum of x*y: adjacent pairs per level, odd tail carried."""
    v = x * y
    n = v.shape[0]
    if n == 0:
        return 0.0
    while n > 1:
        m = n // 2
        nxt = v[0:2 * m:2] + v[1:2 * m:2]
        if n % 2:
            nxt = np.append(nxt, v[n - 1])
        v = nxt
        n = v.shape[0]
    return float(v[0])


# ---------------------------------------------------------------- interpolation

def _dot3(u, v):
    return u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1] + u[:, 2] * v[:, 2]


def weights(Sf, Cf, C, owner, neighbour, out, nthreads, rootvsmall):
    def work(a, b):
        own = owner[a:b]
        nei = neighbour[a:b]
        s = Sf[a:b]
        sfd_own = np.abs(_dot3(s, Cf[a:b] - C[own]))
        sfd_nei = np.abs(_dot3(s, C[nei] - Cf[a:b]))
        total = sfd_own + sfd_nei
        ok = np.abs(total) > rootvsmall
        res = np.full(b - a, 0.5)
        res[ok] = sfd_nei[ok] / total[ok]
        out[a:b] = res
    _run(out.shape[0], nthreads, work)


def interpolate(w, vf, owner, neighbour, out, nthreads):
    def work(a, b):
        vo = vf[owner[a:b]]
        vn = vf[neighbour[a:b]]
        out[a:b] = w[a:b, None] * (vo - vn) + vn
    _run(out.shape[0], nthreads, work)


# ---------------------------------------------------------------- gather kernels

def gather_grad(Sf, ssf, l_items, l_starts, u_items, u_starts, out, nthreads):
    """out[c] = sum_own Sf*ssf - sum_nei Sf*ssf, accumulated face by face."""
    def values_of(faces):
        return Sf[faces] * ssf[faces, None]

    def work(a, b):
        out[a:b] = 0.0
        _ragged_accumulate(out, l_starts, l_items, values_of, +1, a, b)
        _ragged_accumulate(out, u_starts, u_items, values_of, -1, a, b)
    _run(out.shape[0], nthreads, work)


def gather_sum(vals, l_items, l_starts, u_items, u_starts, out, nthreads):
    """out[c] = sum_own vals + sum_nei vals (scalar), face by face."""
    def values_of(faces):
        return vals[faces]

    def work(a, b):
        out[a:b] = 0.0
        _ragged_accumulate(out, l_starts, l_items, values_of, +1, a, b)
        _ragged_accumulate(out, u_starts, u_items, values_of, +1, a, b)
    _run(out.shape[0], nthreads, work)


def _patch_groups(face_cells, face_index, face_start, lo, hi):
    first = face_start[lo:hi]
    counts = face_start[lo + 1:hi + 1] - first
    cells = face_cells[face_index[first]] if counts.size else first
    return first, counts, cells


def patch_gather_grad(Sf, ssf, face_cells, face_index, face_start, out, nthreads):
    """out[cell(g)] += Sf*ssf for each face of each patch group g."""
    def work(a, b):
        first, counts, cells = _patch_groups(face_cells, face_index, face_start, a, b)
        for j in range(int(counts.max()) if counts.size else 0):
            live = counts > j
            f = face_index[first[live] + j]
            out[cells[live]] += Sf[f] * ssf[f, None]
    _run(face_start.shape[0] - 1, nthreads, work)


def patch_gather_sum(vals, face_cells, face_index, face_start, out, nthreads):
    def work(a, b):
        first, counts, cells = _patch_groups(face_cells, face_index, face_start, a, b)
        for j in range(int(counts.max()) if counts.size else 0):
            live = counts > j
            out[cells[live]] += vals[face_index[first[live] + j]]
    _run(face_start.shape[0] - 1, nthreads, work)


def spmv(diag, off, x, owner, neighbour, l_items, l_starts, u_items, u_starts, y, nthreads):
    """y[c] = diag*x + sum_own off*x[nei] + sum_nei off*x[own], face by face."""
    def upper(faces):
        return off[faces] * x[neighbour[faces]]

    def lower(faces):
        return off[faces] * x[owner[faces]]

    def work(a, b):
        y[a:b] = diag[a:b] * x[a:b]
        _ragged_accumulate(y, l_starts, l_items, upper, +1, a, b)
        _ragged_accumulate(y, u_starts, u_items, lower, +1, a, b)
    _run(y.shape[0], nthreads, work)
