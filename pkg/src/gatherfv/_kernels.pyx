# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""OpenMP gather kernels.

Every parallel loop writes each output row from exactly one iteration, and
every per-row accumulation runs in a fixed order, so results do not depend
on the thread count. Must stay in lockstep with ``_kernels_py``.
"""
import numpy as np
from cython.parallel import prange
from libc.math cimport fabs

NAME = "compiled"

ctypedef long long idx_t

# Each thread gets at least this many rows; results are unaffected.
cdef Py_ssize_t MIN_PARALLEL = 4096


cdef inline int _nt(Py_ssize_t n, int nthreads) noexcept nogil:
    cdef Py_ssize_t cap = n // MIN_PARALLEL
    if nthreads <= 1 or cap <= 1:
        return 1
    return <int>cap if cap < nthreads else nthreads


# ---------------------------------------------------------------- elementwise

def fill_rows(double[:, ::1] out, double[::1] row, int nthreads):
    cdef Py_ssize_t i, k, n = out.shape[0], m = out.shape[1]
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        for k in range(m):
            out[i, k] = row[k]


def divide_rows(double[:, ::1] f1, double[::1] f3, int nthreads):
    cdef Py_ssize_t i, k, n = f1.shape[0], m = f1.shape[1]
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        for k in range(m):
            f1[i, k] = f1[i, k] / f3[i]


def binary(int op, double[:, ::1] x, double[:, ::1] y, double[:, ::1] out, int nthreads):
    cdef Py_ssize_t i, k, n = out.shape[0], m = out.shape[1]
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        for k in range(m):
            if op == 0:
                out[i, k] = x[i, k] + y[i, k]
            elif op == 1:
                out[i, k] = x[i, k] - y[i, k]
            else:
                out[i, k] = x[i, k] * y[i, k]


def axpy(double alpha, double[::1] x, double[::1] y, int nthreads):
    cdef Py_ssize_t i, n = y.shape[0]
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        y[i] = y[i] + alpha * x[i]


def xpay(double[::1] x, double beta, double[::1] y, int nthreads):
    cdef Py_ssize_t i, n = y.shape[0]
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        y[i] = x[i] + beta * y[i]


def divide(double[::1] x, double[::1] d, double[::1] out, int nthreads):
    cdef Py_ssize_t i, n = out.shape[0]
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        out[i] = x[i] / d[i]


# ---------------------------------------------------------------- reductions

def pairwise_dot(double[::1] x, double[::1] y, int nthreads):
    cdef Py_ssize_t i, n = x.shape[0], m
    if n == 0:
        return 0.0
    cdef double[::1] a = np.empty(n)
    cdef double[::1] b = np.empty(n // 2 + 1)
    cdef double[::1] t
    for i in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        a[i] = x[i] * y[i]
    while n > 1:
        m = n // 2
        for i in prange(m, nogil=True, schedule="static", num_threads=_nt(m, nthreads)):
            b[i] = a[2 * i] + a[2 * i + 1]
        if n % 2:
            b[m] = a[n - 1]
            m += 1
        t = a
        a = b
        b = t
        n = m
    return a[0]


# ---------------------------------------------------------------- interpolation

def weights(double[:, ::1] Sf, double[:, ::1] Cf, double[:, ::1] C,
            idx_t[::1] owner, idx_t[::1] neighbour, double[::1] out,
            int nthreads, double rootvsmall):
    cdef Py_ssize_t f, n = out.shape[0]
    cdef idx_t o, q
    cdef double sfd_own, sfd_nei, total
    for f in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        o = owner[f]
        q = neighbour[f]
        sfd_own = fabs(Sf[f, 0] * (Cf[f, 0] - C[o, 0])
                       + Sf[f, 1] * (Cf[f, 1] - C[o, 1])
                       + Sf[f, 2] * (Cf[f, 2] - C[o, 2]))
        sfd_nei = fabs(Sf[f, 0] * (C[q, 0] - Cf[f, 0])
                       + Sf[f, 1] * (C[q, 1] - Cf[f, 1])
                       + Sf[f, 2] * (C[q, 2] - Cf[f, 2]))
        total = sfd_own + sfd_nei
        if fabs(total) > rootvsmall:
            out[f] = sfd_nei / total
        else:
            out[f] = 0.5


def interpolate(double[::1] w, double[:, ::1] vf, idx_t[::1] owner,
                idx_t[::1] neighbour, double[:, ::1] out, int nthreads):
    cdef Py_ssize_t f, k, n = out.shape[0], m = out.shape[1]
    for f in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        for k in range(m):
            out[f, k] = w[f] * (vf[owner[f], k] - vf[neighbour[f], k]) + vf[neighbour[f], k]


# ---------------------------------------------------------------- gather kernels

def gather_grad(double[:, ::1] Sf, double[::1] ssf,
                idx_t[::1] l_items, idx_t[::1] l_starts,
                idx_t[::1] u_items, idx_t[::1] u_starts,
                double[:, ::1] out, int nthreads):
    cdef Py_ssize_t c, i, n = out.shape[0]
    cdef idx_t f
    cdef double a0, a1, a2
    for c in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for i in range(l_starts[c], l_starts[c + 1]):
            f = l_items[i]
            a0 = a0 + Sf[f, 0] * ssf[f]
            a1 = a1 + Sf[f, 1] * ssf[f]
            a2 = a2 + Sf[f, 2] * ssf[f]
        for i in range(u_starts[c], u_starts[c + 1]):
            f = u_items[i]
            a0 = a0 - Sf[f, 0] * ssf[f]
            a1 = a1 - Sf[f, 1] * ssf[f]
            a2 = a2 - Sf[f, 2] * ssf[f]
        out[c, 0] = a0
        out[c, 1] = a1
        out[c, 2] = a2


def gather_sum(double[::1] vals,
               idx_t[::1] l_items, idx_t[::1] l_starts,
               idx_t[::1] u_items, idx_t[::1] u_starts,
               double[::1] out, int nthreads):
    cdef Py_ssize_t c, i, n = out.shape[0]
    cdef double acc
    for c in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        acc = 0.0
        for i in range(l_starts[c], l_starts[c + 1]):
            acc = acc + vals[l_items[i]]
        for i in range(u_starts[c], u_starts[c + 1]):
            acc = acc + vals[u_items[i]]
        out[c] = acc


def patch_gather_grad(double[:, ::1] Sf, double[::1] ssf, idx_t[::1] face_cells,
                      idx_t[::1] face_index, idx_t[::1] face_start,
                      double[:, ::1] out, int nthreads):
    cdef Py_ssize_t g, i, n = face_start.shape[0] - 1
    cdef idx_t f, cell
    for g in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        cell = face_cells[face_index[face_start[g]]]
        for i in range(face_start[g], face_start[g + 1]):
            f = face_index[i]
            out[cell, 0] = out[cell, 0] + Sf[f, 0] * ssf[f]
            out[cell, 1] = out[cell, 1] + Sf[f, 1] * ssf[f]
            out[cell, 2] = out[cell, 2] + Sf[f, 2] * ssf[f]


def patch_gather_sum(double[::1] vals, idx_t[::1] face_cells,
                     idx_t[::1] face_index, idx_t[::1] face_start,
                     double[::1] out, int nthreads):
    cdef Py_ssize_t g, i, n = face_start.shape[0] - 1
    cdef idx_t cell
    for g in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        cell = face_cells[face_index[face_start[g]]]
        for i in range(face_start[g], face_start[g + 1]):
            out[cell] = out[cell] + vals[face_index[i]]


def spmv(double[::1] diag, double[::1] off, double[::1] x,
         idx_t[::1] owner, idx_t[::1] neighbour,
         idx_t[::1] l_items, idx_t[::1] l_starts,
         idx_t[::1] u_items, idx_t[::1] u_starts,
         double[::1] y, int nthreads):
    cdef Py_ssize_t c, i, n = y.shape[0]
    cdef idx_t f
    cdef double acc
    for c in prange(n, nogil=True, schedule="static", num_threads=_nt(n, nthreads)):
        acc = diag[c] * x[c]
        for i in range(l_starts[c], l_starts[c + 1]):
            f = l_items[i]
            acc = acc + off[f] * x[neighbour[f]]
        for i in range(u_starts[c], u_starts[c + 1]):
            f = u_items[i]
            acc = acc + off[f] * x[owner[f]]
        y[c] = acc
