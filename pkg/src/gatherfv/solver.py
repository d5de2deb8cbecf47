"""Symmetric face-addressed (LDU) matrix and Jacobi-preconditioned CG."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adjacency import CompressedLists, build_cell_face_lists
from .policy import SEQ, Policy

RESIDUAL_FLOOR = 1e-20


@dataclass
class LduSystem:
    """A x = rhs with A = diag + one symmetric coefficient per internal face."""
    diag: np.ndarray
    off_diag: np.ndarray
    rhs: np.ndarray
    owner: np.ndarray        # internal faces only
    neighbour: np.ndarray
    lower: CompressedLists   # internal faces grouped by owner
    upper: CompressedLists   # internal faces grouped by neighbour

    @classmethod
    def from_faces(cls, diag, off_diag, rhs, owner, neighbour) -> "LduSystem":
        """Build from raw arrays, computing the gather lists."""
        diag = np.ascontiguousarray(diag, dtype=np.float64)
        owner = np.ascontiguousarray(owner, dtype=np.int64)
        neighbour = np.ascontiguousarray(neighbour, dtype=np.int64)
        n = diag.shape[0]
        return cls(diag, np.ascontiguousarray(off_diag, dtype=np.float64),
                   np.ascontiguousarray(rhs, dtype=np.float64), owner, neighbour,
                   build_cell_face_lists(owner, n), build_cell_face_lists(neighbour, n))

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def to_dense(self) -> np.ndarray:
        A = np.diag(self.diag).astype(np.float64)
        A[self.owner, self.neighbour] += self.off_diag
        A[self.neighbour, self.owner] += self.off_diag
        return A

    def scaled(self, factor: float) -> "LduSystem":
        return LduSystem(self.diag * factor, self.off_diag * factor, self.rhs * factor,
                         self.owner, self.neighbour, self.lower, self.upper)


@dataclass(frozen=True)
class SolverStats:
    iterations: int
    initial_residual: float
    final_residual: float
    converged: bool


def spmv(system: LduSystem, x: np.ndarray, policy: Policy = SEQ) -> np.ndarray:
    """y = A x, one gather per row."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (system.n,):
        raise ValueError(f"vector has shape {x.shape}, system has {system.n} rows")
    y = np.empty(system.n)
    lo, up = system.lower, system.upper
    policy.kernels.spmv(system.diag, system.off_diag, x, system.owner, system.neighbour,
                        lo.items, lo.starts, up.items, up.starts, y, policy.nthreads)
    return y


def spmv_oracle(system: LduSystem, x: np.ndarray) -> np.ndarray:
    """y = A x by the face loop (upper and lower contributions scattered)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.n,):
        raise ValueError(f"vector has shape {x.shape}, system has {system.n} rows")
    y = system.diag * x
    np.add.at(y, system.owner, system.off_diag * x[system.neighbour])
    np.add.at(y, system.neighbour, system.off_diag * x[system.owner])
    return y


def dot(x: np.ndarray, y: np.ndarray, policy: Policy = SEQ) -> float:
    """Inner product by a fixed pairwise tree, identical for any thread count."""
    return policy.kernels.pairwise_dot(x, y, policy.nthreads)


def pcg_solve(system: LduSystem, x0=None, tol: float = 1e-6, max_iter: int = 1000,
              policy: Policy = SEQ) -> tuple[np.ndarray, SolverStats]:
    """Conjugate gradient with the diagonal as preconditioner.

    Stops when ||r||_2 <= tol * max(||r0||_2, 1e-20). On hitting max_iter
    the last iterate is returned with converged=False.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    d = np.ascontiguousarray(system.diag, dtype=np.float64)
    if np.any(~(d > 0)):
        bad = int(np.flatnonzero(~(d > 0))[0])
        raise ValueError(f"non-positive diagonal at row {bad}: {d[bad]}")
    k, nt = policy.kernels, policy.nthreads
    n = system.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    b = np.ascontiguousarray(system.rhs, dtype=np.float64)

    r = np.empty(n)
    k.binary(1, b.reshape(-1, 1), spmv(system, x, policy).reshape(-1, 1), r.reshape(-1, 1), nt)
    r_norm = math.sqrt(dot(r, r, policy))
    r0 = r_norm
    target = tol * max(r0, RESIDUAL_FLOOR)
    if r_norm <= target:
        return x, SolverStats(0, r0, r_norm, True)

    z = np.empty(n)
    k.divide(r, d, z, nt)
    p = z.copy()
    rz = dot(r, z, policy)
    for it in range(1, max_iter + 1):
        q = spmv(system, p, policy)
        alpha = rz / dot(p, q, policy)
        k.axpy(alpha, p, x, nt)
        k.axpy(-alpha, q, r, nt)
        r_norm = math.sqrt(dot(r, r, policy))
        if r_norm <= target:
            return x, SolverStats(it, r0, r_norm, True)
        k.divide(r, d, z, nt)
        rz_new = dot(r, z, policy)
        k.xpay(z, rz_new / rz, p, nt)
        rz = rz_new
    return x, SolverStats(max_iter, r0, r_norm, False)
