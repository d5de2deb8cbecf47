"""Cell- and face-centred fields with per-patch boundary values.

Values are numpy arrays: shape (n,) for scalars and (n, 3) for vectors.
The elementwise ops here never reorder arithmetic, so they give the same
bits under every execution policy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import Mesh, MeshGeometry
from .policy import SEQ, Policy

_OPS = {"+": 0, "-": 1, "*": 2}


def _rows(a: np.ndarray) -> np.ndarray:
    """2-D view (n, k) of a C-contiguous array; scalars become (n, 1)."""
    return a.reshape(a.shape[0], int(np.prod(a.shape[1:])))


def fill_field(length: int, value, policy: Policy = SEQ) -> np.ndarray:
    if length < 0:
        raise ValueError("length must be >= 0")
    row = np.atleast_1d(np.asarray(value, dtype=np.float64))
    out = np.empty((length, row.size))
    policy.kernels.fill_rows(out, np.ascontiguousarray(row), policy.nthreads)
    return out[:, 0] if np.ndim(value) == 0 else out


def zip_divide_inplace(f1: np.ndarray, f3: np.ndarray, policy: Policy = SEQ) -> None:
    """f1[i] /= f3[i]; f1 scalar or vector, f3 scalar."""
    if f1.shape[0] != f3.shape[0]:
        raise ValueError(f"Check fields have same size: {f1.shape[0]} vs {f3.shape[0]}")
    zero = np.flatnonzero(f3 == 0)
    if zero.size:
        raise ZeroDivisionError(f"divisor is zero at index {zero[0]}")
    if not f1.flags.c_contiguous:
        raise ValueError("in-place division needs a contiguous array")
    policy.kernels.divide_rows(_rows(f1), np.ascontiguousarray(f3, dtype=np.float64), policy.nthreads)


def zip_binary(f2: np.ndarray, f3: np.ndarray, op: str, policy: Policy = SEQ) -> np.ndarray:
    """Elementwise f2 op f3 for op in '+', '-', '*' (same shapes)."""
    if f2.shape != f3.shape:
        raise ValueError(f"Check fields have same size: {f2.shape} vs {f3.shape}")
    if op not in _OPS:
        raise ValueError(f"unsupported operator {op!r}")
    a = np.ascontiguousarray(f2, dtype=np.float64)
    b = np.ascontiguousarray(f3, dtype=np.float64)
    out = np.empty_like(a)
    if a.shape[0]:
        policy.kernels.binary(_OPS[op], _rows(a), _rows(b), _rows(out), policy.nthreads)
    return out


@dataclass
class CellField:
    internal: np.ndarray
    boundary: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def uniform(cls, mesh: Mesh, value, policy: Policy = SEQ) -> "CellField":
        return cls(fill_field(mesh.n_cells, value, policy),
                   [fill_field(p.n_faces, value, policy) for p in mesh.patches])

    @classmethod
    def from_internal(cls, mesh: Mesh, values) -> "CellField":
        """Wrap cell values; boundary values copy the adjacent cell."""
        values = np.ascontiguousarray(values, dtype=np.float64)
        return cls(values, [values[mesh.face_cells(p)] for p in mesh.patches])

    def copy(self) -> "CellField":
        return CellField(self.internal.copy(), [b.copy() for b in self.boundary])

    def check(self, mesh: Mesh):
        if self.internal.shape[0] != mesh.n_cells or len(self.boundary) != len(mesh.patches) or any(
                b.shape[0] != p.n_faces for b, p in zip(self.boundary, mesh.patches)):
            raise ValueError("field size does not match mesh")


@dataclass
class SurfaceField:
    internal: np.ndarray
    boundary: list[np.ndarray] = field(default_factory=list)

    def check(self, mesh: Mesh):
        if self.internal.shape[0] != mesh.n_internal_faces or len(self.boundary) != len(mesh.patches) or any(
                b.shape[0] != p.n_faces for b, p in zip(self.boundary, mesh.patches)):
            raise ValueError("surface field size does not match mesh")

    def all_faces(self) -> np.ndarray:
        return np.concatenate([self.internal, *self.boundary])


def evaluate_boundaries(T: CellField, mesh: Mesh) -> None:
    """Refresh boundary values of a scalar field from the patch conditions."""
    for i, p in enumerate(mesh.patches):
        if p.bc.kind == "fixedValue":
            T.boundary[i][:] = p.bc.value
        else:
            T.boundary[i][:] = T.internal[mesh.face_cells(p)]


def sn_grad(T: CellField, mesh: Mesh, geometry: MeshGeometry, patch_index: int) -> np.ndarray:
    """Surface-normal gradient of a scalar field on one patch."""
    p = mesh.patches[patch_index]
    if p.bc.kind == "zeroGradient":
        return np.zeros(p.n_faces)
    cells = mesh.face_cells(p)
    d = geometry.face_centre[p.slice] - geometry.cell_centre[cells]
    return (T.boundary[patch_index] - T.internal[cells]) / np.linalg.norm(d, axis=1)


# ---------------------------------------------------------------- output

def write_csv(path, values: np.ndarray) -> None:
    """``cellIndex,value`` rows, or ``cellIndex,x,y,z`` for vectors."""
    values = np.asarray(values)
    table = np.column_stack([np.arange(values.shape[0]), _rows(values)])
    fmt = ["%d"] + ["%.17g"] * (table.shape[1] - 1)
    np.savetxt(path, table, fmt=fmt, delimiter=",")


def read_csv(path) -> np.ndarray:
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    values = table[np.argsort(table[:, 0], kind="stable"), 1:]
    return values[:, 0] if values.shape[1] == 1 else values


def write_vtk(path, mesh: Mesh, cell_data: dict[str, np.ndarray], title: str = "gatherfv") -> None:
    """Legacy ASCII STRUCTURED_POINTS file; only for generated block meshes."""
    if mesh.block is None:
        raise ValueError("VTK structured-points output needs a generated block mesh")
    nx, ny, nz, extent = mesh.block
    with open(Path(path), "w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}\nORIGIN 0 0 0\n")
        fh.write(f"SPACING {extent[0] / nx!r} {extent[1] / ny!r} {extent[2] / nz!r}\n")
        fh.write(f"CELL_DATA {mesh.n_cells}\n")
        for name, values in cell_data.items():
            values = np.asarray(values)
            if values.ndim == 1:
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            else:
                fh.write(f"VECTORS {name} double\n")
            np.savetxt(fh, _rows(values), fmt="%.10g")
