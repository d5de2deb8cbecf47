"""Discretisation of dT/dt - div(DT grad T) = S on orthogonal meshes.

Gradient and matrix kernels come in two forms: a face-loop scatter that
writes to both cells of each face (sequential, used as the test oracle)
and a per-cell gather over the compressed adjacency (race-free, parallel).
"""
from __future__ import annotations

import numpy as np

from .errors import GeometryError
from .fields import CellField, SurfaceField, _rows, evaluate_boundaries, sn_grad, zip_binary, zip_divide_inplace
from .fvmesh import FvMesh
from .mesh import Mesh, MeshGeometry
from .policy import SEQ, Policy
from .solver import LduSystem

ROOTVSMALL = 1e-150


def compute_weights(mesh: Mesh, geometry: MeshGeometry, policy: Policy = SEQ) -> SurfaceField:
    """Linear interpolation weights.

    The internal weight is d_nei / (d_own + d_nei), where d_own and d_nei are
    the face-normal distances from each cell centre to the face. It multiplies the
    owner-minus-neighbour difference (see interpolate_to_faces), so it is
    the owner's share. Boundary weights are 1.
    """
    ni = mesh.n_internal_faces
    w = np.empty(ni)
    if ni:
        policy.kernels.weights(
            np.ascontiguousarray(geometry.face_area[:ni]), np.ascontiguousarray(geometry.face_centre[:ni]),
            geometry.cell_centre, mesh.owner, mesh.neighbour, w, policy.nthreads, ROOTVSMALL)
    return SurfaceField(w, [np.ones(p.n_faces) for p in mesh.patches])


def interpolate_to_faces(vf: CellField, w: SurfaceField, mesh: Mesh, policy: Policy = SEQ) -> SurfaceField:
    """Face values w*(v_own - v_nei) + v_nei; boundary faces take the field's boundary values."""
    values = np.ascontiguousarray(vf.internal, dtype=np.float64)
    out = np.empty((mesh.n_internal_faces,) + values.shape[1:])
    if mesh.n_internal_faces:
        policy.kernels.interpolate(w.internal, _rows(values), mesh.owner, mesh.neighbour, _rows(out),
                                   policy.nthreads)
    return SurfaceField(out, [b.copy() for b in vf.boundary])


def face_flux(Sf: np.ndarray, face_values: np.ndarray) -> np.ndarray:
    """Sf . phi_f for vector face values (the dot half of dotInterpolate)."""
    return np.einsum("ij,ij->i", Sf, face_values)


def _gradient_field(mesh: Mesh, internal: np.ndarray) -> CellField:
    # boundary values start as the adjacent cell gradient (zero-order extrapolation)
    return CellField(internal, [internal[mesh.face_cells(p)] for p in mesh.patches])


def grad_gauss_scatter(ssf: SurfaceField, mesh: Mesh, geometry: MeshGeometry) -> CellField:
    """Green-Gauss gradient by a sequential face loop (reference version)."""
    ni = mesh.n_internal_faces
    Sf = geometry.face_area
    grad = np.zeros((mesh.n_cells, 3))
    sfssf = Sf[:ni] * ssf.internal[:, None]
    # np.add.at applies updates one at a time in index order: owner then
    # neighbour for face 0, then face 1, ...
    cells = np.stack([mesh.owner[:ni], mesh.neighbour], axis=1).ravel()
    np.add.at(grad, cells, np.stack([sfssf, -sfssf], axis=1).reshape(-1, 3))
    for p, values in zip(mesh.patches, ssf.boundary):
        np.add.at(grad, mesh.face_cells(p), Sf[p.slice] * values[:, None])
    grad /= geometry.cell_volume[:, None]
    return _gradient_field(mesh, grad)


def grad_gauss_gather(ssf: SurfaceField, fvm: FvMesh, policy: Policy = SEQ) -> CellField:
    """Green-Gauss gradient, one task per cell (internal) and per cell group (patches)."""
    mesh, adj = fvm.mesh, fvm.adjacency
    adj.check(mesh)
    ssf.check(mesh)
    k, nt = policy.kernels, policy.nthreads
    grad = np.empty((mesh.n_cells, 3))
    lo, up = adj.lower_lists, adj.neighbour_lists
    k.gather_grad(fvm.internal_area, np.ascontiguousarray(ssf.internal, dtype=np.float64),
                  lo.items, lo.starts, up.items, up.starts, grad, nt)
    for i, comp in enumerate(adj.patches):
        if comp.n_groups:
            k.patch_gather_grad(fvm.patch_area[i], np.ascontiguousarray(ssf.boundary[i], dtype=np.float64),
                                fvm.patch_face_cells[i], comp.face_index, comp.face_start, grad, nt)
    zip_divide_inplace(grad, fvm.geometry.cell_volume, policy)
    return _gradient_field(mesh, grad)


def correct_boundary_gradient(grad: CellField, vsf: CellField, mesh: Mesh, geometry: MeshGeometry,
                              policy: Policy = SEQ) -> None:
    """Replace the normal component of boundary gradients by the patch snGrad.

    gb <- gb + n (snGrad - n . gb) on every patch (none are coupled here).
    """
    mag = geometry.mag_face_area
    for i, p in enumerate(mesh.patches):
        if p.n_faces == 0:
            continue
        m = mag[p.slice]
        if np.any(m <= 0):
            raise GeometryError(f"zero-area face on patch {p.name}")
        n = geometry.face_area[p.slice] / m[:, None]
        gb = grad.boundary[i]
        normal_part = np.einsum("ij,ij->i", n, gb)
        delta = zip_binary(sn_grad(vsf, mesh, geometry, i), normal_part, "-", policy)
        grad.boundary[i] = zip_binary(gb, n * delta[:, None], "+", policy)


def correct_boundary_values(gb: np.ndarray, n: np.ndarray, sn: np.ndarray) -> np.ndarray:
    """Single-array form of the correction, for direct checks."""
    return gb + n * (sn - np.einsum("ij,ij->i", n, gb))[:, None]


def fvc_grad(T: CellField, fvm: FvMesh, policy: Policy = SEQ, gather: bool = True) -> CellField:
    """Full gradient: boundary update, interpolation, Green-Gauss, correction."""
    mesh = fvm.mesh
    evaluate_boundaries(T, mesh)
    ssf = interpolate_to_faces(T, fvm.weights, mesh, policy)
    if gather:
        grad = grad_gauss_gather(ssf, fvm, policy)
    else:
        grad = grad_gauss_scatter(ssf, mesh, fvm.geometry)
    correct_boundary_gradient(grad, T, mesh, fvm.geometry, policy)
    return grad


# ---------------------------------------------------------------- matrix

def _check_step(DT, dt):
    if not DT > 0:
        raise ValueError(f"diffusivity must be positive, got {DT}")
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")


def _time_terms(fvm: FvMesh, T_old, dt, source, diag, rhs):
    V = fvm.geometry.cell_volume
    if dt is not None:
        rdt = V / dt
        diag += rdt
        rhs += rdt * T_old
    if source:
        rhs += source * V


def assemble_laplacian_ddt(T_old: np.ndarray, DT: float, dt: float | None, fvm: FvMesh,
                           policy: Policy = SEQ, source: float = 0.0) -> LduSystem:
    """Implicit Euler + two-point Laplacian system, diagonal built by gather.

    Pass dt=None for the steady Laplacian alone (no time term).
    """
    _check_step(DT, 1.0 if dt is None else dt)
    mesh, adj = fvm.mesh, fvm.adjacency
    adj.check(mesh)
    k, nt = policy.kernels, policy.nthreads
    coeff = DT * fvm.internal_diffusion
    diag = np.empty(mesh.n_cells)
    rhs = np.zeros(mesh.n_cells)
    lo, up = adj.lower_lists, adj.neighbour_lists
    k.gather_sum(coeff, lo.items, lo.starts, up.items, up.starts, diag, nt)
    for i, p in enumerate(mesh.patches):
        comp = adj.patches[i]
        if p.bc.kind != "fixedValue" or comp.n_groups == 0:
            continue
        ab = DT * fvm.patch_diffusion[i]
        k.patch_gather_sum(ab, fvm.patch_face_cells[i], comp.face_index, comp.face_start, diag, nt)
        k.patch_gather_sum(ab * p.bc.value, fvm.patch_face_cells[i], comp.face_index, comp.face_start, rhs, nt)
    _time_terms(fvm, np.asarray(T_old, dtype=np.float64), dt, source, diag, rhs)
    return LduSystem(diag, -coeff, rhs, mesh.owner[:mesh.n_internal_faces], mesh.neighbour,
                     adj.lower_lists, adj.neighbour_lists)


def assemble_laplacian_ddt_scatter(T_old: np.ndarray, DT: float, dt: float | None, fvm: FvMesh,
                                   source: float = 0.0) -> LduSystem:
    """Same system by a sequential face loop (reference version)."""
    _check_step(DT, 1.0 if dt is None else dt)
    mesh = fvm.mesh
    ni = mesh.n_internal_faces
    coeff = DT * fvm.internal_diffusion
    diag = np.zeros(mesh.n_cells)
    rhs = np.zeros(mesh.n_cells)
    np.add.at(diag, mesh.owner[:ni], coeff)
    np.add.at(diag, mesh.neighbour, coeff)
    for i, p in enumerate(mesh.patches):
        if p.bc.kind != "fixedValue":
            continue
        ab = DT * fvm.patch_diffusion[i]
        np.add.at(diag, fvm.patch_face_cells[i], ab)
        np.add.at(rhs, fvm.patch_face_cells[i], ab * p.bc.value)
    _time_terms(fvm, np.asarray(T_old, dtype=np.float64), dt, source, diag, rhs)
    adj = fvm.adjacency
    return LduSystem(diag, -coeff, rhs, mesh.owner[:ni], mesh.neighbour, adj.lower_lists, adj.neighbour_lists)
