"""Face-addressed polyhedral mesh, structured block generator and geometry.

Connectivity follows the usual face-addressing layout: every face has an
owner cell, internal faces also have a neighbour cell, internal faces come
first and boundary faces are grouped in contiguous patches. Face vertex
lists are stored compressed (``face_points`` plus ``face_offsets``).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import GeometryError, MeshValidationError

BLOCK_PATCHES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


@dataclass(frozen=True)
class BoundaryCondition:
    kind: Literal["fixedValue", "zeroGradient"] = "zeroGradient"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixedValue", "zeroGradient"):
            raise ValueError(f"unsupported boundary condition {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        """Parse ``zeroGradient`` or ``fixedValue:<value>``."""
        kind, _, value = text.strip().partition(":")
        if kind == "zeroGradient" and not value:
            return cls()
        if kind == "fixedValue" and value:
            return cls("fixedValue", float(value))
        raise ValueError(f"bad boundary condition {text!r}")

    def __str__(self):
        return "zeroGradient" if self.kind == "zeroGradient" else f"fixedValue:{self.value!r}"


ZERO_GRADIENT = BoundaryCondition()


@dataclass(frozen=True)
class Patch:
    name: str
    start_face: int
    n_faces: int
    bc: BoundaryCondition = ZERO_GRADIENT
    type: str = "patch"

    @property
    def slice(self) -> slice:
        return slice(self.start_face, self.start_face + self.n_faces)


@dataclass(frozen=True, eq=False)
class Mesh:
    points: np.ndarray          # (nPoints, 3) float64
    face_offsets: np.ndarray    # (nFaces + 1,) int64
    face_points: np.ndarray     # (face_offsets[-1],) int64
    owner: np.ndarray           # (nFaces,) int64
    neighbour: np.ndarray       # (nInternalFaces,) int64
    patches: tuple[Patch, ...]
    n_cells: int
    # (nx, ny, nz, extent) when built by generate_block_mesh; not part of equality
    block: tuple | None = field(default=None, compare=False)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_faces(self) -> int:
        return self.owner.shape[0]

    @property
    def n_internal_faces(self) -> int:
        return self.neighbour.shape[0]

    def face(self, i: int) -> np.ndarray:
        return self.face_points[self.face_offsets[i]:self.face_offsets[i + 1]]

    @property
    def faces(self) -> list[list[int]]:
        return [self.face(i).tolist() for i in range(self.n_faces)]

    def patch(self, name: str) -> Patch:
        for p in self.patches:
            if p.name == name:
                return p
        raise KeyError(name)

    def face_cells(self, patch: Patch) -> np.ndarray:
        return self.owner[patch.slice]

    def with_boundary_conditions(self, bcs: dict[str, BoundaryCondition | str]) -> "Mesh":
        """Copy with patch conditions replaced; values may be specs like ``"fixedValue:1"``."""
        bcs = {k: BoundaryCondition.parse(v) if isinstance(v, str) else v for k, v in bcs.items()}
        unknown = set(bcs) - {p.name for p in self.patches}
        if unknown:
            raise KeyError(f"no such patch: {', '.join(sorted(unknown))}")
        patches = tuple(dataclasses.replace(p, bc=bcs.get(p.name, p.bc)) for p in self.patches)
        return dataclasses.replace(self, patches=patches)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.n_cells == other.n_cells
            and self.patches == other.patches
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.face_offsets, other.face_offsets)
            and np.array_equal(self.face_points, other.face_points)
            and np.array_equal(self.owner, other.owner)
            and np.array_equal(self.neighbour, other.neighbour)
        )

    __hash__ = None

    def validate(self) -> "Mesh":
        """Check the structural invariants, raising MeshValidationError."""
        nf, ni, nc = self.n_faces, self.n_internal_faces, self.n_cells
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise MeshValidationError("points-shape", f"points array has shape {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise MeshValidationError("points-finite", "non-finite point coordinate")
        if self.face_offsets.shape[0] != nf + 1:
            raise MeshValidationError(
                "owner-length", f"{nf} owner entries for {self.face_offsets.shape[0] - 1} faces")
        if ni > nf:
            raise MeshValidationError("neighbour-length", f"{ni} neighbours but only {nf} faces")
        sizes = np.diff(self.face_offsets)
        if sizes.size and sizes.min() < 3:
            bad = int(np.argmin(sizes))
            raise MeshValidationError("face-size", f"face {bad} has {sizes[bad]} vertices")
        fp = self.face_points
        if fp.size and (fp.min() < 0 or fp.max() >= self.n_points):
            raise MeshValidationError("face-point-range", "face vertex index outside [0, nPoints)")
        if fp.size:
            face_of = np.repeat(np.arange(nf), sizes)
            pairs = np.unique(np.stack([face_of, fp]), axis=1)
            if pairs.shape[1] != fp.size:
                dup = np.flatnonzero(np.bincount(pairs[0], minlength=nf) != sizes)[0]
                raise MeshValidationError("face-repeated-vertex", f"face {dup} repeats a vertex")
        if nf and (self.owner.min() < 0 or self.owner.max() >= nc):
            raise MeshValidationError("owner-range", "owner label outside [0, nCells)")
        if ni and (self.neighbour.min() < 0 or self.neighbour.max() >= nc):
            raise MeshValidationError("neighbour-range", "neighbour label outside [0, nCells)")
        same = np.flatnonzero(self.owner[:ni] == self.neighbour)
        if same.size:
            raise MeshValidationError("owner-neighbour-distinct", f"face {same[0]} owns itself")
        seen = np.zeros(nc, dtype=bool)
        seen[self.owner] = True
        seen[self.neighbour] = True
        if not seen.all():
            raise MeshValidationError("no-orphan-cells", f"cell {np.flatnonzero(~seen)[0]} has no faces")
        expect = ni
        for p in sorted(self.patches, key=lambda p: p.start_face):
            if p.n_faces < 0:
                raise MeshValidationError("patch-ranges", f"patch {p.name} has negative size")
            if p.start_face != expect:
                kind = "overlap" if p.start_face < expect else "gap"
                raise MeshValidationError(
                    "patch-ranges", f"patch {p.name} starts at {p.start_face}, expected {expect} ({kind})")
            expect += p.n_faces
        if expect != nf:
            raise MeshValidationError("patch-ranges", f"patches end at face {expect}, mesh has {nf} faces")
        names = [p.name for p in self.patches]
        if len(set(names)) != len(names):
            raise MeshValidationError("patch-names", "duplicate patch name")
        return self


def _as_index(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def make_mesh(points, faces, owner, neighbour, patches, n_cells=None) -> Mesh:
    """Build a Mesh from plain lists; ``faces`` is a list of vertex lists."""
    sizes = np.fromiter((len(f) for f in faces), dtype=np.int64, count=len(faces))
    offsets = np.zeros(len(faces) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    flat = np.fromiter((v for f in faces for v in f), dtype=np.int64, count=int(offsets[-1]))
    owner = _as_index(owner)
    neighbour = _as_index(neighbour)
    if n_cells is None:
        labels = np.concatenate([owner, neighbour])
        n_cells = int(labels.max()) + 1 if labels.size else 0
    return Mesh(np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3),
                offsets, flat, owner, neighbour, tuple(patches), int(n_cells))


def generate_block_mesh(nx: int, ny: int, nz: int, extent=(1.0, 1.0, 1.0)) -> Mesh:
    """Structured hexahedral block of nx*ny*nz cells spanning [0, extent].

    Cell (i, j, k) has label i + nx*(j + ny*k). Internal faces are sorted by
    owner then neighbour (owner < neighbour); boundary faces follow in the
    patches xmin, xmax, ymin, ymax, zmin, zmax, each in cell order.
    """
    for name, n in (("nx", nx), ("ny", ny), ("nz", nz)):
        if int(n) != n or n < 1:
            raise ValueError(f"{name} must be a positive integer, got {n!r}")
    extent = tuple(float(e) for e in extent)
    if len(extent) != 3 or min(extent) <= 0:
        raise ValueError(f"extent components must be positive, got {extent}")
    nx, ny, nz = int(nx), int(ny), int(nz)

    xs = np.linspace(0.0, extent[0], nx + 1)
    ys = np.linspace(0.0, extent[1], ny + 1)
    zs = np.linspace(0.0, extent[2], nz + 1)
    pz, py, px = np.meshgrid(zs, ys, xs, indexing="ij")
    points = np.stack([px.ravel(), py.ravel(), pz.ravel()], axis=1)

    def pid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    kk, jj, ii = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    cells = ii + nx * (jj + ny * kk)

    # quads with normals along +x, +y, +z for the cell face on the high side
    def quad_x(i, j, k):
        return np.stack([pid(i, j, k), pid(i, j + 1, k), pid(i, j + 1, k + 1), pid(i, j, k + 1)], axis=-1)

    def quad_y(i, j, k):
        return np.stack([pid(i, j, k), pid(i, j, k + 1), pid(i + 1, j, k + 1), pid(i + 1, j, k)], axis=-1)

    def quad_z(i, j, k):
        return np.stack([pid(i, j, k), pid(i + 1, j, k), pid(i + 1, j + 1, k), pid(i, j + 1, k)], axis=-1)

    n_cells = nx * ny * nz
    cand_quads = np.stack([quad_x(ii + 1, jj, kk), quad_y(ii, jj + 1, kk), quad_z(ii, jj, kk + 1)], axis=1)
    cand_nei = np.stack([cells + 1, cells + nx, cells + nx * ny], axis=1)
    valid = np.stack([ii < nx - 1, jj < ny - 1, kk < nz - 1], axis=1)
    internal_quads = cand_quads[valid]
    owner_int = np.broadcast_to(cells[:, None], valid.shape)[valid]
    neighbour = cand_nei[valid]

    blocks = [internal_quads]
    owners = [owner_int]
    patches = []
    start = internal_quads.shape[0]
    sides = (
        ("xmin", ii == 0, lambda: quad_x(ii, jj, kk)[:, ::-1]),
        ("xmax", ii == nx - 1, lambda: quad_x(ii + 1, jj, kk)),
        ("ymin", jj == 0, lambda: quad_y(ii, jj, kk)[:, ::-1]),
        ("ymax", jj == ny - 1, lambda: quad_y(ii, jj + 1, kk)),
        ("zmin", kk == 0, lambda: quad_z(ii, jj, kk)[:, ::-1]),
        ("zmax", kk == nz - 1, lambda: quad_z(ii, jj, kk + 1)),
    )
    for name, on_side, quads in sides:
        q = quads()[on_side]
        blocks.append(q)
        owners.append(cells[on_side])
        patches.append(Patch(name, start, q.shape[0]))
        start += q.shape[0]

    quads = np.concatenate(blocks)
    n_faces = quads.shape[0]
    return Mesh(
        points=np.ascontiguousarray(points),
        face_offsets=np.arange(0, 4 * n_faces + 1, 4, dtype=np.int64),
        face_points=_as_index(quads.ravel()),
        owner=_as_index(np.concatenate(owners)),
        neighbour=_as_index(neighbour),
        patches=tuple(patches),
        n_cells=n_cells,
        block=(nx, ny, nz, extent),
    )


@dataclass(frozen=True, eq=False)
class MeshGeometry:
    face_area: np.ndarray     # Sf, (nFaces, 3)
    face_centre: np.ndarray   # Cf, (nFaces, 3)
    cell_centre: np.ndarray   # C, (nCells, 3)
    cell_volume: np.ndarray   # V, (nCells,)

    @property
    def mag_face_area(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.face_area, self.face_area))


def _face_geometry(mesh: Mesh):
    nf = mesh.n_faces
    Sf = np.zeros((nf, 3))
    Cf = np.zeros((nf, 3))
    sizes = np.diff(mesh.face_offsets)
    for k in np.unique(sizes):
        sel = np.flatnonzero(sizes == k)
        idx = mesh.face_offsets[sel][:, None] + np.arange(k)
        pts = mesh.points[mesh.face_points[idx]]            # (m, k, 3)
        centre_est = pts.mean(axis=1)
        nxt = np.roll(pts, -1, axis=1)
        tri_n = np.cross(nxt - pts, centre_est[:, None, :] - pts)
        tri_a = np.linalg.norm(tri_n, axis=2)
        tri_c = pts + nxt + centre_est[:, None, :]
        sum_a = tri_a.sum(axis=1)
        bad = np.flatnonzero(sum_a <= 0.0)
        if bad.size:
            raise GeometryError(f"face {sel[bad[0]]} has zero area")
        Sf[sel] = 0.5 * tri_n.sum(axis=1)
        Cf[sel] = (tri_a[:, :, None] * tri_c).sum(axis=1) / (3.0 * sum_a[:, None])
    return Sf, Cf


def compute_geometry(mesh: Mesh) -> MeshGeometry:
    """Face area vectors and centroids, cell volumes and centroids.

    Faces are split into triangles about their vertex average; cells into
    pyramids from each face to the average of the cell's face centres.
    """
    Sf, Cf = _face_geometry(mesh)
    nc, ni = mesh.n_cells, mesh.n_internal_faces
    own, nei = mesh.owner, mesh.neighbour

    def per_cell(values_own, values_nei):
        return (np.bincount(own, weights=values_own, minlength=nc)
                + np.bincount(nei, weights=values_nei, minlength=nc))

    n_cell_faces = per_cell(np.ones(own.size), np.ones(nei.size))
    c_est = np.stack([per_cell(Cf[:, d], Cf[:ni, d]) for d in range(3)], axis=1) / n_cell_faces[:, None]

    pyr3_own = np.einsum("ij,ij->i", Sf, Cf - c_est[own])
    pyr3_nei = np.einsum("ij,ij->i", Sf[:ni], c_est[nei] - Cf[:ni])
    pc_own = 0.75 * Cf + 0.25 * c_est[own]
    pc_nei = 0.75 * Cf[:ni] + 0.25 * c_est[nei]

    vol3 = per_cell(pyr3_own, pyr3_nei)
    bad = np.flatnonzero(vol3 <= 0.0)
    if bad.size:
        raise GeometryError(f"cell {bad[0]} has non-positive volume {vol3[bad[0]] / 3.0}")
    C = np.stack([per_cell(pyr3_own * pc_own[:, d], pyr3_nei * pc_nei[:, d]) for d in range(3)],
                 axis=1) / vol3[:, None]
    return MeshGeometry(Sf, Cf, C, vol3 / 3.0)
