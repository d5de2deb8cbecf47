"""A mesh bundled with everything derived from it once and then reused."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .adjacency import CellFaceAdjacency, build_adjacency
from .mesh import Mesh, MeshGeometry, compute_geometry
from .policy import SEQ, Policy


class FvMesh:
    """Lazily computed geometry, adjacency, weights and diffusion coefficients.

    Nothing here is recomputed after first use; the underlying Mesh is
    immutable, which is what makes the caching safe.
    """

    def __init__(self, mesh: Mesh, policy: Policy = SEQ):
        self.mesh = mesh
        self.policy = policy

    @cached_property
    def geometry(self) -> MeshGeometry:
        return compute_geometry(self.mesh)

    @cached_property
    def adjacency(self) -> CellFaceAdjacency:
        return build_adjacency(self.mesh, self.policy)

    @cached_property
    def weights(self):
        from .assembly import compute_weights
        return compute_weights(self.mesh, self.geometry, self.policy)

    @cached_property
    def internal_area(self) -> np.ndarray:
        """Internal-face area vectors as a contiguous (nInternal, 3) array."""
        return np.ascontiguousarray(self.geometry.face_area[:self.mesh.n_internal_faces])

    @cached_property
    def patch_face_cells(self) -> list[np.ndarray]:
        return [np.ascontiguousarray(self.mesh.face_cells(p)) for p in self.mesh.patches]

    @cached_property
    def patch_area(self) -> list[np.ndarray]:
        return [np.ascontiguousarray(self.geometry.face_area[p.slice]) for p in self.mesh.patches]

    @cached_property
    def internal_diffusion(self) -> np.ndarray:
        """|Sf| / |C_nei - C_own| per internal face."""
        g, m = self.geometry, self.mesh
        ni = m.n_internal_faces
        d = g.cell_centre[m.neighbour] - g.cell_centre[m.owner[:ni]]
        return g.mag_face_area[:ni] / np.linalg.norm(d, axis=1)

    @cached_property
    def patch_diffusion(self) -> list[np.ndarray]:
        """|Sf| / |Cf - C_cell| per boundary face, one array per patch."""
        g, m = self.geometry, self.mesh
        out = []
        for p, cells in zip(m.patches, self.patch_face_cells):
            d = g.face_centre[p.slice] - g.cell_centre[cells]
            out.append(g.mag_face_area[p.slice] / np.linalg.norm(d, axis=1))
        return out
