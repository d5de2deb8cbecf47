"""Gather-based finite-volume heat diffusion solver.

Face-addressed meshes, atomic-free cell/face adjacency, Green-Gauss
gradients, Laplacian assembly and Jacobi-preconditioned CG, with compiled
OpenMP kernels and a numpy fallback behind one execution-policy switch.
"""
from ._backend import DEFAULT as BACKEND
from ._backend import available as available_backends
from .adjacency import (
    CellFaceAdjacency,
    CompressedLists,
    PatchCompression,
    build_adjacency,
    build_cell_face_lists,
    build_patch_compression,
    exclusive_scan,
    stable_argsort,
)
from .assembly import (
    assemble_laplacian_ddt,
    compute_weights,
    correct_boundary_gradient,
    grad_gauss_gather,
    grad_gauss_scatter,
    interpolate_to_faces,
)
from .errors import ConfigError, GeometryError, MeshValidationError, ParseError, SolverError
from .fields import CellField, SurfaceField, fill_field, zip_binary, zip_divide_inplace
from .fvmesh import FvMesh
from .mesh import BoundaryCondition, Mesh, MeshGeometry, Patch, compute_geometry, generate_block_mesh
from .policy import SEQ, Policy, par
from .polymesh import read_polymesh, write_polymesh
from .solver import LduSystem, SolverStats, pcg_solve, spmv

__version__ = "0.1.0"
