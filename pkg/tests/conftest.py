import dataclasses
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gatherfv import Policy, available_backends, generate_block_mesh
from gatherfv.mesh import Patch, make_mesh

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = available_backends()

# every policy a determinism check should cover, on every available backend
POLICIES = [Policy("seq", 1, b) for b in BACKENDS] + [
    Policy("par", n, b) for b in BACKENDS for n in (1, 2, 8)]


def renumbered(mesh, rng, shuffle_boundary=True):
    """Same geometry with cells relabelled at random.

    Internal faces are re-oriented so owner < neighbour and re-sorted, which
    keeps the mesh valid while making the adjacency irregular.
    """
    perm = rng.permutation(mesh.n_cells)
    ni = mesh.n_internal_faces
    faces = [list(f) for f in mesh.faces]
    own = perm[mesh.owner]
    nei = perm[mesh.neighbour]
    internal = []
    for f in range(ni):
        o, n, verts = own[f], nei[f], faces[f]
        if o > n:
            o, n, verts = n, o, verts[::-1]
        internal.append((o, n, verts))
    internal.sort(key=lambda t: (t[0], t[1]))
    new_faces = [t[2] for t in internal]
    new_owner = [t[0] for t in internal]
    new_nei = [t[1] for t in internal]
    patches = []
    for p in mesh.patches:
        idx = np.arange(p.start_face, p.start_face + p.n_faces)
        if shuffle_boundary:
            idx = rng.permutation(idx)
        patches.append(Patch(p.name, len(new_faces), p.n_faces, p.bc, p.type))
        new_faces += [faces[i] for i in idx]
        new_owner += list(own[idx])
    return make_mesh(mesh.points, new_faces, new_owner, new_nei, patches, mesh.n_cells).validate()


def rotated(mesh, rng):
    """Rigidly rotated copy; still orthogonal, but no face is axis-aligned."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return dataclasses.replace(mesh, points=np.ascontiguousarray(mesh.points @ q.T), block=None)


def random_mesh(rng, max_n=6, renumber=True, rotate=True):
    """Block mesh of random size and extent, often renumbered and rotated."""
    nx, ny, nz = (int(v) for v in rng.integers(1, max_n + 1, size=3))
    extent = tuple(float(v) for v in rng.uniform(0.5, 2.0, size=3))
    mesh = generate_block_mesh(nx, ny, nz, extent)
    if renumber and rng.random() < 0.7:
        mesh = renumbered(mesh, rng)
    if rotate and rng.random() < 0.5:
        mesh = rotated(mesh, rng)
    return mesh


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
