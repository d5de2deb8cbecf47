import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gatherfv import GeometryError, MeshValidationError, compute_geometry, generate_block_mesh
from gatherfv.mesh import BoundaryCondition, Patch, make_mesh

from conftest import renumbered

EPS = np.finfo(float).eps


def signed_area_sum(mesh, geometry):
    total = np.zeros((mesh.n_cells, 3))
    ni = mesh.n_internal_faces
    np.add.at(total, mesh.owner, geometry.face_area)
    np.add.at(total, mesh.neighbour, -geometry.face_area[:ni])
    return total


@pytest.mark.parametrize("n, cells, points, internal, faces", [
    (1, 1, 8, 0, 6),
    (2, 8, 27, 12, 36),
    (3, 27, 64, 54, 108),
    (10, 1000, 1331, 2700, 3300),
])
def test_cube_counts(n, cells, points, internal, faces):
    m = generate_block_mesh(n, n, n)
    assert (m.n_cells, m.n_points, m.n_internal_faces, m.n_faces) == (cells, points, internal, faces)
    assert m.n_internal_faces == 3 * n * n * (n - 1)
    assert m.n_faces == 3 * n * n * (n + 1)


@given(st.integers(1, 7), st.integers(1, 7), st.integers(1, 7))
def test_box_counts(nx, ny, nz):
    m = generate_block_mesh(nx, ny, nz)
    assert m.n_cells == nx * ny * nz
    assert m.n_points == (nx + 1) * (ny + 1) * (nz + 1)
    internal = (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1)
    assert m.n_internal_faces == internal
    assert m.n_faces == internal + 2 * (nx * ny + ny * nz + nx * nz)
    assert [p.name for p in m.patches] == ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"]


def test_generated_ordering():
    m = generate_block_mesh(3, 4, 2)
    ni = m.n_internal_faces
    own, nei = m.owner[:ni], m.neighbour
    assert np.all(own < nei)
    order = np.lexsort((nei, own))
    assert np.array_equal(order, np.arange(ni))
    # patches contiguous after the internal faces
    start = ni
    for p in m.patches:
        assert p.start_face == start
        start += p.n_faces
    assert start == m.n_faces


def test_single_cell_geometry():
    m = generate_block_mesh(1, 1, 1)
    g = compute_geometry(m)
    assert g.cell_volume[0] == 1.0
    np.testing.assert_array_equal(g.mag_face_area, np.ones(6))
    np.testing.assert_allclose(g.cell_centre[0], [0.5, 0.5, 0.5], rtol=0, atol=1e-15)


def test_split_box_internal_face():
    m = generate_block_mesh(2, 1, 1)
    g = compute_geometry(m)
    assert m.n_internal_faces == 1
    assert (m.owner[0], m.neighbour[0]) == (0, 1)
    assert g.mag_face_area[0] == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(g.face_area[0], [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(g.cell_volume, [0.5, 0.5], rtol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32])
def test_volume_exact_dyadic(n):
    g = compute_geometry(generate_block_mesh(n, n, n))
    rel = np.abs(g.cell_volume * n**3 - 1.0)
    assert rel.max() <= 1e-15


@pytest.mark.parametrize("n", [3, 5, 7, 20])
def test_volume_non_dyadic(n):
    # coordinates i/n are rounded, so edge lengths scatter by about n ulps
    g = compute_geometry(generate_block_mesh(n, n, n))
    rel = np.abs(g.cell_volume * n**3 - 1.0)
    assert rel.max() <= 4 * n * EPS


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6),
       st.tuples(*[st.floats(0.1, 10.0)] * 3))
def test_closure_and_volume_sum(nx, ny, nz, extent):
    m = generate_block_mesh(nx, ny, nz, extent)
    g = compute_geometry(m)
    assert np.all(g.cell_volume > 0)
    scale = np.abs(g.face_area).max()
    assert np.abs(signed_area_sum(m, g)).max() <= 1e-12 * scale
    assert g.cell_volume.sum() == pytest.approx(extent[0] * extent[1] * extent[2], rel=1e-12)


def test_normals_point_out_of_owner():
    m = generate_block_mesh(3, 3, 3)
    g = compute_geometry(m)
    ni = m.n_internal_faces
    d = g.cell_centre[m.neighbour] - g.cell_centre[m.owner[:ni]]
    assert np.all(np.einsum("ij,ij->i", d, g.face_area[:ni]) > 0)
    for p in m.patches:
        d = g.face_centre[p.slice] - g.cell_centre[m.face_cells(p)]
        assert np.all(np.einsum("ij,ij->i", d, g.face_area[p.slice]) > 0)


def test_renumbered_geometry_matches(rng):
    m = generate_block_mesh(3, 2, 4, (1.0, 2.0, 0.5))
    r = renumbered(m, rng)
    g0, g1 = compute_geometry(m), compute_geometry(r)
    assert np.isclose(g1.cell_volume.sum(), 1.0)
    assert np.abs(signed_area_sum(r, g1)).max() <= 1e-12
    assert sorted(np.round(g0.cell_centre, 12).tolist()) == sorted(np.round(g1.cell_centre, 12).tolist())


# ---------------------------------------------------------------- validation

def _two_cells():
    m = generate_block_mesh(2, 1, 1)
    return m.points, [list(f) for f in m.faces], list(m.owner), list(m.neighbour), list(m.patches)


@pytest.mark.parametrize("mutate, invariant", [
    (lambda pts, f, o, n, p: (pts, f, o, [0], p), "owner-neighbour-distinct"),
    (lambda pts, f, o, n, p: (pts, f, [0] + o[1:-1] + [7], n, p), "owner-range"),
    (lambda pts, f, o, n, p: (pts, f, o, [-1], p), "neighbour-range"),
    (lambda pts, f, o, n, p: (pts, [[0, 1, 1, 2]] + f[1:], o, n, p), "face-repeated-vertex"),
    (lambda pts, f, o, n, p: (pts, [[0, 1, 99]] + f[1:], o, n, p), "face-point-range"),
    (lambda pts, f, o, n, p: (pts, [[0, 1]] + f[1:], o, n, p), "face-size"),
    (lambda pts, f, o, n, p: (pts, f, o, n, [Patch("a", 1, 6), Patch("b", 6, 5)]), "patch-ranges"),
    (lambda pts, f, o, n, p: (pts, f, o, n, p[:-1]), "patch-ranges"),
    (lambda pts, f, o, n, p: (pts, f, o, n, [Patch("a", 1, 5), Patch("a", 6, 5)]), "patch-names"),
])
def test_validation_names_invariant(mutate, invariant):
    pts, f, o, n, p = mutate(*_two_cells())
    with pytest.raises(MeshValidationError) as err:
        make_mesh(pts, f, o, n, p, n_cells=2).validate()
    assert err.value.invariant == invariant


def test_orphan_cell():
    pts, f, o, n, p = _two_cells()
    with pytest.raises(MeshValidationError) as err:
        make_mesh(pts, f, o, n, p, n_cells=3).validate()
    assert err.value.invariant == "no-orphan-cells"


def test_non_finite_point():
    pts, f, o, n, p = _two_cells()
    pts = pts.copy()
    pts[0, 0] = np.nan
    with pytest.raises(MeshValidationError) as err:
        make_mesh(pts, f, o, n, p).validate()
    assert err.value.invariant == "points-finite"


def test_degenerate_face_area():
    m = generate_block_mesh(1, 1, 1)
    pts = m.points.copy()
    pts[:, 0] = 0.0  # flatten the cell
    flat = make_mesh(pts, m.faces, m.owner, m.neighbour, m.patches)
    with pytest.raises(GeometryError):
        compute_geometry(flat)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (2, 2, 2, (1.0, 0.0, 1.0))])
def test_generator_rejects_bad_sizes(args):
    with pytest.raises(ValueError):
        generate_block_mesh(*args)


def test_boundary_conditions():
    assert BoundaryCondition.parse("fixedValue:2.5") == BoundaryCondition("fixedValue", 2.5)
    assert BoundaryCondition.parse("zeroGradient").kind == "zeroGradient"
    assert BoundaryCondition.parse(str(BoundaryCondition("fixedValue", 0.1))).value == 0.1
    for bad in ("fixedValue", "fixedValue:x", "robin:1", "zeroGradient:3"):
        with pytest.raises(ValueError):
            BoundaryCondition.parse(bad)
    m = generate_block_mesh(2, 2, 2).with_boundary_conditions({"xmin": "fixedValue:1"})
    assert m.patch("xmin").bc.value == 1.0
    assert m.patch("xmax").bc.kind == "zeroGradient"
    with pytest.raises(KeyError):
        m.with_boundary_conditions({"nowhere": "zeroGradient"})
