"""Triangle meshes: parsing, validation, topology and discrete curvature."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from willmore_lab import NonManifold, ParseError, TriMesh, load_mesh, sample_mesh
from willmore_lab.catalog import plane_patch
from willmore_lab.mesh import save_off
from willmore_lab.topology import euler_genus

from conftest import surface

TETRA = (np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]]),
         np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]))


def test_tetrahedron_counts():
    m = TriMesh(*TETRA)
    assert (m.n_vertices, m.n_edges, m.n_faces) == (4, 6, 4)
    assert m.euler_characteristic() == 2
    assert len(m.boundary_edges) == 0
    assert m.area() == pytest.approx(1.5 + math.sqrt(3) / 2)


@pytest.mark.parametrize("name,chi,genus", [("icosphere", 2, 0), ("torus", 0, 1), ("double_torus", -2, 2)])
def test_fixture_topology(fixtures_dir, name, chi, genus):
    m = load_mesh(fixtures_dir / f"{name}.off")
    top = euler_genus(m)
    assert top["chi"] == chi and top["genus"] == genus and top["boundary_loops"] == 0


def test_icosphere_willmore_near_sixteen_pi(fixtures_dir):
    w, err = load_mesh(fixtures_dir / "icosphere.off").willmore_with_error()
    assert abs(w - 16 * math.pi) <= err
    assert w == pytest.approx(16 * math.pi, rel=0.03)


def test_sampled_sphere_converges():
    ch = surface("sphere").charts[0]
    m = sample_mesh(ch, (64, 128))
    assert m.euler_characteristic() == 2
    assert m.area() == pytest.approx(4 * math.pi, rel=1e-3)
    assert m.willmore_energy() == pytest.approx(16 * math.pi, rel=2e-3)
    assert m.willmore_energy(areas="mixed") == pytest.approx(16 * math.pi, rel=2e-3)


def test_area_converges_at_second_order():
    ch = surface("torus", R=2.0, r=0.7, ambient_dim=3).charts[0]
    exact = 4 * math.pi**2 * 2.0 * 0.7
    e1 = abs(sample_mesh(ch, (16, 16)).area() - exact)
    e2 = abs(sample_mesh(ch, (32, 32)).area() - exact)
    assert 3.5 < e1 / e2 < 4.5


def test_flat_torus_in_r4_willmore():
    t = surface("torus", R=1.5, r=1.0)
    m = sample_mesh(t.charts[0], (96, 64))
    assert m.ambient_dim == 4 and m.euler_characteristic() == 0
    assert m.willmore_energy() == pytest.approx(t.known_values["willmore"], rel=5e-3)


def test_catenoid_annulus_boundary_and_capping():
    ch = surface("catenoid", vmax=1.0).charts[0]
    m = sample_mesh(ch, (48, 16))
    assert m.euler_characteristic() == 0
    assert len(m.boundary_loops()) == 2
    assert m.capped().euler_characteristic() == 2
    assert m.cutoff_flags.sum() == 2 * 47


def test_plane_patch_two_triangles():
    m = sample_mesh(plane_patch().charts[0], (2, 2))
    assert m.n_faces == 2 and m.area() == pytest.approx(1.0)


def test_mobius_strip_is_rejected():
    n = 12
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    V = []
    for a in t:
        for s in (-0.3, 0.3):
            V.append([(1 + s * math.cos(a / 2)) * math.cos(a), (1 + s * math.cos(a / 2)) * math.sin(a),
                      s * math.sin(a / 2)])
    F = []
    for i in range(n):
        a0, a1 = 2 * i, 2 * i + 1
        j = (i + 1) % n
        b0, b1 = (2 * j, 2 * j + 1) if j else (1, 0)
        F += [[a0, b0, a1], [a1, b0, b1]]
    with pytest.raises(NonManifold, match="orientable"):
        TriMesh(np.array(V), np.array(F))


def test_nonmanifold_edge_rejected():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1.0]])
    with pytest.raises(NonManifold):
        TriMesh(V, np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]]))
    with pytest.raises(NonManifold):
        TriMesh(V, np.array([[0, 1, 7]]))


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.off"
    bad.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    with pytest.raises(ParseError):
        load_mesh(bad)
    (tmp_path / "x.stl").write_text("solid")
    with pytest.raises(ParseError):
        load_mesh(tmp_path / "x.stl")


def test_obj_and_off_roundtrip(tmp_path):
    m = TriMesh(*TETRA)
    save_off(m, tmp_path / "t.off")
    m2 = load_mesh(tmp_path / "t.off")
    np.testing.assert_array_equal(m.faces, m2.faces)
    np.testing.assert_allclose(m.vertices, m2.vertices)
    obj = tmp_path / "t.obj"
    obj.write_text("# tetra\n" + "".join(f"v {a} {b} {c}\n" for a, b, c in TETRA[0])
                   + "f 1/1 3/3 2/2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n")
    m3 = load_mesh(obj)
    assert m3.euler_characteristic() == 2 and m3.area() == pytest.approx(m.area())


def test_ndim_off_roundtrip(tmp_path):
    m = sample_mesh(surface("torus", R=1.5, r=1.0).charts[0], (12, 10))
    save_off(m, tmp_path / "t4.off")
    m2 = load_mesh(tmp_path / "t4.off")
    assert m2.ambient_dim == 4 and m2.euler_characteristic() == 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), scale=st.floats(0.1, 10))
def test_willmore_and_chi_invariant_under_similarity(seed, scale, fixtures_dir):
    m = _ico(fixtures_dir)
    q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    moved = TriMesh(scale * m.vertices @ q.T + 1.0, m.faces)
    assert moved.willmore_energy() == pytest.approx(m.willmore_energy(), rel=1e-9)
    assert moved.area() == pytest.approx(scale**2 * m.area(), rel=1e-9)
    assert moved.euler_characteristic() == 2


_CACHE = {}


def _ico(d):
    if "ico" not in _CACHE:
        _CACHE["ico"] = load_mesh(d / "icosphere.off")
    return _CACHE["ico"]
