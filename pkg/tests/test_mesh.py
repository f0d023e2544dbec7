import numpy as np
import pytest

from curlspec.errors import DegenerateTet, MeshError, MeshFormatError, NonManifoldBoundary, TetInversion
from curlspec.mesh import (TetMesh, deform, dilation_field, generate_ball, generate_handlebody, generate_solid_torus,
                           harmonic_extension, read_gmsh, read_mesh, read_tmesh, spherical_harmonic_field,
                           torus_fourier_field, translation_field, write_tmesh, zero_field)
from curlspec.mesh.deform import real_spherical_harmonic
from curlspec.mesh.tetmesh import orient_positively

from oracles import ball_volume, torus_volume

UNIT_TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)


def test_single_tet_counts():
    m = TetMesh(UNIT_TET, [[0, 1, 2, 3]])
    t = m.topology
    assert (t.n_edges, t.n_faces, m.n_tets) == (6, 4, 1)
    assert m.volume() == pytest.approx(1 / 6)
    assert len(t.boundary_faces) == 4
    assert t.euler_characteristic() == 1


def test_degenerate_and_inverted_tets_rejected():
    with pytest.raises(DegenerateTet):
        TetMesh(UNIT_TET, [[0, 2, 1, 3]])
    flat = UNIT_TET.copy()
    flat[3] = [0.3, 0.3, 0.0]
    with pytest.raises(DegenerateTet):
        TetMesh(flat, [[0, 1, 2, 3]])


def test_bad_shapes_rejected():
    with pytest.raises(MeshError):
        TetMesh(np.zeros((4, 2)), [[0, 1, 2, 3]])
    with pytest.raises(MeshError):
        TetMesh(UNIT_TET, [[0, 1, 2, 7]])


def test_non_manifold_boundary_detected():
    # two tets glued only along one edge: that edge borders four boundary faces
    v = np.vstack([UNIT_TET, [[0.5, -1, -0.2], [0.5, -0.3, -1]]])
    t = orient_positively(v, np.array([[0, 1, 2, 3], [0, 1, 4, 5]]))
    with pytest.raises(NonManifoldBoundary):
        TetMesh(v, t).topology


@pytest.mark.parametrize("ref", [1, 2])
def test_ball_volume_and_topology(ref):
    m = generate_ball(1.0, ref)
    assert m.topology.euler_characteristic() == 1
    assert m.topology.boundary_genus() == 0
    assert len(m.topology.boundary_components()) == 1
    assert m.volume() == pytest.approx(ball_volume(), rel=0.2 / 4 ** (ref - 1))
    assert np.allclose(np.linalg.norm(m.vertices[m.topology.boundary_vertices], axis=1), 1.0)


def test_ball_volume_converges():
    errs = [abs(generate_ball(1.0, r).volume() - ball_volume()) for r in (1, 2, 3)]
    assert errs[0] > errs[1] > errs[2]
    assert np.log2(errs[1] / errs[2]) > 1.5


def test_torus_topology_and_volume(torus1):
    assert torus1.topology.boundary_genus() == 1
    assert torus1.topology.euler_characteristic() == 0
    m2 = generate_solid_torus(2.0, 0.5, 2)
    assert m2.volume() == pytest.approx(torus_volume(2.0, 0.5), rel=0.05)
    assert {"alpha_1", "beta_1"} <= set(torus1.curve_tags)


def test_torus_n_phi_parameter():
    m = generate_solid_torus(2.0, 0.5, 1, n_phi=12)
    assert "n_phi=12" in m.domain_name
    with pytest.raises(MeshError):
        generate_solid_torus(2.0, 0.5, 1, n_phi=2)


def test_handlebody_genus(genus2):
    assert genus2.topology.boundary_genus() == 2
    assert genus2.topology.euler_characteristic() == -1
    assert generate_handlebody(1, 1).topology.boundary_genus() == 1
    with pytest.raises(MeshError):
        generate_handlebody(3)


def test_boundary_normals_outward(ball2):
    c = ball2.vertices[ball2.topology.boundary_triangles].mean(axis=1)
    n = ball2.boundary_face_normals
    assert np.all(np.einsum("ij,ij->i", c, n) > 0)
    # sum of area vectors of a closed surface vanishes
    assert np.abs(n.sum(axis=0)).max() < 1e-12


def test_quality_report(ball2):
    q = ball2.quality()
    assert q["min_dihedral_deg"] > 10
    assert q["max_aspect_ratio"] >= 1.0
    assert q["h_max"] > 0


def test_tmesh_round_trip(tmp_path, torus1):
    p = write_tmesh(torus1, tmp_path / "t.tmesh")
    m = read_tmesh(p)
    assert np.array_equal(m.vertices, torus1.vertices)
    assert np.array_equal(m.tets, torus1.tets)
    assert set(m.curve_tags) == set(torus1.curve_tags)
    for k in torus1.curve_tags:
        assert np.array_equal(m.curve_tags[k], torus1.curve_tags[k])
    assert read_mesh(p).n_tets == torus1.n_tets


def test_tmesh_format_errors(tmp_path):
    p = tmp_path / "bad.tmesh"
    p.write_text("tmesh 1\n4 6 4 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nt 0 1 2\n")
    with pytest.raises(MeshFormatError) as err:
        read_tmesh(p)
    assert err.value.line == 7
    p.write_text("nonsense\n")
    with pytest.raises(MeshFormatError):
        read_tmesh(p)


def test_gmsh_reader(tmp_path):
    p = tmp_path / "one.msh"
    p.write_text("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n"
                 "$Elements\n2\n1 4 2 7 1 1 3 2 4\n2 2 2 5 1 1 2 3\n$EndElements\n")
    m = read_gmsh(p)
    assert m.n_tets == 1 and m.volume() == pytest.approx(1 / 6)
    assert "physical_5" in m.surface_tags
    assert read_mesh(p).n_tets == 1
    p.write_text("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
    with pytest.raises(MeshFormatError):
        read_gmsh(p)


def test_dilation_deformation_scales(ball1):
    f = dilation_field(ball1)
    m = deform(ball1, f, 0.5)
    assert np.allclose(m.vertices, 1.5 * ball1.vertices)
    assert m.volume() == pytest.approx(1.5 ** 3 * ball1.volume(), rel=1e-12)
    assert f.normal_defect(ball1) < 1e-12


def test_translation_and_zero_fields(ball1):
    f = translation_field(ball1, (0, 0, 1))
    m = deform(ball1, f, 0.3)
    assert m.volume() == pytest.approx(ball1.volume(), rel=1e-12)
    assert deform(ball1, zero_field(ball1), 1.0) is ball1 or np.array_equal(
        deform(ball1, zero_field(ball1), 1.0).vertices, ball1.vertices)


def test_inversion_raises(ball1):
    with pytest.raises(TetInversion):
        deform(ball1, dilation_field(ball1), -1.5)


def test_harmonic_extension_reproduces_linear_fields(ball2):
    bv = ball2.topology.boundary_vertices
    nrm = ball2.vertex_normals
    f = nrm[:, 0]                                   # boundary displacement f * nu for f = nu_x
    ext = harmonic_extension(ball2, f)
    assert np.allclose(ext.volumetric_displacement[bv], f[:, None] * nrm)
    assert ext.normal_defect(ball2) < 1e-12
    with pytest.raises(MeshError):
        harmonic_extension(ball2, np.zeros(3))


def test_real_spherical_harmonics_orthonormal():
    rng = np.random.default_rng(0)
    p = rng.standard_normal((200000, 3))
    vals = np.stack([real_spherical_harmonic(l, m, p) for l in range(3) for m in range(-l, l + 1)])
    gram = 4 * np.pi * vals @ vals.T / len(p)
    assert np.abs(gram - np.eye(len(vals))).max() < 0.05


def test_field_constructors(ball1, torus1):
    y = spherical_harmonic_field(ball1, 2, 0)
    assert y.params["l"] == 2 and y.description == "Y(2,0)"
    f = torus_fourier_field(torus1, 2.0, 1, 1, "sin")
    assert f.volumetric_displacement.shape == torus1.vertices.shape
    with pytest.raises(ValueError):
        torus_fourier_field(torus1, 2.0, 1, 1, "tan")
    s = (y + y.scaled(-1.0))
    assert np.abs(s.volumetric_displacement).max() == 0
