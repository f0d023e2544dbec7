import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curlspec.complex import build_complex, homology_basis
from curlspec.errors import InconsistentLagrangian
from curlspec.spectrum import (LagrangianSpec, check_selfadjointness, cluster_multiplicity, constraint_space,
                               constraint_space_for_mesh, harmonic_fields, lowest_positive, richardson_gap_tol,
                               solve_spectrum)
from oracles import BALL_FIRST_EIGENVALUE

OMEGA1 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def test_zero_flux_preset_is_lagrangian():
    for ell in (1, 2, 3):
        lag = LagrangianSpec.zero_flux(ell)
        omega = np.block([[np.zeros((ell, ell)), np.eye(ell)], [-np.eye(ell), np.zeros((ell, ell))]])
        lag.validate(omega)
        assert lag.admissible_classes().shape == (2 * ell, ell)
        assert lag.isotropy_defect(omega) < 1e-14


def test_real_genus_one_constraints_are_always_isotropic():
    LagrangianSpec.custom([[0.3, -1.7]]).validate(OMEGA1)


def test_complex_constraint_not_isotropic():
    lag = LagrangianSpec.custom([[1.0, 1j]])
    assert not lag.reality_flag
    with pytest.raises(InconsistentLagrangian, match="isotropic"):
        lag.validate(OMEGA1)


def test_rank_deficient_constraint_rejected():
    omega = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    with pytest.raises(InconsistentLagrangian, match="rank"):
        LagrangianSpec.custom([[1, 0, 0, 0], [2, 0, 0, 0]]).validate(omega)


def test_constraint_shape_checked(torus1, ball1):
    with pytest.raises(InconsistentLagrangian):
        constraint_space_for_mesh(torus1, LagrangianSpec.custom([[1.0, 0.0, 0.0, 0.0]]))
    with pytest.raises(InconsistentLagrangian):
        constraint_space_for_mesh(ball1, LagrangianSpec.custom([[1.0, 0.0]]))


def test_ball_lowest_cluster(ball2_handle):
    res = lowest_positive(ball2_handle, 3)
    assert res.k == 3
    assert res.clusters[0] == (0, 3)
    assert abs(res.eigenvalues[0] / BALL_FIRST_EIGENVALUE - 1) < 0.1
    assert res.residual_norms.max() < 1e-8
    assert res.orthogonality_defect < 1e-8
    gram = res.eigenvectors.T @ (ball2_handle.complex.M1 @ res.eigenvectors)
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-8)


def test_eigenfields_satisfy_curl_equation_weakly(ball1_handle):
    res = lowest_positive(ball1_handle, 1)
    cx = ball1_handle.complex
    v = res.eigenvectors[:, 0]
    # the edge field is divergence-free against all gradients
    div = cx.d0.T @ (cx.M1 @ v)
    assert np.abs(div).max() < 1e-8 * np.abs(cx.M1 @ v).max()


def test_scaling_law(ball1):
    base = lowest_positive(constraint_space_for_mesh(ball1), 4).eigenvalues
    for s in (0.5, 2.0, 3.0):
        scaled = ball1.with_vertices(s * ball1.vertices)
        lam = lowest_positive(constraint_space_for_mesh(scaled), 4).eigenvalues
        np.testing.assert_allclose(lam, base / s, rtol=1e-12)


def test_nearest_shift_agrees_with_lowest(ball1_handle):
    low = lowest_positive(ball1_handle, 4)
    near = solve_spectrum(ball1_handle, 3, shift=low.eigenvalues[0])
    np.testing.assert_allclose(near.eigenvalues[:3], low.eigenvalues[:3], rtol=1e-10)


def test_negative_spectrum_found(ball1_handle):
    lam = lowest_positive(ball1_handle, 1).eigenvalues[0]
    neg = solve_spectrum(ball1_handle, 1, shift=-lam)
    assert neg.eigenvalues[0] < 0
    assert abs(abs(neg.eigenvalues[0]) / lam - 1) < 0.2


@pytest.mark.parametrize("name, dim", [("ball1", 0), ("torus1", 1), ("genus2", 2)])
def test_harmonic_dimension(name, dim, request):
    mesh = request.getfixturevalue(name)
    cx = build_complex(mesh)
    harm = harmonic_fields(cx, homology_basis(mesh))
    assert harm.dimension == dim
    if dim:
        h = harm.fields
        assert np.abs(cx.d1 @ h).max() < 1e-8 * np.abs(h).max()
        assert np.abs(cx.d0.T @ (cx.M1 @ h)).max() < 1e-8
        assert np.isfinite(harm.condition_number) and harm.condition_number < 1e6


def test_realization_kernel_matches_genus(torus1_handle, ball1_handle):
    assert ball1_handle.kernel_dimension == 0
    res = lowest_positive(torus1_handle, 1)
    assert res.eigenvalues[0] > 0


def test_selfadjointness_and_negative_control(torus1):
    ok = constraint_space_for_mesh(torus1)
    res = lowest_positive(ok, 3)
    good = check_selfadjointness(ok, res)["relative"]
    assert good <= 10 * res.tol
    bad_handle = constraint_space_for_mesh(torus1, LagrangianSpec.custom([[1.0, 1j]]), check=False)
    assert not bad_handle.isotropic
    bad_res = solve_spectrum(bad_handle, 3, shift=res.eigenvalues[0])
    bad = check_selfadjointness(bad_handle, bad_res)["relative"]
    assert bad >= 100 * 10 * res.tol


def test_complex_phase_of_real_constraint_is_equivalent(torus1):
    real = lowest_positive(constraint_space_for_mesh(torus1), 3).eigenvalues
    h = constraint_space_for_mesh(torus1, LagrangianSpec.custom([[1j, 0.0]]))
    assert h.complex_mode
    res = lowest_positive(h, 3)
    np.testing.assert_allclose(res.eigenvalues[:3], real[:3], rtol=1e-8)


def test_explicit_basis_argument(torus1):
    cx = build_complex(torus1)
    h = constraint_space(cx, homology_basis(torus1))
    assert h.basis.genus == 1


def test_result_serializes(ball1_handle, tmp_path):
    res = lowest_positive(ball1_handle, 2)
    doc = json.loads(res.write_json(tmp_path / "r.json").read_text())
    assert doc["eigenvalues"] == res.eigenvalues.tolist()
    assert sum(doc["cluster_sizes"]) == res.k


def test_cluster_multiplicity_examples():
    assert cluster_multiplicity([1.0, 1.0001, 2.0], 1e-3) == [(0, 2), (2, 3)]
    assert cluster_multiplicity([1.0, 2.0, 3.0], 1e-3) == [(0, 1), (1, 2), (2, 3)]
    assert cluster_multiplicity([], 1e-3) == []
    with pytest.raises(ValueError):
        cluster_multiplicity([2.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=20), st.floats(1e-6, 0.5))
def test_cluster_multiplicity_partitions(values, tol):
    lam = sorted(values)
    runs = cluster_multiplicity(lam, tol)
    assert runs[0][0] == 0 and runs[-1][1] == len(lam)
    for (a, b), (c, _) in zip(runs, runs[1:]):
        assert b == c
        assert (lam[c] - lam[c - 1]) / lam[c] >= tol


def test_richardson_gap_tol():
    # second-order errors 4e-2 and 1e-2 give estimated fine error 1e-2
    tol = richardson_gap_tol([1.04], [1.01], factor=1.0)
    assert tol == pytest.approx(0.01 / 1.01)
    assert richardson_gap_tol([1.0], [1.0]) == 1e-6
