import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curlspec.errors import NotPSD, TetInversion
from curlspec.hadamard import base_cluster
from curlspec.shapeopt import (ShapeFamily, ShapeProblem, cone_decompose, constancy_residual, density_matrices,
                               dilation_family, extremality_certificate, first_eigenvalue_residual,
                               normalized_eigenvalue, optimize, rigid_family, safe_gradient,
                               spherical_harmonic_family)
from curlspec.hadamard.density import boundary_density


def _random_psd(rng, n, rank, complex_=False):
    a = rng.standard_normal((n, rank))
    if complex_:
        a = a + 1j * rng.standard_normal((n, rank))
    return a @ a.conj().T


# ---------------------------------------------------------------- cone decomposition


def test_cone_decompose_examples():
    beta, tau = cone_decompose(np.diag([1.0, 3.0, 0.0]))
    np.testing.assert_allclose(tau, [3.0, 1.0, 0.0])
    np.testing.assert_allclose(np.abs(beta[:, 0]), [0, 1, 0])
    v = np.array([1.0, 2.0, 2.0]) / 3.0
    beta, tau = cone_decompose(np.outer(v, v))
    np.testing.assert_allclose(tau, [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(np.abs(beta[:, 0]), v)


def test_cone_decompose_rejects_indefinite():
    with pytest.raises(NotPSD):
        cone_decompose(np.diag([1.0, -0.5]))
    with pytest.raises(ValueError):
        cone_decompose(np.ones((2, 3)))


def test_cone_decompose_clips_roundoff():
    beta, tau = cone_decompose(np.diag([1.0, -1e-14]))
    assert tau.min() == 0.0


@pytest.mark.parametrize("complex_", [False, True])
def test_cone_decompose_reconstructs_seeded_matrices(complex_):
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        h = _random_psd(rng, n, int(rng.integers(1, n + 1)), complex_)
        beta, tau = cone_decompose(h)
        assert np.all(tau >= 0)
        np.testing.assert_allclose(beta.conj().T @ beta, np.eye(n), atol=1e-12)
        rec = (beta * tau) @ beta.conj().T
        assert np.linalg.norm(rec - h) <= 1e-12 * np.linalg.norm(h)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_cone_decompose_property(n, seed):
    h = _random_psd(np.random.default_rng(seed), n, n)
    beta, tau = cone_decompose(h)
    assert np.all(np.diff(tau) <= 0)
    assert np.linalg.norm((beta * tau) @ beta.T - h) <= 1e-12 * np.linalg.norm(h)


def test_constancy_residual():
    res, c0 = constancy_residual(np.full(5, 2.0), np.arange(1.0, 6.0))
    assert res == 0.0 and c0 == 2.0
    res, c0 = constancy_residual(np.array([1.0, 3.0]), np.array([1.0, 1.0]))
    assert c0 == 2.0 and res == 0.5
    assert constancy_residual(np.zeros(3), np.ones(3))[0] == float("inf")


# ---------------------------------------------------------------- certificate


@pytest.fixture(scope="module")
def ball_state(ball1_handle):
    return base_cluster(ball1_handle, 1)[0]


def test_density_matrices_hermitian_with_density_diagonal(ball_state):
    p, quad = density_matrices(ball_state.complex, ball_state.vectors)
    np.testing.assert_allclose(p, np.transpose(p, (0, 2, 1)).conj(), atol=1e-14)
    d0 = boundary_density(ball_state.complex, ball_state.vectors[:, 0], quad)
    np.testing.assert_allclose(p[:, 0, 0].real, d0.values, rtol=1e-12)


def test_single_field_certificate(ball_state):
    rep = extremality_certificate(ball_state.complex, ball_state.vectors[:, :1])
    assert rep.cluster_size == 1 and rep.family_size == 1
    np.testing.assert_allclose(rep.H, [[1.0]])
    r = first_eigenvalue_residual(ball_state.complex, ball_state.vectors[:, 0])
    assert r > 0 and np.isfinite(r)


def test_cluster_certificate_improves_on_uniform_average(ball_state, tmp_path):
    cx = ball_state.complex
    rep = extremality_certificate(cx, ball_state.vectors)
    assert np.trace(rep.H).real == pytest.approx(1.0, abs=1e-12)
    assert rep.weights.min() >= 0 and 1 <= rep.family_size <= 3
    p, quad = density_matrices(cx, ball_state.vectors)
    uniform = np.einsum("nii->n", p).real / 3
    res_u, _ = constancy_residual(uniform, quad.areas)
    w = quad.areas / quad.areas.sum()
    a = np.einsum("ij,nji->n", rep.H, p).real
    var = np.sum(w * (a - np.sum(w * a)) ** 2)
    var_u = np.sum(w * (uniform - np.sum(w * uniform)) ** 2)
    assert var <= var_u * (1 + 1e-9)
    # the rotated fields reproduce the combined density
    np.testing.assert_allclose(rep.rotated_vectors, ball_state.vectors @ rep.basis)
    doc = json.loads(rep.write_json(tmp_path / "c.json").read_text())
    assert doc["cluster_size"] == 3 and doc["residual"] == rep.residual
    assert res_u < 1.0


def test_trace_one_psd_projection():
    # diag(2, -1, 0.5) projects onto the simplex vertex of its largest entry
    from curlspec.shapeopt.certificate import _project_trace_one_psd
    h = _project_trace_one_psd(np.diag([2.0, -1.0, 0.5]))
    w = np.linalg.eigvalsh(h)
    assert w.min() >= -1e-15 and np.trace(h) == pytest.approx(1.0)
    np.testing.assert_allclose(np.sort(w), [0.0, 0.0, 1.0], atol=1e-15)


# ---------------------------------------------------------------- functional and family


def test_normalized_eigenvalue_scale_invariant(ball1):
    v = normalized_eigenvalue(ball1)
    for s in (0.5, 3.0):
        assert normalized_eigenvalue(ball1.with_vertices(s * ball1.vertices)) == pytest.approx(v, rel=1e-12)


def test_family_basics(ball1, tmp_path):
    fam = spherical_harmonic_family(ball1, l_max=2, l_min=2)
    assert fam.dimension == 5
    assert fam.mesh(np.zeros(5)) is ball1
    c = np.array([0.01, 0, 0.02, 0, 0])
    np.testing.assert_allclose(fam.vertices(c), ball1.vertices + 0.01 * fam.displacements[0]
                               + 0.02 * fam.displacements[2])
    with pytest.raises(ValueError):
        fam.vertices(np.zeros(3))
    with pytest.raises(TetInversion):
        fam.mesh(np.full(5, 50.0))
    p = fam.save_fields(tmp_path / "fam.npz")
    back = ShapeFamily.from_saved(ball1, p)
    assert back.names == fam.names
    np.testing.assert_array_equal(back.displacements, fam.displacements)


def test_dilation_and_rigid_gradients_vanish(ball1):
    for fam in (dilation_family(ball1), rigid_family(ball1)):
        g = ShapeProblem(fam).gradient(np.zeros(fam.dimension))
        value = g.evaluation.value
        assert np.abs(g.upper).max() < 1e-8 * value
        assert np.abs(g.lower).max() < 1e-8 * value


def test_gradient_matches_parameter_differences(ball1):
    fam = spherical_harmonic_family(ball1, l_max=2, l_min=2)
    prob = ShapeProblem(fam)
    c0 = np.array([0.04, -0.02, 0.03, 0.01, -0.03])        # splits the triple
    g = prob.gradient(c0)
    assert g.evaluation.cluster_size == 1
    h = 1e-5
    for i in range(fam.dimension):
        e = np.zeros(fam.dimension)
        e[i] = h
        fd = (prob.evaluate(c0 + e).value - prob.evaluate(c0 - e).value) / (2 * h)
        assert fd == pytest.approx(g.values[i], rel=1e-5, abs=1e-8)
    # the boundary formula agrees to discretization accuracy
    assert np.linalg.norm(g.hadamard - g.values) < 0.5 * np.linalg.norm(g.values)


def test_safe_gradient_picks_worst_branch(ball1):
    g = ShapeProblem(spherical_harmonic_family(ball1, l_max=2, l_min=2)).gradient(np.zeros(5))
    assert g.flagged
    np.testing.assert_array_equal(safe_gradient(g, "minimize"), g.upper)
    np.testing.assert_array_equal(safe_gradient(g, "maximize"), g.lower)
    assert np.all(g.lower <= g.values + 1e-12) and np.all(g.values <= g.upper + 1e-12)


def test_optimize_dilation_family_is_stationary(ball1):
    res = optimize(ShapeProblem(dilation_family(ball1)), max_iters=5, certificate=False)
    assert res.stop_reason == "gradient" and res.iterations == 0


def test_optimize_is_monotone(ball1, tmp_path):
    fam = spherical_harmonic_family(ball1, l_max=2, l_min=2)
    c0 = np.array([0.04, -0.02, 0.03, 0.01, -0.03])
    res = optimize(ShapeProblem(fam), "minimize", max_iters=3, c0=c0)
    assert res.iterations >= 1
    assert res.is_monotone()
    assert res.value < res.trajectory[0]["value"]
    doc = json.loads(res.write_json(tmp_path / "o.json").read_text())
    assert doc["monotone"] and len(doc["trajectory"]) == res.iterations + 1
    assert res.certificate is not None
    assert res.write_mesh(tmp_path / "m.tmesh").exists()
    with pytest.raises(ValueError):
        optimize(ShapeProblem(fam), "sideways")
