"""Pointwise curvature of charts against closed forms."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from willmore_lab import DegenerateImmersion, SurfaceChart, chart_from_function, get_surface
from willmore_lab.chart import first_fundamental_form, mean_curvature_vector, second_fundamental_form_norm2

from conftest import rotation, surface

UV = np.random.default_rng(1).uniform([0.2, 0.1], [2.9, 6.2], size=(40, 2))


@pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
def test_sphere_curvatures(R):
    ch = surface("sphere", R=R).charts[0]
    g = ch.geometry(UV[:, 0], UV[:, 1])
    np.testing.assert_allclose(np.linalg.norm(g.mean_curvature, axis=1), 2 / R, rtol=1e-12)
    np.testing.assert_allclose(g.A2, 2 / R**2, rtol=1e-12)
    np.testing.assert_allclose(g.gauss_curvature, 1 / R**2, rtol=1e-11)
    # H points to the centre
    np.testing.assert_allclose(np.einsum("ij,ij->i", g.mean_curvature, g.x), -2.0 * R / R, rtol=1e-12)


def test_catenoid_closed_form():
    a = 1.7
    ch = surface("catenoid", a=a).charts[0]
    u = np.linspace(0.1, 6.0, 13)
    v = np.linspace(-3, 3, 13)
    g = ch.geometry(u, v)
    c4 = np.cosh(v / a) ** 4
    assert np.max(np.linalg.norm(g.mean_curvature, axis=1)) < 1e-12
    np.testing.assert_allclose(g.A2, 2 / (a * a * c4), rtol=1e-10)
    np.testing.assert_allclose(g.gauss_curvature, -1 / (a * a * c4), rtol=1e-10)
    np.testing.assert_allclose(g.jacobian, a * np.cosh(v / a) ** 2, rtol=1e-12)


def test_torus_in_r3_gauss_curvature():
    R, r = 2.0, 0.7
    ch = surface("torus", R=R, r=r, ambient_dim=3).charts[0]
    u, v = UV[:, 0], UV[:, 1]
    g = ch.geometry(u, v)
    np.testing.assert_allclose(g.gauss_curvature, np.cos(v) / (r * (R + r * np.cos(v))), atol=1e-12)
    # full-trace mean curvature: 1/r + cos v/(R + r cos v)
    np.testing.assert_allclose(np.linalg.norm(g.mean_curvature, axis=1),
                               np.abs(1 / r + np.cos(v) / (R + r * np.cos(v))), rtol=1e-11)


def test_flat_torus_in_r4():
    R, r = 1.3, 0.6
    g = surface("torus", R=R, r=r).charts[0].geometry(UV[:, 0], UV[:, 1])
    np.testing.assert_allclose(g.H2, 1 / R**2 + 1 / r**2, rtol=1e-12)
    np.testing.assert_allclose(g.gauss_curvature, 0.0, atol=1e-12)
    np.testing.assert_allclose(g.A2, g.H2, rtol=1e-12)


def test_enneper_is_minimal_with_known_curvature():
    ch = surface("enneper").charts[0]
    rr = np.linspace(0.01, 3.0, 17)
    t = np.linspace(0.0, 6.0, 17)
    g = ch.geometry(rr, t)
    assert np.max(np.linalg.norm(g.mean_curvature, axis=1) * (1 + rr**2) ** 2) < 1e-10
    np.testing.assert_allclose(g.gauss_curvature, -4 / (1 + rr**2) ** 4, rtol=1e-9)


def test_frame_is_orthonormal_and_spans_tangent():
    g = surface("catenoid").charts[0].geometry(UV[:, 0], UV[:, 1] - 3)
    F = g.frame
    np.testing.assert_allclose(np.einsum("nia,nib->nab", F, F), np.broadcast_to(np.eye(2), (40, 2, 2)), atol=1e-13)
    P = g.tangent_projector
    np.testing.assert_allclose(np.einsum("nij,nj->ni", P, g.fu), g.fu, atol=1e-12)
    # H is normal
    assert np.max(np.abs(np.einsum("nij,nj->ni", P, g.mean_curvature))) < 1e-12


def test_finite_differences_match_exact_jet():
    exact = surface("sphere").charts[0]
    fd = chart_from_function(exact.evaluate, exact.domain, periodic=(False, True))
    uv = np.array([[0.7, 1.1], [1.5, 4.0], [2.4, 0.3]])
    np.testing.assert_allclose(mean_curvature_vector(fd, uv), mean_curvature_vector(exact, uv), atol=1e-5)
    np.testing.assert_allclose(first_fundamental_form(fd, uv), first_fundamental_form(exact, uv), atol=1e-8)
    assert second_fundamental_form_norm2(fd, [0.7, 1.1]) == pytest.approx(2.0, abs=1e-4)


def test_degenerate_immersion_detected():
    ch = surface("sphere").charts[0]
    with pytest.raises(DegenerateImmersion):
        ch.geometry([0.0], [1.0], check=True)


def test_fd_sphere_second_order_error_shrinks():
    f = surface("sphere").charts[0].evaluate
    errs = []
    for h in (1e-3, 1e-4):
        ch = chart_from_function(f, ((0.0, math.pi), (0.0, 2 * math.pi)), h_fd=h)
        errs.append(abs(ch.geometry([1.0], [1.0]).A2[0] - 2.0))
    assert errs[1] < errs[0]


def _moved(chart, Q, b, lam):
    def jet(u, v):
        return tuple((lam * (J @ Q.T) + (b if k == 0 else 0)) for k, J in enumerate(chart.jet(u, v)))
    return SurfaceChart(func=lambda u, v: lam * chart.evaluate(u, v) @ Q.T + b, domain=chart.domain, jet_func=jet)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.floats(0.2, 5.0),
       shift=st.tuples(*[st.floats(-10, 10)] * 3))
def test_curvature_is_rigid_invariant_and_scales(seed, lam, shift):
    base = surface("catenoid").charts[0]
    moved = _moved(base, rotation(seed), np.array(shift), lam)
    u, v = UV[:8, 0], UV[:8, 1] - 3
    g0, g1 = base.geometry(u, v), moved.geometry(u, v)
    np.testing.assert_allclose(g1.A2 * lam**2, g0.A2, rtol=1e-9)
    np.testing.assert_allclose(g1.gauss_curvature * lam**2, g0.gauss_curvature, rtol=1e-8)
    np.testing.assert_allclose(g1.jacobian, lam**2 * g0.jacobian, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(u=st.floats(0.05, math.pi - 0.05), v=st.floats(0, 2 * math.pi), R=st.floats(0.1, 50))
def test_gauss_equation_on_spheres(u, v, R):
    g = get_surface("sphere", R=R).charts[0].geometry([u], [v]) if R != 1 else surface("sphere").charts[0].geometry([u], [v])
    assert g.gauss_curvature[0] == pytest.approx(0.5 * (g.H2[0] - g.A2[0]), rel=1e-12)
    assert g.H2[0] * R * R == pytest.approx(4.0, rel=1e-10)
