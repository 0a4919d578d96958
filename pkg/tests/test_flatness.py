"""Best planes, tilt-excess, Reifenberg flatness and the Lipschitz decomposition."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from willmore_lab import (DegenerateCloud, EmptyBall, InputError, MissingTangents, Plane2, PointSample,
                          SamplingTooCoarse, best_fit_plane, flatness_at, lipschitz_decompose,
                          reifenberg_scan, tilt_excess)
from willmore_lab.catalog import graph, symbolic_chart
from willmore_lab.flatness import (band_lemma_check, cone_violations, constants_json,
                                   gradient_identity_check, integral_gradient_estimate_check,
                                   reports_to_csv, weighted_plane_residual)
from willmore_lab.plane import projector_distance2

from conftest import surface


def _orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q[:, :k].T


# ------------------------------------------------------------ planes


def test_plane_frames_are_orthonormal():
    P = Plane2.from_vectors([0, 0, 0, 0], [[1, 1, 0, 0], [0, 1, 1, 1]])
    assert P.gram_error() < 1e-14
    np.testing.assert_allclose(P.tangent_projector + P.normal_projector, np.eye(4), atol=1e-14)
    with pytest.raises(ValueError):
        Plane2.from_vectors([0, 0, 0], [[1, 0, 0], [2, 0, 0]])


def test_projector_distance_of_orthogonal_planes_in_r4():
    A = Plane2.coordinate(4)
    B = Plane2.from_vectors(np.zeros(4), [[0, 0, 1, 0], [0, 0, 0, 1]])
    assert A.projector_distance2(B) == pytest.approx(4.0)
    np.testing.assert_allclose(A.principal_angles(B), [math.pi / 2] * 2)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 6))
def test_projector_distance_matches_principal_angles(seed, n):
    rng = np.random.default_rng(seed)
    A = Plane2.from_vectors(np.zeros(n), rng.normal(size=(2, n)))
    B = Plane2.from_vectors(np.zeros(n), rng.normal(size=(2, n)))
    th = A.principal_angles(B)
    assert A.projector_distance2(B) == pytest.approx(2 * np.sum(np.sin(th) ** 2), abs=1e-10)
    assert 0.0 <= A.projector_distance2(B) <= 4.0 + 1e-12
    np.testing.assert_allclose(projector_distance2(A.tangent_projector[None], B.tangent_projector[None]),
                               [A.projector_distance2(B)])


# ------------------------------------------------------------ best plane


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 5))
def test_best_plane_recovers_planar_cloud(seed, n):
    rng = np.random.default_rng(seed)
    frame = _orthonormal(rng, n, 2)
    xi = rng.normal(size=n)
    pts = xi + rng.uniform(-1, 1, size=(300, 2)) @ frame
    fit = best_fit_plane(PointSample(pts, np.ones(300)), xi, 2.0)
    assert fit.projector_distance2(frame.T @ frame) < 1e-18 + 1e-12
    assert not fit.ambiguous


def test_best_plane_minimises_residual_among_planes_through_xi():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(400, 3)) * [1.0, 0.6, 0.1]
    smp = PointSample(pts, rng.uniform(0.5, 1.5, 400))
    fit = best_fit_plane(smp, np.zeros(3), 5.0)
    best = weighted_plane_residual(smp, np.zeros(3), 5.0, fit.plane)
    for _ in range(50):
        other = Plane2.from_vectors(np.zeros(3), rng.normal(size=(2, 3)))
        assert weighted_plane_residual(smp, np.zeros(3), 5.0, other) >= best - 1e-12


def test_orthogonal_half_planes_are_flagged_ambiguous():
    t = np.linspace(0.01, 1, 40)
    A, B = np.meshgrid(t, np.linspace(-1, 1, 81))
    a, b = A.ravel(), B.ravel()
    pts = np.vstack([np.column_stack([a, b, 0 * a]), np.column_stack([0 * a, b, a])])
    fit = best_fit_plane(PointSample(pts, np.ones(len(pts))), np.zeros(3), 2.0)
    assert fit.ambiguous and fit.alternative is not None
    # both candidates contain the common edge direction and bisect the half-planes
    for P in (fit.plane, fit.alternative):
        assert P.distance(np.array([0, 1, 0])) < 1e-9
    normals = [P.coframe[0] for P in (fit.plane, fit.alternative)]
    assert sorted(abs(nv[0]) for nv in normals) == pytest.approx([math.sqrt(0.5)] * 2, abs=1e-9)


def test_degenerate_and_empty_clouds():
    line = np.column_stack([np.linspace(-1, 1, 50), np.zeros(50), np.zeros(50)])
    with pytest.raises(DegenerateCloud):
        best_fit_plane(PointSample(line, np.ones(50)), np.zeros(3), 2.0)
    with pytest.raises(EmptyBall):
        best_fit_plane(PointSample(line, np.ones(50)), np.array([5.0, 5, 5]), 1.0)


# ------------------------------------------------------------ tilt-excess


def _r4_plane():
    import sympy as sp
    u, v = sp.symbols("u v", real=True)
    return symbolic_chart([0, 0, u * sp.cos(v), u * sp.sin(v)], ((0.0, 3.0), (0.0, 2 * math.pi)),
                          periodic=(False, True))


def test_tilt_excess_orthogonal_planes_quadrature():
    E = tilt_excess(_r4_plane(), np.zeros(4), 1.0, Plane2.coordinate(4))
    assert E == pytest.approx(4 * math.pi, rel=1e-9)


def test_tilt_excess_sample_matches_quadrature_on_cap(sphere):
    xi = np.array([0, 0, 1.0])
    T = Plane2.coordinate(3, base=xi)
    exact = tilt_excess(sphere, xi, 0.3, T)
    smp = PointSample.from_surface(sphere, xi, 0.4, spacing=0.002)
    assert tilt_excess(smp, xi, 0.3, T) == pytest.approx(exact, rel=0.02)
    with pytest.raises(MissingTangents):
        tilt_excess(PointSample(smp.points, smp.weights), xi, 0.3, T)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 6))
def test_gradient_identity(seed, n):
    rng = np.random.default_rng(seed)
    frames = np.stack([_orthonormal(rng, n, 2).T for _ in range(5)])
    T = Plane2.from_vectors(np.zeros(n), rng.normal(size=(2, n)))
    assert np.max(np.abs(gradient_identity_check(frames, T))) < 1e-12


# ------------------------------------------------------------ Reifenberg


@pytest.mark.parametrize("sigma", [0.05, 0.1, 0.2])
def test_sphere_flatness_matches_half_scale(sphere, sigma):
    xi = np.array([0, 0, 1.0])
    smp = PointSample.from_surface(sphere, xi, 1.25 * sigma, spacing=0.02 * sigma)
    rep = flatness_at(smp, xi, sigma)
    assert rep.reifenberg_two_sided == pytest.approx(sigma / 2, rel=0.1)
    assert rep.semi_reifenberg <= rep.reifenberg_two_sided + 1e-15
    assert rep.hausdorff_error_bound <= 0.05


def test_plane_flatness_below_sampling_bound(plane):
    xi = np.array([0.3, 0.1, 0.0])
    smp = PointSample.from_surface(plane, xi, 0.6, spacing=0.01)
    rep = flatness_at(smp, xi, 0.5)
    assert rep.semi_reifenberg < 1e-12
    assert rep.reifenberg_two_sided <= rep.hausdorff_error_bound
    assert rep.tilt_excess < 1e-20


def test_sampling_too_coarse(sphere):
    smp = PointSample.from_surface(sphere, (0, 0, 1), 0.5, spacing=0.05)
    with pytest.raises(SamplingTooCoarse):
        flatness_at(smp, (0, 0, 1), 0.1)


def test_scan_table_shape(sphere):
    smp = PointSample.from_surface(sphere, (0, 0, 1), 0.4, spacing=0.004)
    reps = reifenberg_scan(smp, [(0, 0, 1.0)], [0.2, 0.3])
    text = reports_to_csv(reps).splitlines()
    assert text[0] == "xi,sigma,E,semi_eps,eps,err_bound,ambiguous_flag"
    assert len(text) == 3
    with pytest.raises(InputError):
        reifenberg_scan(smp, [(0, 0, 1.0)], [0.0])


# ------------------------------------------------------------ Lipschitz


def _sample(charts, spacing):
    return PointSample.from_surface(charts, spacing=spacing)


def test_linear_graph_is_all_good():
    g = graph("0.3*x", domain=((-1.2, 1.2), (-1.2, 1.2)))
    smp = _sample(g, 0.05)
    dec = lipschitz_decompose(smp, np.zeros(3), 1.0, Plane2.coordinate(3), 0.5)
    assert len(dec.bad) == 0
    assert dec.measured_lipschitz == pytest.approx(0.3, abs=1e-9)
    assert cone_violations(smp.points[dec.good], dec.plane, 0.5) == 0


def test_sphere_cap_is_all_good(sphere):
    xi = np.array([0, 0, 1.0])
    smp = PointSample.from_surface(sphere, xi, 0.35, spacing=0.01)
    dec = lipschitz_decompose(smp, xi, 0.3, Plane2.coordinate(3, base=xi), 0.5)
    assert len(dec.bad) == 0
    assert cone_violations(smp.points[dec.good], dec.plane, 0.5) == 0


def test_two_sheets_leave_one_sheet_out():
    lo = graph("0", domain=((-1.3, 1.3), (-1.3, 1.3)))
    hi = graph("0.05", domain=((-1.3, 1.3), (-1.3, 1.3)))
    smp = _sample(lo.charts + hi.charts, 0.04)
    xi = np.array([0, 0, 0.025])
    dec = lipschitz_decompose(smp, xi, 1.0, Plane2.coordinate(3), 0.5)
    one_sheet = math.pi * (1 - 0.025**2)
    assert dec.symmetric_difference >= 0.9 * one_sheet
    assert cone_violations(smp.points[dec.good], dec.plane, 0.5) == 0


def test_cone_violations_counts_pairs():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1.0]])
    # (0,2) and (1,2) are steep, (0,1) is flat
    assert cone_violations(pts, Plane2.coordinate(3), 0.5) == 2


# ------------------------------------------------------------ inequalities


def test_integral_gradient_estimate(sphere, catenoid):
    rep = integral_gradient_estimate_check(sphere, (0, 0, 1), 0.5, Plane2.coordinate(3))
    assert rep.holds and rep.slack > 0
    rep = integral_gradient_estimate_check(catenoid, (math.cosh(4), 0, 4), 2.0, Plane2.coordinate(3))
    assert rep.holds


def test_band_mass_bound(catenoid):
    y = (math.cosh(0.05), 0.0, 0.05)
    T = Plane2.from_vectors(np.zeros(3), [[0, 1, 0], [0, 0, 1]])
    rep = band_lemma_check(catenoid, (1.0, 0, 0), 1.0, y, 0.5, 0.1, reference=T)
    assert rep.holds
    assert rep.terms["density"] == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(InputError):
        band_lemma_check(catenoid, (1.0, 0, 0), 1.0, y, 0.5, 0.3)


def test_constants_are_serialisable():
    d = json.loads(constants_json())
    assert d["integral_gradient"]["distance_factor"] == 592.0
