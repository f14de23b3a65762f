import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from barrierkit.domains import (boundary_point, boundary_pminus, boundary_shape_operator,
                                cylinder, cylinder_min_mean_curvature, distance_jet,
                                distance_values, ds_cone_function, ds_cone_region,
                                ds_threshold, euclidean_ball, euclidean_cone, horoball,
                                sample_catenoid2d, sample_catenoid3d, sample_graph,
                                sample_plane, sample_round_sphere, sample_submanifold, slab,
                                space_form_ball, tangent_basis)
from barrierkit.errors import DomainError
from barrierkit.modelspace import riccati_closed_form
from barrierkit.spectral import p_minus

COTH1 = math.cosh(1) / math.sinh(1)


def fd_hessian(d, x, h=1e-4):
    m = len(x)
    f = lambda y: distance_jet(d, y)[0]
    H = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            ei, ej = h * np.eye(m)[i], h * np.eye(m)[j]
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


def test_shape_operators():
    d = euclidean_ball(2.0, m=4)
    np.testing.assert_allclose(boundary_shape_operator(d, boundary_point(d)), np.eye(3) / 2,
                               atol=1e-15)
    d = cylinder(1, 0.5, m=4)
    ev = np.linalg.eigvalsh(boundary_shape_operator(d, boundary_point(d)))
    np.testing.assert_allclose(ev, [0, 2, 2], atol=1e-14)
    th = 0.6
    d = euclidean_cone(th, m=4)
    y = boundary_point(d, np.random.default_rng(2))
    ev = np.linalg.eigvalsh(boundary_shape_operator(d, y))
    expect = math.cos(th) / math.sin(th) / np.linalg.norm(y)
    np.testing.assert_allclose(ev, [0, expect, expect], atol=1e-12)


def test_ball_jet_example():
    d = euclidean_ball(2.0, m=3)
    r, g, H = distance_jet(d, np.array([0.0, 0.6, 0.8]))
    assert r == pytest.approx(1.0)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-1, -1, 0], atol=1e-14)
    _, _, H = distance_jet(slab(2.0), np.array([0.3, -0.1, 0.2]))
    assert not H.any()


def test_jet_errors():
    with pytest.raises(DomainError):
        distance_jet(euclidean_ball(1.0), np.zeros(3))
    with pytest.raises(DomainError):
        distance_jet(euclidean_ball(1.0), np.array([2.0, 0, 0]))
    with pytest.raises(DomainError):
        distance_jet(euclidean_cone(0.5), np.array([0, 0, 1.0]))
    with pytest.raises(DomainError):
        distance_jet(ds_cone_region(3, 1, 1.0), np.ones(3))
    with pytest.raises(DomainError):
        distance_jet(euclidean_ball(1.0), np.zeros(2))
    with pytest.raises(DomainError):
        cylinder(2, 1.0, m=3)


def test_distance_values_match_jets():
    rng = np.random.default_rng(0)
    for d in (euclidean_ball(2.0), space_form_ball(1.0, 1.0), cylinder(1, 1.0, m=4),
              euclidean_cone(0.7), horoball(), slab(3.0)):
        y = boundary_point(d, rng)
        _, g, _ = distance_jet(d, y)
        x = y + 0.3 * g if d.kind != "horoball" else y + np.eye(3)[-1]
        assert distance_values(d, x[None])[0] == pytest.approx(distance_jet(d, x)[0], abs=1e-14)
    # defined on the cut point of the ball
    assert distance_values(euclidean_ball(2.0), np.zeros((1, 3)))[0] == 2.0


def _interior_points(d, rng, n=5):
    out = []
    for _ in range(n):
        y = boundary_point(d, rng)
        _, g, _ = distance_jet(d, y)
        t = rng.uniform(0.1, 0.8) * min(1.0, 0.9 * (d["rho"] if "rho" in d.params else 1.0))
        if d.kind == "horoball":
            out.append(np.concatenate([y[:-1], [math.exp(t)]]))
        else:
            out.append(y + t * g)
    return out


@pytest.mark.parametrize("d", [euclidean_ball(2.0, m=3), cylinder(1, 1.5, m=4),
                               euclidean_cone(0.8, m=3), slab(2.0, m=3),
                               euclidean_ball(1.0, m=5)])
def test_fd_hessian_audit(d):
    rng = np.random.default_rng(11)
    for x in _interior_points(d, rng):
        _, g, H = distance_jet(d, x)
        np.testing.assert_allclose(H, fd_hessian(d, x), atol=1e-5)
        assert np.linalg.norm(H @ g) < 1e-10


@pytest.mark.parametrize("d", [space_form_ball(1.0, 0.8, m=4), space_form_ball(-1.0, 1.0, m=3),
                               horoball(m=3), cylinder(1, 0.7, c_fiber=1.0, m=4)])
def test_gradient_in_kernel(d):
    rng = np.random.default_rng(5)
    for x in _interior_points(d, rng):
        _, g, H = distance_jet(d, x)
        assert np.linalg.norm(H @ g) < 1e-10


@pytest.mark.parametrize("c,rho", [(0.0, 2.0), (1.0, 1.0), (-1.0, 1.2), (0.5, 3.0)])
def test_comparison_coherence_space_forms(c, rho):
    m = 4
    d = space_form_ball(c, rho, m=m)
    for ell in range(1, m):
        Lam = boundary_pminus(d, ell)
        for r in (0.1, 0.5, 0.9 * rho):
            x = np.zeros(m)
            x[0] = rho - r
            _, g, H = distance_jet(d, x)
            E = tangent_basis(g)
            assert p_minus(E @ H @ E.T, ell) == pytest.approx(
                riccati_closed_form(-Lam, c, r), abs=1e-12)


def test_ds_cone_function_examples():
    u, g, H = ds_cone_function(4, 1, 1.0, np.zeros(4))
    assert u == 0 and not g.any()
    assert p_minus(H, 2) == pytest.approx(0.0, abs=1e-15)


def test_ds_threshold_all_pairs():
    for ell in range(2, 7):
        for s in range(1, ell):
            assert abs(ds_threshold(ell, s) - (ell - s) / s) < 1e-10


def test_ds_sign_sweep():
    ell, s = 4, 1
    thr = (ell - s) / s
    for c in (0.5 * thr, 0.999 * thr, thr):
        assert p_minus(ds_cone_function(5, s, c, np.zeros(5))[2], ell) >= 0
    for c in (1.001 * thr, 2 * thr):
        assert p_minus(ds_cone_function(5, s, c, np.zeros(5))[2], ell) < 0


def test_ds_boundary_shape_operator():
    d = ds_cone_region(4, 1, 1.0)
    y = boundary_point(d, np.random.default_rng(3))
    A = boundary_shape_operator(d, y)
    assert A.shape == (3, 3)
    assert np.allclose(A, A.T)


def test_cylinder_bound_examples():
    assert cylinder_min_mean_curvature(2, 1, 0.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert cylinder_min_mean_curvature(3, 1, 1.0, 1.0) == pytest.approx(2 / 3 * COTH1, abs=1e-12)
    assert 2 / 3 * COTH1 == pytest.approx(0.8753568569995542, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.data())
def test_cylinder_bound_cross_module(ell, data):
    s = data.draw(st.integers(1, ell - 1))
    m = data.draw(st.integers(max(ell + 1, s + 2), ell + 2))
    c = data.draw(st.floats(-1, 2))
    r = data.draw(st.floats(0.1, 1.4))
    d = cylinder(s, r, c_fiber=c, m=m)
    assert cylinder_min_mean_curvature(ell, s, c, r) == pytest.approx(
        boundary_pminus(d, ell), abs=1e-10)


def test_sphere_sampler_mass():
    S = sample_round_sphere(1.0, 10_000)
    assert abs(S.mass / (4 * math.pi) - 1) < 1e-2
    np.testing.assert_allclose(S.mean_curvature, -S.points, atol=1e-15)


def test_plane_sampler():
    S = sample_plane(extent=3.0, spacing=0.1)
    assert S.boundary_mask.any() and not S.boundary_mask[np.linalg.norm(S.points, axis=1) < 2].any()
    assert abs(S.mass / (math.pi * 9) - 1) < 0.02


def test_graph_sampler_frames():
    S = sample_graph(lambda x, y: 0.1 * x * y, extent=1.0, spacing=0.1)
    G = np.einsum("nim,njm->nij", S.frames, S.frames)
    np.testing.assert_allclose(G, np.broadcast_to(np.eye(2), G.shape), atol=1e-12)


def test_catenoid_samplers_small():
    S2 = sample_catenoid2d(s_max=20.0, levels=200, n_phi=32)
    assert np.max(np.linalg.norm(S2.mean_curvature, axis=1)) < 5e-2
    S3 = sample_catenoid3d(s_max=20.0, levels=200, n_sphere=32)
    assert S3.meta["first_integral_defect"] < 1e-8
    assert np.max(np.linalg.norm(S3.mean_curvature, axis=1)) < 5e-2
    # a true catenoid point satisfies rho = cosh z
    p = S2.points
    np.testing.assert_allclose(np.hypot(p[:, 0], p[:, 1]), np.cosh(p[:, 2]), rtol=1e-12)


def test_sampler_dispatch():
    assert sample_submanifold("round_sphere", 100).points.shape == (100, 3)
    with pytest.raises(DomainError):
        sample_submanifold("torus")
    with pytest.raises(DomainError):
        sample_submanifold("round_sphere", 1)
