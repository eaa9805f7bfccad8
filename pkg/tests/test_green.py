import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_kernels.extremal import annulus_bergman_series, disc_bergman
from planar_kernels.geometry import DomainError, annulus, sample_boundary
from planar_kernels.green import (CHARGE_SIMULATION, GreenError, GreenEvaluator, bergman_via_green,
                                  capacity_c_beta, eval_green, normal_derivative_on_boundary)

from conftest import random_interior


def test_disc_examples(ev_disc):
    np.testing.assert_allclose(eval_green(ev_disc, 0.5, 0), np.log(0.5), rtol=1e-15)
    np.testing.assert_allclose(eval_green(ev_disc, 0.5, 0.3), np.log(0.2 / 0.85), rtol=1e-14)


def test_rejects_bad_points(ev_disc, ev_ann):
    with pytest.raises(DomainError):
        eval_green(ev_disc, 0.3, 0.3)
    with pytest.raises(DomainError):
        eval_green(ev_ann, 0.3, 0.7)
    with pytest.raises(DomainError):
        capacity_c_beta(ev_disc, 1.2)


def test_annulus_image_series_vs_charges(ev_ann, ann):
    cs = GreenEvaluator(ann, CHARGE_SIMULATION)
    np.testing.assert_allclose(eval_green(ev_ann, 0.7, 0.6), eval_green(cs, 0.7, 0.6), atol=1e-7)
    z = random_interior(ann, 50, seed=1)
    w = random_interior(ann, 50, seed=2)
    np.testing.assert_allclose(ev_ann.green(z, w), cs.green(z, w), atol=1e-6)


@pytest.mark.parametrize("which", ["ev_disc", "ev_ann", "ev_holes"])
def test_harmonic_negative_symmetric(which, request):
    ev = request.getfixturevalue(which)
    w = random_interior(ev.domain, 1, margin=0.1, seed=3)[0]
    z = random_interior(ev.domain, 400, margin=0.05, seed=4)
    z = z[np.abs(z - w) > 0.05][:100]
    assert np.all(ev.green(z, w) < 0)

    def lap(h):
        return (ev.green(z + h, w) + ev.green(z - h, w) + ev.green(z + 1j * h, w)
                + ev.green(z - 1j * h, w) - 4 * ev.green(z, w)) / h ** 2

    # the 5-point stencil's h^2 term alone is ~h^2/d^4; cancel it
    h = 1e-3
    assert np.abs((4 * lap(h / 2) - lap(h)) / 3).max() <= 1e-4
    zs, ws = z[:50], random_interior(ev.domain, 50, seed=5)
    np.testing.assert_allclose(ev.green(zs, ws), ev.green(ws, zs), atol=1e-8)


@pytest.mark.parametrize("which,tol", [("ev_disc", 1e-7), ("ev_ann", 1e-7), ("ev_holes", 1e-6)])
def test_boundary_vanishing(which, tol, request):
    ev = request.getfixturevalue(which)
    b = sample_boundary(ev.domain, 128)
    for w in random_interior(ev.domain, 5, seed=6):
        vals = ev.green(b.position - 1e-9 * b.outer_normal, w)
        assert np.abs(vals).max() <= tol


def test_normal_derivative_examples(ev_disc, ev_ann, disc, ann):
    for p in sample_boundary(disc, 7):
        np.testing.assert_allclose(normal_derivative_on_boundary(ev_disc, p, 0), 1.0, rtol=1e-14)
    p = sample_boundary(disc, 4)[0]
    np.testing.assert_allclose(normal_derivative_on_boundary(ev_disc, p, 0.3), 0.91 / 0.49, rtol=1e-14)
    p = sample_boundary(ann, 4)[0]
    h = 1e-6
    fd = -float(ev_ann.green(p.position - h * p.outer_normal, 0.7)) / h
    np.testing.assert_allclose(normal_derivative_on_boundary(ev_ann, p, 0.7), fd, rtol=1e-5)


@pytest.mark.parametrize("which", ["ev_disc", "ev_ann", "ev_holes"])
def test_normal_derivative_positive(which, request):
    ev = request.getfixturevalue(which)
    b = sample_boundary(ev.domain, 256)
    for w in random_interior(ev.domain, 5, seed=7):
        assert np.all(ev.normal_derivative(b, w) > 0)


def test_normal_derivative_flux(ev_holes):
    # the flux of grad G through the boundary is 2 pi
    b = sample_boundary(ev_holes.domain, 256)
    for w in random_interior(ev_holes.domain, 3, seed=8):
        np.testing.assert_allclose(np.sum(ev_holes.normal_derivative(b, w) * b.arclength_weight), 2 * np.pi,
                                   rtol=1e-8)


def test_capacity_examples(ev_disc, ev_ann):
    np.testing.assert_allclose(capacity_c_beta(ev_disc, 0), 1.0)
    np.testing.assert_allclose(capacity_c_beta(ev_disc, 0.3), 1 / 0.91, rtol=1e-15)
    c = capacity_c_beta(ev_ann, 0.7)
    assert c ** 2 < np.pi * np.real(annulus_bergman_series(0.5, 0.7, 0.7))


def test_capacity_limit_of_regular_part(ev_ann):
    # c_beta = lim exp(G(z, w) - log|z - w|)
    w = 0.6 + 0.2j
    z = w + 1e-7
    np.testing.assert_allclose(np.exp(ev_ann.green(z, w) - np.log(1e-7)), capacity_c_beta(ev_ann, w), rtol=1e-6)


def test_bergman_via_green_examples(ev_disc, ev_ann):
    np.testing.assert_allclose(bergman_via_green(ev_disc, 0, 0).real, 1 / np.pi, atol=2e-4)
    np.testing.assert_allclose(bergman_via_green(ev_disc, 0.2, 0.1), disc_bergman(0.2, 0.1), rtol=1e-4)
    np.testing.assert_allclose(bergman_via_green(ev_ann, 0.7, 0.7).real,
                               np.real(annulus_bergman_series(0.5, 0.7, 0.7)), rtol=1e-3)


def test_bergman_stencil_leaving_domain(ev_ann):
    with pytest.raises(DomainError):
        bergman_via_green(ev_ann, 0.50005, 0.7)


def test_broken_evaluator_detected(ann):
    ev = GreenEvaluator(ann, CHARGE_SIMULATION, truncation=1)
    with pytest.raises(GreenError):
        ev.normal_derivative(sample_boundary(ann, 256), 0.98)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.52, 0.97), st.floats(0, 2 * np.pi), st.floats(0.52, 0.97), st.floats(0, 2 * np.pi))
def test_annulus_symmetry_property(r1, t1, r2, t2):
    ev = GreenEvaluator(annulus(0.5))
    z, w = r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)
    if abs(z - w) < 1e-6:
        return
    np.testing.assert_allclose(ev.green(z, w), ev.green(w, z), atol=1e-12)
