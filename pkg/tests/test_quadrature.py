import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_kernels.quadrature import (boundary_integral, boundary_sampling, build_sublevel_rule, full_domain_rule,
                                       gauss_legendre01, shell_integral)


def test_gauss_legendre_exactness():
    for n in (1, 5, 64, 300):
        x, u = gauss_legendre01(n)
        k = np.arange(2 * n)
        np.testing.assert_allclose((u[:, None] * x[:, None] ** k).sum(0), 1 / (k + 1), rtol=1e-13)


def test_gauss_legendre_endpoint_weights():
    # closed-form weight 2/((1-x^2) P_n'(x)^2) at the first node, n = 2
    x, u = gauss_legendre01(2)
    np.testing.assert_allclose(x, [(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2], rtol=1e-15)
    np.testing.assert_allclose(u, [0.5, 0.5], rtol=1e-15)


def test_boundary_integral_examples(ev_disc):
    s = boundary_sampling(ev_disc, 0, 64)
    np.testing.assert_allclose(s.weight_values, 1.0, atol=1e-10)
    np.testing.assert_allclose(boundary_integral(s, lambda z: 1.0), 2 * np.pi, atol=1e-10)
    np.testing.assert_allclose(boundary_integral(s, lambda z: np.abs(z ** 3) ** 2), 2 * np.pi, atol=1e-10)
    ref = boundary_integral(boundary_sampling(ev_disc, 0.3, 4096), lambda z: 1.0)
    np.testing.assert_allclose(boundary_integral(boundary_sampling(ev_disc, 0.3, 64), lambda z: 1.0), ref, atol=1e-8)
    # 1/P(z, w) integrates to 2 pi (1 + |w|^2) / (1 - |w|^2) over the circle
    np.testing.assert_allclose(ref, 2 * np.pi * 1.09 / 0.91, rtol=1e-12)


def test_weights_positive(ev_ann, ev_holes):
    for ev in (ev_ann, ev_holes):
        assert np.all(boundary_sampling(ev, 0.2 + 0.7j, 128).weight_values > 0)


@pytest.mark.parametrize("r", [0.25, 1.0])
def test_disc_areas(ev_disc, r):
    rule = build_sublevel_rule(ev_disc, 0, r, 64)
    assert abs(rule.area - np.pi * r) <= max(rule.estimated_area_error, 1e-13)


def test_nodes_strictly_inside_level_set(ev_ann):
    rule = build_sublevel_rule(ev_ann, 0.7, 0.5, 64, estimate_error=False)
    assert np.all(np.exp(2 * ev_ann.green(rule.nodes, 0.7)) < 0.5)
    assert np.all(rule.area_weight > 0)


def test_annulus_area_monte_carlo(ev_ann):
    n = 10 ** 6
    rng = np.random.default_rng(11)
    rho = np.sqrt(rng.uniform(0, 1, n))
    z = rho * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    z = z[np.abs(z) > 0.5]
    hit = np.zeros(n, bool)
    hit[:z.size] = np.exp(2 * ev_ann.green(z, 0.7)) < 0.5
    p = hit.mean()
    mc, se = np.pi * p, np.pi * np.sqrt(p * (1 - p) / n)
    rule = build_sublevel_rule(ev_ann, 0.7, 0.5, 128)
    assert abs(rule.area - mc) < 3 * se


def test_area_monotone_and_consistent(ev_ann):
    rs = [0.2, 0.4, 0.6, 0.8, 0.95]
    areas = [build_sublevel_rule(ev_ann, 0.7, r, 128, estimate_error=False).area for r in rs]
    assert np.all(np.diff(areas) > 0)
    for r in rs:
        sub = build_sublevel_rule(ev_ann, 0.7, r, 128)
        shell = shell_integral(ev_ann, 0.7, r, lambda z: np.ones(z.shape), 128)
        tol = sub.estimated_area_error + shell.error + 1e-14
        assert abs(sub.area + shell.value - np.pi * 0.75) <= tol


def test_full_domain_rule_area(ev_ann, ev_holes):
    np.testing.assert_allclose(full_domain_rule(ev_ann, 64).area, np.pi * 0.75, rtol=1e-13)
    np.testing.assert_allclose(full_domain_rule(ev_holes, 128).area, ev_holes.domain.area(), rtol=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=2), min_size=1, max_size=11), st.floats(0.05, 1.0))
def test_disc_exactness(coef, r):
    from planar_kernels.geometry import unit_disc
    from planar_kernels.green import GreenEvaluator

    ev = GreenEvaluator(unit_disc())
    a = np.array(coef)
    rule = build_sublevel_rule(ev, 0, r, 64, estimate_error=False)
    val = rule.integrate(lambda z: np.abs(np.polyval(a[::-1], z)) ** 2)
    n = np.arange(a.size)
    np.testing.assert_allclose(val, np.sum(np.abs(a) ** 2 * np.pi * r ** (n + 1) / (n + 1)), rtol=1e-6, atol=1e-12)


def test_shell_integral_disc(ev_disc):
    one = shell_integral(ev_disc, 0, 0.9, lambda z: np.ones(z.shape), 64)
    np.testing.assert_allclose(one.value, np.pi * 0.1, atol=1e-4)
    sq = shell_integral(ev_disc, 0, 0.9, lambda z: np.abs(z) ** 2, 64)
    np.testing.assert_allclose(sq.value, np.pi * (1 - 0.81) / 2, atol=1e-4)
    assert sq.error < 1e-10


def test_r_rejected(ev_disc):
    with pytest.raises(ValueError):
        build_sublevel_rule(ev_disc, 0, 0.0, 64)
    with pytest.raises(ValueError):
        build_sublevel_rule(ev_disc, 0, 1.5, 64)


def test_rule_deterministic(ev_holes):
    a = build_sublevel_rule(ev_holes, 0.1 + 0.5j, 0.3, 64, estimate_error=False)
    b = build_sublevel_rule(ev_holes, 0.1 + 0.5j, 0.3, 64, estimate_error=False)
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert a.area_weight.tobytes() == b.area_weight.tobytes()


def test_two_hole_sublevel_area_converges(ev_holes):
    w = 0.1 + 0.5j
    a1 = build_sublevel_rule(ev_holes, w, 0.6, 64)
    a2 = build_sublevel_rule(ev_holes, w, 0.6, 256, estimate_error=False)
    assert abs(a1.area - a2.area) < 1e-8
