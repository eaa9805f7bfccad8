import numpy as np
import pytest

from planar_kernels import _kernels
from planar_kernels.geometry import annulus, circular_domain
from planar_kernels.green import GreenEvaluator

pytestmark = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba missing")


@pytest.fixture
def backend():
    before = _kernels.get_backend()
    yield _kernels.set_backend
    _kernels.set_backend(before)


def both(backend, fn, *args):
    out = {}
    for name in ("numpy", "numba"):
        backend(name)
        out[name] = fn(*args)
    return out["numpy"], out["numba"]


def test_kernels_agree(backend):
    rng = np.random.default_rng(1)
    # more points than one numpy chunk
    n = 3 * _kernels._CHUNK + 17
    rho = rng.uniform(0.5, 1.0, n)
    zeta = rho * np.exp(2j * np.pi * rng.uniform(size=n))
    a = 0.25 ** np.arange(1, 30)
    a_np, a_nb = both(backend, _kernels.log_product_sum, zeta, a)
    np.testing.assert_allclose(a_nb, a_np, rtol=1e-12, atol=1e-14)
    d_np, d_nb = both(backend, _kernels.log_product_dsum, zeta, a)
    np.testing.assert_allclose(d_nb, d_np, rtol=1e-12, atol=1e-14)
    centers = 1.3 * np.exp(2j * np.pi * np.arange(64) / 64)
    q = rng.standard_normal(64)
    p_np, p_nb = both(backend, _kernels.charge_potential, zeta, centers, q)
    np.testing.assert_allclose(p_nb, p_np, rtol=1e-12, atol=1e-12)
    f_np, f_nb = both(backend, _kernels.charge_field, zeta, centers, q)
    np.testing.assert_allclose(f_nb, f_np, rtol=1e-12, atol=1e-12)


def test_shape_preserved(backend):
    z = np.full((3, 4), 0.7 + 0.1j)
    for name in ("numpy", "numba"):
        backend(name)
        assert _kernels.log_product_sum(z, np.array([0.25])).shape == (3, 4)
        assert _kernels.charge_field(z, np.array([2.0 + 0j]), np.array([1.0])).shape == (3, 4)


def test_green_agrees_across_backends(backend):
    z = np.array([0.6 + 0.1j, -0.8j, 0.75])
    for dom in (annulus(0.5), circular_domain([(0.3 + 0.1j, 0.15)])):
        g_np, g_nb = both(backend, lambda: GreenEvaluator(dom).green(z, 0.7 + 0.05j))
        np.testing.assert_allclose(g_nb, g_np, rtol=1e-11, atol=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.set_backend("cuda")
