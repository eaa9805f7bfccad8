"""Hot inner loops: annulus image-product sums and charge-simulation sums.

Each kernel has a numba ``@njit`` implementation and a pure-numpy twin.
``PLANAR_KERNELS_BACKEND=numpy`` forces the numpy path; the default is numba
when it imports. ``set_backend`` switches at runtime (benchmarks, tests).
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

_CHUNK = 4096


# ---------------------------------------------------------------- numpy path

def _chunks(n):
    for start in range(0, n, _CHUNK):
        yield slice(start, min(n, start + _CHUNK))


def log_product_sum_numpy(zeta, a):
    zeta = np.ascontiguousarray(zeta, dtype=np.complex128).ravel()
    out = np.empty(zeta.shape, dtype=np.float64)
    for s in _chunks(zeta.size):
        zz = zeta[s, None]
        out[s] = np.sum(np.log(np.abs(1.0 - a * zz)) + np.log(np.abs(1.0 - a / zz)), axis=1)
    return out


def log_product_dsum_numpy(zeta, a):
    zeta = np.ascontiguousarray(zeta, dtype=np.complex128).ravel()
    out = np.empty(zeta.shape, dtype=np.complex128)
    for s in _chunks(zeta.size):
        zz = zeta[s, None]
        out[s] = np.sum(-a / (1.0 - a * zz) + a / (zz * (zz - a)), axis=1)
    return out


def charge_potential_numpy(z, centers, strengths):
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    out = np.empty(z.shape, dtype=np.float64)
    for s in _chunks(z.size):
        out[s] = np.log(np.abs(z[s, None] - centers)) @ strengths
    return out


def charge_field_numpy(z, centers, strengths):
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    out = np.empty(z.shape, dtype=np.complex128)
    for s in _chunks(z.size):
        out[s] = (1.0 / (z[s, None] - centers)) @ strengths.astype(np.complex128)
    return out


# ---------------------------------------------------------------- numba path

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def log_product_sum_numba(zeta, a):
        # multiply the factors and take one log, renormalising the running product
        n = zeta.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            x, y = zeta[i].real, zeta[i].imag
            r2 = x * x + y * y
            ix, iy = x / r2, -y / r2
            acc = 0.0
            prod = 1.0
            for k in range(a.shape[0]):
                u, v = 1.0 - a[k] * x, a[k] * y
                s, t = 1.0 - a[k] * ix, a[k] * iy
                prod *= (u * u + v * v) * (s * s + t * t)
                if prod > 1e100 or prod < 1e-100:
                    acc += np.log(prod)
                    prod = 1.0
            out[i] = 0.5 * (acc + np.log(prod))
        return out

    @njit(cache=True)
    def log_product_dsum_numba(zeta, a):
        n = zeta.shape[0]
        out = np.empty(n, dtype=np.complex128)
        for i in range(n):
            zz = zeta[i]
            acc = 0j
            for k in range(a.shape[0]):
                acc += -a[k] / (1.0 - a[k] * zz) + a[k] / (zz * (zz - a[k]))
            out[i] = acc
        return out

    @njit(cache=True)
    def charge_potential_numba(z, centers, strengths):
        n = z.shape[0]
        m = centers.shape[0]
        cx, cy = centers.real.copy(), centers.imag.copy()
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            x, y = z[i].real, z[i].imag
            acc = 0.0
            for j in range(m):
                dx, dy = x - cx[j], y - cy[j]
                acc += strengths[j] * np.log(dx * dx + dy * dy)
            out[i] = 0.5 * acc
        return out

    @njit(cache=True)
    def charge_field_numba(z, centers, strengths):
        n = z.shape[0]
        out = np.empty(n, dtype=np.complex128)
        for i in range(n):
            acc = 0j
            for j in range(centers.shape[0]):
                acc += strengths[j] / (z[i] - centers[j])
            out[i] = acc
        return out


# ---------------------------------------------------------------- dispatch

_IMPLS = {
    "numpy": (
        log_product_sum_numpy,
        log_product_dsum_numpy,
        charge_potential_numpy,
        charge_field_numpy,
    ),
}
if NUMBA_AVAILABLE:
    _IMPLS["numba"] = (
        log_product_sum_numba,
        log_product_dsum_numba,
        charge_potential_numba,
        charge_field_numba,
    )

_backend = "numpy"


def set_backend(name: str) -> None:
    global _backend
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(_IMPLS)}")
    _backend = name


def get_backend() -> str:
    return _backend


set_backend(os.environ.get("PLANAR_KERNELS_BACKEND", "numba" if NUMBA_AVAILABLE else "numpy"))


def _flat(x, dtype):
    arr = np.asarray(x, dtype=dtype)
    return arr.shape, np.ascontiguousarray(arr.ravel())


def log_product_sum(zeta, a):
    """sum_k log|1 - a_k zeta| + log|1 - a_k / zeta|, elementwise in zeta."""
    shape, flat = _flat(zeta, np.complex128)
    return _IMPLS[_backend][0](flat, np.ascontiguousarray(a, dtype=np.float64)).reshape(shape)


def log_product_dsum(zeta, a):
    """d/dzeta of sum_k log(1 - a_k zeta) + log(1 - a_k / zeta)."""
    shape, flat = _flat(zeta, np.complex128)
    return _IMPLS[_backend][1](flat, np.ascontiguousarray(a, dtype=np.float64)).reshape(shape)


def charge_potential(z, centers, strengths):
    """sum_j Q_j log|z - c_j|."""
    shape, flat = _flat(z, np.complex128)
    return _IMPLS[_backend][2](
        flat,
        np.ascontiguousarray(centers, dtype=np.complex128),
        np.ascontiguousarray(strengths, dtype=np.float64),
    ).reshape(shape)


def charge_field(z, centers, strengths):
    """sum_j Q_j / (z - c_j): the holomorphic derivative of charge_potential."""
    shape, flat = _flat(z, np.complex128)
    return _IMPLS[_backend][3](
        flat,
        np.ascontiguousarray(centers, dtype=np.complex128),
        np.ascontiguousarray(strengths, dtype=np.float64),
    ).reshape(shape)
