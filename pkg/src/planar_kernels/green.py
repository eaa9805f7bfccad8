"""Green's function G(z, w) of circular domains, normalised so that
G(z, w) - log|z - w| is harmonic and G vanishes on the boundary.

Three representations are available:

``closed-form-disc``
    G = log|z - w| - log|1 - conj(w) z|.
``image-series-annulus``
    Product over the image ladder w q^{2k} for A(q, 1).
``charge-simulation``
    Regular part fitted by least squares with logarithmic point charges
    outside the domain (any circular domain, including the annulus).

Every representation exposes the holomorphic derivative ``dlog`` of the
multivalued function whose real part is G(., w); gradients and normal
derivatives are taken from it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .geometry import (ANNULUS, CIRCULAR, DISC, BoundaryNodes, BoundaryPoint, DomainError, DomainSpec,
                       boundary_distance, contains, reflections)

CLOSED_FORM_DISC = "closed-form-disc"
IMAGE_SERIES_ANNULUS = "image-series-annulus"
CHARGE_SIMULATION = "charge-simulation"

METHODS = (CLOSED_FORM_DISC, IMAGE_SERIES_ANNULUS, CHARGE_SIMULATION)


class GreenError(RuntimeError):
    """Raised when an evaluator produces values that violate G's defining properties."""


def image_series_terms(q: float, tol: float = 1e-17) -> int:
    # the largest neglected factor is q^{2K} / |zeta| with |zeta| >= q^2
    return max(1, int(np.ceil(np.log(tol) / (2.0 * np.log(q)))) + 1)


@dataclass(frozen=True)
class ChargeData:
    centers: np.ndarray
    collocation: np.ndarray
    # log|collocation - center| for the fixed charges
    matrix: np.ndarray = field(repr=False)


def _build_charges(domain: DomainSpec, n_charges: int, spread: float) -> ChargeData:
    ang = 2 * np.pi * (np.arange(n_charges) + 0.5) / n_charges
    e_charge = np.exp(1j * ang)
    n_coll = 4 * n_charges
    e_coll = np.exp(2j * np.pi * np.arange(n_coll) / n_coll)
    centers = [e_charge / spread]
    coll = [e_coll]
    for c, rad in domain.hole_list:
        centers.append(np.array([c]))
        centers.append(c + spread * rad * e_charge)
        coll.append(c + rad * e_coll)
    centers = np.concatenate(centers)
    coll = np.concatenate(coll)
    return ChargeData(centers, coll, np.log(np.abs(coll[:, None] - centers[None, :])))


@dataclass(frozen=True)
class ChargeFit:
    """Charges for one pole w: fixed rings plus images of w, and a constant."""

    centers: np.ndarray
    strengths: np.ndarray
    constant: float
    boundary_residual: float


class GreenEvaluator:
    """Immutable evaluator of G(z, w) on one domain with one method."""

    def __init__(self, domain: DomainSpec, method: str | None = None,
                 truncation: int | None = None, charge_spread: float = 0.8):
        if method is None:
            method = {DISC: CLOSED_FORM_DISC, ANNULUS: IMAGE_SERIES_ANNULUS,
                      CIRCULAR: CHARGE_SIMULATION}[domain.kind]
        if method not in METHODS:
            raise ValueError(f"unknown Green method {method!r}")
        if method == CLOSED_FORM_DISC and domain.kind != DISC:
            raise ValueError("closed-form Green's function exists only for the unit disc")
        if method == IMAGE_SERIES_ANNULUS and domain.kind != ANNULUS:
            raise ValueError("image series requires an annulus")
        if method == CHARGE_SIMULATION and domain.kind == DISC:
            raise ValueError("charge simulation is for domains with holes")
        self.domain = domain
        self.method = method
        if truncation is None:
            truncation = {CLOSED_FORM_DISC: 1,
                          IMAGE_SERIES_ANNULUS: image_series_terms(domain.q) if domain.q else 1,
                          CHARGE_SIMULATION: 128}[method]
        if truncation < 1:
            raise ValueError("truncation must be >= 1")
        self.truncation = int(truncation)
        self.charge_spread = float(charge_spread)
        self._fits: dict[complex, ChargeFit] = {}
        if method == IMAGE_SERIES_ANNULUS:
            self._q = domain.q
            self._a = self._q ** (2.0 * np.arange(1, self.truncation + 1))
            self._logq = np.log(self._q)

    def __repr__(self):
        return f"GreenEvaluator({self.domain.describe()}, method={self.method}, truncation={self.truncation})"

    @cached_property
    def charge_data(self) -> ChargeData | None:
        if self.method != CHARGE_SIMULATION:
            return None
        return _build_charges(self.domain, self.truncation, self.charge_spread)

    # ------------------------------------------------------------ regular part

    def charge_fit(self, w: complex) -> ChargeFit:
        """Least-squares fit of -log|z - w| on the boundary by the fixed charges,
        log charges at the reflections of w, and a constant."""
        w = complex(w)
        fit = self._fits.get(w)
        if fit is None:
            cd = self.charge_data
            images = np.array(reflections(self.domain, w), dtype=complex)
            centers = np.concatenate([cd.centers, images])
            mat = np.hstack([cd.matrix, np.log(np.abs(cd.collocation[:, None] - images[None, :])),
                             np.ones((cd.collocation.size, 1))])
            rhs = -np.log(np.abs(cd.collocation - w))
            scale = np.linalg.norm(mat, axis=0)
            coef = np.linalg.lstsq(mat / scale, rhs, rcond=1e-14)[0] / scale
            resid = float(np.abs(mat @ coef - rhs).max())
            fit = ChargeFit(centers, coef[:-1], float(coef[-1]), resid)
            self._fits[w] = fit
        return fit

    def regular(self, z, w):
        """G(z, w) - log|z - w|; smooth across z = w. Broadcasts over z and w."""
        z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
        if self.method == CLOSED_FORM_DISC:
            return -np.log(np.abs(1.0 - np.conj(w) * z))
        if self.method == IMAGE_SERIES_ANNULUS:
            return (
                _kernels.log_product_sum(z / w, self._a)
                - np.log(np.abs(1.0 - z * np.conj(w)))
                - _kernels.log_product_sum(z * np.conj(w), self._a)
                - np.log(np.abs(z)) * np.log(np.abs(w)) / self._logq
            )
        out = np.empty(z.shape)
        for wv in np.unique(w):
            sel = w == wv
            fit = self.charge_fit(complex(wv))
            out[sel] = _kernels.charge_potential(z[sel], fit.centers, fit.strengths) + fit.constant
        return out

    def green(self, z, w):
        """G(z, w) without validation; -inf at z = w."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(z - w)) + self.regular(z, w)

    def dlog(self, z, w: complex):
        """Holomorphic F'(z) with Re F = G(., w): grad G = conj(F')."""
        z = np.asarray(z, dtype=complex)
        w = complex(w)
        sing = 1.0 / (z - w)
        if self.method == CLOSED_FORM_DISC:
            return sing + np.conj(w) / (1.0 - np.conj(w) * z)
        if self.method == IMAGE_SERIES_ANNULUS:
            wc = np.conj(w)
            return (
                sing
                + _kernels.log_product_dsum(z / w, self._a) / w
                + wc / (1.0 - z * wc)
                - wc * _kernels.log_product_dsum(z * wc, self._a)
                - (np.log(abs(w)) / self._logq) / z
            )
        fit = self.charge_fit(w)
        return sing + _kernels.charge_field(z, fit.centers, fit.strengths)

    def gradient(self, z, w: complex):
        """(dG/dx, dG/dy) packed as a complex number."""
        return np.conj(self.dlog(z, w))

    def normal_derivative(self, points: BoundaryNodes, w: complex) -> np.ndarray:
        """dG(z, w)/d nu at every boundary node, from the analytic gradient."""
        val = np.real(self.dlog(points.position, w) * points.outer_normal)
        if not np.all(val > 0):
            raise GreenError(f"non-positive normal derivative for w={w}: min {val.min():.3e}")
        return val

    def check_point(self, z: complex, name: str = "point", margin: float = 0.0) -> complex:
        z = complex(z)
        if not contains(self.domain, z):
            raise DomainError(f"{name} {z} is not interior to the domain")
        if margin > 0:
            if boundary_distance(self.domain, z) <= margin:
                raise DomainError(f"{name} {z} is within {margin} of the boundary")
        return z


def eval_green(ev: GreenEvaluator, z: complex, w: complex) -> float:
    z = ev.check_point(z, "z")
    w = ev.check_point(w, "w")
    if z == w:
        raise DomainError("G(z, w) is singular at z = w")
    return float(ev.green(z, w))


def normal_derivative_on_boundary(ev: GreenEvaluator, p: BoundaryPoint, w: complex) -> float:
    w = ev.check_point(w, "w")
    val = float(np.real(ev.dlog(p.position, w) * p.outer_normal))
    if not val > 0:
        raise GreenError(f"dG/dnu = {val} <= 0 at {p.position}")
    return val


def capacity_c_beta(ev: GreenEvaluator, z0: complex) -> float:
    """exp of the regular part of G at the diagonal."""
    z0 = ev.check_point(z0, "z0")
    return float(np.exp(ev.regular(z0, z0)))


def bergman_via_green(ev: GreenEvaluator, z: complex, w: complex, h: float = 1e-4) -> complex:
    """B(z, conj w) = (2/pi) d^2/dz dconj(w) of the regular part of G.

    Each mixed partial uses the four-point central stencil with step ``h``.
    """
    z = ev.check_point(z, "z")
    w = ev.check_point(w, "w")
    off = np.array([h, -h, 1j * h, -1j * h])
    for p in (z + off, w + off):
        if not np.all(contains(ev.domain, p)):
            raise DomainError(f"stencil step {h} leaves the domain")

    def mixed(dz, dw):
        zs = z + np.array([dz, dz, -dz, -dz])
        ws = w + np.array([dw, -dw, dw, -dw])
        v = ev.regular(zs, ws)
        return (v[0] - v[1] - v[2] + v[3]) / (4 * h * h)

    h_xs = mixed(h, h)
    h_yt = mixed(1j * h, 1j * h)
    h_xt = mixed(h, 1j * h)
    h_ys = mixed(1j * h, h)
    return complex(2.0 / np.pi * 0.25 * ((h_xs + h_yt) + 1j * (h_xt - h_ys)))
