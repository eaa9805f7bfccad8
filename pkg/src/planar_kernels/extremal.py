"""Constrained least-squares extremal problems over holomorphic bases.

For a weighted rule (nodes z_j, weights m_j) and basis phi_0..phi_{K-1} we
minimise sum_j m_j |f(z_j)|^2 subject to f(w) = 1. With Gram matrix M and
v = phi(w) the minimiser is M^{-1} conj(v) / (v^T M^{-1} conj(v)) and the
minimum is 1 / (v^T M^{-1} conj(v)).

The Gram matrix is never formed. Rows sqrt(m_j) phi(z_j) are streamed through
a chunked QR, the columns are equilibrated and the constrained problem is
solved on the SVD of the small triangular factor. Singular values below
``SVD_RTOL`` of the largest are dropped, which is what lets the declared
monomial/Laurent basis be augmented with nearly dependent pole columns.

Pole columns sit at reflections of w in the boundary circles. There the
Bergman and weighted Hardy kernels have their nearest singularities, so the
augmentation turns algebraic-looking convergence near the circles into fast
geometric convergence at modest degree.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .geometry import DISC, DomainError, DomainSpec, boundary_distance, reflections
from .green import GreenEvaluator
from .quadrature import SublevelQuadrature, boundary_sampling, build_sublevel_rule

MONOMIAL = "monomial"
LAURENT = "laurent"

SVD_RTOL = 1e-8
MAX_CONDITION = 1e12
NEAR_BOUNDARY = 0.01
CHUNK = 8192
REFLECTION_DEPTH = 2
POLE_ORDER = 2
# reflections farther than this (in units of the circle radius) add nothing
MAX_POLE_DISTANCE = 50.0


class ConditioningError(RuntimeError):
    """Declared basis too ill-conditioned for the quadrature rule."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class HolomorphicBasis:
    """Scaled powers ((z - center)/scale)^n, n = 0..n_max, negative powers
    (R/(z - c))^k, k = 1..-n_min, about each hole (c, R) for the Laurent kind,
    and augmenting pole columns (s/(z - p))^k, k = 1..pole_order."""

    kind: str
    center: complex = 0j
    degree_range: tuple[int, int] = (0, 20)
    scale: float = 1.0
    holes: tuple[tuple[complex, float], ...] = ()
    poles: tuple[tuple[complex, float], ...] = ()
    pole_order: int = POLE_ORDER

    def __post_init__(self):
        n_min, n_max = self.degree_range
        if self.kind not in (MONOMIAL, LAURENT):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if n_max < 0 or n_min > 0:
            raise ValueError("degree_range must contain 0")
        if self.kind == MONOMIAL and n_min != 0:
            raise ValueError("monomial basis has n_min = 0")
        if self.kind == LAURENT and not self.holes:
            raise ValueError("Laurent basis needs at least one hole")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def n_declared(self) -> int:
        n_min, n_max = self.degree_range
        return n_max + 1 + (-n_min) * len(self.holes)

    @property
    def size(self) -> int:
        return self.n_declared + self.pole_order * len(self.poles)

    def widened(self, extra: int) -> "HolomorphicBasis":
        n_min, n_max = self.degree_range
        lo = n_min - extra if self.kind == LAURENT else 0
        return replace(self, degree_range=(lo, n_max + extra))

    def with_degree(self, degree: int) -> "HolomorphicBasis":
        lo = -degree if self.kind == LAURENT else 0
        return replace(self, degree_range=(lo, degree))

    def evaluate(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        n_min, n_max = self.degree_range
        out = np.empty((z.size, self.size), dtype=complex)
        u = (z - self.center) / self.scale
        out[:, 0] = 1.0
        for n in range(1, n_max + 1):
            out[:, n] = out[:, n - 1] * u
        col = n_max + 1
        groups = [(c, rad, -n_min) for c, rad in self.holes]
        groups += [(p, sc, self.pole_order) for p, sc in self.poles]
        for c, sc, m in groups:
            if m == 0:
                continue
            s = sc / (z - c)
            out[:, col] = s
            for k in range(1, m):
                out[:, col + k] = out[:, col + k - 1] * s
            col += m
        return out

    def describe(self) -> dict:
        return {"kind": self.kind, "center": complex(self.center), "degree_range": list(self.degree_range),
                "scale": self.scale, "n_poles": len(self.poles), "pole_order": self.pole_order}


def reflection_poles(domain: DomainSpec, w: complex, depth: int = REFLECTION_DEPTH):
    """Reflections of w, each scaled by its distance to the boundary so the
    pole column is bounded by 1 on the domain."""
    out = []
    for p in reflections(domain, w, depth, MAX_POLE_DISTANCE):
        s = min(abs(abs(p - c) - rad) for c, rad in domain.circles)
        out.append((p, float(s)))
    return tuple(out)


def laurent_basis(domain: DomainSpec, degree: int) -> HolomorphicBasis:
    if domain.kind == DISC:
        raise DomainError("Laurent basis needs a domain with holes")
    return HolomorphicBasis(LAURENT, 0j, (-degree, degree), 1.0, domain.hole_list)


def monomial_basis(degree: int, center: complex = 0j, scale: float = 1.0) -> HolomorphicBasis:
    return HolomorphicBasis(MONOMIAL, complex(center), (0, degree), scale)


def default_basis(domain: DomainSpec, degree: int, w: complex | None = None,
                  augment: bool = True) -> HolomorphicBasis:
    """Monomials on the disc, Laurent otherwise; with reflection poles of w."""
    basis = monomial_basis(degree) if domain.kind == DISC else laurent_basis(domain, degree)
    if augment and w is not None:
        basis = replace(basis, poles=reflection_poles(domain, w))
    return basis


def sublevel_basis(domain: DomainSpec, degree: int, w: complex,
                   rule: SublevelQuadrature, augment: bool = True) -> HolomorphicBasis:
    """Basis adapted to a sublevel rule: scaled monomials about w when the set
    is round about w (rays from w), else the domain basis."""
    if rule.level_r < 1.0 and rule.rays_center == w and w != 0:
        radius = float(np.max(np.abs(rule.nodes - w)))
        return monomial_basis(degree, w, radius)
    return default_basis(domain, degree, w, augment)


@dataclass(frozen=True)
class ExtremalResult:
    value: float
    coefficients: np.ndarray
    gram_condition: float
    constraint_residual: float
    basis: HolomorphicBasis = field(repr=False)
    rank: int = 0
    full_condition: float = 0.0
    near_boundary: bool = False

    @property
    def truncated(self) -> bool:
        return self.rank < self.basis.size

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.basis.evaluate(z) @ self.coefficients).reshape(z.shape)


def _triangular_factor(basis: HolomorphicBasis, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """R with R^H R equal to the weighted Gram matrix, via streamed QR."""
    r = np.zeros((0, basis.size), dtype=complex)
    for s in range(0, nodes.size, CHUNK):
        rows = np.sqrt(weights[s:s + CHUNK])[:, None] * basis.evaluate(nodes[s:s + CHUNK])
        r = np.linalg.qr(np.vstack([r, rows]), mode="r")
    return r


def _weighted_norm(basis, coef, nodes, weights) -> float:
    total = 0.0
    for s in range(0, nodes.size, CHUNK):
        f = basis.evaluate(nodes[s:s + CHUNK]) @ coef
        total += float(np.sum(weights[s:s + CHUNK] * (f.real ** 2 + f.imag ** 2)))
    return total


def _condition(s: np.ndarray) -> float:
    return float(np.inf if s[-1] == 0 else (s[0] / s[-1]) ** 2)


def solve_constrained(basis: HolomorphicBasis, nodes: np.ndarray, weights: np.ndarray,
                      w: complex, near_boundary: bool = False, stabilize: bool = False) -> ExtremalResult:
    """min sum weights |f(nodes)|^2 over span(basis) subject to f(w) = 1.

    A declared-basis Gram condition above ``MAX_CONDITION`` raises
    ConditioningError unless ``stabilize`` is set; the truncated solve then
    minimises over the numerically resolved part of the span. The reported
    value is the norm of the returned minimiser evaluated directly, so
    truncation can only raise it."""
    nodes = np.asarray(nodes, dtype=complex).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if nodes.size < basis.size:
        raise ConditioningError(
            f"{nodes.size} nodes cannot resolve {basis.size} basis functions", np.inf)
    r = _triangular_factor(basis, nodes, weights)
    colnorm = np.linalg.norm(r, axis=0)
    if np.any(colnorm == 0):
        raise ConditioningError("basis function vanishes on every node", np.inf)
    r = r / colnorm
    declared = np.linalg.svd(r[:, :basis.n_declared], compute_uv=False)
    cond = _condition(declared)
    if cond > MAX_CONDITION and not stabilize:
        raise ConditioningError(
            f"Gram condition {cond:.3g} exceeds {MAX_CONDITION:.0e}; "
            "lower the degree or raise the resolution", cond)
    _, s, vh = np.linalg.svd(r, full_matrices=False)
    keep = s > SVD_RTOL * s[0]
    v = basis.evaluate(w)[0] / colnorm
    a = (vh.conj() @ v)[keep]
    y = np.conj(a) / s[keep] ** 2
    coef = (vh[keep].conj().T @ y) / colnorm
    coef = coef / (basis.evaluate(w)[0] @ coef)
    residual = abs(basis.evaluate(w)[0] @ coef - 1.0)
    value = _weighted_norm(basis, coef, nodes, weights)
    return ExtremalResult(value, coef, cond, float(residual), basis, int(keep.sum()),
                          _condition(s), near_boundary)


def _prepare(ev: GreenEvaluator, w: complex) -> tuple[complex, bool]:
    w = ev.check_point(w, "w")
    return w, bool(boundary_distance(ev.domain, w) < NEAR_BOUNDARY)


def minimize_area_norm(ev: GreenEvaluator, basis: HolomorphicBasis, w: complex, r: float,
                       resolution: int, rule: SublevelQuadrature | None = None,
                       stabilize: bool = False) -> ExtremalResult:
    """g_w(-log r): least area norm over {e^{2G(., w)} < r} with f(w) = 1."""
    w, near = _prepare(ev, w)
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    if rule is None:
        rule = build_sublevel_rule(ev, w, r, resolution, estimate_error=False)
    return solve_constrained(basis, rule.nodes, rule.area_weight, w, near, stabilize)


def bergman_diagonal(ev: GreenEvaluator, basis: HolomorphicBasis, w: complex, resolution: int) -> float:
    return 1.0 / minimize_area_norm(ev, basis, w, 1.0, resolution).value


def bergman_minimizer(ev: GreenEvaluator, basis: HolomorphicBasis, w: complex,
                      resolution: int) -> Callable:
    """f = B(., w)/B(w, w), evaluable at arbitrary points."""
    return minimize_area_norm(ev, basis, w, 1.0, resolution)


def minimize_boundary_norm(ev: GreenEvaluator, basis: HolomorphicBasis, w: complex,
                           nodes: int) -> ExtremalResult:
    """min (1/2pi) sum |f|^2 (dG(z, w)/dnu)^-1 d|z| with f(w) = 1; the
    weighted Hardy diagonal is 1/value."""
    w, near = _prepare(ev, w)
    samp = boundary_sampling(ev, w, nodes)
    return solve_constrained(basis, samp.points.position, samp.measure() / (2 * np.pi), w, near)


def hardy_diagonal(ev: GreenEvaluator, basis: HolomorphicBasis, w: complex, nodes: int) -> float:
    return 1.0 / minimize_boundary_norm(ev, basis, w, nodes).value


def boundary_norm(ev: GreenEvaluator, f: Callable, w: complex, nodes: int) -> float:
    """(1/2pi) sum |f|^2 (dG(z, w)/dnu)^-1 d|z| for a given function f."""
    samp = boundary_sampling(ev, w, nodes)
    vals = np.abs(f(samp.points.position)) ** 2
    return float(np.sum(vals * samp.measure()) / (2 * np.pi))


# ------------------------------------------------------------------ oracles

def disc_bergman(z, w):
    """Unit-disc Bergman kernel 1/(pi (1 - z conj(w))^2)."""
    return 1.0 / (np.pi * (1.0 - np.asarray(z) * np.conj(w)) ** 2)


def annulus_monomial_norms(q: float, n: np.ndarray) -> np.ndarray:
    """Squared area norms of z^n on q < |z| < 1."""
    n = np.asarray(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.pi * (1.0 - q ** (2 * n + 2.0)) / (n + 1.0)
    return np.where(n == -1, 2 * np.pi * np.log(1.0 / q), out)


def annulus_bergman_series(q: float, z, w, tol: float = 1e-17) -> complex | np.ndarray:
    """Laurent orthogonal series sum (z conj w)^n / ||z^n||^2 on A(q, 1)."""
    z = np.asarray(z, dtype=complex)
    x = z * np.conj(w)
    # positive tail ~ n |x|^n, negative tail ~ n (q^2/|x|)^n
    ratio = max(abs(np.max(np.abs(x))), q * q / np.min(np.abs(x)))
    n_max = int(np.ceil(np.log(tol) / np.log(ratio))) + 50
    n = np.arange(-n_max, n_max + 1)
    norms = annulus_monomial_norms(q, n)
    terms = x[..., None] ** n / norms
    # sum small terms first
    order = np.argsort(np.abs(n))[::-1]
    return np.sum(terms[..., order], axis=-1)


def annulus_bergman_minimizer_coefficients(q: float, w: complex, degree: int) -> np.ndarray:
    """Laurent coefficients of B(., w)/B(w, w) for powers -degree..degree."""
    n = np.arange(-degree, degree + 1)
    c = np.conj(w) ** n / annulus_monomial_norms(q, n)
    return c / np.real(annulus_bergman_series(q, w, w))
