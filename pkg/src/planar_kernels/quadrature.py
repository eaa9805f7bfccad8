"""Boundary and area quadrature.

Boundary integrals are trapezoidal in angle on each circle, hence spectrally
accurate for analytic integrands. Area integrals use polar rules: a tensor
Gauss-Legendre x trapezoid rule on the whole disc or annulus, and a
ray-clipped rule for Green sublevel sets ``{e^{2G(., w)} < r}``. Rays start
at ``w`` or at the outer centre, radial limits are located by bisection on
the level curve, and tangent rays split the angle range into pieces, so that
Gauss-Legendre is applied on exact intervals in both variables.

Error estimates compare ``resolution`` with ``2 * resolution``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .geometry import ANNULUS, DISC, BoundaryNodes, DomainSpec, sample_boundary
from .green import GreenEvaluator

BISECTION_STEPS = 56
GOLDEN_STEPS = 40
CENTER_SCAN = 16
MIN_SCAN = 128
ANGLE_BISECTION_STEPS = 48
RAY_SAMPLES = 48
MIN_PIECE_NODES = 8
ANGULAR_DIGITS = 37.0  # e^-37 ~ 1e-16


def _legendre(n, x):
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, n * (x * p1 - p0) / (x * x - 1)


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    # leggauss endpoint weights carry ~1e-11 relative error, which matters for
    # integrands peaked at the ends; polish nodes and weights in long double
    x, _ = np.polynomial.legendre.leggauss(n)
    x = x.astype(np.longdouble)
    for _ in range(2):
        p, dp = _legendre(n, x)
        x = x - p / dp
    _, dp = _legendre(n, x)
    u = 2 / ((1 - x * x) * dp * dp)
    return np.asarray((x + 1) / 2, dtype=float), np.asarray(u / 2, dtype=float)


def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, u = _gauss_legendre(int(n))
    return x.copy(), u.copy()


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float


# ---------------------------------------------------------------- boundary

@dataclass(frozen=True)
class BoundarySampling:
    """Boundary nodes with the weight (dG(z, center)/d nu)^-1 at each node."""

    points: BoundaryNodes
    weight_values: np.ndarray
    center: complex

    def measure(self) -> np.ndarray:
        """Per-node weight of (dG/dnu)^-1 d|z|."""
        return self.weight_values * self.points.arclength_weight


def boundary_sampling(ev: GreenEvaluator, w: complex, nodes_per_component: int) -> BoundarySampling:
    pts = sample_boundary(ev.domain, nodes_per_component)
    dn = ev.normal_derivative(pts, w)
    return BoundarySampling(pts, 1.0 / dn, complex(w))


def boundary_integral(sampling: BoundarySampling, integrand: Callable) -> float:
    """sum integrand(z) (dG/dnu)^-1 d|z| over the boundary nodes."""
    vals = np.asarray(integrand(sampling.points.position), dtype=float)
    vals = np.broadcast_to(vals, sampling.weight_values.shape)
    return float(np.sum(vals * sampling.measure()))


# ---------------------------------------------------------------- area rules

@dataclass(frozen=True)
class PolarTensor:
    """Tensor structure of a rule: nodes center + rho_i e^{i theta_k}."""

    center: complex
    rho: np.ndarray
    rho_weight: np.ndarray  # includes the Jacobian rho
    theta: np.ndarray
    theta_weight: float


@dataclass(frozen=True)
class SublevelQuadrature:
    nodes: np.ndarray
    area_weight: np.ndarray
    level_r: float
    center: complex
    estimated_area_error: float = 0.0
    tensor: PolarTensor | None = None
    rays_center: complex | None = None

    def __len__(self):
        return self.nodes.size

    @property
    def area(self) -> float:
        return float(np.sum(self.area_weight))

    def integrate(self, f: Callable | np.ndarray) -> float:
        vals = f(self.nodes) if callable(f) else f
        return float(np.sum(np.asarray(vals, dtype=float) * self.area_weight))


def _resolution_split(resolution: int) -> tuple[int, int]:
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    return int(resolution), max(8, int(resolution) // 2)


def angular_count(domain: DomainSpec, w: complex, n_ang: int) -> int:
    """Angles needed on concentric circles so that the periodic trapezoid rule
    resolves |f|^2 for f with double poles at the reflections of w.  The error
    decays like ratio^n / (1 - ratio)^4, ratio being the reflection's distance
    relative to the circle."""
    ratio = abs(w)
    if domain.kind == ANNULUS and w != 0:
        ratio = max(ratio, domain.q / abs(w))
    if ratio <= 0.0:
        return n_ang
    need = int(np.ceil((ANGULAR_DIGITS - 4 * np.log1p(-ratio)) / -np.log(ratio)))
    return max(n_ang, 8 * -(-need // 8))


def full_domain_rule(ev: GreenEvaluator, resolution: int, w: complex | None = None) -> SublevelQuadrature:
    """Rule on the whole domain (the r = 1 sublevel set).  Given w, the
    angular count on the disc and annulus is raised to resolve poles of the
    minimiser at reflections of w."""
    domain = ev.domain
    n_ang, n_rad = _resolution_split(resolution)
    if domain.kind in (DISC, ANNULUS):
        if w is not None:
            n_ang = angular_count(domain, complex(w), n_ang)
        rmin = 0.0 if domain.kind == DISC else domain.q
        x, u = gauss_legendre01(n_rad)
        rho = rmin + (1.0 - rmin) * x
        rw = u * (1.0 - rmin) * rho
        theta = 2 * np.pi * (np.arange(n_ang) + 0.5) / n_ang
        tw = 2 * np.pi / n_ang
        nodes = (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
        weights = np.repeat(rw * tw, n_ang)
        tensor = PolarTensor(0j, rho, rw, theta, tw)
        return SublevelQuadrature(nodes, weights, 1.0, 0j, 0.0, tensor, None)
    nodes, weights = _ray_rule(ev, None, 0.0, 0j, n_ang, n_rad)
    return SublevelQuadrature(nodes, weights, 1.0, 0j, 0.0, None, 0j)


def _domain_segments(domain: DomainSpec, p: complex, e: np.ndarray):
    """Intervals [t0, t1] of the ray p + t e (t >= 0) inside the domain."""
    b = np.real(np.conj(p) * e)
    t_out = -b + np.sqrt(b * b - (abs(p) ** 2 - 1.0))
    segs = [[(0.0, float(t))] for t in t_out]
    for c, rad in domain.hole_list:
        d = p - c
        bb = np.real(np.conj(d) * e)
        disc = bb * bb - (abs(d) ** 2 - rad * rad)
        for k in np.nonzero(disc > 0)[0]:
            s = np.sqrt(disc[k])
            t1, t2 = -bb[k] - s, -bb[k] + s
            if t2 <= 0:
                continue
            new = []
            for a, bnd in segs[k]:
                if t2 <= a or t1 >= bnd:
                    new.append((a, bnd))
                    continue
                if t1 > a:
                    new.append((a, t1))
                if t2 < bnd:
                    new.append((t2, bnd))
            segs[k] = new
    ray, s0, s1 = [], [], []
    for k, lst in enumerate(segs):
        for a, bnd in lst:
            ray.append(k)
            s0.append(a)
            s1.append(bnd)
    return np.array(ray, dtype=np.int64), np.array(s0), np.array(s1)


def _refine_extrema(ev, w, level, p, dirs, lo, hi, sign):
    """Golden-section search for a minimum (sign=+1) or maximum (sign=-1)
    of G(p + t dir, w) - level on [lo, hi]."""
    g = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.copy(), hi.copy()
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc = sign * (ev.green(p + c * dirs, w) - level)
    fd = sign * (ev.green(p + d * dirs, w) - level)
    for _ in range(GOLDEN_STEPS):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + g * (b - a))
        c_new = np.where(left, b - g * (b - a), d)
        fd = np.where(left, fc, np.nan)
        fc = np.where(left, np.nan, fd)
        c, d = c_new, d_new
        need_c = np.isnan(fc)
        need_d = np.isnan(fd)
        if need_c.any():
            fc[need_c] = sign * (ev.green(p + c[need_c] * dirs[need_c], w) - level)
        if need_d.any():
            fd[need_d] = sign * (ev.green(p + d[need_d] * dirs[need_d], w) - level)
    return 0.5 * (a + b)


def _ray_intervals(ev: GreenEvaluator, w: complex | None, level: float, p: complex,
                   theta: np.ndarray, count_only: bool = False):
    """Intervals (ray index, t0, t1) of {G(p + t e^{i theta}, w) < level}
    inside the domain; ``w=None`` keeps whole domain segments."""
    e = np.exp(1j * theta)
    ray, s0, s1 = _domain_segments(ev.domain, p, e)
    if w is None:
        return ray, s0, s1
    nseg = len(s0)
    t = np.arange(1, RAY_SAMPLES + 1) / (RAY_SAMPLES + 1)
    ts = s0[:, None] + (s1 - s0)[:, None] * t[None, :]
    dirs_s = np.broadcast_to(e[ray][:, None], ts.shape)
    phi = ev.green(p + ts * dirs_s, w) - level
    # boundary circles carry G = 0 > level; t = 0 at p = w is the pole
    if p == w:
        first = np.where(s0 == 0.0, -np.inf, 1.0)
    else:
        first = np.where(s0 == 0.0, ev.green(p + s0 * e[ray], w) - level, 1.0)
    phi = np.concatenate([first[:, None], phi, np.ones((nseg, 1))], axis=1)
    tt = np.concatenate([s0[:, None], ts, s1[:, None]], axis=1)
    # refine sampled local extrema so thin intervals and thin gaps are seen
    mid = phi[:, 1:-1]
    is_min = (mid <= phi[:, :-2]) & (mid <= phi[:, 2:]) & (mid > 0)
    is_max = (mid >= phi[:, :-2]) & (mid >= phi[:, 2:]) & (mid < 0)
    extra_t = np.full(mid.shape, np.nan)
    for flag, sign in ((is_min, 1.0), (is_max, -1.0)):
        si, ci = np.nonzero(flag)
        if si.size:
            tx = _refine_extrema(ev, w, level, p, e[ray[si]],
                                 tt[si, ci], tt[si, ci + 2], sign)
            extra_t[si, ci] = tx
    if np.isfinite(extra_t).any():
        si, ci = np.nonzero(np.isfinite(extra_t))
        extra_phi = np.full(mid.shape, np.nan)
        extra_phi[si, ci] = ev.green(p + extra_t[si, ci] * e[ray[si]], w) - level
        tt = np.concatenate([tt, extra_t], axis=1)
        phi = np.concatenate([phi, extra_phi], axis=1)
        order = np.argsort(np.where(np.isnan(tt), np.inf, tt), axis=1, kind="stable")
        tt = np.take_along_axis(tt, order, axis=1)
        phi = np.take_along_axis(phi, order, axis=1)
        # trailing NaN columns repeat the last finite sample
        last = np.isnan(phi)
        tt = np.where(last, s1[:, None], tt)
        phi = np.where(last, 1.0, phi)
    inside = phi < 0
    if count_only:
        n_in = inside[:, 0] + np.sum(inside[:, 1:] & ~inside[:, :-1], axis=1)
        return np.repeat(ray, n_in), None, None
    seg_idx, col = np.nonzero(inside[:, 1:] != inside[:, :-1])
    lo = tt[seg_idx, col].copy()
    hi = tt[seg_idx, col + 1].copy()
    lo_in = inside[seg_idx, col]
    dirs = e[ray[seg_idx]]
    for _ in range(BISECTION_STEPS):
        m = 0.5 * (lo + hi)
        same = (ev.green(p + m * dirs, w) - level < 0) == lo_in
        lo = np.where(same, m, lo)
        hi = np.where(same, hi, m)
    roots = 0.5 * (lo + hi)
    out_ray, out_a, out_b = [], [], []
    starts = np.searchsorted(seg_idx, np.arange(nseg + 1))
    for s in range(nseg):
        pts = list(roots[starts[s]:starts[s + 1]])
        edges = ([s0[s]] if inside[s, 0] else []) + pts + ([s1[s]] if inside[s, -1] else [])
        for a, bnd in zip(edges[::2], edges[1::2]):
            if bnd > a:
                out_ray.append(ray[s])
                out_a.append(a)
                out_b.append(bnd)
    return (np.array(out_ray, dtype=np.int64), np.array(out_a, dtype=float),
            np.array(out_b, dtype=float))


def _interval_counts(ev, w, level, p, theta):
    ray, _, _ = _ray_intervals(ev, w, level, p, theta, count_only=True)
    return np.bincount(ray, minlength=theta.size)


def _angular_breakpoints(ev, w, level, p, n_scan):
    """Angles where the number of ray intervals changes (tangencies)."""
    n_scan = max(n_scan, MIN_SCAN)
    step = 2 * np.pi / n_scan
    theta = step * (np.arange(n_scan) + 0.5)
    counts = _interval_counts(ev, w, level, p, theta)
    jumps = np.nonzero(counts != np.roll(counts, -1))[0]
    if jumps.size == 0:
        return np.empty(0), counts
    lo, hi = theta[jumps], theta[jumps] + step
    c_lo, c_end = counts[jumps], counts[(jumps + 1) % n_scan]
    end = hi.copy()
    found, right = [], []
    while lo.size:
        for _ in range(ANGLE_BISECTION_STEPS):
            m = 0.5 * (lo + hi)
            same = _interval_counts(ev, w, level, p, m) == c_lo
            lo = np.where(same, m, lo)
            hi = np.where(same, hi, m)
        c_hi = _interval_counts(ev, w, level, p, hi)
        found.append(0.5 * (lo + hi))
        right.append(c_hi)
        # a second tangency between this break and the next scan angle
        more = (c_hi != c_end) & (end - hi > 1e-12)
        lo, hi, end = hi[more], end[more], end[more]
        c_lo, c_end = c_hi[more], c_end[more]
    breaks = np.mod(np.concatenate(found), 2 * np.pi)
    order = np.argsort(breaks)
    # count on the piece starting at each breakpoint
    return breaks[order], np.concatenate(right)[order]


def _angular_nodes(breaks: np.ndarray, piece_counts: np.ndarray, n_ang: int):
    """Trapezoid when the rays vary smoothly; otherwise Gauss-Legendre on
    each piece with a cosine map flattening the square-root tangencies."""
    if breaks.size == 0:
        theta = 2 * np.pi * (np.arange(n_ang) + 0.5) / n_ang
        return theta, np.full(n_ang, 2 * np.pi / n_ang)
    ends = np.append(breaks, breaks[0] + 2 * np.pi)
    covered = np.sum(np.diff(ends)[piece_counts > 0])
    thetas, weights = [], []
    for a, b, cnt in zip(ends[:-1], ends[1:], piece_counts):
        if cnt == 0:
            continue
        # a narrow window onto a hole still has to resolve Laurent terms that
        # wind around the whole hole, so every piece gets the radial count
        n = max(MIN_PIECE_NODES, n_ang // 2, int(np.ceil(n_ang * (b - a) / covered)))
        s, u = gauss_legendre01(n)
        thetas.append(a + (b - a) * 0.5 * (1 - np.cos(np.pi * s)))
        weights.append(u * (b - a) * 0.5 * np.pi * np.sin(np.pi * s))
    return np.mod(np.concatenate(thetas), 2 * np.pi), np.concatenate(weights)


def _complement(seg, ray, a, b):
    """Pieces of the domain segments not covered by the intervals."""
    seg_ray, s0, s1 = seg
    out_ray, out_a, out_b = [], [], []
    order = np.lexsort((a, ray))
    ray, a, b = ray[order], a[order], b[order]
    starts = np.searchsorted(ray, seg_ray, side="left")
    ends = np.searchsorted(ray, seg_ray, side="right")
    for k in range(seg_ray.size):
        cur = s0[k]
        for j in range(starts[k], ends[k]):
            if a[j] >= s1[k] or b[j] <= s0[k]:
                continue
            if a[j] > cur:
                out_ray.append(seg_ray[k])
                out_a.append(cur)
                out_b.append(a[j])
            cur = max(cur, b[j])
        if s1[k] > cur:
            out_ray.append(seg_ray[k])
            out_a.append(cur)
            out_b.append(s1[k])
    return (np.array(out_ray, dtype=np.int64), np.array(out_a, dtype=float),
            np.array(out_b, dtype=float))


def _ray_rule(ev: GreenEvaluator, w: complex | None, level: float, p: complex,
              n_ang: int, n_rad: int, shell: bool = False):
    """Ray-clipped polar rule about ``p`` for {G(., w) < level}, or for its
    complement in the domain when ``shell`` is set; ``w=None`` keeps the
    whole domain."""
    breaks, piece_counts = _angular_breakpoints(ev, w, level, p, n_ang)
    if shell:
        piece_counts = np.ones_like(piece_counts)
    theta, tw = _angular_nodes(breaks, piece_counts, n_ang)
    ray, a, b = _ray_intervals(ev, w, level, p, theta)
    e = np.exp(1j * theta)
    if shell:
        ray, a, b = _complement(_domain_segments(ev.domain, p, e), ray, a, b)
    x, u = gauss_legendre01(n_rad)
    length = b - a
    tq = a[:, None] + length[:, None] * x[None, :]
    nodes = p + tq * e[ray][:, None]
    weights = (length[:, None] * u[None, :]) * tq * tw[ray][:, None]
    return nodes.ravel(), weights.ravel()


def choose_ray_center(ev: GreenEvaluator, w: complex, level: float) -> complex:
    """Ray centre for the sublevel rule: ``w`` or the outer-circle centre,
    whichever gives the smaller coarse self-consistency gap in the area.

    Small sets are round about ``w``; large ones wrap around a hole as
    crescents that rays from the centre sweep smoothly."""
    best, best_gap = w, np.inf
    for p in (w, 0j) if w != 0 else (w,):
        try:
            a1 = np.sum(_ray_rule(ev, w, level, p, CENTER_SCAN, 8)[1])
            a2 = np.sum(_ray_rule(ev, w, level, p, 2 * CENTER_SCAN, 8)[1])
        except ValueError:
            continue
        if a2 <= 0:
            continue
        gap = abs(a2 - a1) / a2
        if gap < best_gap:
            best, best_gap = p, gap
    return best


def sublevel_rule(ev: GreenEvaluator, w: complex, r: float, resolution: int,
             center: complex | None = None) -> SublevelQuadrature:
    if r == 1.0:
        return full_domain_rule(ev, resolution, w)
    n_ang, n_rad = _resolution_split(resolution)
    level = 0.5 * np.log(r)
    if center is None:
        center = choose_ray_center(ev, w, level)
    nodes, weights = _ray_rule(ev, w, level, center, n_ang, n_rad)
    return SublevelQuadrature(nodes, weights, r, w, 0.0, None, center)


def shell_rule(ev: GreenEvaluator, w: complex, r: float, resolution: int,
               center: complex = 0j) -> SublevelQuadrature:
    """Direct rule on the shell {e^{2G(., w)} >= r}, a collar along the
    boundary swept by rays from the outer centre. There is no cancellation
    against the full domain, so very thin shells keep their relative
    accuracy."""
    if not 0.0 < r < 1.0:
        raise ValueError("shell level r must lie in (0, 1)")
    n_ang, n_rad = _resolution_split(resolution)
    level = 0.5 * np.log(r)
    nodes, weights = _ray_rule(ev, w, level, center, n_ang, n_rad, shell=True)
    return SublevelQuadrature(nodes, weights, r, w, 0.0, None, center)


def build_sublevel_rule(ev: GreenEvaluator, w: complex, r: float, resolution: int,
                        estimate_error: bool = True) -> SublevelQuadrature:
    """Quadrature rule on {z in D : e^{2G(z, w)} < r}.

    For r = 1 the set is the whole domain and the domain's own polar rule is
    used; otherwise rays from ``w`` are clipped at the level curve.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    w = ev.check_point(w, "w")
    rule = sublevel_rule(ev, w, float(r), resolution)
    if not estimate_error:
        return rule
    fine = sublevel_rule(ev, w, float(r), 2 * resolution, rule.rays_center)
    err = abs(fine.area - rule.area)
    return SublevelQuadrature(rule.nodes, rule.area_weight, rule.level_r, rule.center,
                              err, rule.tensor, rule.rays_center)


def shell_integral(ev: GreenEvaluator, w: complex, r: float, f_sq: Callable,
                   resolution: int) -> Estimate:
    """Integral of f_sq over the shell {e^{2G(., w)} >= r}, with the change
    from resolution to 2x resolution as error estimate."""
    w = ev.check_point(w, "w")
    coarse = shell_rule(ev, w, r, resolution).integrate(f_sq)
    fine = shell_rule(ev, w, r, 2 * resolution).integrate(f_sq)
    return Estimate(fine, abs(fine - coarse))
