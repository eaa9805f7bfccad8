"""Circular planar domains: the unit disc, the annulus A(q, 1) and the unit
disc with finitely many closed sub-discs removed.

Boundary circles are indexed with the outer unit circle first, then the
holes in declaration order.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DISC = "disc"
ANNULUS = "annulus"
CIRCULAR = "circular"


class DomainError(ValueError):
    """Invalid domain description or a point outside the domain."""


def parse_complex(text: str | complex | float) -> complex:
    """Parse ``a+bi`` / ``a+bj`` / ``0.3`` / ``0.5i`` into a complex number."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("I", "i").replace("i", "j")
    if not s:
        raise ValueError("empty complex literal")
    if s in ("j", "+j", "-j"):
        s = s.replace("j", "1j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ValueError(f"cannot parse complex number {text!r}") from exc


def format_complex(z: complex) -> str:
    # shortest round-trip repr of each part
    im = repr(float(z.imag))
    return f"{float(z.real)!r}{'' if im.startswith('-') else '+'}{im}i"


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    q: float | None = None
    holes: tuple[tuple[complex, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == DISC:
            if self.q is not None or self.holes:
                raise DomainError("the unit disc takes no q or holes")
        elif self.kind == ANNULUS:
            if self.q is None or not (0.0 < float(self.q) < 1.0):
                raise DomainError("q must be in (0,1)")
            if self.holes:
                raise DomainError("annulus takes q, not holes")
            object.__setattr__(self, "q", float(self.q))
        elif self.kind == CIRCULAR:
            holes = tuple((complex(c), float(rad)) for c, rad in self.holes)
            if not holes:
                raise DomainError("a circular domain needs at least one hole")
            for c, rad in holes:
                if rad <= 0:
                    raise DomainError("hole radii must be positive")
                if abs(c) + rad >= 1.0:
                    raise DomainError(f"hole ({c}, {rad}) is not inside the open unit disc")
            for i, (c1, r1) in enumerate(holes):
                for c2, r2 in holes[i + 1:]:
                    if abs(c1 - c2) <= r1 + r2:
                        raise DomainError("hole closures must be pairwise disjoint")
            object.__setattr__(self, "holes", holes)
        else:
            raise DomainError(f"unknown domain kind {self.kind!r}")

    @property
    def hole_list(self) -> tuple[tuple[complex, float], ...]:
        """Holes as (center, radius); the annulus has one hole at 0 of radius q."""
        if self.kind == ANNULUS:
            return ((0j, self.q),)
        return self.holes

    @property
    def circles(self) -> tuple[tuple[complex, float], ...]:
        return ((0j, 1.0),) + self.hole_list

    @property
    def n_components(self) -> int:
        return 1 + len(self.hole_list)

    def area(self) -> float:
        return np.pi * (1.0 - sum(rad * rad for _, rad in self.hole_list))

    def describe(self) -> str:
        if self.kind == DISC:
            return "domain=disc"
        if self.kind == ANNULUS:
            return f"domain=annulus q={self.q!r}"
        inner = ",".join(f"({format_complex(c)},{rad!r})" for c, rad in self.holes)
        return f"domain=circular holes=[{inner}]"

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == ANNULUS:
            out["q"] = self.q
        if self.kind == CIRCULAR:
            out["holes"] = [[format_complex(c), rad] for c, rad in self.holes]
        return out


def unit_disc() -> DomainSpec:
    return DomainSpec(DISC)


def annulus(q: float) -> DomainSpec:
    return DomainSpec(ANNULUS, q=q)


def circular_domain(holes: Sequence[tuple[complex, float]]) -> DomainSpec:
    return DomainSpec(CIRCULAR, holes=tuple(holes))


def parse_holes(text: str) -> tuple[tuple[complex, float], ...]:
    """Parse ``[(0.3+0.0i,0.1),(-0.4i,0.05)]``."""
    s = text.strip()
    pairs = re.findall(r"\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)", s)
    if not pairs:
        raise DomainError(f"cannot parse holes {text!r}")
    return tuple((parse_complex(c), float(ast.literal_eval(r))) for c, r in pairs)


def parse_domain(text: str) -> DomainSpec:
    """Parse ``domain=disc``, ``domain=annulus q=0.5`` or
    ``domain=circular holes=[(0.3+0.0i,0.1)]``."""
    tokens = dict(
        (k.strip(), v.strip())
        for k, v in re.findall(r"(\w+)\s*=\s*(\[[^\]]*\]|\S+)", text)
    )
    kind = tokens.get("domain", text.strip() if "=" not in text else None)
    if kind == DISC:
        return unit_disc()
    if kind == ANNULUS:
        if "q" not in tokens:
            raise DomainError("annulus needs q")
        return annulus(float(tokens["q"]))
    if kind == CIRCULAR:
        if "holes" not in tokens:
            raise DomainError("circular domain needs holes")
        return circular_domain(parse_holes(tokens["holes"]))
    raise DomainError(f"unknown domain in {text!r}")


def contains(domain: DomainSpec, z) -> bool | np.ndarray:
    """True where ``z`` lies in the open domain."""
    z = np.asarray(z, dtype=complex)
    inside = np.abs(z) < 1.0
    for c, rad in domain.hole_list:
        inside &= np.abs(z - c) > rad
    return bool(inside) if inside.ndim == 0 else inside


def boundary_distance(domain: DomainSpec, z) -> float | np.ndarray:
    """Distance from interior points to the nearest boundary circle."""
    z = np.asarray(z, dtype=complex)
    d = 1.0 - np.abs(z)
    for c, rad in domain.hole_list:
        d = np.minimum(d, np.abs(z - c) - rad)
    return float(d) if d.ndim == 0 else d


def reflections(domain: DomainSpec, w: complex, depth: int = 2,
                max_distance: float = 50.0) -> tuple[complex, ...]:
    """Images of w under successive reflection in the boundary circles (no
    circle twice in a row), up to ``depth`` reflections. Images farther than
    ``max_distance`` radii from their circle's centre are skipped."""
    circles = domain.circles
    out: list[complex] = []
    frontier = [(complex(w), -1)]
    for _ in range(depth):
        nxt = []
        for z, last in frontier:
            for i, (c, rad) in enumerate(circles):
                if i == last or abs(z - c) < rad / max_distance:
                    continue
                p = c + rad * rad / np.conj(z - c)
                nxt.append((complex(p), i))
                if all(abs(p - q) > 1e-12 for q in out):
                    out.append(complex(p))
        frontier = nxt
    return tuple(out)


@dataclass(frozen=True)
class BoundaryPoint:
    position: complex
    outer_normal: complex
    arclength_weight: float
    component_index: int


@dataclass(frozen=True)
class BoundaryNodes:
    """Structure-of-arrays view of a boundary sampling."""

    position: np.ndarray
    outer_normal: np.ndarray
    arclength_weight: np.ndarray
    component_index: np.ndarray
    nodes_per_component: int

    def __len__(self) -> int:
        return len(self.position)

    def __getitem__(self, i: int) -> BoundaryPoint:
        return BoundaryPoint(
            complex(self.position[i]),
            complex(self.outer_normal[i]),
            float(self.arclength_weight[i]),
            int(self.component_index[i]),
        )

    def __iter__(self) -> Iterator[BoundaryPoint]:
        return (self[i] for i in range(len(self)))


def sample_boundary(domain: DomainSpec, nodes_per_component: int) -> BoundaryNodes:
    """Equispaced-in-angle nodes on every boundary circle, starting at angle 0."""
    n = int(nodes_per_component)
    if n <= 0 or n != nodes_per_component:
        raise ValueError("nodes_per_component must be a positive integer")
    e = np.exp(2j * np.pi * np.arange(n) / n)
    pos, nrm, arc, comp = [], [], [], []
    for k, (c, rad) in enumerate(domain.circles):
        pos.append(c + rad * e)
        # outward from the domain: away from the origin on the unit circle,
        # into the hole on inner circles
        nrm.append(e if k == 0 else -e)
        arc.append(np.full(n, 2 * np.pi * rad / n))
        comp.append(np.full(n, k, dtype=np.int64))
    return BoundaryNodes(
        np.concatenate(pos),
        np.concatenate(nrm),
        np.concatenate(arc),
        np.concatenate(comp),
        n,
    )
