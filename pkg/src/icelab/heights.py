"""Height functions, ice-rule spin configurations, arrow configurations.

The three equivalent descriptions of six-vertex configurations on a domain,
with the bijections between them and the Boltzmann weights, including the
modified boundary weight c_b for vertices that touch exactly one face.

Vertex-type convention (fixed here once and for all): at a vertex the four
surrounding faces form two diagonals, NW-SE and NE-SW. A vertex is

* type a when the NW-SE diagonal heights differ (by 2),
* type b when the NE-SW diagonal heights differ,
* type c when both diagonals agree.

A global 90-degree rotation swaps the a and b conventions; for a = b the
measure is unaffected, and for a != b the convention is pinned by the
coupling identities checked in the oracle suite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .lattice import (
    Domain,
    Face,
    Vertex,
    boundary_vertex_set,
    edge_faces,
    external_boundary,
    face_neighbors,
    face_vertices,
    parity,
    vertex_faces,
)


@dataclass(frozen=True)
class ModelParams:
    """Vertex weights (a, b, c) plus the optional boundary c-weight c_b.

    Weights may be ints, floats, Fractions or mpmath values; all weight
    computations follow the arithmetic of the given type.
    """

    a: object
    b: object
    c: object
    c_b: Optional[object] = None

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ValueError("vertex weights a, b, c must be positive")
        if self.c_b is not None and not self.c_b >= 0:
            raise ValueError("c_b must be nonnegative (possibly math.inf)")

    @property
    def delta(self):
        return (self.a * self.a + self.b * self.b - self.c * self.c) / (2 * self.a * self.b)


class VertexType(enum.Enum):
    A1 = "a1"
    A2 = "a2"
    B1 = "b1"
    B2 = "b2"
    C1 = "c1"
    C2 = "c2"

    @property
    def weight_class(self) -> str:
        return self.value[0]


class IceRuleError(ValueError):
    pass


class BoundaryVertexError(ValueError):
    """Raised when a vertex has fewer than four defined faces."""


def flat_boundary(n: int) -> Callable[[Face], int]:
    """The flat (n, n+1) boundary condition: n on faces of n's parity."""

    def bc(u: Face) -> int:
        return n if parity(u) == (n & 1) else n + 1

    return bc


def spin_boundary(even_sign: int, odd_sign: int) -> Callable[[Face], int]:
    def bc(u: Face) -> int:
        return even_sign if parity(u) == 0 else odd_sign

    return bc


@dataclass
class HeightFunction:
    """Integer heights on the faces of a domain, with a global boundary rule.

    ``values`` covers the domain faces; every face outside the domain takes its
    value from ``boundary_condition``.
    """

    domain: Domain
    values: dict[Face, int]
    boundary_condition: Callable[[Face], int]

    def value(self, u: Face) -> int:
        v = self.values.get(u)
        return self.boundary_condition(u) if v is None else v

    def validate(self) -> None:
        for u in self.domain.faces:
            if u not in self.values:
                raise ValueError(f"missing height at {u}")
            if (self.values[u] & 1) != parity(u):
                raise ValueError(f"height parity mismatch at {u}")
            for v in face_neighbors(u):
                if abs(self.value(u) - self.value(v)) != 1:
                    raise ValueError(f"height step != 1 between {u} and {v}")

    def with_values(self, values: dict[Face, int]) -> "HeightFunction":
        return HeightFunction(self.domain, values, self.boundary_condition)


@dataclass
class SpinConfig:
    """Ice-rule +-1 spins on the faces of a domain with a global boundary rule."""

    domain: Domain
    values: dict[Face, int]
    boundary_condition: Callable[[Face], int]

    def value(self, u: Face) -> int:
        v = self.values.get(u)
        return self.boundary_condition(u) if v is None else v

    def validate(self) -> None:
        for u in self.domain.faces:
            if self.values.get(u) not in (-1, 1):
                raise ValueError(f"missing or invalid spin at {u}")
        for z in self.domain.vertices():
            sw, se, ne, nw = (self.value(f) for f in vertex_faces(z))
            if nw != se and ne != sw:
                raise IceRuleError(f"ice rule violated at vertex {z}")


def classify_vertex(h: HeightFunction, z: Vertex) -> VertexType:
    """Vertex type from the four surrounding heights."""
    faces = vertex_faces(z)
    try:
        sw, se, ne, nw = (h.value(f) for f in faces)
    except Exception as exc:  # undefined face
        raise BoundaryVertexError(f"vertex {z} has an undefined face") from exc
    return _classify(sw, se, ne, nw)


def _classify(sw: int, se: int, ne: int, nw: int) -> VertexType:
    d_nwse = nw - se
    d_nesw = ne - sw
    if d_nwse != 0 and d_nesw != 0:
        raise IceRuleError("both diagonals split: not a valid local height pattern")
    if d_nwse != 0:
        return VertexType.A1 if d_nwse > 0 else VertexType.A2
    if d_nesw != 0:
        return VertexType.B1 if d_nesw > 0 else VertexType.B2
    return VertexType.C1 if nw - sw > 0 else VertexType.C2


def classify_vertex_spins(sigma: SpinConfig, z: Vertex) -> VertexType:
    sw, se, ne, nw = (sigma.value(f) for f in vertex_faces(z))
    a_split = nw != se
    b_split = ne != sw
    if a_split and b_split:
        raise IceRuleError(f"ice rule violated at vertex {z}")
    if a_split:
        return VertexType.A1 if nw > se else VertexType.A2
    if b_split:
        return VertexType.B1 if ne > sw else VertexType.B2
    return VertexType.C1 if nw != sw else VertexType.C2


def _vertex_weight(p: ModelParams, t: VertexType):
    cls = t.weight_class
    if cls == "a":
        return p.a
    if cls == "b":
        return p.b
    return p.c


def height_weight(h: HeightFunction, p: ModelParams, mode: str = "plain"):
    """Unnormalized Boltzmann weight of a height configuration.

    plain: product of a/b/c over all vertices of the domain.
    boundary_cb: a/b/c over interior vertices, c_b per boundary c-vertex
    (a/b-type boundary vertices weigh one). Requires a fixed-parity domain.
    """
    if mode == "plain":
        w = 1
        for z in h.domain.vertices():
            w = w * _vertex_weight(p, classify_vertex(h, z))
        return w
    if mode != "boundary_cb":
        raise ValueError(f"unknown mode {mode!r}")
    if p.c_b is None:
        raise ValueError("boundary_cb mode needs c_b in the parameters")
    if p.c_b == math.inf:
        raise ValueError("c_b = inf is a limiting measure; use the enumeration path")
    if h.domain.parity_class not in ("even", "odd"):
        raise ValueError("boundary_cb mode requires a fixed-parity domain")
    bvs = boundary_vertex_set(h.domain)
    w = 1
    for z in h.domain.vertices():
        t = classify_vertex(h, z)
        if z in bvs:
            if t.weight_class == "c":
                w = w * p.c_b
        else:
            w = w * _vertex_weight(p, t)
    return w


def boundary_c_count(h: HeightFunction) -> int:
    """Number of boundary vertices (one incident domain face) of type c."""
    return sum(
        1
        for z in boundary_vertex_set(h.domain)
        if classify_vertex(h, z).weight_class == "c"
    )


# ---------------------------------------------------------------------------
# Height <-> spin
# ---------------------------------------------------------------------------


def _spin_of_height(n: int) -> int:
    return 1 if n % 4 in (0, 1) else -1


def height_to_spin(h: HeightFunction) -> SpinConfig:
    """Spin = +1 where the height is 0,1 mod 4 and -1 where it is 2,3 mod 4."""
    values = {u: _spin_of_height(v) for u, v in h.values.items()}
    bc = h.boundary_condition
    return SpinConfig(h.domain, values, lambda u: _spin_of_height(bc(u)))


def spin_to_height(
    sigma: SpinConfig, anchor: Face, anchor_value: int
) -> HeightFunction:
    """The unique height lift with the given anchor value.

    The anchor value must have the parity of the anchor face and map to the
    anchor spin under the mod-4 rule.
    """
    if (anchor_value & 1) != parity(anchor):
        raise ValueError("anchor value parity does not match the anchor face")
    if _spin_of_height(anchor_value) != sigma.value(anchor):
        raise ValueError("anchor value inconsistent with the spin at the anchor")
    sigma.validate()
    known_faces = set(sigma.domain.faces) | external_boundary(sigma.domain)
    values: dict[Face, int] = {anchor: anchor_value}
    stack = [anchor]
    while stack:
        u = stack.pop()
        hu = values[u]
        for v in face_neighbors(u):
            if v not in known_faces:
                continue
            up, down = hu + 1, hu - 1
            sv = sigma.value(v)
            # exactly one of hu+1, hu-1 matches the spin at v
            hv = up if _spin_of_height(up) == sv else down
            if _spin_of_height(hv) != sv:
                raise IceRuleError(f"no height lift consistent with spin at {v}")
            if v in values:
                if values[v] != hv:
                    raise IceRuleError(f"inconsistent lift at {v}")
            else:
                values[v] = hv
                stack.append(v)
    dom_values = {u: values[u] for u in sigma.domain.faces}
    ext = {u: values[u] for u in known_faces if u not in sigma.domain.faces}
    return HeightFunction(sigma.domain, dom_values, lambda u, _e=ext: _e[u])


def spin_weight(sigma: SpinConfig, p: ModelParams, mode: str = "plain"):
    """Weight of a spin configuration (gradient function of any height lift)."""
    if mode == "plain":
        w = 1
        for z in sigma.domain.vertices():
            w = w * _vertex_weight(p, classify_vertex_spins(sigma, z))
        return w
    if mode != "boundary_cb":
        raise ValueError(f"unknown mode {mode!r}")
    if p.c_b is None:
        raise ValueError("boundary_cb mode needs c_b in the parameters")
    if sigma.domain.parity_class not in ("even", "odd"):
        raise ValueError("boundary_cb mode requires a fixed-parity domain")
    bvs = boundary_vertex_set(sigma.domain)
    w = 1
    for z in sigma.domain.vertices():
        t = classify_vertex_spins(sigma, z)
        if z in bvs:
            if t.weight_class == "c":
                w = w * p.c_b
        else:
            w = w * _vertex_weight(p, t)
    return w


# ---------------------------------------------------------------------------
# Height <-> arrows
# ---------------------------------------------------------------------------

Edge = tuple[Vertex, Vertex]  # sorted doubled-coordinate endpoints


def domain_edges(dom: Domain) -> list[Edge]:
    """Lattice edges bordering at least one face of the domain, sorted."""
    es = set()
    for f in dom.faces:
        i, j = f
        x, y = 2 * i, 2 * j
        quad = [(x - 1, y - 1), (x + 1, y - 1), (x + 1, y + 1), (x - 1, y + 1)]
        for a, b in zip(quad, quad[1:] + quad[:1]):
            es.add(tuple(sorted((a, b))))
    return sorted(es)


@dataclass
class ArrowConfig:
    """Edge orientations: +1 when the even bordering face lies on the arrow's left.

    Equivalently, orientation[e] = +1 iff the odd face bordering e sits one
    height step above the even face.
    """

    domain: Domain
    orientation: dict[Edge, int]

    def validate(self) -> None:
        for e, o in self.orientation.items():
            if o not in (-1, 1):
                raise ValueError(f"invalid orientation at {e}")
        for z in self.domain.vertices():
            # local pattern must be a closed height walk around the vertex;
            # only checkable where all four incident edges are stored
            faces = vertex_faces(z)
            edges = [_edge_between(u, v) for u, v in zip(faces, faces[1:] + faces[:1])]
            if any(e not in self.orientation for e in edges):
                continue
            total = 0
            for (u, v), e in zip(zip(faces, faces[1:] + faces[:1]), edges):
                sign = self.orientation[e]
                total += sign if parity(u) == 0 else -sign
            if total != 0:
                raise IceRuleError(f"arrow ice rule violated at vertex {z}")


def _edge_between(u: Face, v: Face) -> Edge:
    shared = [z for z in face_vertices(u) if z in set(face_vertices(v))]
    if len(shared) != 2:
        raise ValueError(f"faces {u} and {v} are not adjacent")
    return tuple(sorted(shared))


def height_to_arrows(h: HeightFunction) -> ArrowConfig:
    orientation = {}
    for e in domain_edges(h.domain):
        u1, u2 = edge_faces(*e)
        even, odd = (u1, u2) if parity(u1) == 0 else (u2, u1)
        orientation[e] = 1 if h.value(odd) - h.value(even) == 1 else -1
    return ArrowConfig(h.domain, orientation)


def arrows_to_height(
    arrows: ArrowConfig, anchor: Face, anchor_value: int
) -> HeightFunction:
    """Integrate arrow gradients to heights, anchored at one face."""
    if (anchor_value & 1) != parity(anchor):
        raise ValueError("anchor value parity does not match the anchor face")
    arrows.validate()
    dom = arrows.domain
    values = {anchor: anchor_value}
    stack = [anchor]
    while stack:
        u = stack.pop()
        for v in face_neighbors(u):
            e = tuple(sorted(set(face_vertices(u)) & set(face_vertices(v))))
            if e not in arrows.orientation:
                continue
            even, odd = (u, v) if parity(u) == 0 else (v, u)
            step = arrows.orientation[e]  # h(odd) - h(even)
            hv = values[u] + step if u == even else values[u] - step
            if v in values:
                if values[v] != hv:
                    raise IceRuleError(f"arrow gradients inconsistent at {v}")
            elif v in dom.faces or v in external_boundary(dom):
                values[v] = hv
                stack.append(v)
    dom_values = {u: values[u] for u in dom.faces}
    ext = {u: v for u, v in values.items() if u not in dom.faces}
    return HeightFunction(dom, dom_values, lambda u, _e=ext: _e[u])


def arrow_event_A(arrows: ArrowConfig, e: Edge) -> bool:
    """Indicator that the even face bordering e lies on the arrow's left."""
    if e not in arrows.orientation:
        raise ValueError(f"edge {e} not in the configuration")
    return arrows.orientation[e] == 1


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------


def height_to_text(h: HeightFunction) -> str:
    """Row-major grid over the bounding box of domain + external boundary.

    Rows run from the top (largest j) down; '*' marks faces outside
    domain + external boundary.
    """
    ext = external_boundary(h.domain)
    shown = set(h.domain.faces) | ext
    xs = [f[0] for f in shown]
    ys = [f[1] for f in shown]
    lines = []
    for j in range(max(ys), min(ys) - 1, -1):
        row = []
        for i in range(min(xs), max(xs) + 1):
            row.append(str(h.value((i, j))) if (i, j) in shown else "*")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def spin_to_text(sigma: SpinConfig) -> str:
    ext = external_boundary(sigma.domain)
    shown = set(sigma.domain.faces) | ext
    xs = [f[0] for f in shown]
    ys = [f[1] for f in shown]
    lines = []
    for j in range(max(ys), min(ys) - 1, -1):
        row = []
        for i in range(min(xs), max(xs) + 1):
            if (i, j) in shown:
                row.append("+" if sigma.value((i, j)) == 1 else "-")
            else:
                row.append("*")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def height_from_text(
    text: str, dom: Domain, bc: Callable[[Face], int]
) -> HeightFunction:
    ext = external_boundary(dom)
    shown = set(dom.faces) | ext
    xs = [f[0] for f in shown]
    ys = [f[1] for f in shown]
    rows = [ln.split() for ln in text.strip().splitlines()]
    values = {}
    for rj, row in enumerate(rows):
        j = max(ys) - rj
        for ri, tok in enumerate(row):
            i = min(xs) + ri
            if tok == "*":
                continue
            if (i, j) in dom.faces:
                values[(i, j)] = int(tok)
    h = HeightFunction(dom, values, bc)
    h.validate()
    return h
