"""Square-lattice geometry: domains of faces, corner graphs, triangular connectivity.

Faces of Z^2 live at integer centers (i, j); a face is even iff i+j is even.
Vertices of Z^2 live at half-integer points and are stored as doubled integers
(x2, y2), both odd, so that all coordinates stay integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

Face = tuple[int, int]
Vertex = tuple[int, int]  # doubled coordinates, both odd


def parity(face: Face) -> int:
    """0 for even faces (i+j even), 1 for odd."""
    return (face[0] + face[1]) & 1


def face_vertices(face: Face) -> list[Vertex]:
    """The four vertices of a face, in doubled coordinates."""
    i, j = face
    x, y = 2 * i, 2 * j
    return [(x - 1, y - 1), (x + 1, y - 1), (x + 1, y + 1), (x - 1, y + 1)]


def face_neighbors(face: Face) -> list[Face]:
    i, j = face
    return [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]


def vertex_faces(v: Vertex) -> list[Face]:
    """The four faces around a vertex, as (SW, SE, NE, NW)."""
    x2, y2 = v
    i, j = (x2 - 1) // 2, (y2 - 1) // 2  # SW face
    return [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]


def edge_faces(v1: Vertex, v2: Vertex) -> tuple[Face, Face]:
    """The two faces bordering the lattice edge v1-v2."""
    x1, y1 = v1
    x2, y2 = v2
    if x1 == x2:  # vertical edge
        j = (min(y1, y2) + 1) // 2
        return ((x1 - 1) // 2, j), ((x1 + 1) // 2, j)
    if y1 == y2:  # horizontal edge
        i = (min(x1, x2) + 1) // 2
        return (i, (y1 - 1) // 2), (i, (y1 + 1) // 2)
    raise ValueError(f"not a lattice edge: {v1}-{v2}")


def _vertex_edges(v: Vertex) -> list[tuple[Vertex, Vertex]]:
    x, y = v
    return [tuple(sorted((v, w))) for w in ((x + 2, y), (x - 2, y), (x, y + 2), (x, y - 2))]


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """A simply-connected set of faces together with its boundary cycle.

    ``boundary_cycle`` lists the vertices of the simple cyclic boundary path in
    order (doubled coordinates). ``parity_class`` is 'even'/'odd' when every
    face of the external boundary has that parity, else 'mixed'.
    """

    faces: frozenset[Face]
    boundary_cycle: tuple[Vertex, ...]

    @property
    def parity_class(self) -> str:
        pars = {parity(f) for f in external_boundary(self)}
        if pars == {0}:
            return "even"
        if pars == {1}:
            return "odd"
        return "mixed"

    def vertices(self) -> list[Vertex]:
        """All vertices bordering at least one face, sorted."""
        vs = set()
        for f in self.faces:
            vs.update(face_vertices(f))
        return sorted(vs)

    def face_count(self, v: Vertex) -> int:
        return sum(1 for f in vertex_faces(v) if f in self.faces)

    def bounding_box(self) -> tuple[int, int, int, int]:
        xs = [f[0] for f in self.faces]
        ys = [f[1] for f in self.faces]
        return min(xs), min(ys), max(xs), max(ys)

    def translated(self, di: int, dj: int) -> "Domain":
        return Domain(
            frozenset((i + di, j + dj) for i, j in self.faces),
            tuple((x + 2 * di, y + 2 * dj) for x, y in self.boundary_cycle),
        )


def build_domain(faces: Iterable[Face]) -> Domain:
    """Build a Domain from a face set, tracing its boundary cycle.

    Raises DomainError if the boundary edges do not form a single simple cycle
    (face set not simply connected, or pinched at a vertex).
    """
    fs = frozenset(faces)
    if not fs:
        raise DomainError("empty face set")
    boundary_edges = set()
    for f in fs:
        vs = face_vertices(f)
        for a, b in zip(vs, vs[1:] + vs[:1]):
            e = tuple(sorted((a, b)))
            u1, u2 = edge_faces(*e)
            if (u1 in fs) != (u2 in fs):
                boundary_edges.add(e)
    # every boundary vertex must have exactly two incident boundary edges
    incident: dict[Vertex, list[tuple[Vertex, Vertex]]] = {}
    for e in boundary_edges:
        for v in e:
            incident.setdefault(v, []).append(e)
    for v, es in incident.items():
        if len(es) != 2:
            raise DomainError(f"boundary pinched at vertex {v}")
    start = min(incident)
    cycle = [start]
    prev_edge = None
    while True:
        cur = cycle[-1]
        nxt_edge = next(e for e in incident[cur] if e != prev_edge)
        nxt = nxt_edge[0] if nxt_edge[1] == cur else nxt_edge[1]
        if nxt == start:
            break
        cycle.append(nxt)
        prev_edge = nxt_edge
        if len(cycle) > len(boundary_edges):
            raise DomainError("boundary trace failed to close")
    if len(cycle) != len(boundary_edges):
        raise DomainError("boundary is not a single cycle (face set not simply connected)")
    # interior holes would yield a second, untraced cycle; the length check above
    # catches them since all boundary edges must lie on the one traced cycle
    return Domain(fs, tuple(cycle))


def build_diamond(N: int, center: Face = (0, 0)) -> Domain:
    """The diamond of faces (i, j) with |i±j| <= N-1, translated to center."""
    if N < 1:
        raise ValueError("N must be >= 1")
    ci, cj = center
    faces = [
        (i + ci, j + cj)
        for i in range(-N + 1, N)
        for j in range(-N + 1, N)
        if abs(i + j) <= N - 1 and abs(i - j) <= N - 1
    ]
    return build_domain(faces)


def build_rectangle(w: int, h: int, corner: Face = (0, 0)) -> Domain:
    ci, cj = corner
    return build_domain([(ci + i, cj + j) for i in range(w) for j in range(h)])


def boundary_vertex_set(dom: Domain) -> set[Vertex]:
    """Vertices belonging to exactly one face of the domain."""
    return {v for v in dom.vertices() if dom.face_count(v) == 1}


def external_boundary(dom: Domain) -> set[Face]:
    """Faces outside the domain sharing an edge with a face of the domain."""
    out = set()
    for f in dom.faces:
        for g in face_neighbors(f):
            if g not in dom.faces:
                out.add(g)
    return out


# ---------------------------------------------------------------------------
# Corner graphs
# ---------------------------------------------------------------------------

# node encodings: ("face", face) for a face of the domain,
# ("corner", frozenset of (face, vertex) pairs) for an identified corner class.


@dataclass
class CornerGraph:
    """One of the two graphs on even/odd faces and corners of a domain.

    Edges are indexed consistently with the twin graph: edge k of this graph
    and edge k of the twin both sit at vertex ``edge_vertex[k]`` of the domain,
    which realizes the dual pairing e_z <-> e_z*.
    """

    parity: int  # 0 = even nodes, 1 = odd nodes
    nodes: list[tuple]
    node_index: dict[tuple, int]
    edges: list[tuple[int, int]]  # node index pairs
    edge_vertex: list[Vertex]
    edge_direction: list[str]  # 'h' (NW-SE diagonal) or 'v' (NE-SW diagonal)
    is_boundary_node: list[bool]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """adj[node] = list of (edge index, other node)."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        for k, (a, b) in enumerate(self.edges):
            adj[a].append((k, b))
            adj[b].append((k, a))
        return adj

    def interior_face_count(self) -> int:
        """Bounded faces of the planar embedding, via Euler's formula."""
        seen = [False] * self.n_nodes
        adj = self.adjacency()
        comps = 0
        for s in range(self.n_nodes):
            if seen[s]:
                continue
            comps += 1
            stack = [s]
            seen[s] = True
            while stack:
                u = stack.pop()
                for _, w in adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
        return self.n_edges - self.n_nodes + comps

    def node_face(self, idx: int) -> Face:
        """Representative face of a node (the face itself, or the corner's face)."""
        kind, payload = self.nodes[idx]
        if kind == "face":
            return payload
        return next(iter(payload))[0]


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def build_corner_graphs(dom: Domain) -> tuple[CornerGraph, CornerGraph]:
    """The pair (D_even, D_odd) of mutually dual corner graphs of a domain.

    Corners are pairs (external face u, boundary vertex z in u); two corners of
    the same face are identified when the lattice edge between their vertices
    borders a face of the domain. Each vertex z of the domain carries exactly
    one edge in each graph, joining the two same-parity faces/corners at z.
    """
    boundary_set = set(dom.boundary_cycle)
    all_vertices = dom.vertices()

    # collect corners: external faces touching a boundary vertex
    corners: dict[int, list[tuple[Face, Vertex]]] = {0: [], 1: []}
    for z in dom.boundary_cycle:
        for u in vertex_faces(z):
            if u not in dom.faces:
                corners[parity(u)].append((u, z))

    def corner_classes(par: int) -> dict[tuple[Face, Vertex], frozenset]:
        uf = _UnionFind(corners[par])
        by_face: dict[Face, list[tuple[Face, Vertex]]] = {}
        for c in corners[par]:
            by_face.setdefault(c[0], []).append(c)
        for u, cs in by_face.items():
            zs = {c[1] for c in cs}
            for z in zs:
                for e in _vertex_edges(z):
                    z2 = e[0] if e[1] == z else e[1]
                    if z2 not in zs:
                        continue
                    f1, f2 = edge_faces(*e)
                    if u in (f1, f2) and (f1 in dom.faces or f2 in dom.faces):
                        uf.union((u, z), (u, z2))
        groups: dict[tuple[Face, Vertex], set] = {}
        for c in corners[par]:
            groups.setdefault(uf.find(c), set()).add(c)
        return {c: frozenset(groups[uf.find(c)]) for c in corners[par]}

    classes = {0: corner_classes(0), 1: corner_classes(1)}

    graphs = []
    for par in (0, 1):
        nodes: list[tuple] = []
        node_index: dict[tuple, int] = {}
        for f in sorted(dom.faces):
            if parity(f) == par:
                node = ("face", f)
                node_index[node] = len(nodes)
                nodes.append(node)
        for cls in sorted(set(classes[par].values()), key=lambda s: sorted(s)):
            node = ("corner", cls)
            node_index[node] = len(nodes)
            nodes.append(node)

        def node_of(u: Face, z: Vertex, par=par) -> int:
            if u in dom.faces:
                return node_index[("face", u)]
            return node_index[("corner", classes[par][(u, z)])]

        edges, edge_vertex, edge_dir = [], [], []
        for z in all_vertices:
            sw, se, ne, nw = vertex_faces(z)
            if parity(sw) == par:
                u1, u2 = sw, ne  # NE-SW diagonal
                direction = "v"
            else:
                u1, u2 = se, nw  # NW-SE diagonal
                direction = "h"
            if u1 not in dom.faces and u2 not in dom.faces and z not in boundary_set:
                raise DomainError(f"vertex {z} has no incident domain face")
            edges.append((node_of(u1, z), node_of(u2, z)))
            edge_vertex.append(z)
            edge_dir.append(direction)

        is_bnd = [kind == "corner" for kind, _ in nodes]
        graphs.append(
            CornerGraph(par, nodes, node_index, edges, edge_vertex, edge_dir, is_bnd)
        )
    return graphs[0], graphs[1]


# ---------------------------------------------------------------------------
# Triangular connectivity
# ---------------------------------------------------------------------------

T_OFFSETS = [(1, 1), (1, -1), (-1, 1), (-1, -1), (2, 0), (-2, 0)]


def t_neighbors(u: Face) -> list[Face]:
    """The six triangular-lattice neighbors of a face (same parity)."""
    i, j = u
    return [(i + di, j + dj) for di, dj in T_OFFSETS]


@dataclass(frozen=True)
class TCircuit:
    """A simple cycle in the triangular connectivity on one parity class."""

    faces: tuple[Face, ...]  # cyclic order, no repeat of the first face

    def __post_init__(self):
        fs = self.faces
        if len(fs) < 3:
            raise ValueError("circuit needs at least 3 faces")
        if len(set(fs)) != len(fs):
            raise ValueError("circuit faces must be distinct")
        par = parity(fs[0])
        for a, b in zip(fs, fs[1:] + fs[:1]):
            if parity(b) != par:
                raise ValueError("circuit faces must share one parity")
            if (b[0] - a[0], b[1] - a[1]) not in T_OFFSETS:
                raise ValueError(f"faces {a} and {b} are not T-adjacent")

    def surrounds(self, target: Face) -> bool:
        return _winding_number(self.faces, target) != 0


def _winding_number(poly: tuple[Face, ...], p: Face) -> int:
    """Winding number of the closed polygon through the face centers around p.

    Exact integer arithmetic; 0 if p lies on the polygon boundary.
    """
    px, py = p
    wn = 0
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        # on-segment check
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if cross == 0 and min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
            return 0
        if y1 <= py < y2 and cross > 0:
            wn += 1
        elif y2 <= py < y1 and cross < 0:
            wn -= 1
    return wn


def _t_segment_cells(a: Face, b: Face) -> list[tuple[int, int]]:
    """Fine-grid cells (2x scale) blocked by the straight segment a-b."""
    ax, ay = 2 * a[0], 2 * a[1]
    bx, by = 2 * b[0], 2 * b[1]
    dx, dy = b[0] - a[0], b[1] - a[1]
    if abs(dx) == 1:  # diagonal edge
        return [(ax, ay), (ax + dx, ay + dy), (bx, by)]
    sx = 1 if dx > 0 else -1
    return [(ax, ay), (ax + sx, ay), (ax + 2 * sx, ay), (ax + 3 * sx, ay), (bx, by)]


def exteriormost_t_circuit(
    level: Callable[[Face], bool],
    box: Domain,
    target: Face,
    circuit_parity: Optional[int] = None,
) -> Optional[TCircuit]:
    """The outermost T-circuit inside ``box`` whose faces all satisfy ``level``
    and which surrounds ``target``; None if no such circuit exists.

    The circuit lives on one parity class; when ``circuit_parity`` is None both
    classes are tried and the circuit enclosing the larger region is returned.
    """
    if target not in box.faces:
        raise ValueError("target must lie inside the box")
    if circuit_parity is None:
        best = None
        best_area = -1
        for par in (0, 1):
            c = exteriormost_t_circuit(level, box, target, par)
            if c is not None:
                area = abs(_polygon_area2(c.faces))
                if area > best_area:
                    best, best_area = c, area
        return best

    S = {f for f in box.faces if parity(f) == circuit_parity and level(f) and f != target}
    if not S:
        return None

    x0, y0, x1, y1 = box.bounding_box()
    # fine grid, 2x scale, padded by two faces
    gx0, gy0 = 2 * (x0 - 2), 2 * (y0 - 2)
    gx1, gy1 = 2 * (x1 + 2), 2 * (y1 + 2)
    W, H = gx1 - gx0 + 1, gy1 - gy0 + 1

    blocked = [[False] * H for _ in range(W)]

    def mark(cx: int, cy: int):
        if gx0 <= cx <= gx1 and gy0 <= cy <= gy1:
            blocked[cx - gx0][cy - gy0] = True

    for f in S:
        mark(2 * f[0], 2 * f[1])
        for g in t_neighbors(f):
            if g in S and g > f:
                for c in _t_segment_cells(f, g):
                    mark(*c)

    # flood from the outside pad
    reach = [[False] * H for _ in range(W)]
    stack = [(x, y) for x in range(W) for y in (0, H - 1) if not blocked[x][y]]
    stack += [(x, y) for y in range(H) for x in (0, W - 1) if not blocked[x][y]]
    for x, y in stack:
        reach[x][y] = True
    while stack:
        x, y = stack.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < W and 0 <= ny < H and not reach[nx][ny] and not blocked[nx][ny]:
                reach[nx][ny] = True
                stack.append((nx, ny))

    tx, ty = 2 * target[0] - gx0, 2 * target[1] - gy0
    if reach[tx][ty]:
        return None

    # hole containing the target: 4-connected component of non-reached cells
    hole = [[False] * H for _ in range(W)]
    stack = [(tx, ty)]
    hole[tx][ty] = True
    while stack:
        x, y = stack.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < W and 0 <= ny < H and not hole[nx][ny] and not reach[nx][ny]:
                hole[nx][ny] = True
                stack.append((nx, ny))

    walk = _trace_hole_faces(hole, reach, W, H, gx0, gy0, S)
    if walk is None:
        return None
    circuit = _simplify_walk(walk, target)
    if circuit is None:
        return None
    return TCircuit(tuple(circuit))


def _polygon_area2(poly) -> int:
    s = 0
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        s += x1 * y2 - x2 * y1
    return s


_MOORE = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def _trace_hole_faces(hole, reach, W, H, gx0, gy0, S):
    """Moore-neighbor boundary trace of the hole; project to face cells of S."""
    boundary = set()
    for x in range(W):
        for y in range(H):
            if not hole[x][y]:
                continue
            for dx, dy in _MOORE:
                nx, ny = x + dx, y + dy
                if not (0 <= nx < W and 0 <= ny < H) or reach[nx][ny]:
                    boundary.add((x, y))
                    break
    if not boundary:
        return None
    start = min(boundary, key=lambda c: (c[1], c[0]))
    contour = [start]
    # backtrack direction: came from below (start is bottom-most)
    prev = (start[0], start[1] - 1)
    cur = start
    steps = 0
    max_steps = 8 * (W * H + 1)
    while steps < max_steps:
        steps += 1
        dx, dy = prev[0] - cur[0], prev[1] - cur[1]
        k0 = _MOORE.index((dx, dy))
        nxt = None
        for t in range(1, 9):
            dx, dy = _MOORE[(k0 + t) % 8]
            cx, cy = cur[0] + dx, cur[1] + dy
            if 0 <= cx < W and 0 <= cy < H and (cx, cy) in boundary:
                nxt = (cx, cy)
                prev = (cur[0] + _MOORE[(k0 + t - 1) % 8][0], cur[1] + _MOORE[(k0 + t - 1) % 8][1])
                break
        if nxt is None:
            return None  # isolated cell, no circuit
        cur = nxt
        if cur == start:
            break
        contour.append(cur)
    faces = []
    for x, y in contour:
        fx, fy = x + gx0, y + gy0
        if fx % 2 == 0 and fy % 2 == 0 and (fx // 2, fy // 2) in S:
            f = (fx // 2, fy // 2)
            if not faces or faces[-1] != f:
                faces.append(f)
    if len(faces) >= 2 and faces[0] == faces[-1]:
        faces.pop()
    return faces if len(faces) >= 3 else None


def _simplify_walk(walk: list[Face], target: Face) -> Optional[list[Face]]:
    """Split a closed face walk at repeated faces, keeping the loop that winds
    around the target, until the walk is a simple circuit."""
    while True:
        pos: dict[Face, int] = {}
        rep = None
        for idx, f in enumerate(walk):
            if f in pos:
                rep = (pos[f], idx)
                break
            pos[f] = idx
        if rep is None:
            break
        i, j = rep
        loop_a = walk[i:j]
        loop_b = walk[:i] + walk[j:]
        wa = _winding_number(tuple(loop_a), target) if len(loop_a) >= 3 else 0
        if wa != 0:
            walk = loop_a
        else:
            walk = loop_b
        if len(walk) < 3:
            return None
    if _winding_number(tuple(walk), target) == 0:
        return None
    return walk


# ---------------------------------------------------------------------------
# Snapshot format
# ---------------------------------------------------------------------------


def domain_to_text(dom: Domain) -> str:
    """`D <n>` line, then `F i j` per face, then `B x2 y2` boundary vertices."""
    lines = [f"D {len(dom.faces)}"]
    lines += [f"F {i} {j}" for i, j in sorted(dom.faces)]
    lines += [f"B {x} {y}" for x, y in dom.boundary_cycle]
    return "\n".join(lines) + "\n"


def domain_from_text(text: str) -> Domain:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0][0] != "D":
        raise ValueError("domain snapshot must start with a 'D <count>' line")
    count = int(lines[0][1])
    faces = [(int(t[1]), int(t[2])) for t in lines[1:] if t[0] == "F"]
    if len(faces) != count:
        raise ValueError(f"expected {count} faces, found {len(faces)}")
    dom = build_domain(faces)
    cycle = [(int(t[1]), int(t[2])) for t in lines[1:] if t[0] == "B"]
    if cycle and set(cycle) != set(dom.boundary_cycle):
        raise ValueError("boundary cycle does not match the face set")
    return dom
