"""Random-cluster configurations with a separate weight for boundary clusters.

Configurations live on a light edge graph (possibly one of the corner graphs
of a domain). Clusters touching a boundary node are weighted q_b instead of q;
q_b = 1 reproduces wired and q_b = q free boundary conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .lattice import CornerGraph, Domain, build_corner_graphs


@dataclass(frozen=True)
class RcParams:
    q: object
    q_b: object
    p: object = None  # isotropic open probability
    p_h: object = None  # anisotropic: NW-SE diagonal edges
    p_v: object = None  # anisotropic: NE-SW diagonal edges

    def __post_init__(self):
        if not (self.q > 0 and self.q_b > 0):
            raise ValueError("q and q_b must be positive")
        if self.p is None and (self.p_h is None or self.p_v is None):
            raise ValueError("give p, or both p_h and p_v")

    def edge_p(self, direction: str):
        if self.p is not None:
            return self.p
        return self.p_h if direction == "h" else self.p_v


def p_critical(q):
    """Self-dual point sqrt(q)/(sqrt(q)+1); requires q >= 1."""
    if q < 1:
        raise ValueError("p_critical requires q >= 1")
    r = math.sqrt(q)
    return r / (r + 1)


def anisotropic_critical(a, b, q):
    """Critical horizontal/vertical open probabilities for weights (a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if q < 1:
        raise ValueError("requires q >= 1")
    r = math.sqrt(q)
    return b * r / (b * r + a), a * r / (a * r + b)


@dataclass
class EdgeGraph:
    """Multigraph with flagged boundary nodes; edges may carry a direction tag."""

    n_nodes: int
    edges: list[tuple[int, int]]
    is_boundary: list[bool]
    edge_direction: Optional[list[str]] = None
    _adj: Optional[list[list[tuple[int, int]]]] = field(default=None, repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        if self._adj is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
            for k, (u, v) in enumerate(self.edges):
                adj[u].append((k, v))
                adj[v].append((k, u))
            self._adj = adj
        return self._adj

    def cluster_labels(self, open_bits: Sequence[int], skip_edge: int = -1) -> list[int]:
        """Connected-component label per node under the open edges."""
        labels = [-1] * self.n_nodes
        adj = self.adjacency()
        nxt = 0
        for s in range(self.n_nodes):
            if labels[s] >= 0:
                continue
            labels[s] = nxt
            stack = [s]
            while stack:
                u = stack.pop()
                for k, w in adj[u]:
                    if k != skip_edge and open_bits[k] and labels[w] < 0:
                        labels[w] = nxt
                        stack.append(w)
            nxt += 1
        return labels

    def cluster_counts(self, open_bits: Sequence[int]) -> tuple[int, int]:
        """(interior clusters, boundary clusters)."""
        labels = self.cluster_labels(open_bits)
        k = max(labels) + 1
        boundary = [False] * k
        for v, lab in enumerate(labels):
            if self.is_boundary[v]:
                boundary[lab] = True
        k_b = sum(boundary)
        return k - k_b, k_b


def from_corner_graph(cg: CornerGraph) -> EdgeGraph:
    return EdgeGraph(
        cg.n_nodes, list(cg.edges), list(cg.is_boundary_node), list(cg.edge_direction)
    )


def path_graph(n_nodes: int, boundary: Sequence[int] = ()) -> EdgeGraph:
    es = [(i, i + 1) for i in range(n_nodes - 1)]
    isb = [i in set(boundary) for i in range(n_nodes)]
    return EdgeGraph(n_nodes, es, isb)


def grid_graph(w: int, h: int) -> EdgeGraph:
    """(w x h)-node grid; nodes on the outer rectangle are boundary."""
    idx = lambda x, y: y * w + x
    edges = []
    for y in range(h):
        for x in range(w):
            if x + 1 < w:
                edges.append((idx(x, y), idx(x + 1, y)))
            if y + 1 < h:
                edges.append((idx(x, y), idx(x, y + 1)))
    isb = [x in (0, w - 1) or y in (0, h - 1) for y in range(h) for x in range(w)]
    return EdgeGraph(w * h, edges, isb)


@dataclass
class RcConfig:
    graph: EdgeGraph
    open: tuple[int, ...]

    def __post_init__(self):
        if len(self.open) != self.graph.n_edges:
            raise ValueError("bit count must match the edge count")

    def dual_bits(self) -> tuple[int, ...]:
        return tuple(1 - b for b in self.open)


@dataclass
class ClusterDecomposition:
    """Cluster structure of a configuration on a corner-graph pair.

    The boundary clusters of the dual configuration are all joined through the
    exterior region, so for adjacency, nesting and the Euler identity they
    count as a single cluster (labels_dual uses the merged labelling;
    labels_dual_raw keeps the unmerged one).

    ``adjacency`` lists the adjacent (primal cluster, dual cluster) pairs with
    a relation tag: 'primal_inside' when the primal cluster is surrounded by
    the dual one, 'dual_inside' for the converse, 'none' for pairs of boundary
    clusters. ``depth_*`` give distances to the boundary in the nesting tree.
    """

    labels_primal: list[int]
    labels_dual: list[int]
    labels_dual_raw: list[int]
    k_i: int
    k_b: int
    k_wired: int
    k_i_dual: int
    k_b_dual_raw: int
    adjacency: list[tuple[int, int, str]]
    depth_primal: list[int]
    depth_dual: list[int]
    parent: dict[tuple[str, int], tuple[str, int]]

    @property
    def k(self) -> int:
        return self.k_i + self.k_b

    @property
    def k_dual(self) -> int:
        """Dual cluster count with the exterior-joined boundary cluster."""
        return self.k_i_dual + (1 if self.k_b_dual_raw else 0)


class GraphPair:
    """The two dual corner graphs of a domain with shared edge indexing."""

    def __init__(self, domain: Domain):
        self.domain = domain
        cb, cc = build_corner_graphs(domain)
        self.primal_cg = cb
        self.dual_cg = cc
        self.primal = from_corner_graph(cb)
        self.dual = from_corner_graph(cc)
        self.n_edges = self.primal.n_edges
        # adjacency witnesses: at each lattice vertex z (= edge slot k), the
        # two primal endpoints are each adjacent to the two dual endpoints
        self.vertex_pairs = [
            (self.primal.edges[k], self.dual.edges[k]) for k in range(self.n_edges)
        ]
        self._dec_cache: dict[tuple[int, ...], ClusterDecomposition] = {}

    def decompose(self, open_bits: Sequence[int]) -> ClusterDecomposition:
        key = tuple(open_bits)
        cached = self._dec_cache.get(key)
        if cached is not None:
            return cached
        dec = self._decompose(key)
        if self.n_edges <= 16:  # enumeration scale only
            self._dec_cache[key] = dec
        return dec

    def _decompose(self, open_bits: tuple[int, ...]) -> ClusterDecomposition:
        dual_bits = [1 - b for b in open_bits]
        lp = self.primal.cluster_labels(open_bits)
        ld_raw = self.dual.cluster_labels(dual_bits)
        kp = max(lp) + 1
        kd_raw = max(ld_raw) + 1

        bnd_p = [False] * kp
        for v, lab in enumerate(lp):
            if self.primal.is_boundary[v]:
                bnd_p[lab] = True
        bnd_d_raw = [False] * kd_raw
        for v, lab in enumerate(ld_raw):
            if self.dual.is_boundary[v]:
                bnd_d_raw[lab] = True

        # merge the dual boundary clusters (joined through the exterior region)
        remap = {}
        nxt = 0
        merged_id = None
        for lab in range(kd_raw):
            if bnd_d_raw[lab]:
                if merged_id is None:
                    merged_id = nxt
                    nxt += 1
                remap[lab] = merged_id
            else:
                remap[lab] = nxt
                nxt += 1
        ld = [remap[lab] for lab in ld_raw]
        kd = nxt
        bnd_d = [False] * kd
        if merged_id is not None:
            bnd_d[merged_id] = True

        pairs = set()
        for (pu, pv), (du, dv) in self.vertex_pairs:
            for pc in (lp[pu], lp[pv]):
                for dc in (ld[du], ld[dv]):
                    pairs.add((pc, dc))

        # nesting tree: BFS from all boundary clusters through adjacency pairs
        INF = -1
        depth_p = [INF] * kp
        depth_d = [INF] * kd
        parent: dict[tuple[str, int], tuple[str, int]] = {}
        frontier: list[tuple[str, int]] = []
        for i in range(kp):
            if bnd_p[i]:
                depth_p[i] = 0
                frontier.append(("p", i))
        for i in range(kd):
            if bnd_d[i]:
                depth_d[i] = 0
                frontier.append(("d", i))
        adj_p: dict[int, list[int]] = {}
        adj_d: dict[int, list[int]] = {}
        for pc, dc in pairs:
            adj_p.setdefault(pc, []).append(dc)
            adj_d.setdefault(dc, []).append(pc)
        while frontier:
            nxt = []
            for kind, i in frontier:
                if kind == "p":
                    for j in adj_p.get(i, []):
                        if depth_d[j] == INF:
                            depth_d[j] = depth_p[i] + 1
                            parent[("d", j)] = ("p", i)
                            nxt.append(("d", j))
                else:
                    for j in adj_d.get(i, []):
                        if depth_p[j] == INF:
                            depth_p[j] = depth_d[i] + 1
                            parent[("p", j)] = ("d", i)
                            nxt.append(("p", j))
            frontier = nxt
        if INF in depth_p or INF in depth_d:
            raise RuntimeError("cluster adjacency graph is not connected to the boundary")

        adjacency = []
        for pc, dc in sorted(pairs):
            dp, dd = depth_p[pc], depth_d[dc]
            if dp == dd + 1:
                rel = "primal_inside"
            elif dd == dp + 1:
                rel = "dual_inside"
            elif dp == dd == 0:
                rel = "none"
            else:
                raise RuntimeError("adjacent clusters differ by more than one level")
            adjacency.append((pc, dc, rel))

        k_b = sum(bnd_p)
        k_wired = (kp - k_b + 1) if k_b else kp
        return ClusterDecomposition(
            lp, ld, ld_raw, kp - k_b, k_b, k_wired,
            kd - sum(bnd_d), sum(bnd_d_raw),
            adjacency, depth_p, depth_d, parent,
        )

    def euler_identity_holds(self, open_bits: Sequence[int]) -> bool:
        """k(dual) - k(primal) - 1 == open - |V(primal)| for corner-graph pairs."""
        dec = self.decompose(open_bits)
        o = sum(open_bits)
        return dec.k_dual - dec.k - 1 == o - self.primal.n_nodes

    def surrounding_cluster_count(self, u, open_bits: Sequence[int]) -> int:
        """Number of primal/dual clusters surrounding a face (nesting depth)."""
        dec = self.decompose(open_bits)
        node = ("face", u)
        if node in self.primal_cg.node_index:
            return dec.depth_primal[dec.labels_primal[self.primal_cg.node_index[node]]]
        if node in self.dual_cg.node_index:
            return dec.depth_dual[dec.labels_dual[self.dual_cg.node_index[node]]]
        raise ValueError(f"face {u} is not a node of either corner graph")


def decompose(cfg: RcConfig, pair: GraphPair) -> ClusterDecomposition:
    return pair.decompose(cfg.open)


def rc_weight(open_bits: Sequence[int], graph: EdgeGraph, P: RcParams):
    """Unnormalized weight q^{k_i} q_b^{k_b} prod_e p_e^{open} (1-p_e)^{closed}."""
    k_i, k_b = graph.cluster_counts(open_bits)
    w = (P.q ** k_i) * (P.q_b ** k_b)
    for k, bit in enumerate(open_bits):
        direction = graph.edge_direction[k] if graph.edge_direction else "h"
        p = P.edge_p(direction)
        w = w * (p if bit else (1 - p))
    return w


def heat_bath_edge_ratio(
    open_bits: Sequence[int], edge_idx: int, graph: EdgeGraph, P: RcParams
):
    """Conditional probability that ``edge_idx`` is open given all other edges."""
    u, v = graph.edges[edge_idx]
    direction = graph.edge_direction[edge_idx] if graph.edge_direction else "h"
    p = P.edge_p(direction)
    labels = graph.cluster_labels(open_bits, skip_edge=edge_idx)
    if labels[u] == labels[v]:
        return p
    side_u_boundary = any(
        graph.is_boundary[w] for w in range(graph.n_nodes) if labels[w] == labels[u]
    )
    side_v_boundary = any(
        graph.is_boundary[w] for w in range(graph.n_nodes) if labels[w] == labels[v]
    )
    gamma = P.q_b if (side_u_boundary and side_v_boundary) else P.q
    return p / (p + (1 - p) * gamma)


def rc_to_text(cfg: RcConfig, pair: GraphPair) -> str:
    """One `E z_index 0|1` line per edge, keyed by the owning lattice vertex."""
    lines = []
    for k, bit in enumerate(cfg.open):
        lines.append(f"E {k} {bit}")
    return "\n".join(lines) + "\n"


def rc_from_text(text: str, graph: EdgeGraph) -> tuple[int, ...]:
    bits = {}
    for ln in text.strip().splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] != "E" or len(parts) != 3:
            raise ValueError(f"bad edge line: {ln!r}")
        bits[int(parts[1])] = int(parts[2])
    if sorted(bits) != list(range(graph.n_edges)):
        raise ValueError("edge lines do not cover the edge set exactly")
    if any(b not in (0, 1) for b in bits.values()):
        raise ValueError("edge states must be 0 or 1")
    return tuple(bits[k] for k in range(graph.n_edges))
