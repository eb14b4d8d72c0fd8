"""Executable coupling between height functions and random-cluster configs.

The joint law lives on compatible pairs (h, eta): h is constant on every
primal and dual cluster of eta. Two equivalent weight forms are implemented,
one local in the edges, one telescoping over nested cluster pairs; their
agreement, and the two marginal identities (height-function measure on one
side, random-cluster measure with boundary-cluster weight q_b on the other),
are verified exactly by ``marginal_checks``.

Sign conventions, fixed by the exact checks rather than by interpretation:

* edge form: each lattice vertex z (= edge e_z) contributes
  g_z(state) * s^{(h(u*) + h(v*) - h(u) - h(v))/2 * (+1 if open else -1)},
  with s = e^{lambda/2}; g_z is 1 for a = b = 1 and otherwise the a/b vertex
  weight selected by the edge direction and state.
* cluster form: each adjacent pair (C, C*) contributes
  e^{lambda (h(C*) - h(C)) * sgn}, sgn = +1 when C* is surrounded by C and
  -1 otherwise (both when C is surrounded by C* and for boundary pairs).
* the conditional of h given eta steps by +1 from parent to child cluster
  with probability e^{lambda}/sqrt(q), by -1 with e^{-lambda}/sqrt(q).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .heights import HeightFunction, ModelParams, flat_boundary, height_weight
from .lattice import Domain, Face, parity
from .numerics import (
    as_mpf,
    exact_sqrt,
    is_exact,
    numbers_close,
    rel_deviation,
    sqrt_any,
    to_exact,
)
from .oracle import ExactMeasure, enumerate_heights
from .random_cluster import ClusterDecomposition, GraphPair


class UnsupportedRegimeError(ValueError):
    """Raised outside a + b <= c, where the coupling is not a probability measure."""


@dataclass(frozen=True)
class CouplingParams:
    """Model weights (a, b, c) and the derived coupling constants.

    s = e^{lambda/2} with lambda >= 0; exact (Fraction) arithmetic whenever the
    inputs are rational and the square roots come out rational.
    """

    a: object
    b: object
    c: object
    delta: object
    s: object  # e^{lambda/2}
    e_lam: object  # e^{lambda}
    sqrt_q: object
    q: object
    q_b: object
    c_b: object
    exact: bool

    @property
    def lam(self) -> float:
        return 2 * math.log(float(self.s))

    def p_h(self) -> float:
        """Critical open probability on NW-SE (direction 'h') edges."""
        b, a, r = float(self.b), float(self.a), float(self.sqrt_q)
        return b * r / (b * r + a)

    def p_v(self) -> float:
        a, b, r = float(self.a), float(self.b), float(self.sqrt_q)
        return a * r / (a * r + b)

    def step_up_probability(self) -> float:
        return float(self.e_lam) / float(self.sqrt_q)

    def model_params(self, c_b=None) -> ModelParams:
        return ModelParams(self.a, self.b, self.c, c_b=c_b)


def derive_params(a, b, c) -> CouplingParams:
    """Coupling constants from the vertex weights; requires a + b <= c."""
    a, b, c = to_exact(a), to_exact(b), to_exact(c)
    if min(a, b, c) <= 0:
        raise ValueError("weights must be positive")
    delta = (a * a + b * b - c * c) / (2 * a * b)
    if delta > -1:
        raise UnsupportedRegimeError(
            f"a + b <= c required (delta = {float(delta):.4f} > -1); the regime "
            "a + b > c corresponds to a complex-valued coupling"
        )
    disc = delta * delta - 1
    if is_exact(a, b, c):
        root = exact_sqrt(disc)
        e_lam = (-delta + root) if root is not None else None
        s = exact_sqrt(e_lam) if e_lam is not None else None
        if s is None:
            a, b, c, delta, disc = (as_mpf(x) for x in (a, b, c, delta, disc))
    if not is_exact(a, b, c) or s is None:
        e_lam = -delta + sqrt_any(disc)
        s = sqrt_any(e_lam)
        exact = False
    else:
        exact = True
    sqrt_q = e_lam + 1 / e_lam
    return CouplingParams(
        a=a, b=b, c=c, delta=delta, s=s, e_lam=e_lam,
        sqrt_q=sqrt_q, q=sqrt_q * sqrt_q, q_b=sqrt_q / e_lam, c_b=s,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# Compatibility and joint weights
# ---------------------------------------------------------------------------


def _node_heights(pair: GraphPair, h: HeightFunction) -> tuple[list[int], list[int]]:
    hp = [h.value(pair.primal_cg.node_face(i)) for i in range(pair.primal.n_nodes)]
    hd = [h.value(pair.dual_cg.node_face(i)) for i in range(pair.dual.n_nodes)]
    return hp, hd


def is_compatible(h: HeightFunction, open_bits: Sequence[int], pair: GraphPair) -> bool:
    """h constant on every primal cluster of eta and every dual cluster of eta*."""
    hp, hd = _node_heights(pair, h)
    dec = pair.decompose(open_bits)
    seen: dict[int, int] = {}
    for v, lab in enumerate(dec.labels_primal):
        if seen.setdefault(lab, hp[v]) != hp[v]:
            return False
    seen = {}
    for v, lab in enumerate(dec.labels_dual_raw):
        if seen.setdefault(lab, hd[v]) != hd[v]:
            return False
    return True


def is_compatible_local(
    h: HeightFunction, open_bits: Sequence[int], pair: GraphPair
) -> bool:
    """Edge-local equivalent: open edges need equal primal endpoint heights,
    closed edges equal dual endpoint heights."""
    hp, hd = _node_heights(pair, h)
    for k, bit in enumerate(open_bits):
        if bit:
            u, v = pair.primal.edges[k]
            if hp[u] != hp[v]:
                return False
        else:
            u, v = pair.dual.edges[k]
            if hd[u] != hd[v]:
                return False
    return True


class IncompatiblePairError(ValueError):
    pass


def _edge_g_factors(cp: CouplingParams, direction: str, bit: int):
    """a/b decoration of an edge: open pairs with the odd-diagonal-split weight."""
    if direction == "h":  # NW-SE diagonal edge: odd split is type b, even split type a
        return cp.b if bit else cp.a
    return cp.a if bit else cp.b  # 'v': NE-SW diagonal


def joint_weight_edge(
    h: HeightFunction, open_bits: Sequence[int], cp: CouplingParams, pair: GraphPair
):
    """Edge form of the joint weight (raises on incompatible pairs)."""
    if not is_compatible_local(h, open_bits, pair):
        raise IncompatiblePairError("height function not constant on clusters")
    hp, hd = _node_heights(pair, h)
    s_power = 0
    w = 1
    for k, bit in enumerate(open_bits):
        u, v = pair.primal.edges[k]
        du, dv = pair.dual.edges[k]
        m = (hd[du] + hd[dv] - hp[u] - hp[v]) // 2
        s_power += m if bit else -m
        w = w * _edge_g_factors(cp, pair.primal.edge_direction[k], bit)
    return w * cp.s ** s_power


def joint_weight_cluster(
    h: HeightFunction, open_bits: Sequence[int], cp: CouplingParams, pair: GraphPair
):
    """Cluster form: product over adjacent (primal, dual) cluster pairs."""
    if not is_compatible_local(h, open_bits, pair):
        raise IncompatiblePairError("height function not constant on clusters")
    hp, hd = _node_heights(pair, h)
    dec = pair.decompose(open_bits)
    hc_p: dict[int, int] = {}
    for v, lab in enumerate(dec.labels_primal):
        hc_p.setdefault(lab, hp[v])
    hc_d: dict[int, int] = {}
    for v, lab in enumerate(dec.labels_dual):
        hc_d.setdefault(lab, hd[v])
    lam_power = 0  # exponent of e^{lambda} = s^2
    for pc, dc, rel in dec.adjacency:
        sgn = 1 if rel == "dual_inside" else -1
        lam_power += (hc_d[dc] - hc_p[pc]) * sgn
    w = 1
    for k, bit in enumerate(open_bits):
        w = w * _edge_g_factors(cp, pair.primal.edge_direction[k], bit)
    return w * cp.s ** (2 * lam_power)


def rc_ratio_weight(open_bits: Sequence[int], cp: CouplingParams, pair: GraphPair):
    """RC weight in odds form: q^{k_i} q_b^{k_b} prod_open r_e, with the
    critical odds r_h = b sqrt(q)/a, r_v = a sqrt(q)/b."""
    dec = pair.decompose(open_bits)
    w = cp.q ** dec.k_i * cp.q_b ** dec.k_b
    for k, bit in enumerate(open_bits):
        if bit:
            if pair.primal.edge_direction[k] == "h":
                w = w * (cp.b * cp.sqrt_q / cp.a)
            else:
                w = w * (cp.a * cp.sqrt_q / cp.b)
    return w


def boundary_edges(pair: GraphPair) -> list[int]:
    """Edges of the primal graph with both endpoints on corner classes."""
    return [
        k
        for k, (u, v) in enumerate(pair.primal.edges)
        if pair.primal.is_boundary[u] and pair.primal.is_boundary[v]
    ]


# ---------------------------------------------------------------------------
# Sampling heights given a random-cluster configuration
# ---------------------------------------------------------------------------


def cluster_height_assignment(
    dec: ClusterDecomposition, steps_p: dict[int, int], steps_d: dict[int, int]
) -> tuple[dict[int, int], dict[int, int]]:
    """Heights per cluster from +-1 steps along the nesting tree.

    Boundary primal clusters sit at 0, the (merged) boundary dual cluster at 1.
    """
    hc_p: dict[int, int] = {}
    hc_d: dict[int, int] = {}
    order = sorted(
        [("p", i, d) for i, d in enumerate(dec.depth_primal)]
        + [("d", i, d) for i, d in enumerate(dec.depth_dual)],
        key=lambda t: t[2],
    )
    for kind, i, depth in order:
        table = hc_p if kind == "p" else hc_d
        if depth == 0:
            table[i] = 0 if kind == "p" else 1
            continue
        pk, pi = dec.parent[(kind, i)]
        parent_h = (hc_p if pk == "p" else hc_d)[pi]
        step = (steps_p if kind == "p" else steps_d)[i]
        table[i] = parent_h + step
    return hc_p, hc_d


def sample_heights_given_rc(
    open_bits: Sequence[int],
    pair: GraphPair,
    cp: CouplingParams,
    rng,
    boundary_heights: tuple[int, int] = (0, 1),
) -> HeightFunction:
    """Draw h from the coupling conditional given eta, by exploring the
    nesting tree of clusters from the boundary inward."""
    if boundary_heights != (0, 1):
        raise ValueError("only the (0, 1) flat boundary is supported")
    dec = pair.decompose(open_bits)
    p_up = cp.step_up_probability()
    steps_p = {
        i: (1 if rng.random() < p_up else -1)
        for i, d in enumerate(dec.depth_primal)
        if d > 0
    }
    steps_d = {
        i: (1 if rng.random() < p_up else -1)
        for i, d in enumerate(dec.depth_dual)
        if d > 0
    }
    hc_p, hc_d = cluster_height_assignment(dec, steps_p, steps_d)
    values: dict[Face, int] = {}
    for f in pair.domain.faces:
        if parity(f) == 0:
            idx = pair.primal_cg.node_index[("face", f)]
            values[f] = hc_p[dec.labels_primal[idx]]
        else:
            idx = pair.dual_cg.node_index[("face", f)]
            values[f] = hc_d[dec.labels_dual[idx]]
    return HeightFunction(pair.domain, values, flat_boundary(0))


def exact_conditional_given_rc(
    open_bits: Sequence[int],
    pair: GraphPair,
    cp: CouplingParams,
    heights: ExactMeasure,
) -> ExactMeasure:
    """The exact conditional law of h given eta, from the cluster-form weights."""
    faces = heights.meta["faces"]
    bc = heights.meta["bc"]
    ids, weights = [], []
    for cfg in heights.ids:
        h = HeightFunction(pair.domain, dict(zip(faces, cfg)), bc)
        if is_compatible_local(h, open_bits, pair):
            ids.append(cfg)
            weights.append(joint_weight_cluster(h, open_bits, cp, pair))
    return ExactMeasure(ids=ids, weights=weights, values=ids, meta=heights.meta)


# ---------------------------------------------------------------------------
# Exact verification of the coupling identities
# ---------------------------------------------------------------------------


@dataclass
class CouplingReport:
    domain: Domain
    params: CouplingParams
    n_heights: int
    n_rc: int
    n_compatible_pairs: int
    hf_marginal_ok: bool
    rc_marginal_ok: bool
    forms_ratio_ok: bool
    part2_hf_marginal_ok: Optional[bool]
    part2_rc_marginal_ok: Optional[bool]
    max_rel_dev: object

    @property
    def all_ok(self) -> bool:
        part2 = (self.part2_hf_marginal_ok is not False) and (
            self.part2_rc_marginal_ok is not False
        )
        return self.hf_marginal_ok and self.rc_marginal_ok and self.forms_ratio_ok and part2


def _const_ratio(pairs) -> tuple[bool, object]:
    """Whether x/y is the same for all (x, y); returns worst relative deviation."""
    ref = None
    worst = 0
    for x, y in pairs:
        r = x / y
        if ref is None:
            ref = r
            continue
        d = rel_deviation(r, ref)
        if d > worst:
            worst = d
    if ref is None:
        return True, 0
    ok = worst == 0 if is_exact(worst) else numbers_close(worst, 0)
    return ok, worst


def marginal_checks(dom: Domain, cp: CouplingParams, include_part2: bool = True):
    """Brute-force verification of the coupling identities on a small domain.

    Checks, all exact (rational) or to the 50-digit slack:
      * sum over eta compatible with h of the edge form == height weight (plain);
      * sum over h compatible with eta of the cluster form == RC weight with q_b;
      * edge form / cluster form is one constant across all compatible pairs;
      * on fixed-parity domains: the same two identities with all boundary
        edges of the primal graph conditioned open, against the c_b-weighted
        height measure and the wired RC measure.
    """
    pair = GraphPair(dom)
    if pair.n_edges > 16:
        raise ValueError("domain too large for brute-force marginal checks")
    params = cp.model_params()
    heights = enumerate_heights(dom, flat_boundary(0), params)
    faces = heights.meta["faces"]
    hfs = [
        HeightFunction(dom, dict(zip(faces, cfg)), flat_boundary(0))
        for cfg in heights.ids
    ]
    all_bits = list(itertools.product((0, 1), repeat=pair.n_edges))

    edge_w: dict[tuple[int, tuple], object] = {}
    cluster_w: dict[tuple[int, tuple], object] = {}
    for hi, h in enumerate(hfs):
        for bits in all_bits:
            if is_compatible_local(h, bits, pair):
                edge_w[(hi, bits)] = joint_weight_edge(h, bits, cp, pair)
                cluster_w[(hi, bits)] = joint_weight_cluster(h, bits, cp, pair)

    # compatibility via the cluster definition must agree with the local one
    for hi, h in enumerate(hfs):
        for bits in all_bits:
            if ((hi, bits) in edge_w) != is_compatible(h, bits, pair):
                raise RuntimeError("local and cluster compatibility disagree")

    devs = []

    hf_sums = []
    for hi, h in enumerate(hfs):
        tot = sum(edge_w[(hi, bits)] for bits in all_bits if (hi, bits) in edge_w)
        hf_sums.append((tot, heights.weights[hi]))
    hf_ok, d1 = _const_ratio(hf_sums)
    devs.append(d1)

    rc_sums = []
    for bits in all_bits:
        tot = sum(cluster_w[(hi, bits)] for hi in range(len(hfs)) if (hi, bits) in cluster_w)
        rc_sums.append((tot, rc_ratio_weight(bits, cp, pair)))
    rc_ok, d2 = _const_ratio(rc_sums)
    devs.append(d2)

    forms_ok, d3 = _const_ratio(
        [(edge_w[key], cluster_w[key]) for key in edge_w]
    )
    devs.append(d3)

    part2_hf_ok = part2_rc_ok = None
    if include_part2 and dom.parity_class == "even":
        ring = set(boundary_edges(pair))
        ring_bits = [bits for bits in all_bits if all(bits[k] for k in ring)]
        cb_heights = enumerate_heights(
            dom, flat_boundary(0), cp.model_params(c_b=cp.c_b), mode="boundary_cb"
        )
        cbw = {cfg: w for cfg, w in zip(cb_heights.ids, cb_heights.weights)}
        hf2 = []
        for hi, h in enumerate(hfs):
            tot = sum(edge_w[(hi, bits)] for bits in ring_bits if (hi, bits) in edge_w)
            hf2.append((tot, cbw[heights.ids[hi]]))
        part2_hf_ok, d4 = _const_ratio(hf2)
        devs.append(d4)

        rc2 = []
        for bits in ring_bits:
            tot = sum(
                cluster_w[(hi, bits)] for hi in range(len(hfs)) if (hi, bits) in cluster_w
            )
            dec = pair.decompose(bits)
            wired = cp.q ** (dec.k_wired - 1)
            for k, bit in enumerate(bits):
                if bit:
                    if pair.primal.edge_direction[k] == "h":
                        wired = wired * (cp.b * cp.sqrt_q / cp.a)
                    else:
                        wired = wired * (cp.a * cp.sqrt_q / cp.b)
            rc2.append((tot, wired))
        part2_rc_ok, d5 = _const_ratio(rc2)
        devs.append(d5)

    return CouplingReport(
        domain=dom,
        params=cp,
        n_heights=len(hfs),
        n_rc=len(all_bits),
        n_compatible_pairs=len(edge_w),
        hf_marginal_ok=hf_ok,
        rc_marginal_ok=rc_ok,
        forms_ratio_ok=forms_ok,
        part2_hf_marginal_ok=part2_hf_ok,
        part2_rc_marginal_ok=part2_rc_ok,
        max_rel_dev=max(devs) if devs else 0,
    )


# ---------------------------------------------------------------------------
# Variance decomposition along the coupling
# ---------------------------------------------------------------------------


@dataclass
class VarianceReport:
    face: Face
    e_h2: object
    e_n: object
    e_n2: object
    identity_ok: bool
    rel_dev: object


def variance_decomposition_check(dom: Domain, cp: CouplingParams, face: Face) -> VarianceReport:
    """E[h(u)^2] under the c_b height measure equals
    E_RC[N_u] 4/q + E_RC[N_u^2] (e^l - e^-l)^2 / q under the wired coupling.

    Requires an even domain and a face whose nesting chain is rooted in the
    primal boundary; all boundary edges of the primal graph are conditioned
    open (the wired side of the coupling).
    """
    if dom.parity_class != "even":
        raise ValueError("even domain required")
    pair = GraphPair(dom)
    ring = set(boundary_edges(pair))
    free = [k for k in range(pair.n_edges) if k not in ring]
    if len(free) > 16:
        raise ValueError("too many free edges for exact enumeration")

    node_idx = None
    if ("face", face) in pair.primal_cg.node_index:
        node_idx = ("p", pair.primal_cg.node_index[("face", face)])
    else:
        node_idx = ("d", pair.dual_cg.node_index[("face", face)])

    zn = zd = zd2 = 0
    for fb in itertools.product((0, 1), repeat=len(free)):
        bits = [1] * pair.n_edges
        for k, bval in zip(free, fb):
            bits[k] = bval
        bits = tuple(bits)
        dec = pair.decompose(bits)
        if node_idx[0] == "p":
            lab = dec.labels_primal[pair.primal_cg.node_index[("face", face)]]
            depth = dec.depth_primal[lab]
            root_kind = "p" if depth % 2 == 0 else "d"
        else:
            lab = dec.labels_dual[pair.dual_cg.node_index[("face", face)]]
            depth = dec.depth_dual[lab]
            root_kind = "d" if depth % 2 == 0 else "p"
        if root_kind != "p":
            raise ValueError(
                f"face {face} can root in the dual boundary; identity does not apply"
            )
        w = cp.q ** dec.k_i
        for k, bit in enumerate(bits):
            if bit:
                if pair.primal.edge_direction[k] == "h":
                    w = w * (cp.b * cp.sqrt_q / cp.a)
                else:
                    w = w * (cp.a * cp.sqrt_q / cp.b)
        zn += w
        zd += w * depth
        zd2 += w * depth * depth
    e_n = zd / zn
    e_n2 = zd2 / zn

    cbm = enumerate_heights(dom, flat_boundary(0), cp.model_params(c_b=cp.c_b), "boundary_cb")
    fidx = cbm.meta["faces"].index(face)
    Z = cbm.partition_function
    e_h2 = sum(w * cfg[fidx] ** 2 for cfg, w in zip(cbm.ids, cbm.weights)) / Z

    drift2 = (cp.e_lam - 1 / cp.e_lam) ** 2
    rhs = e_n * 4 / cp.q + e_n2 * drift2 / cp.q
    dev = rel_deviation(e_h2, rhs)
    ok = (dev == 0) if is_exact(dev) else numbers_close(dev, 0)
    return VarianceReport(face=face, e_h2=e_h2, e_n=e_n, e_n2=e_n2, identity_ok=ok, rel_dev=dev)
