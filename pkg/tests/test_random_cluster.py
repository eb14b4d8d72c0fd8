import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from icelab.lattice import build_diamond, build_rectangle
from icelab.oracle import enumerate_rc
from icelab.random_cluster import (
    EdgeGraph,
    GraphPair,
    RcConfig,
    RcParams,
    anisotropic_critical,
    decompose,
    from_corner_graph,
    grid_graph,
    heat_bath_edge_ratio,
    p_critical,
    path_graph,
    rc_from_text,
    rc_to_text,
    rc_weight,
)


def test_decompose_extremes(pair2):
    m = pair2.n_edges
    dec = pair2.decompose((0,) * m)
    # all closed: every primal node is its own cluster
    assert dec.k == pair2.primal.n_nodes
    assert dec.k_b == sum(pair2.primal.is_boundary)
    assert dec.k_i == pair2.primal.n_nodes - dec.k_b
    dec = pair2.decompose((1,) * m)
    assert dec.k == 1 and dec.k_b == 1 and dec.k_i == 0


def test_decompose_nine_boundary_four_interior():
    # structural reproduction of a configuration with k_b = 9, k_i = 4,
    # located by seeded search and recounted by an independent BFS below
    dom = build_rectangle(5, 5)
    pair = GraphPair(dom)
    rng = random.Random(20240811)
    target = None
    for _ in range(4000):
        bits = tuple(1 if rng.random() < 0.3 else 0 for _ in range(pair.n_edges))
        dec = pair.decompose(bits)
        if dec.k_b == 9 and dec.k_i == 4:
            target = bits
            break
    assert target is not None
    ki, kb = _bfs_counts(pair.primal, target)
    assert (kb, ki) == (9, 4)


def _bfs_counts(graph, bits):
    seen = [False] * graph.n_nodes
    adj = graph.adjacency()
    ki = kb = 0
    for s in range(graph.n_nodes):
        if seen[s]:
            continue
        comp = [s]
        seen[s] = True
        stack = [s]
        bnd = False
        while stack:
            u = stack.pop()
            if graph.is_boundary[u]:
                bnd = True
            for k, w in adj[u]:
                if bits[k] and not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if bnd:
            kb += 1
        else:
            ki += 1
    return ki, kb


def test_euler_identity_exhaustive_small(pair2):
    for bits in itertools.product((0, 1), repeat=pair2.n_edges):
        assert pair2.euler_identity_holds(bits)


@given(st.integers(min_value=0, max_value=2 ** 40 - 1))
@settings(max_examples=300, deadline=None)
def test_euler_identity_random_diamond4(bits_int):
    pair = _PAIR4
    bits = tuple((bits_int >> k) & 1 for k in range(pair.n_edges))
    assert pair.euler_identity_holds(bits)


_PAIR4 = GraphPair(build_diamond(4))


def test_rc_weight_wired_free_conventions():
    g = path_graph(4, boundary=[0, 3])
    q, p = Fraction(3), Fraction(2, 5)
    # q_b = 1: weight equals q^{k with all boundary wired} p^o (1-p)^c (up to q)
    P1 = RcParams(q=q, q_b=1, p=p)
    Pq = RcParams(q=q, q_b=q, p=p)
    for bits in itertools.product((0, 1), repeat=3):
        ki, kb = g.cluster_counts(bits)
        k_wired = ki + (1 if kb else 0)
        o = sum(bits)
        edge_fac = p ** o * (1 - p) ** (3 - o)
        assert rc_weight(bits, g, P1) * q ** (k_wired - ki) == q ** k_wired * edge_fac
        assert rc_weight(bits, g, Pq) == q ** (ki + kb) * edge_fac


def test_p_critical():
    assert p_critical(4) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        p_critical(0.5)


def test_anisotropic_critical():
    ph, pv = anisotropic_critical(1, 1, 4)
    assert ph == pytest.approx(p_critical(4)) and pv == pytest.approx(p_critical(4))
    ph, pv = anisotropic_critical(2, 3, 5)
    assert ph / (1 - ph) * pv / (1 - pv) == pytest.approx(5)


def test_heat_bath_ratio_cases():
    p = Fraction(1, 2)
    P = RcParams(q=Fraction(3), q_b=Fraction(2), p=p)
    g = path_graph(4)
    assert heat_bath_edge_ratio([1, 0, 1], 1, g, P) == p / (p + (1 - p) * 3)
    gb = path_graph(4, boundary=[0, 3])
    assert heat_bath_edge_ratio([1, 0, 1], 1, gb, P) == p / (p + (1 - p) * 2)
    multi = EdgeGraph(2, [(0, 1), (0, 1)], [False, False])
    assert heat_bath_edge_ratio([1, 0], 1, multi, P) == p


def test_heat_bath_ratio_matches_weight_ratio_everywhere():
    # exact conditional from the measure itself, on every edge of small graphs
    for g in (path_graph(4, boundary=[0]), grid_graph(3, 2),
              from_corner_graph(GraphPair(build_diamond(1)).primal_cg)):
        P = RcParams(q=Fraction(5, 2), q_b=Fraction(3, 2), p=Fraction(2, 7))
        for bits in itertools.product((0, 1), repeat=g.n_edges):
            for e in range(g.n_edges):
                up = bits[:e] + (1,) + bits[e + 1 :]
                dn = bits[:e] + (0,) + bits[e + 1 :]
                wu, wd = rc_weight(up, g, P), rc_weight(dn, g, P)
                assert heat_bath_edge_ratio(bits, e, g, P) == wu / (wu + wd)


def test_qb_out_of_unit_q_range_accepted_by_weight():
    g = path_graph(3, boundary=[0, 2])
    P = RcParams(q=Fraction(2), q_b=Fraction(5), p=Fraction(1, 2))  # q_b > q
    assert rc_weight((0, 0), g, P) > 0


def test_dual_measure_swaps_qb_to_q_over_qb(pair2):
    """The complement map sends the boundary-weighted measure on the even graph
    to the one with q_b' = q/q_b on the odd graph (at the self-dual point)."""
    q = Fraction(4)
    p = Fraction(2, 3)  # sqrt(q)/(1+sqrt(q))
    for qb in (Fraction(1), Fraction(2), Fraction(4)):
        mu = enumerate_rc(pair2.primal, RcParams(q=q, q_b=qb, p=p))
        nu = enumerate_rc(pair2.dual, RcParams(q=q, q_b=q / qb, p=p))
        Zmu, Znu = mu.partition_function, nu.partition_function
        for bits, w in zip(mu.ids, mu.weights):
            dual_bits = tuple(1 - b for b in bits)
            assert w / Zmu == nu.weight_of(dual_bits) / Znu


def test_rc_config_and_snapshot(pair2):
    bits = tuple([1, 0] * (pair2.n_edges // 2))
    cfg = RcConfig(pair2.primal, bits)
    assert cfg.dual_bits() == tuple(1 - b for b in bits)
    text = rc_to_text(cfg, pair2)
    assert rc_from_text(text, pair2.primal) == bits
    with pytest.raises(ValueError):
        rc_from_text("E 0 1\n", pair2.primal)


def test_decompose_depth_and_adjacency(pair2):
    dec = pair2.decompose((0,) * pair2.n_edges)
    center = pair2.primal_cg.node_index[("face", (0, 0))]
    lab = dec.labels_primal[center]
    assert dec.depth_primal[lab] == 1  # surrounded by the spanning dual cluster
    for pc, dc, rel in dec.adjacency:
        dp, dd = dec.depth_primal[pc], dec.depth_dual[dc]
        assert rel in ("primal_inside", "dual_inside", "none")
        if rel == "none":
            assert dp == dd == 0
        else:
            assert abs(dp - dd) == 1
