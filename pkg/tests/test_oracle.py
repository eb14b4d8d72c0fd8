import itertools
import math
from fractions import Fraction

import pytest

from icelab.heights import HeightFunction, ModelParams, flat_boundary, height_weight
from icelab.lattice import build_diamond, build_rectangle, face_neighbors
from icelab.oracle import (
    enumerate_heights,
    enumerate_rc,
    fkg_lattice_check,
    poset_of,
    pushforward_equality_check,
    stochastic_domination_check,
    transition_matrix,
)
from icelab.random_cluster import GraphPair, RcParams, path_graph


def test_enumerate_heights_diamond1(diamond1):
    c = Fraction(5, 2)
    m = enumerate_heights(diamond1, flat_boundary(0), ModelParams(1, 1, c))
    assert dict(zip([i[0] for i in m.ids], m.weights)) == {0: c ** 4, 2: 1}


def _independent_height_count(dom, bc):
    """Second enumeration route: product over per-face ranges, filtered."""
    faces = sorted(dom.faces)
    lo = min(bc(f) for f in faces) - len(faces) - 1
    hi = max(bc(f) for f in faces) + len(faces) + 1
    count = 0
    for vals in itertools.product(range(lo, hi + 1), repeat=len(faces)):
        h = dict(zip(faces, vals))
        ok = all((v - f[0] - f[1]) % 2 == 0 for f, v in h.items())
        if not ok:
            continue
        for f in faces:
            for g in face_neighbors(f):
                other = h[g] if g in h else bc(g)
                if abs(h[f] - other) != 1:
                    ok = False
        if ok:
            count += 1
    return count


def test_height_atom_count_matches_independent_enumeration():
    for dom in (build_diamond(1), build_diamond(2, (1, 0)), build_rectangle(2, 2)):
        m = enumerate_heights(dom, flat_boundary(0), ModelParams(1, 1, 2))
        assert m.n_atoms == _independent_height_count(dom, flat_boundary(0))


def test_enumerate_heights_cb_limits(diamond2):
    c = Fraction(5, 2)
    m0 = enumerate_heights(diamond2, flat_boundary(0),
                           ModelParams(1, 1, c, c_b=0), "boundary_cb")
    minf = enumerate_heights(diamond2, flat_boundary(0),
                             ModelParams(1, 1, c, c_b=math.inf), "boundary_cb")
    assert sum(1 for w in m0.weights if w > 0) > 0
    assert sum(1 for w in minf.weights if w > 0) > 0
    # the two limiting supports are disjoint on this domain
    s0 = {i for i, w in zip(m0.ids, m0.weights) if w > 0}
    sinf = {i for i, w in zip(minf.ids, minf.weights) if w > 0}
    assert not (s0 & sinf)


def test_enumerate_rc_single_edge():
    g = path_graph(2, boundary=[0])
    P = RcParams(q=Fraction(2), q_b=Fraction(2), p=Fraction(1, 2))
    m = enumerate_rc(g, P)
    w = dict(zip(m.ids, m.weights))
    # opening the edge merges two clusters: weight ratio 1/2 at p = 1/2, q = 2
    assert w[(1,)] / w[(0,)] == Fraction(1, 2)


def test_fkg_pass_and_counterexample(diamond2):
    ok = enumerate_heights(diamond2, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2)))
    assert fkg_lattice_check(ok).passed
    bad = enumerate_heights(diamond2, flat_boundary(0), ModelParams(3, 1, 1))
    res = fkg_lattice_check(bad)
    assert not res.passed and res.witness is not None
    x, y = res.witness["x"], res.witness["y"]
    join = tuple(max(a, b) for a, b in zip(x, y))
    meet = tuple(min(a, b) for a, b in zip(x, y))
    assert bad.weight_of(join) * bad.weight_of(meet) < bad.weight_of(x) * bad.weight_of(y)


def test_heights_meet_join_closed(heights2):
    # the pointwise max/min of two valid height functions is valid
    idx = set(heights2.ids)
    for x in heights2.ids:
        for y in heights2.ids:
            assert tuple(max(a, b) for a, b in zip(x, y)) in idx
            assert tuple(min(a, b) for a, b in zip(x, y)) in idx


def test_poset_covers(heights2):
    poset = poset_of(heights2)
    covers = poset.covers()
    assert covers
    for i, j in covers:
        assert poset.leq(i, j) and i != j


def test_domination_trivial_and_witness(diamond2):
    c = Fraction(5, 2)
    hi = enumerate_heights(diamond2, flat_boundary(0), ModelParams(1, 1, c, c_b=4), "boundary_cb")
    lo = enumerate_heights(diamond2, flat_boundary(0),
                           ModelParams(1, 1, c, c_b=Fraction(1, 4)), "boundary_cb")
    assert stochastic_domination_check(hi, hi).passed
    assert stochastic_domination_check(lo, hi).passed
    res = stochastic_domination_check(hi, lo)
    assert not res.passed
    # the returned witness is a genuine violating increasing event
    assert res.witness["mu_upset"] > res.witness["nu_upset"]


def test_pushforward_identity_and_shift(heights2):
    assert pushforward_equality_check(heights2, lambda c: c, heights2).passed
    shifted = enumerate_heights(
        build_diamond(2), flat_boundary(2), ModelParams(1, 1, Fraction(5, 2))
    )
    res = pushforward_equality_check(heights2, lambda cfg: tuple(v + 2 for v in cfg), shifted)
    assert res.passed


def test_reflection_flip_symmetry_even_rectangle():
    # h(i,j) -> 1 - h(1-i, j) preserves the flat-boundary measure on a
    # domain symmetric under i -> 1-i
    dom = build_rectangle(2, 2)  # faces (0..1, 0..1), symmetric about i = 1/2
    m = enumerate_heights(dom, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2)))
    faces = m.meta["faces"]
    pos = {f: k for k, f in enumerate(faces)}

    def refl(cfg):
        return tuple(1 - cfg[pos[(1 - f[0], f[1])]] for f in faces)

    assert pushforward_equality_check(m, refl, m).passed


def test_transition_matrix_height_kernel(diamond1):
    c = Fraction(5, 2)
    m = enumerate_heights(diamond1, flat_boundary(0), ModelParams(1, 1, c))
    rep = transition_matrix(m, "height")
    assert rep.detailed_balance and rep.irreducible and rep.stationarity
    # the 2x2 kernel has stationary ratio c^4 : 1
    P = rep.matrix
    assert P[1][0] / P[0][1] == c ** 4


def test_transition_matrix_rc_kernel():
    g = path_graph(3, boundary=[0])
    P = RcParams(q=Fraction(2), q_b=Fraction(3, 2), p=Fraction(1, 3))
    m = enumerate_rc(g, P)
    rep = transition_matrix(m, "rc", graph=g, params=P)
    assert rep.detailed_balance and rep.irreducible and rep.stationarity
    for row in rep.matrix:
        assert sum(row) == 1


def test_height_kernel_irreducible_diamond2(heights2):
    rep = transition_matrix(heights2, "height")
    assert rep.irreducible and rep.stationarity and rep.detailed_balance
