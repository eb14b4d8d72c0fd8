import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from icelab.heights import (
    ArrowConfig,
    HeightFunction,
    IceRuleError,
    ModelParams,
    SpinConfig,
    VertexType,
    _classify,
    arrow_event_A,
    arrows_to_height,
    boundary_c_count,
    classify_vertex,
    classify_vertex_spins,
    domain_edges,
    flat_boundary,
    height_from_text,
    height_to_arrows,
    height_to_spin,
    height_to_text,
    height_weight,
    spin_to_height,
    spin_to_text,
    spin_weight,
)
from icelab.lattice import build_diamond, edge_faces, parity
from icelab.oracle import enumerate_heights


def _hf(dom, values, n=0):
    return HeightFunction(dom, values, flat_boundary(n))


def test_classification_examples():
    # heights (NW, NE, SE, SW) = (0, 1, 0, 1): both diagonals agree -> c type
    assert _classify(sw=1, se=0, ne=1, nw=0).weight_class == "c"
    # (0, 1, 2, 1): NW-SE diagonal differs by 2 -> a type
    assert _classify(sw=1, se=2, ne=1, nw=0).weight_class == "a"
    with pytest.raises(IceRuleError):
        _classify(sw=0, se=1, ne=2, nw=3)


def test_all_local_patterns_rotation_swaps_a_and_b():
    pats = []
    for se in (1, -1):
        for nw in (1, -1):
            nes = {0, se + nw} if se == nw else {0}
            for ne in nes:
                pats.append((0, se, ne, nw))
    assert len(pats) == 6  # exactly six legal local patterns
    for sw, se, ne, nw in pats:
        t = _classify(sw, se, ne, nw)
        rot = _classify(se, ne, nw, sw)  # 90-degree rotation
        table = {"a": "b", "b": "a", "c": "c"}
        assert rot.weight_class == table[t.weight_class]


def test_diamond1_weights(diamond1):
    p = ModelParams(1, 1, Fraction(5, 2))
    w0 = height_weight(_hf(diamond1, {(0, 0): 0}), p)
    w2 = height_weight(_hf(diamond1, {(0, 0): 2}), p)
    assert w0 == Fraction(5, 2) ** 4  # all four vertices c-type
    assert w2 == 1


def test_weight_shift_invariance(diamond2, heights2):
    p = ModelParams(1, 1, Fraction(5, 2))
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        h2 = HeightFunction(diamond2, {f: v + 2 for f, v in h.values.items()}, flat_boundary(2))
        assert height_weight(h2, p) == height_weight(h, p)


def test_weight_rotation_invariance_when_a_equals_b(diamond2, heights2):
    # rotating by 90 degrees about the center vertex swaps a and b counts
    p_ab = ModelParams(Fraction(2), Fraction(3), Fraction(7))
    p_ba = ModelParams(Fraction(3), Fraction(2), Fraction(7))
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        rot_vals = {(-j, i): h.values[(i, j)] for (i, j) in h.values}
        hr = HeightFunction(diamond2, rot_vals, lambda u: flat_boundary(0)((u[1], -u[0])))
        assert height_weight(hr, p_ba) == height_weight(h, p_ab)


def test_boundary_cb_weight(diamond2):
    p = ModelParams(1, 1, Fraction(5, 2), c_b=Fraction(2))
    bc = flat_boundary(0)
    flat = _hf(diamond2, {f: bc(f) for f in diamond2.faces})
    assert boundary_c_count(flat) == 8
    # 4 interior c-vertices at weight c, 8 boundary c-vertices at weight c_b
    assert height_weight(flat, p, "boundary_cb") == Fraction(5, 2) ** 4 * 2 ** 8


def test_boundary_cb_zero_forbids_boundary_c(diamond2, heights2):
    p = ModelParams(1, 1, Fraction(5, 2), c_b=0)
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        w = height_weight(h, p, "boundary_cb")
        assert (w == 0) == (boundary_c_count(h) > 0)


def test_cb_equal_c_reproduces_plain_for_unit_ab(diamond2, heights2):
    c = Fraction(5, 2)
    p_plain = ModelParams(1, 1, c)
    p_cb = ModelParams(1, 1, c, c_b=c)
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        assert height_weight(h, p_cb, "boundary_cb") == height_weight(h, p_plain)


def test_height_spin_map():
    assert height_to_spin(_hf(build_diamond(1), {(0, 0): 0})).value((0, 0)) == 1
    assert height_to_spin(_hf(build_diamond(1), {(0, 0): 2})).value((0, 0)) == -1
    d = build_diamond(1, (1, 0))
    h5 = HeightFunction(d, {(1, 0): 5}, flat_boundary(4))
    assert height_to_spin(h5).value((1, 0)) == 1


def test_spin_round_trip_exhaustive(diamond2, heights2):
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        sigma = height_to_spin(h)
        sigma.validate()  # image satisfies the ice rule
        back = spin_to_height(sigma, faces[0], cfg[0])
        assert back.values == h.values
        # adding 4 fixes the image
        h4 = HeightFunction(diamond2, {f: v + 4 for f, v in h.values.items()}, flat_boundary(4))
        assert height_to_spin(h4).values == sigma.values


def test_arrow_round_trip_exhaustive(diamond2, heights2):
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        arrows = height_to_arrows(h)
        arrows.validate()
        back = arrows_to_height(arrows, faces[0], cfg[0])
        assert back.values == h.values


def test_flat_state_is_all_left_circulation(diamond2):
    bc = flat_boundary(0)
    flat = _hf(diamond2, {f: bc(f) for f in diamond2.faces})
    arrows = height_to_arrows(flat)
    assert all(o == 1 for o in arrows.orientation.values())
    e = next(iter(arrows.orientation))
    assert arrow_event_A(arrows, e)
    flipped = ArrowConfig(diamond2, {k: -v for k, v in arrows.orientation.items()})
    assert not arrow_event_A(flipped, e)


def test_arrow_event_matches_spin_product(diamond2, heights2):
    faces = heights2.meta["faces"]
    for cfg in heights2.ids[:6]:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        arrows = height_to_arrows(h)
        sigma = height_to_spin(h)
        for e in arrows.orientation:
            u1, u2 = edge_faces(*e)
            even, odd = (u1, u2) if parity(u1) == 0 else (u2, u1)
            assert arrow_event_A(arrows, e) == (sigma.value(even) * sigma.value(odd) == 1)


def test_spin_weight_matches_height_weight(diamond2, heights2):
    p = ModelParams(Fraction(3, 2), Fraction(1, 2), Fraction(5, 2))
    faces = heights2.meta["faces"]
    for cfg in heights2.ids:
        h = _hf(diamond2, dict(zip(faces, cfg)))
        assert spin_weight(height_to_spin(h), p) == height_weight(h, p)


def test_spin_flip_preserves_weight(diamond2, heights2):
    p = ModelParams(1, 1, Fraction(5, 2))
    faces = heights2.meta["faces"]
    cfg = heights2.ids[0]
    sigma = height_to_spin(_hf(diamond2, dict(zip(faces, cfg))))
    flipped = SpinConfig(
        diamond2,
        {f: -v for f, v in sigma.values.items()},
        lambda u: -sigma.boundary_condition(u),
    )
    assert spin_weight(flipped, p) == spin_weight(sigma, p)


def test_spin_ice_rule_violation_rejected(diamond2):
    # both diagonals split at the vertex between (0,0), (1,0), (1,1), (0,1)
    values = {(0, 0): 1, (1, 0): 1, (0, 1): -1, (-1, 0): 1, (0, -1): 1}
    sigma = SpinConfig(diamond2, values, lambda u: -1 if u == (1, 1) else 1)
    with pytest.raises(IceRuleError):
        sigma.validate()
    with pytest.raises((IceRuleError, ValueError)):
        spin_to_height(sigma, (0, 0), 0)


def test_snapshot_round_trip(diamond2, heights2):
    faces = heights2.meta["faces"]
    h = _hf(diamond2, dict(zip(faces, heights2.ids[3])))
    text = height_to_text(h)
    assert "*" in text
    back = height_from_text(text, diamond2, flat_boundary(0))
    assert back.values == h.values
    stext = spin_to_text(height_to_spin(h))
    assert set(stext.split()) <= {"+", "-", "*"}


def test_diamond1_spin_probability_ratio(diamond1):
    # P(spin(0,0) = -1) / P(spin = +1) = 1 : c^4 through the two lifts
    c = Fraction(5, 2)
    m = enumerate_heights(diamond1, flat_boundary(0), ModelParams(1, 1, c))
    w = {cfg[0]: wt for cfg, wt in zip(m.ids, m.weights)}
    assert w[0] / w[2] == c ** 4


@st.composite
def random_heights(draw):
    N = draw(st.integers(min_value=1, max_value=3))
    dom = build_diamond(N)
    bc = flat_boundary(0)
    faces = sorted(dom.faces)
    values = {}
    rnd = draw(st.randoms(use_true_random=False))
    for f in faces:
        anchored = [values[g] for g in [(f[0] - 1, f[1]), (f[0], f[1] - 1)] if g in values]
        anchored += [bc(g) for g in
                     [(f[0] + 1, f[1]), (f[0], f[1] + 1), (f[0] - 1, f[1]), (f[0], f[1] - 1)]
                     if g not in dom.faces]
        cands = set(range(-9, 9))
        for v in anchored:
            cands &= {v - 1, v + 1}
        values[f] = rnd.choice(sorted(cands))
    return HeightFunction(dom, values, bc)


@given(random_heights())
@settings(max_examples=40, deadline=None)
def test_random_height_round_trips(h):
    h.validate()
    anchor = sorted(h.values)[0]
    sigma = height_to_spin(h)
    assert spin_to_height(sigma, anchor, h.values[anchor]).values == h.values
    arrows = height_to_arrows(h)
    assert arrows_to_height(arrows, anchor, h.values[anchor]).values == h.values
