import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from icelab.coupling import (
    IncompatiblePairError,
    UnsupportedRegimeError,
    derive_params,
    exact_conditional_given_rc,
    is_compatible,
    is_compatible_local,
    joint_weight_cluster,
    joint_weight_edge,
    marginal_checks,
    sample_heights_given_rc,
    variance_decomposition_check,
)
from icelab.heights import HeightFunction, ModelParams, flat_boundary
from icelab.lattice import build_diamond
from icelab.oracle import enumerate_heights
from icelab.random_cluster import GraphPair


def test_derive_params_examples():
    cp = derive_params(1, 1, 2)
    assert (cp.s, cp.q, cp.q_b, cp.c_b) == (1, 4, 2, 1)
    cp = derive_params(1, 1, 3)
    assert float(cp.q) == pytest.approx((3 ** 2 - 2) ** 2)  # q = (c^2 - 2)^2
    cp = derive_params(1, 1, Fraction(5, 2))
    assert cp.exact and cp.q == (Fraction(5, 2) ** 2 - 2) ** 2
    with pytest.raises(UnsupportedRegimeError):
        derive_params(1, 1, 1)  # uniform weights sit in the disordered regime
    # consistency of the two parameterizations at a = b
    cp = derive_params(2, 2, 5)
    assert float(cp.c_b) == pytest.approx(float(cp.s))
    assert float(cp.s + 1 / cp.s) == pytest.approx(5 / 2)  # c/a = s + 1/s


def test_flat_height_compatible_with_everything(pair2):
    bc = flat_boundary(0)
    flat = HeightFunction(pair2.domain, {f: bc(f) for f in pair2.domain.faces}, bc)
    for bits in itertools.product((0, 1), repeat=pair2.n_edges):
        assert is_compatible_local(flat, bits, pair2)


def test_two_heights_in_one_cluster_incompatible(pair2):
    faces = sorted(pair2.domain.faces)
    vals = dict.fromkeys(faces)
    vals.update({(0, 0): 2, (1, 0): 1, (-1, 0): 1, (0, 1): 1, (0, -1): 1})
    h = HeightFunction(pair2.domain, vals, flat_boundary(0))
    all_open = (1,) * pair2.n_edges
    assert not is_compatible(h, all_open, pair2)
    with pytest.raises(IncompatiblePairError):
        joint_weight_edge(h, all_open, derive_params(1, 1, 3), pair2)


def test_compatibility_definitions_agree(pair2, heights2):
    faces = heights2.meta["faces"]
    bits_list = [tuple(int(b) for b in np.random.default_rng(1).integers(0, 2, pair2.n_edges))
                 for _ in range(40)]
    for cfg in heights2.ids:
        h = HeightFunction(pair2.domain, dict(zip(faces, cfg)), flat_boundary(0))
        for bits in bits_list:
            assert is_compatible(h, bits, pair2) == is_compatible_local(h, bits, pair2)


def test_compatible_pair_count_diamond2(pair2, heights2):
    # brute-force count through the cluster definition
    faces = heights2.meta["faces"]
    count = 0
    for cfg in heights2.ids:
        h = HeightFunction(pair2.domain, dict(zip(faces, cfg)), flat_boundary(0))
        for bits in itertools.product((0, 1), repeat=pair2.n_edges):
            count += is_compatible(h, bits, pair2)
    rep = marginal_checks(pair2.domain, derive_params(1, 1, 2), include_part2=False)
    assert rep.n_compatible_pairs == count


def test_uniform_coupling_at_lambda_zero(diamond2):
    """c = 2 pairs the height measure with q = 4, q_b = 2 uniformly: the height
    probability equals the share of compatible edge configurations."""
    pair = GraphPair(diamond2)
    cp = derive_params(1, 1, 2)
    heights = enumerate_heights(diamond2, flat_boundary(0), ModelParams(1, 1, 2))
    faces = heights.meta["faces"]
    counts = []
    for cfg in heights.ids:
        h = HeightFunction(diamond2, dict(zip(faces, cfg)), flat_boundary(0))
        n = 0
        for bits in itertools.product((0, 1), repeat=pair.n_edges):
            if is_compatible_local(h, bits, pair):
                n += 1
                assert joint_weight_edge(h, bits, cp, pair) == 1
        counts.append(n)
    total = sum(counts)
    Z = heights.partition_function
    for cfg, w, n in zip(heights.ids, heights.weights, counts):
        assert Fraction(n, total) == Fraction(w, Z)


def test_flat_height_edge_form_is_open_minus_closed(pair2):
    cp = derive_params(1, 1, Fraction(5, 2))
    bc = flat_boundary(0)
    flat = HeightFunction(pair2.domain, {f: bc(f) for f in pair2.domain.faces}, bc)
    for bits in [(0,) * 12, (1,) * 12, (1, 0) * 6, (0, 1) * 6]:
        o = sum(bits)
        expect = cp.s ** (o - (pair2.n_edges - o))  # e^{l/2 (o - c)}
        assert joint_weight_edge(flat, bits, cp, pair2) == expect


def test_cluster_edge_ratio_constant(pair2, heights2):
    cp = derive_params(1, 1, Fraction(5, 2))
    faces = heights2.meta["faces"]
    ref = None
    for cfg in heights2.ids[:8]:
        h = HeightFunction(pair2.domain, dict(zip(faces, cfg)), flat_boundary(0))
        for bits in itertools.product((0, 1), repeat=pair2.n_edges):
            if not is_compatible_local(h, bits, pair2):
                continue
            ratio = joint_weight_cluster(h, bits, cp, pair2) / joint_weight_edge(
                h, bits, cp, pair2
            )
            if ref is None:
                ref = ratio
            assert ratio == ref


def test_marginal_checks_all_params(diamond1, diamond2, rect32):
    for dom in (diamond1, rect32):
        for c in (2, Fraction(5, 2)):
            rep = marginal_checks(dom, derive_params(1, 1, c))
            assert rep.all_ok, (dom, c)
    rep = marginal_checks(diamond2, derive_params(1, 1, Fraction(5, 2)))
    assert rep.all_ok and rep.part2_hf_marginal_ok and rep.part2_rc_marginal_ok


def test_marginal_checks_anisotropic(diamond1):
    rep = marginal_checks(diamond1, derive_params(1, Fraction(3, 2), 3))
    assert rep.all_ok


def test_sample_heights_all_open_is_flat(pair2):
    cp = derive_params(1, 1, 3)
    rng = np.random.default_rng(0)
    h = sample_heights_given_rc((1,) * pair2.n_edges, pair2, cp, rng)
    bc = flat_boundary(0)
    assert h.values == {f: bc(f) for f in pair2.domain.faces}


def test_sample_heights_lambda0_fair_steps(pair2):
    """At c = 2 each nested cluster steps +-1 with probability 1/2."""
    cp = derive_params(1, 1, 2)
    rng = np.random.default_rng(42)
    # all edges closed: the dual spanning cluster (height 1) surrounds the
    # center, whose singleton cluster takes one fair +-1 step from it
    bits = (0,) * pair2.n_edges
    n = 20000
    vals = Counter(sample_heights_given_rc(bits, pair2, cp, rng).values[(0, 0)]
                   for _ in range(n))
    assert set(vals) <= {0, 2}
    assert abs(vals[0] / n - 0.5) < 3 * math.sqrt(0.25 / n)


def test_sampler_matches_exact_conditional(pair2, heights2):
    cp = derive_params(1, 1, Fraction(5, 2))
    rng = np.random.default_rng(7)
    bits = (0,) * pair2.n_edges
    cond = exact_conditional_given_rc(bits, pair2, cp, heights2)
    n = 50000
    counts = Counter()
    faces = heights2.meta["faces"]
    for _ in range(n):
        h = sample_heights_given_rc(bits, pair2, cp, rng)
        counts[tuple(h.values[f] for f in faces)] += 1
    assert set(counts) <= set(cond.ids)
    for cid, p in zip(cond.ids, cond.probabilities()):
        pf = float(p)
        se = math.sqrt(max(pf * (1 - pf), 1e-12) / n)
        assert abs(counts[cid] / n - pf) < 3 * se + 1e-9


def test_variance_decomposition(diamond2):
    for c in (2, Fraction(5, 2)):
        rep = variance_decomposition_check(diamond2, derive_params(1, 1, c), (0, 0))
        assert rep.identity_ok
    rep3 = variance_decomposition_check(diamond2, derive_params(1, 1, 3), (0, 0))
    assert rep3.identity_ok  # 50-digit path
    # lambda = 0 kills the drift term: E[h^2] = 4 E[N] / q
    rep2 = variance_decomposition_check(diamond2, derive_params(1, 1, 2), (0, 0))
    assert rep2.e_h2 == rep2.e_n * 4 / derive_params(1, 1, 2).q
