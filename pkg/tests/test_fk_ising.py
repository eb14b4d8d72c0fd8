import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from icelab.fk_ising import (
    at_joint_check,
    at_weight,
    enumerate_fk_ising,
    enumerate_spins,
    free_edge_open_probability,
    joint_weight_sigma_xi,
    resample_spins_given_xi,
    sample_tau_given_xi_star,
    sample_xi_given_spins,
    sample_xi_star_given_tau,
    selfdual_params,
    spin_edge_sets,
    spin_even_marginal,
    xi_compatible,
)
from icelab.heights import ModelParams, SpinConfig, flat_boundary
from icelab.lattice import build_diamond, parity
from icelab.oracle import fkg_lattice_check
from icelab.random_cluster import GraphPair


BLOCK = build_diamond(2, (1, 0))  # four even faces in a 2x2 arrangement


def plus_bc(u):
    return 1


def test_selfdual_params_examples():
    ap = selfdual_params(0.25 * math.log(3))
    assert ap.U == pytest.approx(0.25 * math.log(3), abs=1e-12)
    assert ap.c == pytest.approx(2.0)
    assert ap.regime == "four-state-potts-point"
    ap2 = selfdual_params(0.05)
    assert ap2.c > 2 and ap2.regime == "J<U"
    for J in (0.1, 0.2, 0.25 * math.log(3), 0.6):
        ap = selfdual_params(J)
        assert math.exp(2 * ap.J + 2 * ap.U) == pytest.approx(ap.c + 1, rel=1e-12)
        assert math.exp(-2 * ap.J + 2 * ap.U) == pytest.approx(ap.c - 1, rel=1e-12)


def test_at_weight_factors():
    edges = [(0, 1)]
    J, U = 0.3, 0.7
    assert at_weight([1, 1], [1, 1], J, U, edges) == pytest.approx(math.exp(2 * J + U))
    assert at_weight([1, 1], [1, -1], J, U, edges) == pytest.approx(math.exp(-U))
    assert at_weight([1, -1], [1, -1], J, U, edges) == pytest.approx(math.exp(-2 * J + U))
    # flipping one configuration globally preserves the weight
    assert at_weight([-1, -1], [1, -1], J, U, edges) == pytest.approx(
        at_weight([1, 1], [1, -1], J, U, edges)
    )


def test_forced_edges(pair2):
    # a spin configuration with an even-spin disagreement forces open edges
    dom = pair2.domain
    values = {f: (1 if f != (0, 0) else -1) for f in dom.faces}
    sigma = SpinConfig(dom, values, plus_bc)
    sigma.validate()
    forced_open, forced_closed, free = spin_edge_sets(sigma, pair2)
    assert forced_open  # the minus island splits even diagonals
    rng = np.random.default_rng(0)
    cfg = sample_xi_given_spins(sigma, ModelParams(1, 1, 2.5), rng, pair2)
    assert all(cfg.xi[k] == 1 for k in forced_open)
    assert all(cfg.xi[k] == 0 for k in forced_closed)
    assert xi_compatible(sigma, cfg.xi, pair2)


def test_free_edge_probability():
    p = ModelParams(1, 1, 2)
    assert free_edge_open_probability(p, "h") == free_edge_open_probability(p, "v") == 0.5
    pab = ModelParams(Fraction(1), Fraction(3, 2), Fraction(3))
    assert free_edge_open_probability(pab, "v") == Fraction(2, 3)  # (c-a)/c
    assert free_edge_open_probability(pab, "h") == Fraction(1, 2)  # (c-b)/c


def test_joint_weight_examples(pair2):
    dom = pair2.domain
    bc = flat_boundary(0)
    sigma = SpinConfig(dom, {f: 1 for f in dom.faces}, plus_bc)
    # c = 2: base c-1 = 1, every compatible pair has weight one
    for bits in itertools.product((0, 1), repeat=pair2.n_edges):
        w = joint_weight_sigma_xi(sigma, bits, 2, pair2)
        assert w in (0, 1)
        assert (w == 1) == xi_compatible(sigma, bits, pair2)


def test_resample_spins_given_xi(pair2):
    rng = np.random.default_rng(3)
    all_open = (1,) * pair2.n_edges
    out = resample_spins_given_xi(all_open, rng, pair2)
    assert all(v == 1 for v in out.values())  # single boundary cluster
    all_closed = (0,) * pair2.n_edges
    counts = Counter()
    n = 4000
    for _ in range(n):
        out = resample_spins_given_xi(all_closed, rng, pair2)
        counts.update(out)
    # isolated interior odd faces get fair signs
    for f, tot in counts.items():
        assert abs(tot / n) < 4 / math.sqrt(n)


def test_xi_star_given_tau_probabilities():
    pair = GraphPair(BLOCK)
    J = 0.25 * math.log(3)
    rng = np.random.default_rng(1)
    n = pair.primal.n_nodes
    tau = [1] * n
    tau_p = [1] * n
    hits = np.zeros(pair.primal.n_edges)
    trials = 3000
    for _ in range(trials):
        hits += np.array(sample_xi_star_given_tau(tau, tau_p, J, rng, pair))
    # all-equal spins: iid Bernoulli(1 - e^{-4J}) = 2/3 per edge
    assert np.all(np.abs(hits / trials - 2 / 3) < 4 * math.sqrt(0.25 / trials))
    tau2 = list(tau)
    tau2[0] = -1
    bits = sample_xi_star_given_tau(tau2, tau_p, J, rng, pair)
    for k, (u, v) in enumerate(pair.primal.edges):
        if 0 in (u, v):
            assert bits[k] == 0  # disagreement closes the edge surely


def test_tau_given_xi_star(pair2):
    rng = np.random.default_rng(5)
    n = pair2.primal.n_nodes
    sigma_even = [1] * n
    all_open = (1,) * pair2.n_edges
    seen = set()
    for _ in range(200):
        tau, tau_p = sample_tau_given_xi_star(all_open, sigma_even, rng, pair2)
        assert len(set(tau)) == 1  # single cluster: one global sign
        assert tau_p == tau  # tau * tau' = sigma_even = all plus
        seen.add(tau[0])
    assert seen == {-1, 1}
    with pytest.raises(ValueError):
        bad_sigma = [1] * (n - 1) + [-1]
        sample_tau_given_xi_star(all_open, bad_sigma, rng, pair2)


def test_at_joint_check_both_parameter_points():
    rep = at_joint_check(BLOCK, 0.25 * math.log(3), exact_c=Fraction(2))
    assert rep.all_ok and float(rep.max_rel_dev) < 1e-25
    rep2 = at_joint_check(BLOCK, 0.2)
    assert rep2.all_ok and float(rep2.max_rel_dev) < 1e-25


def test_xi_fkg_for_c_at_least_2():
    dom = build_diamond(1)  # four xi edges
    for c in (Fraction(2), Fraction(5, 2), Fraction(4)):
        xi_m, pair, _ = enumerate_fk_ising(dom, ModelParams(1, 1, c))
        assert fkg_lattice_check(xi_m).passed, c


def test_xi_fkg_reports_only_below_2():
    # in the band max(a,b) <= c < 2 the lattice condition is checked but not
    # asserted; record the verdict either way
    dom = build_diamond(1)
    xi_m, pair, _ = enumerate_fk_ising(dom, ModelParams(1, 1, Fraction(3, 2)))
    res = fkg_lattice_check(xi_m, mode="two_site")
    assert res.passed in (True, False)


def test_spin_even_marginal_fkg_plus_boundary():
    spins = enumerate_spins(BLOCK, plus_bc, ModelParams(1, 1, Fraction(5, 2)))
    assert fkg_lattice_check(spin_even_marginal(spins)).passed
    # holds for a != b with c >= max(a, b) as well
    spins2 = enumerate_spins(BLOCK, plus_bc, ModelParams(Fraction(3, 2), 1, Fraction(3, 2)))
    assert fkg_lattice_check(spin_even_marginal(spins2)).passed


def _mixed_odd_counterexample():
    """Search small domains and mixed odd boundaries for a pair of even faces
    with P(both minus) = 0 but positive single-site minus probabilities."""
    dom = BLOCK
    odd_ext = sorted(
        {f for f in dom.vertices() for f in []}  # placeholder, replaced below
    )
    # mixed boundary: odd external faces split by sign of their x coordinate
    def bc(u):
        if parity(u) == 1:
            return 1 if u[0] >= 1 else -1
        return 1

    spins = enumerate_spins(dom, bc, ModelParams(1, 1, Fraction(5, 2)))
    marg = spin_even_marginal(spins)
    faces = marg.meta["faces"]
    Z = marg.partition_function
    for i in range(len(faces)):
        for j in range(i + 1, len(faces)):
            p_mm = sum(
                w for cfg, w in zip(marg.ids, marg.weights)
                if cfg[i] == -1 and cfg[j] == -1
            )
            p_m_i = sum(w for cfg, w in zip(marg.ids, marg.weights) if cfg[i] == -1)
            p_m_j = sum(w for cfg, w in zip(marg.ids, marg.weights) if cfg[j] == -1)
            if p_mm == 0 and p_m_i > 0 and p_m_j > 0:
                return faces[i], faces[j], marg
    return None


def test_mixed_odd_boundary_breaks_positive_association():
    found = _mixed_odd_counterexample()
    assert found is not None
    u, v, marg = found
    res = fkg_lattice_check(marg)
    assert not res.passed
