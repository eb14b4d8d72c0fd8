"""Named desk-scale verification suites behind `icelab oracle <suite>`.

Each check yields (name, passed, detail). The suites are trimmed versions of
the exhaustive acceptance tests, sized to run a full `oracle all` in a couple
of minutes on a laptop.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np

from .coupling import (
    derive_params,
    marginal_checks,
    variance_decomposition_check,
)
from .fk_ising import at_joint_check, enumerate_spins, spin_even_marginal
from .heights import (
    HeightFunction,
    ModelParams,
    flat_boundary,
    height_to_arrows,
    height_to_spin,
    arrows_to_height,
    spin_to_height,
)
from .lattice import build_diamond, build_rectangle, parity
from .oracle import (
    enumerate_heights,
    enumerate_rc,
    fkg_lattice_check,
    pushforward_equality_check,
    stochastic_domination_check,
    transition_matrix,
)
from .random_cluster import GraphPair, RcParams, grid_graph, path_graph
from .samplers import ChainSpec, HeightChain, RcChain, exactness_gate


def _coupling_suite():
    for dom_name, dom in (("diamond1", build_diamond(1)), ("diamond2", build_diamond(2))):
        for c in (2, Fraction(5, 2)):
            cp = derive_params(1, 1, c)
            rep = marginal_checks(dom, cp)
            yield (
                f"coupling/marginals {dom_name} c={c}",
                rep.all_ok,
                f"max rel dev {float(rep.max_rel_dev):.2e}",
            )
    cp = derive_params(1, Fraction(3, 2), 3)
    rep = marginal_checks(build_diamond(1), cp)
    yield ("coupling/marginals diamond1 a=1 b=1.5 c=3", rep.all_ok,
           f"max rel dev {float(rep.max_rel_dev):.2e}")
    vr = variance_decomposition_check(build_diamond(2), derive_params(1, 1, Fraction(5, 2)), (0, 0))
    yield ("coupling/variance-decomposition diamond2 c=2.5", vr.identity_ok,
           f"rel dev {float(vr.rel_dev):.2e}")


def _fkg_suite():
    d2 = build_diamond(2)
    m = enumerate_heights(d2, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2)))
    yield ("fkg/heights diamond2 c=2.5", bool(fkg_lattice_check(m)), "")
    bad = enumerate_heights(d2, flat_boundary(0), ModelParams(3, 1, 1))
    res = fkg_lattice_check(bad)
    yield ("fkg/heights counterexample a=3 b=1 c=1", not res.passed,
           "witness found" if not res.passed else "no witness")
    g = grid_graph(3, 2)  # 7 edges
    for q, qb in ((2, Fraction(3, 2)), (Fraction(9, 2), 1)):
        P = RcParams(q=q, q_b=qb, p=Fraction(1, 2))
        res = fkg_lattice_check(enumerate_rc(g, P), mode="two_site")
        yield (f"fkg/rc grid32 q={q} qb={qb}", res.passed, "")
    dom = build_diamond(2, (1, 0))
    spins = enumerate_spins(dom, lambda u: 1, ModelParams(1, 1, Fraction(5, 2)))
    res = fkg_lattice_check(spin_even_marginal(spins))
    yield ("fkg/spin-even-marginal block c=2.5", res.passed, "")


def _domination_suite():
    d2 = build_diamond(2)
    cp = derive_params(1, 1, Fraction(5, 2))
    order = [0, Fraction(1, 2), 1, cp.c_b, math.inf]
    ms = {
        cb: enumerate_heights(
            d2, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2), c_b=cb), "boundary_cb"
        )
        for cb in order
    }
    ok = True
    for lo, hi in zip(order, order[1:]):
        ok = ok and bool(stochastic_domination_check(ms[lo], ms[hi]))
    yield ("domination/c_b chain diamond2 c=2.5", ok, "0 <= 1/2 <= 1 <= e^{l/2} <= inf")
    g = path_graph(4, boundary=[0, 3])
    mu = enumerate_rc(g, RcParams(q=Fraction(3), q_b=Fraction(2), p=Fraction(1, 3)))
    nu = enumerate_rc(g, RcParams(q=Fraction(2), q_b=Fraction(3, 2), p=Fraction(1, 2)))
    yield ("domination/rc path4 (q',qb',p') vs (q,qb,p)",
           bool(stochastic_domination_check(mu, nu)), "")


def _fk_ising_suite():
    dom = build_diamond(2, (1, 0))
    rep = at_joint_check(dom, 0.25 * math.log(3), exact_c=Fraction(2))
    yield ("fk_ising/at-joint block J=log(3)/4", rep.all_ok,
           f"max rel dev {float(rep.max_rel_dev):.2e}")


def _sampler_suite():
    d1 = build_diamond(1)
    m = enumerate_heights(d1, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2)))
    rep = transition_matrix(m, "height")
    yield ("sampler/height kernel diamond1", rep.detailed_balance and rep.irreducible
           and rep.stationarity, "detailed balance, irreducibility, stationarity")
    g = path_graph(3, boundary=[0])
    P = RcParams(q=Fraction(2), q_b=Fraction(3, 2), p=Fraction(1, 2))
    mrc = enumerate_rc(g, P)
    rep = transition_matrix(mrc, "rc", graph=g, params=P)
    yield ("sampler/rc kernel path3", rep.detailed_balance and rep.irreducible
           and rep.stationarity, "")
    chain = HeightChain(d1, ModelParams(1, 1, 2.5))
    gate = exactness_gate(
        chain, m, lambda c: tuple(c.value(f) for f in sorted(d1.faces)),
        ChainSpec(seed=7, sweeps=100000, burn_in=500), threshold=0.005,
    )
    yield ("sampler/tv-gate heights diamond1", gate.passed,
           f"tv {gate.tv:.4f} over {gate.n_atoms} atoms")


def _structure_suite():
    rng = random.Random(0)
    gp = GraphPair(build_diamond(4))
    ok = all(
        gp.euler_identity_holds(tuple(rng.randint(0, 1) for _ in range(gp.n_edges)))
        for _ in range(2000)
    )
    yield ("structure/euler diamond4 random", ok, "2000 random configurations")
    d2 = build_diamond(2)
    m = enumerate_heights(d2, flat_boundary(0), ModelParams(1, 1, 2))
    faces = m.meta["faces"]
    ok = True
    for cfg in m.ids:
        h = HeightFunction(d2, dict(zip(faces, cfg)), flat_boundary(0))
        back = spin_to_height(height_to_spin(h), faces[0], cfg[0])
        ok = ok and back.values == h.values
        back2 = arrows_to_height(height_to_arrows(h), faces[0], cfg[0])
        ok = ok and back2.values == h.values
    yield ("structure/round-trips diamond2", ok, f"{m.n_atoms} configurations")
    cp = derive_params(1, 1, Fraction(5, 2))
    mu = enumerate_heights(
        d2, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2), c_b=cp.c_b), "boundary_cb"
    )
    dshift = build_diamond(2, (1, 0))
    nu = enumerate_heights(
        dshift, flat_boundary(0), ModelParams(1, 1, Fraction(5, 2), c_b=cp.c_b), "boundary_cb"
    )
    fo = mu.meta["faces"]
    fs = nu.meta["faces"]
    idx = [fo.index((i - 1, j)) for (i, j) in fs]

    def push(cfg):
        return tuple(1 - cfg[k] for k in idx)

    res = pushforward_equality_check(mu, push, nu)
    yield ("structure/pushforward h -> 1-h(.-e1) diamond2", res.passed, res.detail)


_SUITES = {
    "coupling": _coupling_suite,
    "fkg": _fkg_suite,
    "domination": _domination_suite,
    "fk_ising": _fk_ising_suite,
    "sampler": _sampler_suite,
    "structure": _structure_suite,
}


def run_suite(suite: str):
    if suite == "all":
        for name in _SUITES:
            yield from _SUITES[name]()
        return
    if suite not in _SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    yield from _SUITES[suite]()
