"""Exhaustive enumeration on tiny instances with exact arithmetic.

Trust anchor for the coupling identities, FKG lattice conditions, stochastic
dominations and sampler correctness: everything here is brute force by design,
independent of the fast paths it certifies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .heights import (
    HeightFunction,
    ModelParams,
    SpinConfig,
    boundary_c_count,
    height_to_spin,
    height_weight,
)
from .lattice import Domain, Face, external_boundary, parity
from .numerics import ge_with_slack, is_exact, numbers_close, rel_deviation
from .random_cluster import EdgeGraph, RcParams, rc_weight, heat_bath_edge_ratio


@dataclass
class ExactMeasure:
    """A finite measure as an explicit list of (configuration id, weight).

    ``values`` optionally carries a per-atom value vector realizing the
    pointwise partial order used by the FKG and domination checkers.
    """

    ids: list
    weights: list
    values: Optional[list[tuple]] = None
    meta: dict = field(default_factory=dict)
    _index: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("configuration ids must be unique")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if self.partition_function <= 0:
            raise ValueError("partition function must be positive")

    @property
    def partition_function(self):
        return sum(self.weights)

    @property
    def n_atoms(self) -> int:
        return len(self.ids)

    def index(self) -> dict:
        if self._index is None:
            self._index = {cid: k for k, cid in enumerate(self.ids)}
        return self._index

    def weight_of(self, cid):
        return self.weights[self.index()[cid]]

    def probability(self, cid):
        return self.weight_of(cid) / self.partition_function

    def probabilities(self) -> list:
        Z = self.partition_function
        return [w / Z for w in self.weights]


@dataclass
class PosetStructure:
    """Pointwise partial order on the atoms of a measure."""

    elements: list
    values: list[tuple]

    def leq(self, i: int, j: int) -> bool:
        return all(a <= b for a, b in zip(self.values[i], self.values[j]))

    def covers(self) -> list[tuple[int, int]]:
        n = len(self.elements)
        less = [[self.leq(i, j) and i != j for j in range(n)] for i in range(n)]
        out = []
        for i in range(n):
            for j in range(n):
                if less[i][j] and not any(less[i][k] and less[k][j] for k in range(n)):
                    out.append((i, j))
        return out


def poset_of(measure: ExactMeasure) -> PosetStructure:
    if measure.values is None:
        raise ValueError("measure has no value vectors")
    return PosetStructure(measure.ids, measure.values)


# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------


def enumerate_height_values(
    dom: Domain, bc: Callable[[Face], int]
) -> tuple[list[Face], list[tuple[int, ...]]]:
    """All valid height assignments on the domain faces (raster order)."""
    faces = sorted(dom.faces)
    if len(faces) > 14:
        raise ValueError("enumeration capped at 14 free faces")
    pos = {f: k for k, f in enumerate(faces)}
    ext = external_boundary(dom)
    configs: list[tuple[int, ...]] = []

    def neighbors_fixed(f: Face):
        from .lattice import face_neighbors

        fixed, free = [], []
        for g in face_neighbors(f):
            if g in pos:
                if pos[g] < pos[f]:
                    free.append(pos[g])
            else:
                fixed.append(bc(g))
        return fixed, free

    nb = [neighbors_fixed(f) for f in faces]

    def rec(k: int, partial: list[int]):
        if k == len(faces):
            configs.append(tuple(partial))
            return
        fixed, free = nb[k]
        anchor_vals = fixed + [partial[i] for i in free]
        if anchor_vals:
            cands = set(range(anchor_vals[0] - 1, anchor_vals[0] + 2, 2))
            for v in anchor_vals:
                cands &= {v - 1, v + 1}
        else:
            raise ValueError("face with no anchored neighbor; enlarge the order")
        for v in sorted(cands):
            partial.append(v)
            rec(k + 1, partial)
            partial.pop()

    rec(0, [])
    return faces, configs


def enumerate_heights(
    dom: Domain,
    bc: Callable[[Face], int],
    params: ModelParams,
    mode: str = "plain",
) -> ExactMeasure:
    """Exact height-function measure; ids are value tuples in face raster order.

    In boundary_cb mode, c_b = 0 and c_b = inf are the limiting measures
    (support restricted to the minimal/maximal boundary c-vertex count).
    """
    faces, configs = enumerate_height_values(dom, bc)
    hfs = [HeightFunction(dom, dict(zip(faces, cfg)), bc) for cfg in configs]
    if mode == "boundary_cb" and params.c_b == math.inf:
        nbs = [boundary_c_count(h) for h in hfs]
        m = max(nbs)
        stripped = ModelParams(params.a, params.b, params.c, c_b=1)
        weights = [
            height_weight(h, stripped, "boundary_cb") if nb == m else 0 * params.a
            for h, nb in zip(hfs, nbs)
        ]
    else:
        weights = [height_weight(h, params, mode) for h in hfs]
    return ExactMeasure(
        ids=list(configs),
        weights=weights,
        values=list(configs),
        meta={"faces": faces, "domain": dom, "bc": bc, "mode": mode},
    )


def spin_marginal_even(measure: ExactMeasure) -> ExactMeasure:
    """Push a height measure to the spin value vector on its even faces."""
    faces = measure.meta["faces"]
    even_idx = [k for k, f in enumerate(faces) if parity(f) == 0]
    agg: dict[tuple, object] = {}
    for cfg, w in zip(measure.ids, measure.weights):
        key = tuple(1 if cfg[k] % 4 in (0, 1) else -1 for k in even_idx)
        agg[key] = agg.get(key, 0) + w
    ids = sorted(agg)
    return ExactMeasure(
        ids=ids,
        weights=[agg[i] for i in ids],
        values=ids,
        meta={"faces": [faces[k] for k in even_idx]},
    )


def enumerate_rc(
    graph: EdgeGraph,
    P: RcParams,
    forced_open: Sequence[int] = (),
) -> ExactMeasure:
    """Exact random-cluster measure on a small graph; ids are edge bit tuples."""
    m = graph.n_edges
    if m > 20:
        raise ValueError("enumeration capped at 20 edges")
    forced = set(forced_open)
    free = [k for k in range(m) if k not in forced]
    ids, weights = [], []
    for bits_free in itertools.product((0, 1), repeat=len(free)):
        bits = [1] * m
        for k, b in zip(free, bits_free):
            bits[k] = b
        bits = tuple(bits)
        ids.append(bits)
        weights.append(rc_weight(bits, graph, P))
    return ExactMeasure(ids=ids, weights=weights, values=ids, meta={"graph": graph})


# ---------------------------------------------------------------------------
# FKG lattice condition
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    witness: Optional[dict] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def fkg_lattice_check(measure: ExactMeasure, mode: str = "all_pairs") -> CheckResult:
    """W(x v y) W(x ^ y) >= W(x) W(y); meet/join must stay in the support.

    mode 'two_site' restricts to pairs differing in exactly two coordinates,
    which is equivalent for strictly positive measures on full product spaces.
    """
    if measure.values is None:
        raise ValueError("measure has no value vectors")
    idx = {v: k for k, v in enumerate(measure.values)}
    vals = measure.values
    ws = measure.weights
    n = len(vals)
    for i in range(n):
        vi = vals[i]
        for j in range(i + 1, n):
            vj = vals[j]
            diff = [k for k in range(len(vi)) if vi[k] != vj[k]]
            if mode == "two_site" and len(diff) != 2:
                continue
            if not diff or all(vi[k] <= vj[k] for k in diff) or all(
                vi[k] >= vj[k] for k in diff
            ):
                continue  # comparable pairs are trivial
            join = tuple(max(a, b) for a, b in zip(vi, vj))
            meet = tuple(min(a, b) for a, b in zip(vi, vj))
            if join not in idx or meet not in idx:
                return CheckResult(
                    False,
                    witness={"x": vi, "y": vj, "missing": join if join not in idx else meet},
                    detail="support is not a lattice",
                )
            lhs = ws[idx[join]] * ws[idx[meet]]
            rhs = ws[i] * ws[j]
            if not ge_with_slack(lhs, rhs):
                return CheckResult(
                    False,
                    witness={"x": vi, "y": vj, "lhs": lhs, "rhs": rhs},
                    detail="lattice condition fails",
                )
    return CheckResult(True)


# ---------------------------------------------------------------------------
# Stochastic domination (Strassen via max-flow)
# ---------------------------------------------------------------------------


def stochastic_domination_check(mu: ExactMeasure, nu: ExactMeasure) -> CheckResult:
    """Does nu stochastically dominate mu? Exact monotone-coupling feasibility.

    Max-flow on the bipartite comparability graph; on failure the witness is a
    violating increasing event (an up-set U with mu(U) > nu(U)).
    """
    if mu.values is None or nu.values is None:
        raise ValueError("measures need value vectors")
    if mu.n_atoms * nu.n_atoms > 4000 * 4000:
        raise ValueError("instance too large for the domination checker")
    mu_p = mu.probabilities()
    nu_p = nu.probabilities()
    n_mu, n_nu = mu.n_atoms, nu.n_atoms
    # nodes: 0 = source, 1..n_mu = mu atoms, n_mu+1..n_mu+n_nu = nu atoms, t = last
    t = n_mu + n_nu + 1
    cap: dict[tuple[int, int], object] = {}
    adj: dict[int, list[int]] = {k: [] for k in range(t + 1)}

    def add(u, v, c):
        cap[(u, v)] = cap.get((u, v), 0) + c
        if v not in adj[u]:
            adj[u].append(v)
        if u not in adj[v]:
            adj[v].append(u)
        cap.setdefault((v, u), 0)

    one = Fraction(1) if is_exact(*mu_p, *nu_p) else 1.0
    for i in range(n_mu):
        add(0, 1 + i, mu_p[i])
    for j in range(n_nu):
        add(1 + n_mu + j, t, nu_p[j])
    for i in range(n_mu):
        vi = mu.values[i]
        for j in range(n_nu):
            if all(a <= b for a, b in zip(vi, nu.values[j])):
                add(1 + i, 1 + n_mu + j, one * 2)  # effectively infinite

    flow = 0
    while True:
        # BFS augmenting path
        prev = {0: None}
        queue = [0]
        while queue and t not in prev:
            u = queue.pop(0)
            for v in adj[u]:
                if v not in prev and cap.get((u, v), 0) > 0:
                    prev[v] = u
                    queue.append(v)
        if t not in prev:
            break
        path = []
        v = t
        while prev[v] is not None:
            path.append((prev[v], v))
            v = prev[v]
        aug = min(cap[(u, w)] for u, w in path)
        for u, w in path:
            cap[(u, w)] -= aug
            cap[(w, u)] += aug
        flow = flow + aug

    if numbers_close(flow, one):
        return CheckResult(True)
    # residual-reachable mu atoms have unshipped mass; their up-closure violates
    reach = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in reach and cap.get((u, v), 0) > 0:
                reach.add(v)
                stack.append(v)
    bad_mu = [i for i in range(n_mu) if (1 + i) in reach]
    up_mu = sum(
        p for i, p in enumerate(mu_p)
        if any(all(a <= b for a, b in zip(mu.values[k], mu.values[i])) for k in bad_mu)
    )
    up_nu = sum(
        p for j, p in enumerate(nu_p)
        if any(all(a <= b for a, b in zip(mu.values[k], nu.values[j])) for k in bad_mu)
    )
    return CheckResult(
        False,
        witness={"upset_generators": [mu.values[k] for k in bad_mu],
                 "mu_upset": up_mu, "nu_upset": up_nu},
        detail=f"mu(U)={up_mu} > nu(U)={up_nu} for an increasing event U",
    )


# ---------------------------------------------------------------------------
# Pushforward equality
# ---------------------------------------------------------------------------


def pushforward_equality_check(
    mu: ExactMeasure, map_fn: Callable, nu: ExactMeasure
) -> CheckResult:
    """Does map_fn push mu forward to nu (as normalized distributions)?"""
    agg: dict = {}
    for cid, p in zip(mu.ids, mu.probabilities()):
        agg[map_fn(cid)] = agg.get(map_fn(cid), 0) + p
    nu_idx = nu.index()
    if set(agg) != set(nu.ids):
        extra = set(agg) - set(nu.ids)
        missing = set(nu.ids) - set(agg)
        return CheckResult(
            False,
            witness={"extra": sorted(extra), "missing": sorted(missing)},
            detail="supports differ",
        )
    worst = 0
    nu_p = nu.probabilities()
    for cid, p in agg.items():
        d = rel_deviation(p, nu_p[nu_idx[cid]])
        if d > worst:
            worst = d
    ok = numbers_close(worst, 0) if not is_exact(worst) else worst == 0
    return CheckResult(ok, witness=None if ok else {"max_rel_dev": worst},
                       detail=f"max relative deviation {worst}")


# ---------------------------------------------------------------------------
# Exact transition matrices
# ---------------------------------------------------------------------------


@dataclass
class KernelReport:
    matrix: list[list]
    detailed_balance: bool
    irreducible: bool
    stationarity: bool


def height_site_kernel(measure: ExactMeasure, face_idx: int) -> list[list]:
    """Exact heat-bath kernel resampling one face of a height measure."""
    idx = measure.index()
    n = measure.n_atoms
    P = [[0] * n for _ in range(n)]
    for i, cfg in enumerate(measure.ids):
        cands = []
        for v in range(cfg[face_idx] - 2, cfg[face_idx] + 3):
            cand = cfg[:face_idx] + (v,) + cfg[face_idx + 1 :]
            if cand in idx:
                cands.append(idx[cand])
        tot = sum(measure.weights[j] for j in cands)
        for j in cands:
            P[i][j] = measure.weights[j] / tot
    return P


def rc_edge_kernel(
    measure: ExactMeasure, graph: EdgeGraph, params: RcParams, edge_idx: int
) -> list[list]:
    idx = measure.index()
    n = measure.n_atoms
    P = [[0] * n for _ in range(n)]
    for i, bits in enumerate(measure.ids):
        p_open = heat_bath_edge_ratio(bits, edge_idx, graph, params)
        b_open = bits[:edge_idx] + (1,) + bits[edge_idx + 1 :]
        b_closed = bits[:edge_idx] + (0,) + bits[edge_idx + 1 :]
        P[i][idx[b_open]] += p_open
        P[i][idx[b_closed]] += 1 - p_open
    return P


def matrix_product(A: list[list], B: list[list]) -> list[list]:
    n = len(A)
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for k in range(n):
            a = Ai[k]
            if a == 0:
                continue
            Bk = B[k]
            row = out[i]
            for j in range(n):
                if Bk[j] != 0:
                    row[j] += a * Bk[j]
    return out


def detailed_balance_holds(P: list[list], weights: list) -> bool:
    n = len(P)
    for i in range(n):
        for j in range(n):
            if not numbers_close(weights[i] * P[i][j], weights[j] * P[j][i]):
                return False
    return True


def stationarity_holds(P: list[list], weights: list) -> bool:
    n = len(P)
    for j in range(n):
        acc = 0
        for i in range(n):
            acc += weights[i] * P[i][j]
        if not numbers_close(acc, weights[j]):
            return False
    return True


def irreducible(P: list[list]) -> bool:
    n = len(P)

    def reach(start, trans) -> set:
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in range(n):
                if trans(u, v) > 0 and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    fwd = reach(0, lambda u, v: P[u][v])
    bwd = reach(0, lambda u, v: P[v][u])
    return len(fwd) == n and len(bwd) == n


def transition_matrix(
    measure: ExactMeasure,
    kernel: str,
    graph: Optional[EdgeGraph] = None,
    params: Optional[RcParams] = None,
) -> KernelReport:
    """Exact raster-composition kernel for 'height' or 'rc' heat-bath chains.

    Each single-site factor is checked for detailed balance; the composed
    kernel is checked for stationarity and irreducibility.
    """
    if kernel == "height":
        sites = range(len(measure.meta["faces"]))
        factors = [height_site_kernel(measure, k) for k in sites]
    elif kernel == "rc":
        assert graph is not None and params is not None
        factors = [rc_edge_kernel(measure, graph, params, k) for k in range(graph.n_edges)]
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    db = all(detailed_balance_holds(F, measure.weights) for F in factors)
    P = factors[0]
    for F in factors[1:]:
        P = matrix_product(P, F)
    return KernelReport(
        matrix=P,
        detailed_balance=db,
        irreducible=irreducible(P),
        stationarity=stationarity_holds(P, measure.weights),
    )
