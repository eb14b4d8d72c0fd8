"""Seeded, reproducible heat-bath chains for heights and random-cluster
configurations, composite sampling through the coupling, and chain statistics.

Every chain owns a counter-based generator derived from its spec seed; sweeps
update sites in a fixed raster order, so trajectories are bit-identical across
runs and thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .coupling import CouplingParams, boundary_edges
from .heights import HeightFunction, ModelParams, flat_boundary
from .lattice import Domain, Face, boundary_vertex_set, parity
from .oracle import ExactMeasure
from .random_cluster import EdgeGraph, GraphPair, RcParams


@dataclass(frozen=True)
class ChainSpec:
    seed: int
    sweeps: int
    burn_in: int = 0
    thinning: int = 1
    initial_state: str = "flat"

    def __post_init__(self):
        if min(self.sweeps, self.burn_in) < 0 or self.thinning < 1:
            raise ValueError("counts must be nonnegative, thinning >= 1")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))

    def spawn_rngs(self, n: int) -> list[np.random.Generator]:
        return [
            np.random.Generator(np.random.Philox(s))
            for s in np.random.SeedSequence(self.seed).spawn(n)
        ]


@dataclass
class EstimateWithError:
    mean: float
    stderr: float
    n_batches: int
    tau_int: float = float("nan")


def batch_means(samples: Sequence[float], n_batches: int = 32) -> EstimateWithError:
    x = np.asarray(samples, dtype=float)
    n = len(x)
    B = min(n_batches, max(8, n // 2)) if n < 2 * n_batches else n_batches
    if n < 16:
        return EstimateWithError(float(np.mean(x)), float("inf"), 1)
    size = n // B
    means = x[: B * size].reshape(B, size).mean(axis=1)
    return EstimateWithError(
        mean=float(np.mean(means)),
        stderr=float(np.std(means, ddof=1) / math.sqrt(B)),
        n_batches=B,
        tau_int=integrated_autocorr(x),
    )


def integrated_autocorr(x: np.ndarray, max_lag: Optional[int] = None) -> float:
    """1 + 2 sum of autocorrelations up to lag len/100 (or max_lag)."""
    n = len(x)
    if max_lag is None:
        max_lag = max(1, n // 100)
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    var = float(np.dot(xc, xc)) / n
    if var == 0:
        return 1.0
    tau = 1.0
    for k in range(1, min(max_lag, n - 1) + 1):
        rho = float(np.dot(xc[:-k], xc[k:])) / ((n - k) * var)
        tau += 2 * rho
    return tau


# ---------------------------------------------------------------------------
# Height-function chain
# ---------------------------------------------------------------------------


class HeightChain:
    """Heat-bath chain for the height measure with flat (0,1) boundary."""

    def __init__(
        self,
        domain: Domain,
        params: ModelParams,
        mode: str = "plain",
        initial: str = "flat",
    ):
        if mode == "boundary_cb":
            if params.c_b is None:
                raise ValueError("boundary_cb mode needs c_b")
            if domain.parity_class not in ("even", "odd"):
                raise ValueError("boundary_cb mode requires a fixed-parity domain")
        self.domain = domain
        self.params = params
        self.mode = mode
        bc = flat_boundary(0)
        self.bc = bc
        x0, y0, x1, y1 = domain.bounding_box()
        self.ox, self.oy = x0 - 1, y0 - 1
        W, H = x1 - x0 + 3, y1 - y0 + 3
        self.h = np.empty((W, H), dtype=np.int64)
        for gx in range(W):
            for gy in range(H):
                self.h[gx, gy] = bc((gx + self.ox, gy + self.oy))
        faces = sorted(domain.faces)
        self.faces = faces
        self.fx = np.array([f[0] - self.ox for f in faces], dtype=np.int64)
        self.fy = np.array([f[1] - self.oy for f in faces], dtype=np.int64)
        bvs = boundary_vertex_set(domain) if mode == "boundary_cb" else set()
        n = len(faces)
        self.cfac = np.empty((n, 4), dtype=np.float64)
        self.sfac = np.empty((n, 4), dtype=np.float64)
        a, b, c = float(params.a), float(params.b), float(params.c)
        c_b = float(params.c_b) if params.c_b is not None else 0.0
        for i, (fi, fj) in enumerate(faces):
            for k, (dx, dy) in enumerate(((1, 1), (1, -1), (-1, 1), (-1, -1))):
                z = (2 * fi + dx, 2 * fj + dy)
                if z in bvs:
                    self.cfac[i, k] = c_b
                    self.sfac[i, k] = 1.0
                else:
                    self.cfac[i, k] = c
                    # the face-diagonal pair at this corner runs NE-SW when
                    # dx == dy, which is the b-type split
                    self.sfac[i, k] = b if dx == dy else a
        if initial != "flat":
            raise ValueError("only the flat initial state is built in")

    def sweep(self, rng: np.random.Generator) -> None:
        u = rng.random(len(self.faces))
        _kernels.height_sweep(self.h, self.fx, self.fy, self.cfac, self.sfac, u)

    def value(self, face: Face) -> int:
        return int(self.h[face[0] - self.ox, face[1] - self.oy])

    def to_height_function(self) -> HeightFunction:
        values = {f: self.value(f) for f in self.domain.faces}
        return HeightFunction(self.domain, values, self.bc)

    def load(self, hf: HeightFunction) -> None:
        for f in self.domain.faces:
            self.h[f[0] - self.ox, f[1] - self.oy] = hf.values[f]


def height_heat_bath_sweep(
    h: HeightFunction, params: ModelParams, mode: str, rng: np.random.Generator
) -> HeightFunction:
    """One raster heat-bath sweep; returns the updated height function."""
    chain = HeightChain(h.domain, params, mode)
    chain.load(h)
    chain.sweep(rng)
    return chain.to_height_function()


# ---------------------------------------------------------------------------
# Random-cluster chain
# ---------------------------------------------------------------------------


class RcChain:
    """Single-edge heat-bath chain for the q_b-weighted random-cluster model."""

    def __init__(self, graph: EdgeGraph, params: RcParams, initial: str = "all_open"):
        self.graph = graph
        self.params = params
        m = graph.n_edges
        self.eu = np.array([e[0] for e in graph.edges], dtype=np.int64)
        self.ev = np.array([e[1] for e in graph.edges], dtype=np.int64)
        deg = [0] * graph.n_nodes
        for u, v in graph.edges:
            deg[u] += 1
            deg[v] += 1
        self.adj_ptr = np.zeros(graph.n_nodes + 1, dtype=np.int64)
        self.adj_ptr[1:] = np.cumsum(deg)
        pos = self.adj_ptr[:-1].copy()
        self.adj_edge = np.empty(self.adj_ptr[-1], dtype=np.int64)
        self.adj_node = np.empty(self.adj_ptr[-1], dtype=np.int64)
        for k, (u, v) in enumerate(graph.edges):
            self.adj_edge[pos[u]] = k
            self.adj_node[pos[u]] = v
            pos[u] += 1
            self.adj_edge[pos[v]] = k
            self.adj_node[pos[v]] = u
            pos[v] += 1
        self.is_bnd = np.array(graph.is_boundary, dtype=np.bool_)
        dirs = graph.edge_direction or ["h"] * m
        self.p_edge = np.array(
            [float(params.edge_p(d)) for d in dirs], dtype=np.float64
        )
        if initial == "all_open":
            self.bits = np.ones(m, dtype=np.int8)
        elif initial == "all_closed":
            self.bits = np.zeros(m, dtype=np.int8)
        else:
            raise ValueError(f"unknown initial state {initial!r}")
        self._stamp = np.zeros(graph.n_nodes, dtype=np.int64)
        self._stamp_no = 0
        self._queue = np.empty(graph.n_nodes, dtype=np.int64)

    def sweep(self, rng: np.random.Generator) -> None:
        u = rng.random(self.graph.n_edges)
        self._stamp_no = _kernels.rc_sweep(
            self.bits, self.eu, self.ev, self.adj_ptr, self.adj_edge, self.adj_node,
            self.is_bnd, self.p_edge, float(self.params.q), float(self.params.q_b),
            u, self._stamp, self._stamp_no, self._queue,
        )

    def open_bits(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.bits)


def rc_heat_bath_sweep(
    open_bits: Sequence[int], graph: EdgeGraph, params: RcParams, rng
) -> tuple[int, ...]:
    """One raster heat-bath sweep over all edges; returns the new bits."""
    chain = RcChain(graph, params)
    chain.bits = np.array(open_bits, dtype=np.int8)
    chain.sweep(rng)
    return chain.open_bits()


# ---------------------------------------------------------------------------
# Composite sampler: random-cluster configurations through the coupling
# ---------------------------------------------------------------------------


class CouplingChain:
    """Data-augmentation chain for (h, eta) pairs.

    variant 'qb'   : plain height chain; eta | h gives RC with q_b = sqrt(q)/e^l.
    variant 'wired': c_b height chain; eta | h on non-ring edges plus
                     independent ring edges gives the wired RC (q_b = 1).
    """

    def __init__(self, domain: Domain, cp: CouplingParams, variant: str = "qb"):
        self.cp = cp
        self.pair = GraphPair(domain)
        if variant == "qb":
            self.height_chain = HeightChain(domain, cp.model_params())
            self.ring = np.array([], dtype=np.int64)
        elif variant == "wired":
            self.height_chain = HeightChain(
                domain, cp.model_params(c_b=cp.c_b), mode="boundary_cb"
            )
            self.ring = np.array(sorted(boundary_edges(self.pair)), dtype=np.int64)
        else:
            raise ValueError(f"unknown variant {variant!r}")
        self.variant = variant
        pg, dg = self.pair.primal, self.pair.dual
        # node -> grid index or fixed boundary height
        self._p_fixed = np.array(
            [1 if self.pair.primal_cg.nodes[i][0] == "corner" else 0 for i in range(pg.n_nodes)],
            dtype=np.int64,
        )
        self._d_fixed = np.array(
            [1 if self.pair.dual_cg.nodes[i][0] == "corner" else 0 for i in range(dg.n_nodes)],
            dtype=np.int64,
        )
        ox, oy = self.height_chain.ox, self.height_chain.oy
        self._p_x = np.array(
            [self.pair.primal_cg.node_face(i)[0] - ox for i in range(pg.n_nodes)], dtype=np.int64
        )
        self._p_y = np.array(
            [self.pair.primal_cg.node_face(i)[1] - oy for i in range(pg.n_nodes)], dtype=np.int64
        )
        self._d_x = np.array(
            [self.pair.dual_cg.node_face(i)[0] - ox for i in range(dg.n_nodes)], dtype=np.int64
        )
        self._d_y = np.array(
            [self.pair.dual_cg.node_face(i)[1] - oy for i in range(dg.n_nodes)], dtype=np.int64
        )
        self.eu = np.array([e[0] for e in pg.edges], dtype=np.int64)
        self.ev = np.array([e[1] for e in pg.edges], dtype=np.int64)
        self.edu = np.array([e[0] for e in dg.edges], dtype=np.int64)
        self.edv = np.array([e[1] for e in dg.edges], dtype=np.int64)
        a, b = float(cp.a), float(cp.b)
        self.g_open = np.array(
            [b if d == "h" else a for d in pg.edge_direction], dtype=np.float64
        )
        self.g_closed = np.array(
            [a if d == "h" else b for d in pg.edge_direction], dtype=np.float64
        )
        self._p_ring = np.array(
            [float(cp.p_h()) if pg.edge_direction[k] == "h" else float(cp.p_v())
             for k in self.ring],
            dtype=np.float64,
        )

    def sweep(self, rng: np.random.Generator) -> None:
        self.height_chain.sweep(rng)

    def node_heights(self) -> tuple[np.ndarray, np.ndarray]:
        h = self.height_chain.h
        hp = np.where(self._p_fixed == 1, 0, h[self._p_x, self._p_y])
        hd = np.where(self._d_fixed == 1, 1, h[self._d_x, self._d_y])
        return hp.astype(np.int64), hd.astype(np.int64)

    def sample_eta(self, rng: np.random.Generator) -> np.ndarray:
        hp, hd = self.node_heights()
        m = len(self.eu)
        u = rng.random(m)
        out = np.empty(m, dtype=np.int8)
        _kernels.eta_given_heights(
            hp, hd, self.eu, self.ev, self.edu, self.edv,
            self.g_open, self.g_closed, float(self.cp.s), u, out,
        )
        if self.variant == "wired" and len(self.ring):
            out[self.ring] = (rng.random(len(self.ring)) < self._p_ring).astype(np.int8)
        return out


# ---------------------------------------------------------------------------
# Generic chain driver
# ---------------------------------------------------------------------------


def run_chain(
    spec: ChainSpec,
    model,
    observables: dict[str, Callable],
) -> dict[str, EstimateWithError]:
    """Run a chain and return batch-means estimates per named observable.

    ``model`` provides sweep(rng); each observable maps the model to a float.
    """
    rng = spec.rng()
    for _ in range(spec.burn_in):
        model.sweep(rng)
    series: dict[str, list[float]] = {name: [] for name in observables}
    for t in range(spec.sweeps):
        model.sweep(rng)
        if t % spec.thinning == 0:
            for name, fn in observables.items():
                series[name].append(fn(model))
    return {name: batch_means(vals) for name, vals in series.items()}


@dataclass
class ExactnessReport:
    tv: float
    n_samples: int
    n_atoms: int
    threshold: float

    @property
    def passed(self) -> bool:
        return self.tv < self.threshold


def exactness_gate(
    model,
    measure: ExactMeasure,
    read_state: Callable,
    spec: ChainSpec,
    threshold: float,
    project: Optional[Callable] = None,
) -> ExactnessReport:
    """Total-variation distance of the empirical chain law from the exact one.

    ``project`` may coarsen configuration ids (with the exact law aggregated
    accordingly) to keep the plug-in TV estimator's noise floor below the
    threshold on larger state spaces.
    """
    exact: dict = {}
    for cid, p in zip(measure.ids, measure.probabilities()):
        key = project(cid) if project else cid
        exact[key] = exact.get(key, 0) + p
    rng = spec.rng()
    for _ in range(spec.burn_in):
        model.sweep(rng)
    counts: dict = {}
    n = 0
    for t in range(spec.sweeps):
        model.sweep(rng)
        if t % spec.thinning == 0:
            key = read_state(model)
            key = project(key) if project else key
            counts[key] = counts.get(key, 0) + 1
            n += 1
    tv = 0.0
    for key in set(exact) | set(counts):
        tv += abs(float(exact.get(key, 0)) - counts.get(key, 0) / n)
    return ExactnessReport(tv=tv / 2, n_samples=n, n_atoms=len(exact), threshold=threshold)
