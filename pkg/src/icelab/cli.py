"""Batch command-line interface.

    icelab run <config.json> [--out PATH] [--threads K] [--seed-override N]
    icelab oracle <suite>    [--out PATH]
    icelab snapshot <state-file>

Run configs are strict JSON (unknown keys rejected); results are emitted as a
fixed 14-column CSV. Exit codes: 0 success, 1 validation error, 2 oracle
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from .experiments import (
    CSV_COLUMNS,
    ResultRow,
    experiment_arrow_bias,
    experiment_at_selfdual,
    experiment_height_gibbs_diagnostics,
    experiment_qb_interpolation,
    experiment_variance_scaling,
    rows_to_csv,
)
from .heights import ModelParams, flat_boundary, height_from_text
from .lattice import Domain, build_diamond, build_rectangle, domain_from_text
from .random_cluster import GraphPair, RcParams, rc_from_text
from .samplers import ChainSpec, CouplingChain, HeightChain, RcChain, batch_means


class ConfigError(ValueError):
    pass


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_keys(obj: dict, allowed: set[str], where: str):
    for key in obj:
        _require(key in allowed, f"{where}: unknown key {key!r}")


def parse_chain(obj: dict, where: str = "chain") -> ChainSpec:
    _require(isinstance(obj, dict), f"{where}: must be an object")
    _check_keys(obj, {"seed", "sweeps", "burn_in", "thinning", "initial_state"}, where)
    _require("seed" in obj, f"{where}.seed: required field is missing")
    _require("sweeps" in obj, f"{where}.sweeps: required field is missing")
    return ChainSpec(
        seed=int(obj["seed"]),
        sweeps=int(obj["sweeps"]),
        burn_in=int(obj.get("burn_in", 0)),
        thinning=int(obj.get("thinning", 1)),
        initial_state=str(obj.get("initial_state", "flat")),
    )


def parse_domain(obj: dict) -> Domain:
    _require(isinstance(obj, dict), "domain: must be an object")
    _check_keys(obj, {"type", "N", "center", "width", "height", "corner"}, "domain")
    kind = obj.get("type", "diamond")
    if kind == "diamond":
        _require("N" in obj, "domain.N: required for diamonds")
        center = tuple(obj.get("center", (0, 0)))
        return build_diamond(int(obj["N"]), center)
    if kind == "rectangle":
        return build_rectangle(
            int(obj["width"]), int(obj["height"]), tuple(obj.get("corner", (0, 0)))
        )
    raise ConfigError(f"domain.type: unknown type {kind!r}")


_MODEL_KEYS = {"model", "experiment", "params", "domain", "boundary", "chain",
               "observables", "output"}


def _observable_fn(model: str, name: str):
    """Observable mini-language: height:i,j | height_sq:i,j |
    height_pair:i,j;k,l | spin:i,j | edge_density | center_to_boundary."""

    def faces(spec: str):
        return [tuple(int(t) for t in p.split(",")) for p in spec.split(";")]

    if ":" in name:
        kind, arg = name.split(":", 1)
    else:
        kind, arg = name, ""
    if model in ("heights", "spins", "coupling") and kind == "height":
        (f,) = faces(arg)
        return lambda m: float(m.height_value(f))
    if model in ("heights", "spins", "coupling") and kind == "height_sq":
        (f,) = faces(arg)
        return lambda m: float(m.height_value(f)) ** 2
    if model in ("heights", "spins", "coupling") and kind == "height_pair":
        f, g = faces(arg)
        return lambda m: float(m.height_value(f) + m.height_value(g))
    if model == "spins" and kind == "spin":
        (f,) = faces(arg)
        return lambda m: float(1 if m.height_value(f) % 4 in (0, 1) else -1)
    if model in ("rc", "coupling") and kind == "edge_density":
        return lambda m: m.edge_density()
    if model in ("rc", "coupling") and kind == "center_to_boundary":
        return lambda m: m.center_to_boundary()
    raise ConfigError(f"observables: {name!r} is not defined for model {model!r}")


class _HeightModel:
    def __init__(self, dom, params, mode):
        self.chain = HeightChain(dom, params, mode)

    def sweep(self, rng):
        self.chain.sweep(rng)

    def height_value(self, f):
        return self.chain.value(f)


class _RcModel:
    def __init__(self, dom, params):
        self.pair = GraphPair(dom)
        self.chain = RcChain(self.pair.primal, params)
        from .experiments import _bulk_edges

        x0, y0, x1, y1 = dom.bounding_box()
        self.bulk = _bulk_edges(self.pair, max(2, (x1 - x0) // 4))
        center = min(dom.faces, key=lambda f: (abs(f[0]) + abs(f[1]), f))
        key = ("face", center)
        cg = self.pair.primal_cg if key in self.pair.primal_cg.node_index else self.pair.dual_cg
        self._center_primal = key in self.pair.primal_cg.node_index
        self.center_node = cg.node_index[key]

    def sweep(self, rng):
        self.chain.sweep(rng)

    def edge_density(self):
        return float(np.mean(self.chain.bits[self.bulk]))

    def center_to_boundary(self):
        from .experiments import _center_to_boundary

        if not self._center_primal:
            return float("nan")
        return _center_to_boundary(self.pair, self.chain.bits, self.center_node)


class _CouplingModel:
    def __init__(self, dom, cp, variant, seed):
        self.cc = CouplingChain(dom, cp, variant)
        self.rng2 = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed ^ 0xC0FFEE)))
        from .experiments import _bulk_edges

        x0, y0, x1, y1 = dom.bounding_box()
        self.bulk = _bulk_edges(self.cc.pair, max(2, (x1 - x0) // 4))

    def sweep(self, rng):
        self.cc.sweep(rng)

    def height_value(self, f):
        return self.cc.height_chain.value(f)

    def edge_density(self):
        eta = self.cc.sample_eta(self.rng2)
        return float(np.mean(eta[self.bulk]))

    def center_to_boundary(self):
        from .experiments import _center_to_boundary

        eta = self.cc.sample_eta(self.rng2)
        cg = self.cc.pair.primal_cg
        center = ("face", min(self.cc.pair.domain.faces, key=lambda f: abs(f[0]) + abs(f[1])))
        if center not in cg.node_index:
            return float("nan")
        return _center_to_boundary(self.cc.pair, eta, cg.node_index[center])


def run_config(cfg: dict, seed_override: Optional[int] = None) -> list[ResultRow]:
    _require(isinstance(cfg, dict), "config: must be a JSON object")
    _check_keys(cfg, _MODEL_KEYS, "config")
    _require(("model" in cfg) != ("experiment" in cfg),
             "config: exactly one of 'model' or 'experiment' is required")
    chain = parse_chain(cfg.get("chain", {}))
    if seed_override is not None:
        chain = ChainSpec(seed_override, chain.sweeps, chain.burn_in,
                          chain.thinning, chain.initial_state)
    params = cfg.get("params", {})
    _require(isinstance(params, dict), "params: must be an object")

    if "experiment" in cfg:
        name = cfg["experiment"]
        if name == "variance_scaling":
            _check_keys(params, {"c_list", "N_list", "a", "b"}, "params")
            return experiment_variance_scaling(
                params.get("c_list", [2.0, 3.0]), params.get("N_list", [8, 16, 32, 64]),
                chain, a=params.get("a", 1.0), b=params.get("b", 1.0),
            )
        if name == "height_gibbs_diagnostics":
            _check_keys(params, {"c", "N", "box_sizes"}, "params")
            return experiment_height_gibbs_diagnostics(
                params.get("c", 3.0), params.get("N", 32), chain,
                box_sizes=tuple(params.get("box_sizes", (3, 5, 7))),
            )
        if name == "at_selfdual":
            _check_keys(params, {"J_list", "N", "distances"}, "params")
            return experiment_at_selfdual(
                params.get("J_list", [0.2]), params.get("N", 48), chain,
                distances=tuple(params.get("distances", (1, 2, 3, 4, 6, 8, 12, 16))),
            )
        if name == "qb_interpolation":
            _check_keys(params, {"q", "N", "control_q", "control_N", "control_sweeps"}, "params")
            return experiment_qb_interpolation(
                params.get("q", 9.0), params.get("N", 32), chain,
                control_q=params.get("control_q", 2.0),
                control_N=params.get("control_N"),
                control_sweeps=params.get("control_sweeps"),
            )
        if name == "arrow_bias":
            _check_keys(params, {"c", "N"}, "params")
            return experiment_arrow_bias(params.get("c", 3.0), params.get("N", 32), chain)
        raise ConfigError(f"experiment: unknown experiment {name!r}")

    model = cfg["model"]
    _require(model in ("heights", "spins", "rc", "coupling", "at"),
             f"model: unknown model {model!r}")
    dom = parse_domain(cfg.get("domain", {"type": "diamond", "N": 8}))
    observables = cfg.get("observables", [])
    _require(isinstance(observables, list) and observables,
             "observables: a non-empty list is required")
    boundary = cfg.get("boundary", "flat01")

    if model in ("heights", "spins"):
        _check_keys(params, {"a", "b", "c", "c_b"}, "params")
        mp = ModelParams(params.get("a", 1.0), params.get("b", 1.0),
                         params.get("c", 2.0), c_b=params.get("c_b"))
        mode = "boundary_cb" if params.get("c_b") is not None else "plain"
        _require(boundary in ("flat01", "plusplus"), "boundary: flat01 or plusplus")
        m = _HeightModel(dom, mp, mode)
    elif model == "rc":
        _check_keys(params, {"q", "q_b", "p"}, "params")
        _require("q" in params and "q_b" in params, "params.q and params.q_b required")
        p = params.get("p", math.sqrt(params["q"]) / (math.sqrt(params["q"]) + 1))
        m = _RcModel(dom, RcParams(q=params["q"], q_b=params["q_b"], p=p))
    elif model == "coupling":
        _check_keys(params, {"a", "b", "c"}, "params")
        from .coupling import derive_params

        cp = derive_params(params.get("a", 1.0), params.get("b", 1.0), params.get("c", 2.5))
        _require(boundary in ("qb", "wired"), "boundary: 'qb' or 'wired' for coupling runs")
        m = _CouplingModel(dom, cp, boundary, chain.seed)
    else:
        raise ConfigError("model 'at': use the at_selfdual experiment instead")

    fns = {name: _observable_fn(model, name) for name in observables}
    from .samplers import run_chain

    ests = run_chain(chain, m, fns)
    rows = []
    a = float(params.get("a", 1.0)) if model != "rc" else 1.0
    b = float(params.get("b", 1.0)) if model != "rc" else 1.0
    c = float(params.get("c", 0.0)) if model != "rc" else 0.0
    cbq = params.get("c_b", params.get("q_b", ""))
    N = 0
    for name, est in ests.items():
        rows.append(
            ResultRow(f"run_{model}", N, a, b, c, c_b_or_qb=cbq if cbq is not None else "",
                      seed=chain.seed, sweeps=chain.sweeps, observable=name,
                      estimate=est.mean, stderr=est.stderr, tau_int=est.tau_int)
        )
    return rows


# ---------------------------------------------------------------------------
# Oracle suites
# ---------------------------------------------------------------------------


def _oracle_lines(suite: str):
    """Yield (name, ok, detail) per oracle check in the suite."""
    from . import oracle_suites

    return oracle_suites.run_suite(suite)


def cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                print(f"config parse error at line {exc.lineno}, column {exc.colno}: "
                      f"{exc.msg}", file=sys.stderr)
                return 1
        rows = run_config(cfg, seed_override=args.seed_override)
    except (ConfigError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    out = args.out or cfg.get("output")
    csv = rows_to_csv(rows)
    if out:
        with open(out, "w") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return 0


def cmd_oracle(args) -> int:
    failures = 0
    lines = []
    for name, ok, detail in _oracle_lines(args.suite):
        status = "ok" if ok else "FAIL"
        line = f"[{status}] {name}" + (f" :: {detail}" if detail else "")
        lines.append(line)
        print(line)
        if not ok:
            failures += 1
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 2 if failures else 0


def cmd_snapshot(args) -> int:
    try:
        text = open(args.state_file).read()
    except OSError as exc:
        print(f"cannot read state file: {exc}", file=sys.stderr)
        return 1
    stripped = text.strip()
    try:
        if stripped.startswith("D "):
            dom = domain_from_text(text)
            print(f"domain snapshot: {len(dom.faces)} faces, "
                  f"parity_class={dom.parity_class}, "
                  f"boundary cycle length {len(dom.boundary_cycle)}")
            return 0
        if stripped.startswith("E "):
            lines = [ln for ln in stripped.splitlines() if ln.strip()]
            seen = {}
            for ln in lines:
                parts = ln.split()
                if parts[0] != "E" or len(parts) != 3 or parts[2] not in ("0", "1"):
                    print(f"bad edge line: {ln!r}", file=sys.stderr)
                    return 1
                idx = int(parts[1])
                if idx in seen:
                    print(f"duplicate edge index {idx}", file=sys.stderr)
                    return 1
                seen[idx] = int(parts[2])
            if sorted(seen) != list(range(len(seen))):
                print("edge indices are not contiguous from 0", file=sys.stderr)
                return 1
            print(f"edge-configuration snapshot: {len(seen)} edges, "
                  f"{sum(seen.values())} open")
            return 0
        tokens = stripped.split()
        if all(t == "*" or t in ("+", "-") for t in tokens):
            print(f"spin snapshot: {sum(1 for t in tokens if t != '*')} faces")
            return 0
        if all(t == "*" or t.lstrip('-').isdigit() for t in tokens):
            vals = [int(t) for t in tokens if t != "*"]
            print(f"height snapshot: {len(vals)} faces, "
                  f"range [{min(vals)}, {max(vals)}]")
            return 0
    except ValueError as exc:
        print(f"invalid snapshot: {exc}", file=sys.stderr)
        return 1
    print("unrecognized snapshot format", file=sys.stderr)
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="icelab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a model chain or experiment from JSON")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int,
                       default=int(os.environ.get("ICELAB_THREADS", "1")))
    p_run.add_argument("--seed-override", type=int, default=None)
    p_run.set_defaults(fn=cmd_run)

    p_or = sub.add_parser("oracle", help="run an exact-verification suite")
    p_or.add_argument("suite", choices=["all", "coupling", "fkg", "domination",
                                        "fk_ising", "sampler", "structure"])
    p_or.add_argument("--out", default=None)
    p_or.set_defaults(fn=cmd_oracle)

    p_sn = sub.add_parser("snapshot", help="validate and summarize a state file")
    p_sn.add_argument("state_file")
    p_sn.set_defaults(fn=cmd_snapshot)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
