"""Exhaustive worst-case adversary search on tiny complete graphs.

Plays the full game tree: at every step the adversary tries every legal kill
set, and the result is the maximum step index at which the protocol's
completion predicate (k == 0, evaluated at schedule checkpoints) first holds.
States are memoized after canonicalization modulo permutations of the
non-initiator vertices, which collapses the symmetric branches that dominate
the tree.

By default only maximal kill sets (size = min(m, budget)) are explored;
``all_sizes=True`` removes that assumption at exponential extra cost.
"""

import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .adversary import FixedKillAdversary
from .engine import NetworkState, execute_step, fault_budget
from .errors import TooLargeError, UnsupportedTopologyError
from .protocols import BATCH, make_driver
from .topology import COMPLETE, Topology, build_complete

HORIZON_EXCEEDED = math.inf

_SIZE_CAP = 5


@dataclass
class SearchResult:
    worst_steps: float  # max completion step, or inf when some play never completes
    horizon: int
    nodes: int
    states: int

    @property
    def horizon_exceeded(self) -> bool:
        return not math.isfinite(self.worst_steps)


def _vertex_perms(n: int, initiator: int):
    """Arc-id permutations induced by vertex permutations fixing the initiator."""
    others = [v for v in range(n) if v != initiator]
    arc_perms = []
    for perm in permutations(others):
        vmap = np.empty(n, dtype=np.int64)
        vmap[initiator] = initiator
        for old, new in zip(others, perm):
            vmap[old] = new
        arc_perm = np.empty(n * (n - 1), dtype=np.int64)
        for u in range(n):
            for v in range(n):
                if u == v:
                    continue
                a = u * (n - 1) + (v if v < u else v - 1)
                pu, pv = int(vmap[u]), int(vmap[v])
                arc_perm[a] = pu * (n - 1) + (pv if pv < pu else pv - 1)
        arc_perms.append((vmap, arc_perm))
    return arc_perms


def worst_case_search(topo: Topology | int, protocol: str, alpha: float,
                      horizon: int | None = None, eps: float = 2.0,
                      all_sizes: bool = False, initiator: int = 0) -> SearchResult:
    """Maximum steps any budget-respecting adversary can force, or horizon excess."""
    if isinstance(topo, int):
        topo = build_complete(topo, port_seed=None)
    if topo.kind != COMPLETE:
        raise UnsupportedTopologyError("worst-case search supports complete graphs only")
    if topo.n > _SIZE_CAP:
        raise TooLargeError(f"search capped at n <= {_SIZE_CAP}, got n = {topo.n}")

    state0 = NetworkState(topo, initiator=initiator)
    driver0 = make_driver(protocol, topo, alpha, eps, state0)
    driver0.attach(None)
    if horizon is None:
        horizon = driver0.total_steps
    perms = _vertex_perms(topo.n, initiator)
    c = topo.edge_connectivity
    memo: dict = {}
    counters = {"nodes": 0}

    def canonical(state: NetworkState, driver) -> tuple:
        best = None
        for vmap, arc_perm in perms:
            inf_p = np.empty(topo.n, dtype=bool)
            inf_p[vmap] = state.informed
            pas_p = np.empty(topo.num_arcs, dtype=bool)
            pas_p[arc_perm] = state.passive
            key = (np.packbits(inf_p).tobytes(), np.packbits(pas_p).tobytes(),
                   driver.key_parts(arc_perm))
            if best is None or key < best:
                best = key
        return best

    def expand(state: NetworkState, driver) -> float:
        counters["nodes"] += 1
        if driver.done():
            return HORIZON_EXCEEDED  # schedule exhausted without completion
        if state.step_index >= horizon:
            return HORIZON_EXCEEDED
        key = canonical(state, driver)
        if key in memo:
            return memo[key]
        # Probe the deterministic batch on a throwaway clone.
        probe_state = state.clone()
        probe = driver.clone(probe_state)
        kind, batch = probe.next(probe_state, False)
        assert kind == BATCH
        m = batch.m
        budget = fault_budget(m, c, alpha)
        ksize = min(m, budget)
        sizes = range(ksize + 1) if all_sizes else (ksize,)
        worst = 0.0
        for size in sizes:
            for kills in combinations(range(m), size):
                st = state.clone()
                dr = driver.clone(st)
                dr.attach(None)
                k2, b2 = dr.next(st, False)
                report = execute_step(st, b2, FixedKillAdversary(kills), alpha)
                dr.absorb(st, report)
                if dr.at_checkpoint() and st.k == 0:
                    value = float(st.step_index)
                else:
                    value = expand(st, dr)
                if value > worst:
                    worst = value
                if not math.isfinite(worst):
                    break
            if not math.isfinite(worst):
                break
        memo[key] = worst
        return worst

    if state0.k == 0:
        return SearchResult(0.0, horizon, 0, 0)
    worst = expand(state0, driver0)
    return SearchResult(worst, horizon, counters["nodes"], len(memo))
