"""Optimal planners over the consolidated graph, plus graph-free search.

All planners working on the expanded graph (value iteration, Dijkstra,
Bellman-Ford) return the same optimal total; orasp_search reaches it without
expanding the full graph by pruning against an incumbent total, and
brute_force_oracle provides an independent ground truth for testing.

Rewards are non-positive throughout, so cost = -reward is a valid Dijkstra
metric and any partial sum already bounds every completion from above.
"""

from __future__ import annotations

import heapq
import random
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .bits import to_hex
from .errors import CapExceededError, InfeasibleError, PositiveRewardError
from .rewards import (
    RewardModel,
    action_weight_table,
    batch_evaluator,
    rewards_for_actions,
)
from .statespace import ConsolidatedGraph
from .structures import AssemblyGraph, _feasible_from_analysis, analyze_state

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Trajectory:
    """A complete disassembly: (state, action, reward) triples down to empty.

    ``assembly_order`` is the reversed removal order; simulating it as
    additions from the empty state rebuilds the full structure.
    """

    steps: tuple[tuple[int, int, float], ...]
    total: float

    @property
    def disassembly_order(self) -> list[int]:
        return [action for _, action, _ in self.steps]

    @property
    def assembly_order(self) -> list[int]:
        return [action for _, action, _ in reversed(self.steps)]

    def __len__(self) -> int:
        return len(self.steps)


def _make_trajectory(steps: Sequence[tuple[int, int, float]]) -> Trajectory:
    return Trajectory(steps=tuple(steps), total=sum(r for _, _, r in steps))


def reverse_to_assembly(traj: Trajectory) -> list[int]:
    """Assembly order: the removal order reversed."""
    return traj.assembly_order


class StateValueMap(Mapping):
    """Read-only state -> value view backed by the graph's node array."""

    def __init__(self, H: ConsolidatedGraph, values: np.ndarray):
        self._H = H
        self._values = values

    def __getitem__(self, state: int) -> float:
        return float(self._values[self._H.index[state]])

    def __iter__(self) -> Iterator[int]:
        return (int(s) for s in self._H.states)

    def __len__(self) -> int:
        return self._H.node_count

    @property
    def graph(self) -> ConsolidatedGraph:
        return self._H

    @property
    def array(self) -> np.ndarray:
        return self._values


@dataclass(frozen=True)
class ValueTable:
    """Converged value function plus bookkeeping from value iteration."""

    values: StateValueMap
    iterations_used: int
    converged: bool


def _segment_max(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """Per-node max over CSR edge segments; empty segments yield -inf."""
    n = len(indptr) - 1
    if len(values) == 0:
        return np.full(n, NEG_INF)
    padded = np.append(values, NEG_INF)
    starts = np.minimum(indptr[:-1], len(values))
    out = np.maximum.reduceat(padded, starts)[:n]
    degrees = np.diff(indptr)
    out[degrees == 0] = NEG_INF
    return out


def _terminal_values(H: ConsolidatedGraph) -> np.ndarray:
    """0 at the empty state, -inf at dead ends, for zero-out-degree nodes."""
    base = np.full(H.node_count, NEG_INF)
    if H.sink_reachable:
        base[H.sink_index] = 0.0
    return base


def value_iteration(
    H: ConsolidatedGraph, epsilon: float = 1e-9, max_iter: int | None = None
) -> tuple[ValueTable, Trajectory]:
    """Sweep the Bellman max-update until the value function stops moving.

    Values start at 0 everywhere; each sweep recomputes every node from the
    previous iterate.  Since every edge drops one connection, the graph is a
    DAG of depth = width, and the sweep converges within width + 1 iterations.
    The greedy policy on the converged values is rolled out from the root.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not H.sink_reachable:
        raise InfeasibleError("the empty state is unreachable; no full disassembly")
    if max_iter is None:
        max_iter = H.width + 2
    terminal = _terminal_values(H)
    degrees = np.diff(H.indptr)
    values = np.zeros(H.node_count)
    converged = False
    iterations = 0
    for _ in range(max_iter):
        candidates = H.edge_weights + values[H.edge_succs]
        new_values = _segment_max(candidates, H.indptr)
        np.copyto(new_values, terminal, where=degrees == 0)
        both_neg_inf = np.isneginf(new_values) & np.isneginf(values)
        with np.errstate(invalid="ignore"):  # -inf minus -inf on stable dead ends
            delta = np.where(both_neg_inf, 0.0, np.abs(new_values - values))
        values = new_values
        iterations += 1
        if float(np.max(delta, initial=0.0)) < epsilon:
            converged = True
            break
    table = ValueTable(StateValueMap(H, values), iterations, converged)

    steps: list[tuple[int, int, float]] = []
    node = 0
    state = H.root
    while state != 0:
        actions, succs, weights = H.edges_of(node)
        if len(actions) == 0:
            raise InfeasibleError(f"dead end at state {to_hex(state, H.width)}")
        totals = weights + values[succs]
        best = int(np.argmax(totals))
        for k in range(len(actions)):  # lowest action index among exact ties
            if totals[k] == totals[best] and actions[k] < actions[best]:
                best = k
        steps.append((state, int(actions[best]), float(weights[best])))
        node = int(succs[best])
        state = int(H.states[node])
    return table, _make_trajectory(steps)


def _check_non_positive(H: ConsolidatedGraph) -> None:
    bad = np.nonzero(H.edge_weights > 0)[0]
    if len(bad):
        j = int(bad[0])
        src = int(np.searchsorted(H.indptr, j, side="right") - 1)
        raise PositiveRewardError(
            f"positive reward {H.edge_weights[j]} on edge "
            f"{to_hex(int(H.states[src]), H.width)} -{int(H.edge_actions[j])}->"
        )


def _backtrack_from_sink(
    H: ConsolidatedGraph, dist: np.ndarray, blocked: frozenset[tuple[int, int]]
) -> Trajectory:
    """Recover a root->sink path from root distances by exact-arithmetic chaining.

    Every finite dist entry was literally computed as dist[pred] + weight, so a
    predecessor satisfying the equality always exists; ties break toward the
    lowest action index for reproducibility.
    """
    rev_steps: list[tuple[int, int, float]] = []
    node = H.sink_index
    while node != 0:
        state = int(H.states[node])
        chosen = None
        for a in range(H.width):
            if (state >> a) & 1:
                continue
            pred_state = state | (1 << a)
            pred = H.index.get(pred_state)
            if pred is None or (pred_state, a) in blocked:
                continue
            j = H.edge_id(pred_state, a)
            if j is None:
                continue
            if dist[pred] + H.edge_weights[j] == dist[node]:
                chosen = (pred, a, float(H.edge_weights[j]), pred_state)
                break
        if chosen is None:  # pragma: no cover - guarded by construction
            raise InfeasibleError(
                f"no predecessor chain at state {to_hex(state, H.width)}"
            )
        pred, a, w, pred_state = chosen
        rev_steps.append((pred_state, a, w))
        node = pred
    return _make_trajectory(list(reversed(rev_steps)))


def dijkstra_plan(H: ConsolidatedGraph) -> Trajectory:
    """Minimum-cost root->sink path under cost = -reward.

    Requires non-positive rewards (the cost metric must be non-negative) and
    agrees exactly with value iteration on the total.
    """
    _check_non_positive(H)
    if not H.sink_reachable:
        raise InfeasibleError("the empty state is unreachable; no full disassembly")
    costs = np.full(H.node_count, np.inf)
    costs[0] = 0.0
    done = np.zeros(H.node_count, dtype=bool)
    heap: list[tuple[float, int]] = [(0.0, 0)]
    sink = H.sink_index
    while heap:
        cost, node = heapq.heappop(heap)
        if done[node]:
            continue
        done[node] = True
        if node == sink:
            break
        lo, hi = int(H.indptr[node]), int(H.indptr[node + 1])
        for j in range(lo, hi):
            succ = int(H.edge_succs[j])
            nd = cost - H.edge_weights[j]
            if nd < costs[succ]:
                costs[succ] = nd
                heapq.heappush(heap, (nd, succ))
    if not done[sink]:
        raise InfeasibleError("no path to the empty state")
    return _backtrack_from_sink(H, -costs, frozenset())


def bellman_ford_all(H: ConsolidatedGraph) -> StateValueMap:
    """Best total reward from the root to every node, in one topological pass.

    Levels are processed in storage order; every edge crosses into the next
    level, so a single sweep is exact.  The sink's distance equals the optimal
    plan total; having every node's distance makes re-planning cheap.
    """
    dist = np.full(H.node_count, NEG_INF)
    dist[0] = 0.0
    for lvl in range(len(H.level_ptr) - 1):
        n_lo, n_hi = int(H.level_ptr[lvl]), int(H.level_ptr[lvl + 1])
        e_lo, e_hi = int(H.indptr[n_lo]), int(H.indptr[n_hi])
        if e_lo == e_hi:
            continue
        degrees = np.diff(H.indptr[n_lo : n_hi + 1])
        src = np.repeat(np.arange(n_lo, n_hi), degrees)
        cand = dist[src] + H.edge_weights[e_lo:e_hi]
        np.maximum.at(dist, H.edge_succs[e_lo:e_hi], cand)
    return StateValueMap(H, dist)


def replan_blocked(
    H: ConsolidatedGraph,
    distances: StateValueMap,
    blocked: Iterable[tuple[int, int]],
) -> Trajectory:
    """Optimal plan after removing specific (state, action) transitions.

    Distances are repaired only on descendants of the blocked edges (the graph
    itself is never re-expanded); the result matches a from-scratch solve of
    the edited graph.
    """
    if distances.graph is not H:
        raise ValueError("distances were computed on a different graph")
    blocked = frozenset((int(s), int(a)) for s, a in blocked)
    for s, a in blocked:
        if H.edge_id(s, a) is None:
            raise ValueError(
                f"no transition {to_hex(s, H.width)} -{a}-> exists in the graph"
            )
    dist = distances.array.copy()
    dirty: set[int] = set()
    for s, a in blocked:
        node = H.index[s]
        j = H.edge_id(s, a)
        dirty.add(int(H.edge_succs[j]))

    def recompute(node: int) -> float:
        state = int(H.states[node])
        if node == 0:
            return 0.0
        best = NEG_INF
        for a in range(H.width):
            if (state >> a) & 1:
                continue
            pred_state = state | (1 << a)
            pred = H.index.get(pred_state)
            if pred is None or (pred_state, a) in blocked:
                continue
            j = H.edge_id(pred_state, a)
            if j is None:
                continue
            cand = dist[pred] + H.edge_weights[j]
            if cand > best:
                best = cand
        return best

    for lvl in range(1, len(H.level_ptr) - 1):
        n_lo, n_hi = int(H.level_ptr[lvl]), int(H.level_ptr[lvl + 1])
        level_dirty = [n for n in dirty if n_lo <= n < n_hi]
        for node in level_dirty:
            dirty.discard(node)
            new = recompute(node)
            if new != dist[node]:
                dist[node] = new
                lo, hi = int(H.indptr[node]), int(H.indptr[node + 1])
                dirty.update(int(x) for x in H.edge_succs[lo:hi])

    if not H.sink_reachable or dist[H.sink_index] == NEG_INF:
        raise InfeasibleError("all disassembly paths are blocked")
    return _backtrack_from_sink(H, dist, blocked)


# ---------------------------------------------------------------------------
# Graph-free planners: branch-and-bound search, oracle, random baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchStats:
    expanded: int


def _feasible_and_rewards(
    graph: AssemblyGraph, model: RewardModel, state: int
) -> list[tuple[int, float]]:
    analysis = (
        analyze_state(graph, state)
        if (graph.constraints.upc or model.kind == "cubesat_fuel")
        else None
    )
    acts = _feasible_from_analysis(graph, state, analysis)
    rewards = rewards_for_actions(model, graph, state, acts, analysis)
    for a, r in zip(acts, rewards):
        if r > 0:
            raise PositiveRewardError(
                f"reward model produced {r} > 0 for connection {a} "
                f"in state {state:#x}"
            )
    return list(zip(acts, rewards))


def random_rollout(
    graph: AssemblyGraph, model: RewardModel, rng: random.Random | int | None = None
) -> Trajectory | None:
    """Uniform random feasible removals until empty; None if a dead end is hit."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    state = graph.full_state
    steps: list[tuple[int, int, float]] = []
    while state != 0:
        options = _feasible_and_rewards(graph, model, state)
        if not options:
            return None
        a, r = options[rng.randrange(len(options))]
        steps.append((state, a, r))
        state &= ~(1 << a)
    return _make_trajectory(steps)


def orasp_search(
    graph: AssemblyGraph, model: RewardModel, rng_seed: int = 0
) -> tuple[Trajectory, SearchStats]:
    """Depth-first branch-and-bound over removal orders, expanding lazily.

    One random rollout seeds the incumbent total; any branch whose running
    reward cannot strictly beat it is discarded (rewards are non-positive, so
    the running sum only falls).  A per-state best-running-reward memo prunes
    revisits: the memo is exactly the lazily generated portion of the
    consolidated graph, and its size is the reported expansion count.
    Children are explored best-immediate-reward first so the incumbent
    tightens early.
    """
    rng = random.Random(rng_seed)
    incumbent = random_rollout(graph, model, rng)
    best_total = incumbent.total if incumbent is not None else NEG_INF
    best_steps = list(incumbent.steps) if incumbent is not None else None
    root = graph.full_state
    if root == 0:
        if best_steps is None:  # pragma: no cover - empty rollout cannot dead-end
            raise InfeasibleError("no complete disassembly sequence exists")
        return _make_trajectory(best_steps), SearchStats(expanded=0)

    table = action_weight_table(model, graph)
    if table is not None:
        for a, w in enumerate(table):
            if w > 0:
                raise PositiveRewardError(
                    f"reward model produced {w} > 0 for connection {a}"
                )
        greedy_order = [a for _, a in sorted((-w, a) for a, w in enumerate(table))]
    evaluate = batch_evaluator(model, graph)
    upc = graph.constraints.upc
    plain = table is not None and not graph.constraints.precedence and upc is None
    memo: dict[int, float] = {}
    path: list[tuple[int, int, float]] = []
    # A revisit with a better running reward must re-explore the subtree, but
    # never needs the connectivity analysis redone: children are cached,
    # sorted best-immediate-reward first so (a) the first dive is greedy and
    # tightens the incumbent early, and (b) once one child falls at or below
    # the incumbent bound, every later child does too.  In the unconstrained
    # state-independent case children derive from one global greedy order and
    # nothing is cached.
    children_cache: dict[int, list[tuple[float, int]]] = {}

    def children_of(state: int) -> list[tuple[float, int]]:
        analysis = analyze_state(graph, state) if (upc or table is None) else None
        acts = _feasible_from_analysis(graph, state, analysis)
        if table is not None:
            pairs = sorted((-table[a], a) for a in acts)
        else:
            pairs = sorted(zip((-r for r in evaluate(state, acts, analysis)), acts))
            for neg_r, a in pairs:
                if neg_r < 0:
                    raise PositiveRewardError(
                        f"reward model produced {-neg_r} > 0 for connection {a} "
                        f"in state {state:#x}"
                    )
        children_cache[state] = pairs
        return pairs

    def visit(state: int, running: float) -> None:
        nonlocal best_total, best_steps
        memo_get = memo.get
        if plain:
            for a in greedy_order:
                if not (state >> a) & 1:
                    continue
                r = table[a]
                child_running = running + r
                if child_running <= best_total:
                    break
                child = state & ~(1 << a)
                if child == 0:
                    best_total = child_running
                    best_steps = path + [(state, a, r)]
                    continue
                seen = memo_get(child)
                if seen is not None and child_running <= seen:
                    continue
                memo[child] = child_running
                path.append((state, a, r))
                visit(child, child_running)
                path.pop()
            return
        children = children_cache.get(state)
        if children is None:
            children = children_of(state)
        for neg_r, a in children:
            child_running = running - neg_r
            if child_running <= best_total:
                break
            child = state & ~(1 << a)
            if child == 0:
                best_total = child_running
                best_steps = path + [(state, a, -neg_r)]
                continue
            seen = memo_get(child)
            if seen is not None and child_running <= seen:
                continue
            memo[child] = child_running
            path.append((state, a, -neg_r))
            visit(child, child_running)
            path.pop()

    memo[root] = 0.0
    visit(root, 0.0)
    if best_steps is None:
        raise InfeasibleError("no complete disassembly sequence exists")
    return _make_trajectory(best_steps), SearchStats(expanded=len(memo))


def reachable_states(graph: AssemblyGraph) -> set[int]:
    """All states reachable from the full assembly under feasible removals."""
    seen = {graph.full_state}
    frontier = [graph.full_state]
    while frontier:
        state = frontier.pop()
        analysis = analyze_state(graph, state) if graph.constraints.upc else None
        for a in _feasible_from_analysis(graph, state, analysis):
            succ = state & ~(1 << a)
            if succ not in seen:
                seen.add(succ)
                frontier.append(succ)
    return seen


def brute_force_oracle(graph: AssemblyGraph, model: RewardModel) -> Trajectory:
    """Exhaustive optimum by dynamic programming over all reachable states.

    Prunes nothing except infeasibility; used as ground truth in tests.
    States are processed in increasing integer order, which is a valid
    topological order because clearing a set bit strictly decreases the value.
    """
    if graph.num_connections > 20:
        raise CapExceededError("brute-force oracle capped at 20 connections")
    evaluate = batch_evaluator(model, graph)
    upc = graph.constraints.upc
    needs_analysis = upc is not None or model.kind == "cubesat_fuel"
    seen = reachable_states(graph)
    value: dict[int, float] = {}
    for state in sorted(seen):
        if state == 0:
            value[0] = 0.0
            continue
        analysis = analyze_state(graph, state) if needs_analysis else None
        acts = _feasible_from_analysis(graph, state, analysis)
        best = NEG_INF
        for a, r in zip(acts, evaluate(state, acts, analysis)):
            if r > 0:
                raise PositiveRewardError(
                    f"reward model produced {r} > 0 for connection {a} "
                    f"in state {state:#x}"
                )
            cand = r + value[state & ~(1 << a)]
            if cand > best:
                best = cand
        value[state] = best
    root = graph.full_state
    if value.get(root, NEG_INF) == NEG_INF:
        raise InfeasibleError("no complete disassembly sequence exists")
    steps: list[tuple[int, int, float]] = []
    state = root
    while state != 0:
        options = _feasible_and_rewards(graph, model, state)
        best_a, best_r = None, 0.0
        for a, r in options:
            if r + value[state & ~(1 << a)] == value[state]:
                best_a, best_r = a, r
                break
        assert best_a is not None, "value table lost its certificate"
        steps.append((state, best_a, best_r))
        state &= ~(1 << best_a)
    return _make_trajectory(steps)
