"""Consolidated state-action graph: breadth-first expansion with deduplication.

All removal orders that reach the same set of remaining connections merge into
one node, collapsing the order-sensitive tree (size ~ E!) to at most 2^E
states.  Expansion walks popcount levels from the full state, so node storage
order is a canonical topological order: every edge removes exactly one
connection and therefore points into the next level.

Storage is flat CSR-style numpy arrays; the finished graph is immutable and
freely shareable.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .bits import iter_bits, to_hex
from .errors import CapExceededError
from .rewards import RewardModel, action_weight_table, batch_evaluator
from .structures import AssemblyGraph, _feasible_from_analysis, analyze_state

DEFAULT_EXPANSION_CAP = 25


@dataclass(frozen=True, eq=False)
class ConsolidatedGraph:
    """Deduplicated DAG over bit-vector states.

    ``states`` holds one entry per reachable state in level order (root first);
    ``index`` maps a state to its position.  Edges of node i live in the CSR
    range indptr[i]:indptr[i+1] as parallel (action, successor index, weight)
    arrays.  ``level_ptr`` marks the node-index boundary of each popcount level.
    """

    width: int
    states: np.ndarray
    index: dict[int, int]
    indptr: np.ndarray
    edge_actions: np.ndarray
    edge_succs: np.ndarray
    edge_weights: np.ndarray
    level_ptr: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.states)

    @property
    def edge_count(self) -> int:
        return len(self.edge_actions)

    @property
    def root(self) -> int:
        return int(self.states[0])

    @property
    def sink_reachable(self) -> bool:
        return 0 in self.index

    @property
    def sink_index(self) -> int:
        return self.index[0]

    def edges_of(self, node: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(actions, successor indices, weights) slices for one node."""
        lo, hi = self.indptr[node], self.indptr[node + 1]
        return (
            self.edge_actions[lo:hi],
            self.edge_succs[lo:hi],
            self.edge_weights[lo:hi],
        )

    def out_degree(self, node: int) -> int:
        return int(self.indptr[node + 1] - self.indptr[node])

    def edge_id(self, state: int, action: int) -> int | None:
        """Flat edge index of the (state, action) transition, if present."""
        node = self.index.get(state)
        if node is None:
            return None
        lo, hi = int(self.indptr[node]), int(self.indptr[node + 1])
        for j in range(lo, hi):
            if self.edge_actions[j] == action:
                return j
        return None

    def iter_edges(self) -> Iterator[tuple[int, int, int, float]]:
        """Yield (src state, action, dst state, weight) in storage order."""
        for i in range(self.node_count):
            src = int(self.states[i])
            lo, hi = self.indptr[i], self.indptr[i + 1]
            for j in range(lo, hi):
                yield (
                    src,
                    int(self.edge_actions[j]),
                    int(self.states[self.edge_succs[j]]),
                    float(self.edge_weights[j]),
                )


def expand_consolidated(
    graph: AssemblyGraph,
    model: RewardModel,
    max_connections: int = DEFAULT_EXPANSION_CAP,
) -> ConsolidatedGraph:
    """Expand every state reachable from the full assembly, merging duplicates.

    Unconstrained, this holds exactly 2^E nodes and E * 2^(E-1) edges; widths
    above ``max_connections`` are refused because the node table no longer fits
    in memory (use orasp_search or the RL pipeline for such structures).
    """
    width = graph.num_connections
    if width > max_connections:
        raise CapExceededError(
            f"{width} connections exceeds the expansion cap of {max_connections}; "
            "use orasp_search or the RL pipeline for structures this large"
        )
    unconstrained = not graph.constraints.precedence and graph.constraints.upc is None
    table = action_weight_table(model, graph)
    evaluate = batch_evaluator(model, graph)

    root = graph.full_state
    index: dict[int, int] = {root: 0}
    states = array("q", [root])
    out_deg = array("q")
    edge_actions = array("h")
    edge_succ_states = array("q")
    edge_weights = array("d")
    level_ptr = [0]

    frontier = [root]
    level_ptr.append(1)
    while frontier:
        next_set: set[int] = set()
        for s in frontier:
            if unconstrained:
                acts = list(iter_bits(s))
                analysis = None
            else:
                analysis = analyze_state(graph, s)
                acts = _feasible_from_analysis(graph, s, analysis)
            if table is None:
                weights = evaluate(s, acts, analysis)
            else:
                weights = [table[a] for a in acts]
            out_deg.append(len(acts))
            for a, w in zip(acts, weights):
                succ = s & ~(1 << a)
                edge_actions.append(a)
                edge_succ_states.append(succ)
                edge_weights.append(w)
                if succ not in next_set and succ not in index:
                    next_set.add(succ)
        frontier = sorted(next_set)
        for s in frontier:
            index[s] = len(states)
            states.append(s)
        if frontier:
            level_ptr.append(len(states))

    states_arr = np.frombuffer(states, dtype=np.int64).copy()
    indptr = np.zeros(len(states_arr) + 1, dtype=np.int64)
    np.cumsum(np.frombuffer(out_deg, dtype=np.int64), out=indptr[1:])
    succs = np.fromiter(
        (index[s] for s in edge_succ_states), dtype=np.int32, count=len(edge_succ_states)
    )
    return ConsolidatedGraph(
        width=width,
        states=states_arr,
        index=index,
        indptr=indptr,
        edge_actions=np.frombuffer(edge_actions, dtype=np.int16).copy(),
        edge_succs=succs,
        edge_weights=np.frombuffer(edge_weights, dtype=np.float64).copy(),
        level_ptr=np.asarray(level_ptr, dtype=np.int64),
    )


def reweighted(
    H: ConsolidatedGraph, graph: AssemblyGraph, model: RewardModel
) -> ConsolidatedGraph:
    """Same topology, fresh edge weights under a new reward model.

    Re-planning under a different objective never requires re-expansion; all
    arrays except the weights are shared with the input graph.
    """
    table = action_weight_table(model, graph)
    if table is not None:
        weights = np.asarray(table, dtype=np.float64)[H.edge_actions]
    else:
        evaluate = batch_evaluator(model, graph)
        weights = np.empty(H.edge_count, dtype=np.float64)
        for i in range(H.node_count):
            lo, hi = int(H.indptr[i]), int(H.indptr[i + 1])
            if lo == hi:
                continue
            s = int(H.states[i])
            acts = [int(a) for a in H.edge_actions[lo:hi]]
            weights[lo:hi] = evaluate(s, acts, None)
    return ConsolidatedGraph(
        width=H.width,
        states=H.states,
        index=H.index,
        indptr=H.indptr,
        edge_actions=H.edge_actions,
        edge_succs=H.edge_succs,
        edge_weights=weights,
        level_ptr=H.level_ptr,
    )


def dump_edges(H: ConsolidatedGraph, path) -> None:
    """Write the edge list as ``srcHex actionIdx dstHex weight`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for src, action, dst, weight in H.iter_edges():
            fh.write(
                f"{to_hex(src, H.width)} {action} {to_hex(dst, H.width)} {weight!r}\n"
            )


def load_edges(path) -> ConsolidatedGraph:
    """Rebuild a consolidated graph from a dump_edges file.

    The root is the all-ones state, so the width is recoverable as the largest
    state bit length (every dumped graph with edges contains the root).
    """
    rows: list[tuple[int, int, int, float]] = []
    width = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            src_hex, action, dst_hex, weight = line.split()
            src = int(src_hex, 16)
            dst = int(dst_hex, 16)
            width = max(width, src.bit_length(), int(action) + 1)
            rows.append((src, int(action), dst, float(weight)))
    if not rows:
        raise ValueError(f"{path}: empty graph dump")
    by_state: dict[int, list[tuple[int, int, float]]] = {}
    nodes = set()
    for src, action, dst, weight in rows:
        by_state.setdefault(src, []).append((action, dst, weight))
        nodes.add(src)
        nodes.add(dst)
    ordered = sorted(nodes, key=lambda s: (-bin(s).count("1"), s))
    index = {s: i for i, s in enumerate(ordered)}
    indptr = [0]
    actions = array("h")
    succs = array("l")
    weights = array("d")
    level_ptr = [0]
    prev_pop = bin(ordered[0]).count("1")
    for i, s in enumerate(ordered):
        pop = bin(s).count("1")
        if pop != prev_pop:
            level_ptr.append(i)
            prev_pop = pop
        for action, dst, weight in sorted(by_state.get(s, ())):
            actions.append(action)
            succs.append(index[dst])
            weights.append(weight)
        indptr.append(len(actions))
    level_ptr.append(len(ordered))
    return ConsolidatedGraph(
        width=width,
        states=np.asarray(ordered, dtype=np.int64),
        index=index,
        indptr=np.asarray(indptr, dtype=np.int64),
        edge_actions=np.frombuffer(actions, dtype=np.int16).copy(),
        edge_succs=np.asarray(succs, dtype=np.int32),
        edge_weights=np.frombuffer(weights, dtype=np.float64).copy(),
        level_ptr=np.asarray(level_ptr, dtype=np.int64),
    )


@dataclass(frozen=True)
class GrowthRow:
    connections: int
    consolidated_nodes: int
    consolidated_edges: int
    tree_nodes: int


def growth_stats(e_max: int) -> list[GrowthRow]:
    """Closed-form size table assuming all removal orders are feasible.

    Consolidated: 2^E nodes, E * 2^(E-1) edges.  The order-sensitive tree is
    never materialized; its node count is sum_{k=0..E} E! / (E-k)!.
    """
    if e_max > 20:
        raise CapExceededError("growth table capped at 20 connections (factorial blowup)")
    rows = []
    for e in range(1, e_max + 1):
        tree = sum(math.factorial(e) // math.factorial(e - k) for k in range(e + 1))
        rows.append(GrowthRow(e, 2**e, e * 2 ** (e - 1), tree))
    return rows


def write_growth_csv(rows: list[GrowthRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("E,consolidated_nodes,consolidated_edges,tree_nodes\n")
        for row in rows:
            fh.write(
                f"{row.connections},{row.consolidated_nodes},"
                f"{row.consolidated_edges},{row.tree_nodes}\n"
            )
