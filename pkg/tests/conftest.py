"""Shared helpers: independent oracles and instance generators.

The helpers here stay deliberately naive (permutation enumeration, edge-list
copies) so they can serve as ground truth for the clever implementations.
"""

from __future__ import annotations

import dataclasses
import random

import numpy as np

import asmplan as ap


def with_attrs(graph: ap.AssemblyGraph, **attrs: float) -> ap.AssemblyGraph:
    """Copy of a structure with every connection's attrs overridden."""
    conns = tuple(
        ap.Connection(index=c.index, a=c.a, b=c.b, attrs=dict(attrs))
        for c in graph.connections
    )
    return ap.AssemblyGraph(graph.name, graph.parts, conns, graph.constraints)


def with_constraints(
    graph: ap.AssemblyGraph,
    precedence: tuple[tuple[int, int], ...] = (),
    upc: ap.Upc | None = None,
) -> ap.AssemblyGraph:
    return ap.AssemblyGraph(
        graph.name, graph.parts, graph.connections,
        ap.ConstraintSet(precedence=precedence, upc=upc),
    )


def enumerate_orders(graph: ap.AssemblyGraph) -> list[list[int]]:
    """Every complete feasible removal order, by brute recursion (E <= 8)."""
    width = graph.num_connections
    out: list[list[int]] = []

    def walk(state: int, prefix: list[int]) -> None:
        if state == 0:
            out.append(list(prefix))
            return
        for a in sorted(ap.feasible_actions(graph, state)):
            prefix.append(a)
            walk(state & ~(1 << a), prefix)
            prefix.pop()

    walk(graph.full_state, [])
    return out


def total_of_order(graph: ap.AssemblyGraph, model: ap.RewardModel, order: list[int]) -> float:
    state = graph.full_state
    total = 0.0
    for a in order:
        total += ap.evaluate_reward(model, graph, state, a)
        state &= ~(1 << a)
    return total


def best_total_by_enumeration(graph: ap.AssemblyGraph, model: ap.RewardModel) -> float:
    """Memo-free exhaustive optimum; the oracle's own oracle (tiny widths only)."""
    orders = enumerate_orders(graph)
    assert orders, "no feasible order"
    return max(total_of_order(graph, model, order) for order in orders)


def drop_edges(
    H: ap.ConsolidatedGraph, blocked: list[tuple[int, int]]
) -> ap.ConsolidatedGraph:
    """Edited copy of a consolidated graph with (state, action) edges removed."""
    blocked_ids = set()
    for s, a in blocked:
        j = H.edge_id(s, a)
        assert j is not None, (s, a)
        blocked_ids.add(j)
    keep = np.array([j not in blocked_ids for j in range(H.edge_count)])
    degrees = [
        int(np.count_nonzero(keep[H.indptr[i] : H.indptr[i + 1]]))
        for i in range(H.node_count)
    ]
    indptr = np.zeros(H.node_count + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    return dataclasses.replace(
        H,
        indptr=indptr,
        edge_actions=H.edge_actions[keep],
        edge_succs=H.edge_succs[keep],
        edge_weights=H.edge_weights[keep],
    )


def random_instance(rng: random.Random, max_edges: int = 11):
    """Random connected structure, optional constraints, and a reward model."""
    n = rng.randint(4, 10)
    e = rng.randint(n - 1, min(max_edges, n * (n - 1) // 2))
    g = ap.random_connected_structure(n, e, seed=rng.randrange(1 << 30))
    if rng.random() < 0.5:
        precedence = []
        order = list(range(e))
        rng.shuffle(order)
        for _ in range(rng.randint(0, 3)):
            i, j = sorted(rng.sample(range(e), 2))
            precedence.append((order[i], order[j]))
        upc = None
        if rng.random() < 0.5:
            upc = ap.Upc(rng.randint(1, 4), rng.randint(1, 3))
        g = with_constraints(g, tuple(precedence), upc)
    kind = rng.choice(("completion", "min_time", "cubesat_fuel", "min_travel"))
    params = {"depot": (1.0, -2.0, 0.5)} if kind == "min_travel" else {}
    return g, ap.RewardModel(kind, params)
