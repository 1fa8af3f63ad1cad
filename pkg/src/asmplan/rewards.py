"""Pluggable step-reward models, all normalized to non-positive values.

A model scores the removal of one connection from one state.  Edge weights of
the consolidated graph come from here, so every model must stay <= 0 for every
feasible transition (the ``shift`` field subtracts a constant to enforce this
for otherwise positive-valued configurations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InvalidActionError
from .structures import AssemblyGraph, StateAnalysis, analyze_state, validate_sequence

REWARD_KINDS = ("min_time", "min_travel", "cubesat_fuel", "completion")

_DEFAULT_PARAMS = {
    "min_time": {},
    "min_travel": {"depot": (0.0, 0.0, 0.0), "travel_rate": 1.0},
    "cubesat_fuel": {"alpha": 1.0, "beta": 1.5},
    "completion": {},
}


@dataclass(frozen=True)
class RewardModel:
    """One of the built-in reward kinds plus its parameters.

    min_time       -time cost of the removed connection
    min_travel     -2 * |depot -> connection midpoint| * travel_rate
    cubesat_fuel   -(fuel_base + alpha * carried_mass ** beta); carried mass is
                   the lighter split half, or the lighter endpoint part when
                   the removal does not split (deliberately non-quadratic)
    completion     -1 per action
    """

    kind: str
    params: Mapping[str, object] = field(default_factory=dict)
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind {self.kind!r}; choose from {REWARD_KINDS}")
        if self.shift < 0:
            raise ValueError(f"shift must be >= 0, got {self.shift}")
        merged = dict(_DEFAULT_PARAMS[self.kind])
        merged.update(dict(self.params))
        if "depot" in merged:
            merged["depot"] = tuple(float(c) for c in merged["depot"])  # type: ignore[arg-type]
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "shift", float(self.shift))

    @classmethod
    def from_config(cls, data: Mapping) -> "RewardModel":
        return cls(
            kind=str(data["kind"]),
            params=data.get("params", {}),
            shift=float(data.get("shift", 0.0)),
        )

    def to_config(self) -> dict:
        params = {
            k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()
        }
        return {"kind": self.kind, "params": params, "shift": self.shift}


def _attr(graph: AssemblyGraph, a: int, key: str) -> float:
    try:
        return graph.connections[a].attrs[key]
    except KeyError as exc:
        raise InvalidActionError(
            f"connection {a} lacks attr {key!r} required by the reward model"
        ) from exc


def action_weight_table(model: RewardModel, graph: AssemblyGraph) -> list[float] | None:
    """Per-action rewards for state-independent kinds; None when state matters."""
    width = graph.num_connections
    if model.kind == "completion":
        return [-1.0 - model.shift] * width
    if model.kind == "min_time":
        return [-_attr(graph, a, "time") - model.shift for a in range(width)]
    if model.kind == "min_travel":
        depot = model.params["depot"]
        rate = float(model.params["travel_rate"])  # type: ignore[arg-type]
        table = []
        for conn in graph.connections:
            pa = graph.part(conn.a).position
            pb = graph.part(conn.b).position
            mid = tuple((ca + cb) / 2.0 for ca, cb in zip(pa, pb))
            dist = math.dist(depot, mid)
            table.append(-2.0 * dist * rate - model.shift)
        return table
    return None


def batch_evaluator(model: RewardModel, graph: AssemblyGraph):
    """Build ``f(state, actions, analysis) -> list[float]`` with params hoisted.

    Hot loops (expansion, search, oracle) call this once per run; per-state
    evaluation then shares one connectivity analysis across all actions.
    """
    table = action_weight_table(model, graph)
    if table is not None:

        def evaluate_static(state, actions, analysis=None):
            return [table[a] for a in actions]

        return evaluate_static

    alpha = float(model.params["alpha"])  # type: ignore[arg-type]
    beta = float(model.params["beta"])  # type: ignore[arg-type]
    shift = model.shift
    fuel = [_attr(graph, a, "fuel_base") for a in range(graph.num_connections)]
    end_min = [
        min(graph.part(c.a).mass, graph.part(c.b).mass) for c in graph.connections
    ]

    def evaluate_cubesat(state, actions, analysis=None):
        if analysis is None:
            analysis = analyze_state(graph, state)
        split_of = analysis.split_masses.get
        out = []
        for a in actions:
            split = split_of(a)
            carried = min(split) if split is not None else end_min[a]
            out.append(-(fuel[a] + alpha * carried**beta) - shift)
        return out

    return evaluate_cubesat


def rewards_for_actions(
    model: RewardModel,
    graph: AssemblyGraph,
    state: int,
    actions: Sequence[int],
    analysis: StateAnalysis | None = None,
) -> list[float]:
    """Batch evaluation sharing one connectivity analysis across all actions."""
    return batch_evaluator(model, graph)(state, actions, analysis)


def evaluate_reward(model: RewardModel, graph: AssemblyGraph, state: int, a: int) -> float:
    """Reward for removing connection ``a`` from ``state`` (must be <= 0)."""
    graph.check_state(state)
    if not (state >> a) & 1:
        raise InvalidActionError(f"connection {a} is not present in state {state:#x}")
    return rewards_for_actions(model, graph, state, [a])[0]


def total_reward(model, graph: AssemblyGraph, traj) -> float:
    """Independent re-summation of a trajectory's rewards.

    The trajectory must pass validate_sequence; the returned value equals the
    trajectory's stored total for any trajectory produced by the planners.
    """
    report = validate_sequence(graph, traj.disassembly_order)
    if not report.valid:
        raise ValueError(
            f"invalid trajectory at step {report.step}: {report.reason} ({report.detail})"
        )
    return sum(
        evaluate_reward(model, graph, state, action) for state, action, _ in traj.steps
    )
