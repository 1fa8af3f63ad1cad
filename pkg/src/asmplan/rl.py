"""Deterministic episodic environment over a structure, plus a tabular learner.

States are the same bit-vector ints used everywhere else; the indicator-vector
form consumed by function approximators is a lossless encoding of the same
bits.  Constraint handling is identical to the core feasibility rules: invalid
actions are masked out at selection time and stepping one is a contract error,
never a penalty.

export_env_spec serializes everything an external trainer needs, including 32
sampled conformance transitions so the reconstructed environment can prove it
behaves identically.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from .bits import from_hex, full_mask, to_hex
from .errors import CapExceededError, InvalidActionError
from .planners import Trajectory, _make_trajectory
from .rewards import RewardModel, evaluate_reward
from .structures import (
    AssemblyGraph,
    feasible_actions,
    structure_from_dict,
    structure_to_dict,
)


@dataclass(frozen=True)
class Curriculum:
    """Episodes start ``k_start`` connections from done and lengthen over time."""

    k_start: int = 2
    k_step: int = 1
    episodes_per_level: int = 50

    def __post_init__(self):
        if self.k_start < 1 or self.k_step < 1 or self.episodes_per_level < 1:
            raise ValueError("curriculum fields must be >= 1")

    def level(self, episode: int, width: int) -> int:
        return min(width, self.k_start + (episode // self.episodes_per_level) * self.k_step)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Per-episode multiplicative exploration decay, floored at ``end``."""

    start: float = 1.0
    end: float = 0.05
    decay: float = 0.999

    def __post_init__(self):
        if not 0.0 <= self.end <= self.start <= 1.0:
            raise ValueError("need 0 <= end <= start <= 1")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must be in (0, 1]")

    def value(self, episode: int) -> float:
        return max(self.end, self.start * self.decay**episode)


@dataclass(frozen=True)
class EnvSpec:
    """Everything needed to reconstruct the episodic environment elsewhere."""

    graph: AssemblyGraph
    model: RewardModel
    curriculum: Curriculum = field(default_factory=Curriculum)
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    seed: int = 0

    def __post_init__(self):
        width = self.graph.num_connections
        if width and not 1 <= self.curriculum.k_start <= width:
            raise ValueError(f"k_start must be within 1..{width}")


def state_to_vector(state: int, width: int) -> np.ndarray:
    """Indicator vector: element j is 1.0 iff connection j is present."""
    if not 0 <= state <= full_mask(width):
        raise ValueError(f"state {state:#x} does not fit in width {width}")
    return np.array([(state >> j) & 1 for j in range(width)], dtype=np.float64)


def vector_to_state(vector) -> int:
    state = 0
    for j, v in enumerate(vector):
        if v:
            state |= 1 << j
    return state


def action_mask(graph: AssemblyGraph, state: int) -> np.ndarray:
    """Boolean vector of width E; True where removal is currently feasible."""
    mask = np.zeros(graph.num_connections, dtype=bool)
    for a in feasible_actions(graph, state):
        mask[a] = True
    return mask


def step(
    graph: AssemblyGraph, model: RewardModel, state: int, a: int
) -> tuple[int, float, bool]:
    """One masked transition: (next state, reward, done)."""
    if a not in feasible_actions(graph, state):
        raise InvalidActionError(
            f"action {a} is masked in state {to_hex(state, graph.num_connections)}; "
            "the caller must select among masked-valid actions"
        )
    reward = evaluate_reward(model, graph, state, a)
    nxt = state & ~(1 << a)
    return nxt, reward, nxt == 0


_RESET_RETRIES = 100


def reset(spec: EnvSpec, level_k: int, rng: random.Random | int | None = None) -> int:
    """Random reachable state with exactly ``level_k`` connections left.

    Performs a uniform feasible rollout of E - level_k removals from the full
    state, so the result is always reachable and constraint-consistent.
    """
    graph = spec.graph
    width = graph.num_connections
    if not 1 <= level_k <= width:
        raise ValueError(f"level_k must be within 1..{width}, got {level_k}")
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    for _ in range(_RESET_RETRIES):
        state = graph.full_state
        ok = True
        for _ in range(width - level_k):
            options = sorted(feasible_actions(graph, state))
            if not options:
                ok = False
                break
            state &= ~(1 << options[rng.randrange(len(options))])
        if ok:
            return state
    raise RuntimeError(
        f"could not roll out to {level_k} remaining connections in "
        f"{_RESET_RETRIES} attempts (constraints too tight)"
    )


def tabular_q_learning(
    spec: EnvSpec,
    episodes: int,
    alpha: float = 0.2,
) -> dict[int, int]:
    """Plain Q-learning over the full state table; the small-structure reference.

    Selection is epsilon-greedy restricted to masked-valid actions; the
    returned greedy policy maps every reachable non-empty state to an action.
    Table size is 2^E x E, so widths above 14 are refused.
    """
    graph = spec.graph
    width = graph.num_connections
    if width > 14:
        raise CapExceededError("tabular learner capped at 14 connections (2^E x E table)")
    q = np.zeros((1 << width, width))
    rng = random.Random(spec.seed)
    for episode in range(episodes):
        eps = spec.epsilon.value(episode)
        level = spec.curriculum.level(episode, width)
        state = reset(spec, level, rng)
        while state != 0:
            options = sorted(feasible_actions(graph, state))
            if not options:
                break
            if rng.random() < eps:
                a = options[rng.randrange(len(options))]
            else:
                a = options[int(np.argmax(q[state, options]))]
            nxt, reward, done = step(graph, spec.model, state, a)
            if done:
                target = reward
            else:
                nxt_options = sorted(feasible_actions(graph, nxt))
                if nxt_options:
                    target = reward + float(np.max(q[nxt, nxt_options]))
                else:
                    target = float("-inf")  # dead end: poison the action
            q[state, a] += alpha * (target - q[state, a])
            state = nxt

    policy: dict[int, int] = {}
    frontier = [graph.full_state]
    seen = {graph.full_state}
    while frontier:
        state = frontier.pop()
        if state == 0:
            continue
        options = sorted(feasible_actions(graph, state))
        if not options:
            continue
        policy[state] = options[int(np.argmax(q[state, options]))]
        for a in options:
            succ = state & ~(1 << a)
            if succ not in seen:
                seen.add(succ)
                frontier.append(succ)
    return policy


def rollout_policy(
    graph: AssemblyGraph, model: RewardModel, policy: dict[int, int]
) -> Trajectory:
    """Follow a state->action map from the full state down to empty."""
    state = graph.full_state
    steps = []
    while state != 0:
        a = policy[state]
        nxt, reward, _ = step(graph, model, state, a)
        steps.append((state, a, reward))
        state = nxt
    return _make_trajectory(steps)


_CONFORMANCE_SAMPLES = 32


def _sample_conformance(spec: EnvSpec) -> list[dict]:
    """Random transitions recorded as ground truth for external reconstructions."""
    graph = spec.graph
    width = graph.num_connections
    rng = random.Random(f"conformance:{spec.seed}")
    triples: list[dict] = []
    while len(triples) < _CONFORMANCE_SAMPLES and width > 0:
        state = graph.full_state
        while state != 0 and len(triples) < _CONFORMANCE_SAMPLES:
            options = sorted(feasible_actions(graph, state))
            if not options:
                break
            a = options[rng.randrange(len(options))]
            nxt, reward, done = step(graph, spec.model, state, a)
            triples.append(
                {
                    "state": to_hex(state, width),
                    "action": a,
                    "next": to_hex(nxt, width),
                    "reward": reward,
                    "done": done,
                }
            )
            state = nxt
    return triples


def env_spec_to_dict(spec: EnvSpec) -> dict:
    return {
        "structure": structure_to_dict(spec.graph),
        "reward": spec.model.to_config(),
        "curriculum": {
            "k_start": spec.curriculum.k_start,
            "k_step": spec.curriculum.k_step,
            "episodes_per_level": spec.curriculum.episodes_per_level,
        },
        "epsilon": {
            "start": spec.epsilon.start,
            "end": spec.epsilon.end,
            "decay": spec.epsilon.decay,
        },
        "seed": spec.seed,
        "conformance": _sample_conformance(spec),
    }


def env_spec_from_dict(data: dict) -> EnvSpec:
    return EnvSpec(
        graph=structure_from_dict(data["structure"]),
        model=RewardModel.from_config(data["reward"]),
        curriculum=Curriculum(**data["curriculum"]),
        epsilon=EpsilonSchedule(**data["epsilon"]),
        seed=int(data["seed"]),
    )


def export_env_spec(
    graph: AssemblyGraph,
    model: RewardModel,
    curriculum: Curriculum,
    epsilon: EpsilonSchedule,
    seed: int,
    path,
) -> EnvSpec:
    """Write the EnvSpec JSON (with conformance transitions) and return the spec."""
    spec = EnvSpec(graph=graph, model=model, curriculum=curriculum,
                   epsilon=epsilon, seed=seed)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(env_spec_to_dict(spec), fh, indent=2)
        fh.write("\n")
    return spec


def load_env_spec(path) -> EnvSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return env_spec_from_dict(json.load(fh))


def verify_conformance(spec: EnvSpec, triples: list[dict], tol: float = 1e-9) -> None:
    """Re-run recorded transitions; raise if this environment disagrees."""
    width = spec.graph.num_connections
    for i, t in enumerate(triples):
        state = from_hex(t["state"], width)
        nxt, reward, done = step(spec.graph, spec.model, state, int(t["action"]))
        if to_hex(nxt, width) != t["next"] or done != bool(t["done"]):
            raise ValueError(f"conformance triple {i}: transition mismatch")
        if abs(reward - float(t["reward"])) > tol:
            raise ValueError(f"conformance triple {i}: reward mismatch")
