"""Disassembly environment reconstructed from an EnvSpec JSON file.

The spec embeds the structure, the reward definition, curriculum/exploration
schedules, and 32 recorded transitions.  This module rebuilds the environment
from scratch (it shares no code with the planner that produced the spec) and
proves the rebuild faithful by replaying every recorded transition before any
training is allowed to start.

States are ints, one bit per connection.  The action space is the connection
index set; a mask marks which removals are currently legal.
"""

from __future__ import annotations

import json
import math
import random
import sys
from dataclasses import dataclass


class ConformanceError(RuntimeError):
    """The reconstructed environment disagrees with a recorded transition."""


@dataclass
class Structure:
    name: str
    part_ids: list[int]
    masses: list[float]
    positions: list[tuple[float, float, float]]
    edges: list[tuple[int, int]]  # dense part indices per connection
    attrs: list[dict[str, float]]
    precedence_mask: list[int]  # per action: bits that must be gone first
    upc_max_multi: int | None
    upc_max_piece: int | None

    @property
    def n_parts(self) -> int:
        return len(self.part_ids)

    @property
    def n_actions(self) -> int:
        return len(self.edges)


def _parse_structure(doc: dict) -> Structure:
    ids = [int(p["id"]) for p in doc["parts"]]
    slot = {pid: i for i, pid in enumerate(ids)}
    masses = [float(p.get("mass", 1.0)) for p in doc["parts"]]
    positions = [tuple(p.get("position", (0.0, 0.0, 0.0))) for p in doc["parts"]]
    edges = []
    attrs = []
    for c in sorted(doc["connections"], key=lambda c: int(c["index"])):
        edges.append((slot[int(c["a"])], slot[int(c["b"])]))
        attrs.append({k: float(v) for k, v in c.get("attrs", {}).items()})
    n_actions = len(edges)
    precedence_mask = [0] * n_actions
    constraints = doc.get("constraints") or {}
    for pair in constraints.get("precedence", ()):
        precedence_mask[int(pair["after"])] |= 1 << int(pair["before"])
    upc = constraints.get("upc")
    return Structure(
        name=str(doc.get("name", "structure")),
        part_ids=ids,
        masses=masses,
        positions=positions,
        edges=edges,
        attrs=attrs,
        precedence_mask=precedence_mask,
        upc_max_multi=int(upc["max_subassemblies"]) if upc else None,
        upc_max_piece=int(upc["max_new_size"]) if upc else None,
    )


class DisassemblyEnv:
    """Masked-action episodic environment over one structure + reward config."""

    def __init__(self, spec: dict):
        self.structure = _parse_structure(spec["structure"])
        reward = spec["reward"]
        self.reward_kind = str(reward["kind"])
        self.reward_params = dict(reward.get("params", {}))
        self.reward_shift = float(reward.get("shift", 0.0))
        self.curriculum = dict(spec["curriculum"])
        self.epsilon = dict(spec["epsilon"])
        self.seed = int(spec["seed"])
        self.n_actions = self.structure.n_actions
        self.full_state = (1 << self.n_actions) - 1
        self._static_reward = self._build_static_rewards()
        if self.structure.n_parts > sys.getrecursionlimit() - 100:
            sys.setrecursionlimit(self.structure.n_parts + 500)

    # -- reward ---------------------------------------------------------------

    def _build_static_rewards(self) -> list[float] | None:
        kind = self.reward_kind
        s = self.structure
        if kind == "completion":
            return [-1.0 - self.reward_shift] * self.n_actions
        if kind == "min_time":
            return [-(s.attrs[a]["time"]) - self.reward_shift for a in range(self.n_actions)]
        if kind == "min_travel":
            depot = tuple(self.reward_params.get("depot", (0.0, 0.0, 0.0)))
            rate = float(self.reward_params.get("travel_rate", 1.0))
            out = []
            for ia, ib in s.edges:
                mid = [
                    (s.positions[ia][k] + s.positions[ib][k]) / 2.0 for k in range(3)
                ]
                dist = math.sqrt(sum((mid[k] - depot[k]) ** 2 for k in range(3)))
                out.append(-2.0 * dist * rate - self.reward_shift)
            return out
        if kind == "cubesat_fuel":
            return None
        raise ValueError(f"unsupported reward kind {kind!r}")

    # -- connectivity ---------------------------------------------------------

    def _survey(self, state: int):
        """One DFS pass: split side (count, mass) per bridge, multi-piece census.

        Returns (multi_count, bridge_info) where bridge_info[a] =
        (small_count, small_mass) using the lighter/smaller convention needed
        by both the mask and the fuel reward.
        """
        s = self.structure
        n = s.n_parts
        neighbors: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for a in range(self.n_actions):
            if (state >> a) & 1:
                ia, ib = s.edges[a]
                neighbors[ia].append((ib, a))
                neighbors[ib].append((ia, a))

        order = [0] * n
        low = [0] * n
        size = [1] * n
        mass = list(s.masses)
        visited = [False] * n
        clock = [1]
        bridge_info: dict[int, tuple[int, int, float, float]] = {}
        comp_stats: list[tuple[int, float]] = []

        def explore(root: int) -> None:
            visited[root] = True
            order[root] = low[root] = clock[0]
            clock[0] += 1
            bridges_here: list[tuple[int, int]] = []

            def dfs(v: int, entry: int) -> None:
                for to, a in neighbors[v]:
                    if a == entry:
                        continue
                    if not visited[to]:
                        visited[to] = True
                        order[to] = low[to] = clock[0]
                        clock[0] += 1
                        dfs(to, a)
                        size[v] += size[to]
                        mass[v] += mass[to]
                        if low[to] < low[v]:
                            low[v] = low[to]
                        if low[to] > order[v]:
                            bridges_here.append((a, to))
                    elif order[to] < low[v]:
                        low[v] = order[to]

            dfs(root, -1)
            comp_stats.append((size[root], mass[root]))
            for a, child in bridges_here:
                bridge_info[a] = (
                    size[child],
                    size[root] - size[child],
                    mass[child],
                    mass[root] - mass[child],
                )

        for v in range(n):
            if not visited[v]:
                explore(v)
        multi = sum(1 for count, _ in comp_stats if count >= 2)
        return multi, bridge_info

    def valid_actions(self, state: int) -> list[int]:
        s = self.structure
        survey = None
        if s.upc_max_multi is not None or s.upc_max_piece is not None:
            survey = self._survey(state)
        out = []
        for a in range(self.n_actions):
            if not (state >> a) & 1:
                continue
            if state & s.precedence_mask[a]:
                continue
            if survey is not None:
                multi, bridges = survey
                info = bridges.get(a)
                if info is None:
                    after = multi
                else:
                    c1, c2 = info[0], info[1]
                    if min(c1, c2) > s.upc_max_piece:
                        continue
                    after = multi - 1 + (c1 >= 2) + (c2 >= 2)
                if after > s.upc_max_multi:
                    continue
            out.append(a)
        return out

    def mask(self, state: int) -> list[bool]:
        valid = set(self.valid_actions(state))
        return [a in valid for a in range(self.n_actions)]

    def reward(self, state: int, action: int) -> float:
        if self._static_reward is not None:
            return self._static_reward[action]
        s = self.structure
        alpha = float(self.reward_params.get("alpha", 1.0))
        beta = float(self.reward_params.get("beta", 1.5))
        _, bridges = self._survey(state)
        info = bridges.get(action)
        if info is None:
            ia, ib = s.edges[action]
            carried = min(s.masses[ia], s.masses[ib])
        else:
            carried = min(info[2], info[3])
        return -(s.attrs[action]["fuel_base"] + alpha * carried**beta) - self.reward_shift

    def step(self, state: int, action: int) -> tuple[int, float, bool]:
        if action not in self.valid_actions(state):
            raise ValueError(f"action {action} is masked in state {state:#x}")
        r = self.reward(state, action)
        nxt = state & ~(1 << action)
        return nxt, r, nxt == 0

    # -- episodes -------------------------------------------------------------

    def reset(self, level_k: int, rng: random.Random) -> int:
        """Uniform feasible walk down to ``level_k`` remaining connections."""
        if not 1 <= level_k <= self.n_actions:
            raise ValueError(f"level_k must be in 1..{self.n_actions}")
        for _ in range(100):
            state = self.full_state
            for _ in range(self.n_actions - level_k):
                valid = self.valid_actions(state)
                if not valid:
                    break
                state &= ~(1 << valid[rng.randrange(len(valid))])
            else:
                return state
        raise RuntimeError(f"could not reach level {level_k} in 100 attempts")

    def random_rollout(self, rng: random.Random) -> tuple[list[int], float] | None:
        """Uniform-over-valid walk to the empty state; None on a dead end."""
        state = self.full_state
        order: list[int] = []
        total = 0.0
        while state != 0:
            valid = self.valid_actions(state)
            if not valid:
                return None
            a = valid[rng.randrange(len(valid))]
            total += self.reward(state, a)
            order.append(a)
            state &= ~(1 << a)
        return order, total

    def curriculum_level(self, episode: int) -> int:
        start = int(self.curriculum["k_start"])
        step = int(self.curriculum["k_step"])
        per = int(self.curriculum["episodes_per_level"])
        return min(self.n_actions, start + (episode // per) * step)

    def epsilon_at(self, episode: int) -> float:
        return max(
            float(self.epsilon["end"]),
            float(self.epsilon["start"]) * float(self.epsilon["decay"]) ** episode,
        )


def state_to_hex(state: int, width: int) -> str:
    return format(state, f"0{max(1, (width + 3) // 4)}x")


def load_env(path, reward_tol: float = 1e-9) -> DisassemblyEnv:
    """Load a spec and replay its recorded transitions; refuse on any mismatch."""
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    env = DisassemblyEnv(spec)
    width = env.n_actions
    for i, t in enumerate(spec.get("conformance", ())):
        state = int(t["state"], 16)
        nxt, reward, done = env.step(state, int(t["action"]))
        if state_to_hex(nxt, width) != t["next"] or done != bool(t["done"]):
            raise ConformanceError(f"transition {i}: next/done mismatch (env drift)")
        if abs(reward - float(t["reward"])) > reward_tol:
            raise ConformanceError(
                f"transition {i}: reward {reward!r} != recorded {t['reward']!r}"
            )
    return env
