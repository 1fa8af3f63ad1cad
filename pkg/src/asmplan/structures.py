"""Assembly structures: parts, indexed connections, constraints, and state logic.

The fully assembled product is an undirected connected graph whose nodes are
parts and whose edges are indexed connections.  A partially disassembled
configuration is a bit-vector state (plain int): bit j set iff connection j is
still present.  Everything here is an immutable value; all operations are pure
functions, so instances can be shared freely across threads.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .bits import full_mask, iter_bits
from .errors import InvalidActionError, StructureError

PRESET_NAMES = ("4brick", "2x3", "lattice", "table", "hubble", "iss", "jwst")

#: (parts, connections) tuples for each named preset.
PRESET_SIZES = {
    "4brick": (4, 3),
    "2x3": (6, 7),
    "lattice": (9, 12),
    "table": (9, 8),
    "hubble": (20, 19),
    "iss": (32, 31),
    "jwst": (180, 256),
}


@dataclass(frozen=True)
class Part:
    """A single rigid part of the assembly."""

    id: int
    label: str = ""
    mass: float = 1.0
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.mass < 0:
            raise StructureError(f"part {self.id}: mass must be >= 0, got {self.mass}")
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3:
            raise StructureError(f"part {self.id}: position must be a 3-vector")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "mass", float(self.mass))


@dataclass(frozen=True)
class Connection:
    """An indexed connection between two parts, with named cost attributes."""

    index: int
    a: int
    b: int
    attrs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.a == self.b:
            raise StructureError(f"connection {self.index}: self-loop on part {self.a}")
        attrs = {str(k): float(v) for k, v in dict(self.attrs).items()}
        for k, v in attrs.items():
            if v < 0:
                raise StructureError(f"connection {self.index}: attr {k!r} must be >= 0")
        object.__setattr__(self, "attrs", attrs)

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Upc:
    """Unconnected-parts limits: component count and split-off size.

    ``max_subassemblies`` bounds the number of simultaneous multi-part
    components (detached single parts are carried off and do not count);
    ``max_new_size`` bounds the part count of the smaller half of any split.
    """

    max_subassemblies: int
    max_new_size: int

    def __post_init__(self):
        if self.max_subassemblies < 1 or self.max_new_size < 1:
            raise StructureError("upc limits must be >= 1")


@dataclass(frozen=True)
class ConstraintSet:
    """Precedence pairs (before, after) over connection indices, plus optional UPC."""

    precedence: tuple[tuple[int, int], ...] = ()
    upc: Upc | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "precedence", tuple((int(b), int(a)) for b, a in self.precedence)
        )


def _check_precedence_acyclic(pairs: Sequence[tuple[int, int]], width: int) -> None:
    """Kahn's algorithm over before->after edges; cycles make disassembly impossible."""
    succs: dict[int, list[int]] = {}
    indeg = [0] * width
    for before, after in pairs:
        for idx in (before, after):
            if not 0 <= idx < width:
                raise StructureError(f"precedence references unknown connection {idx}")
        succs.setdefault(before, []).append(after)
        indeg[after] += 1
    queue = [i for i in range(width) if indeg[i] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for nxt in succs.get(node, ()):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    if seen != width:
        raise StructureError("cyclic precedence: no feasible full disassembly")


@dataclass(frozen=True)
class AssemblyGraph:
    """A validated, fully assembled structure.

    Construction checks all invariants: unique part ids, connection indices
    exactly 0..E-1, endpoints existing, no self-loops, the full assembly being
    one connected piece, and the precedence relation being acyclic.
    """

    name: str
    parts: tuple[Part, ...]
    connections: tuple[Connection, ...]
    constraints: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "connections", tuple(self.connections))
        if not self.parts:
            raise StructureError("a structure needs at least one part")
        ids = [p.id for p in self.parts]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise StructureError(f"duplicate part id {dup}")
        part_slot = {p.id: i for i, p in enumerate(self.parts)}
        for pos, conn in enumerate(self.connections):
            if conn.index != pos:
                raise StructureError(
                    f"connection indices must be exactly 0..{len(self.connections) - 1} "
                    f"in order; found index {conn.index} at position {pos}"
                )
            for end in conn.endpoints:
                if end not in part_slot:
                    raise StructureError(
                        f"connection {conn.index}: dangling endpoint {end}"
                    )
        # Dense caches used by the hot paths.
        ends = [(part_slot[c.a], part_slot[c.b]) for c in self.connections]
        masses = [p.mass for p in self.parts]
        blockers = [0] * len(self.connections)
        for before, after in self.constraints.precedence:
            blockers[after] |= 1 << before
        object.__setattr__(self, "_part_slot", part_slot)
        object.__setattr__(self, "_conn_ends", ends)
        object.__setattr__(self, "_masses", masses)
        object.__setattr__(self, "_blockers", blockers)
        if len(_components_dense(len(self.parts), ends, full_mask(len(ends)))) != 1:
            raise StructureError("disconnected full assembly")
        _check_precedence_acyclic(self.constraints.precedence, len(self.connections))

    @property
    def num_parts(self) -> int:
        return len(self.parts)

    @property
    def num_connections(self) -> int:
        return len(self.connections)

    @property
    def full_state(self) -> int:
        return full_mask(self.num_connections)

    def part(self, part_id: int) -> Part:
        return self.parts[self._part_slot[part_id]]

    def check_state(self, state: int) -> None:
        if not 0 <= state <= self.full_state:
            raise InvalidActionError(
                f"state {state:#x} out of range for width {self.num_connections}"
            )


class _UnionFind:
    """Disjoint sets over dense indices, path compression + union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


def _components_dense(
    n: int, ends: Sequence[tuple[int, int]], state: int
) -> list[list[int]]:
    """Partition dense part slots into components under the present connections."""
    uf = _UnionFind(n)
    for j in iter_bits(state):
        ia, ib = ends[j]
        uf.union(ia, ib)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return list(groups.values())


def connected_components(graph: AssemblyGraph, state: int) -> list[set[int]]:
    """Maximal connected sets of part ids under the connections whose bits are set.

    Singleton parts count as components.  Output is sorted by smallest member
    for determinism.
    """
    graph.check_state(state)
    dense = _components_dense(graph.num_parts, graph._conn_ends, state)
    comps = [{graph.parts[i].id for i in grp} for grp in dense]
    return sorted(comps, key=min)


@dataclass(frozen=True)
class StateAnalysis:
    """One-pass connectivity summary of a state, shared by feasibility and rewards.

    ``split_sizes[a]`` / ``split_masses[a]`` exist iff connection a is a bridge
    of the present subgraph (removing it splits a component); values are
    (side-under-a, remaining-side) pairs.
    """

    state: int
    component_count: int
    multi_component_count: int
    split_sizes: dict[int, tuple[int, int]]
    split_masses: dict[int, tuple[float, float]]


def analyze_state(graph: AssemblyGraph, state: int) -> StateAnalysis:
    """Component census plus bridge detection with split sizes/masses.

    Iterative lowlink DFS over the static adjacency with a per-edge presence
    test; parallel connections are honored (a duplicated endpoint pair is
    never a bridge because the twin edge keeps the link).
    """
    graph.check_state(state)
    n = graph.num_parts
    ends = graph._conn_ends
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    s = state
    while s:
        low_bit = s & -s
        j = low_bit.bit_length() - 1
        s ^= low_bit
        ia, ib = ends[j]
        adj[ia].append((ib, j))
        adj[ib].append((ia, j))

    tin = [-1] * n
    low = [0] * n
    sub_size = [1] * n
    sub_mass = list(graph._masses)
    split_sizes: dict[int, tuple[int, int]] = {}
    split_masses: dict[int, tuple[float, float]] = {}
    component_count = 0
    multi = 0
    timer = 0
    # Parallel stacks avoid per-step tuple churn in this hot primitive.
    stack_v: list[int] = []
    stack_in: list[int] = []
    stack_cur: list[int] = []

    for start in range(n):
        if tin[start] != -1:
            continue
        component_count += 1
        comp_bridges_edge: list[int] = []
        comp_bridges_child: list[int] = []
        stack_v.append(start)
        stack_in.append(-1)
        stack_cur.append(0)
        tin[start] = low[start] = timer
        timer += 1
        while stack_v:
            v = stack_v[-1]
            in_edge = stack_in[-1]
            cursor = stack_cur[-1]
            adj_v = adj[v]
            advanced = False
            while cursor < len(adj_v):
                to, j = adj_v[cursor]
                cursor += 1
                if j == in_edge:
                    continue
                if tin[to] == -1:
                    stack_cur[-1] = cursor
                    tin[to] = low[to] = timer
                    timer += 1
                    stack_v.append(to)
                    stack_in.append(j)
                    stack_cur.append(0)
                    advanced = True
                    break
                if tin[to] < low[v]:
                    low[v] = tin[to]
            if advanced:
                continue
            stack_v.pop()
            stack_in.pop()
            stack_cur.pop()
            if stack_v:
                parent = stack_v[-1]
                if low[v] < low[parent]:
                    low[parent] = low[v]
                sub_size[parent] += sub_size[v]
                sub_mass[parent] += sub_mass[v]
                if low[v] > tin[parent]:
                    comp_bridges_edge.append(in_edge)
                    comp_bridges_child.append(v)
        comp_size = sub_size[start]
        comp_mass = sub_mass[start]
        if comp_size >= 2:
            multi += 1
        for j, child in zip(comp_bridges_edge, comp_bridges_child):
            split_sizes[j] = (sub_size[child], comp_size - sub_size[child])
            split_masses[j] = (sub_mass[child], comp_mass - sub_mass[child])

    return StateAnalysis(state, component_count, multi, split_sizes, split_masses)


def _feasible_from_analysis(
    graph: AssemblyGraph, state: int, analysis: StateAnalysis | None
) -> list[int]:
    blockers = graph._blockers
    upc = graph.constraints.upc
    out = []
    for a in iter_bits(state):
        if state & blockers[a]:
            continue
        if upc is not None:
            assert analysis is not None
            split = analysis.split_sizes.get(a)
            if split is None:
                new_multi = analysis.multi_component_count
            else:
                c1, c2 = split
                if min(c1, c2) > upc.max_new_size:
                    continue
                new_multi = (
                    analysis.multi_component_count - 1 + (c1 >= 2) + (c2 >= 2)
                )
            if new_multi > upc.max_subassemblies:
                continue
        out.append(a)
    return out


def feasible_actions(graph: AssemblyGraph, state: int) -> set[int]:
    """Connection indices removable from ``state`` under all constraints.

    An index is excluded if a precedence predecessor is still present, or if
    removal would violate the UPC limits.  An empty set on a non-empty state
    is a dead end, not an error.
    """
    graph.check_state(state)
    analysis = analyze_state(graph, state) if graph.constraints.upc else None
    return set(_feasible_from_analysis(graph, state, analysis))


def apply_action(state: int, a: int) -> int:
    """Clear bit ``a``; the input state is unchanged (ints are values)."""
    if a < 0 or not (state >> a) & 1:
        raise InvalidActionError(f"connection {a} is not present in state {state:#x}")
    return state & ~(1 << a)


@dataclass(frozen=True)
class SequenceReport:
    """Outcome of validate_sequence; invalidity is data, not an exception."""

    valid: bool
    step: int | None = None
    reason: str | None = None
    detail: str = ""


def validate_sequence(graph: AssemblyGraph, seq: Sequence[int]) -> SequenceReport:
    """Check that ``seq`` is a complete, constraint-respecting disassembly order.

    Valid iff seq is a permutation of 0..E-1 and each step's action is feasible
    in the state reached.  Reports the first violating step and its reason.
    """
    state = graph.full_state
    width = graph.num_connections
    for i, a in enumerate(seq):
        if not 0 <= a < width:
            return SequenceReport(False, i, "unknown-action", f"no connection {a}")
        if not (state >> a) & 1:
            return SequenceReport(False, i, "repeat", f"connection {a} already removed")
        if state & graph._blockers[a]:
            missing = [b for b in iter_bits(state & graph._blockers[a])]
            return SequenceReport(
                False, i, "precedence", f"connection {a} requires prior removal of {missing}"
            )
        upc = graph.constraints.upc
        if upc is not None:
            analysis = analyze_state(graph, state)
            split = analysis.split_sizes.get(a)
            if split is None:
                new_multi = analysis.multi_component_count
            else:
                c1, c2 = split
                new_multi = analysis.multi_component_count - 1 + (c1 >= 2) + (c2 >= 2)
                if min(c1, c2) > upc.max_new_size:
                    return SequenceReport(
                        False, i, "upc-size",
                        f"splitting off {min(c1, c2)} parts exceeds limit {upc.max_new_size}",
                    )
            if new_multi > upc.max_subassemblies:
                return SequenceReport(
                    False, i, "upc-count",
                    f"{new_multi} subassemblies exceeds limit {upc.max_subassemblies}",
                )
        state &= ~(1 << a)
    if state != 0 or len(seq) != width:
        return SequenceReport(
            False, len(seq), "missing-edges",
            f"{len(seq)} of {width} connections removed",
        )
    return SequenceReport(True)


# ---------------------------------------------------------------------------
# Construction helpers, presets, and JSON I/O
# ---------------------------------------------------------------------------


def assembly_graph(
    name: str,
    parts: Iterable,
    connections: Iterable,
    precedence: Iterable[tuple[int, int]] = (),
    upc: tuple[int, int] | Upc | None = None,
) -> AssemblyGraph:
    """Compact builder: parts as ids or Part, connections as (a, b[, attrs])."""
    built_parts = [p if isinstance(p, Part) else Part(id=int(p)) for p in parts]
    built_conns = []
    for i, spec in enumerate(connections):
        if isinstance(spec, Connection):
            built_conns.append(spec)
            continue
        a, b, *rest = spec
        attrs = rest[0] if rest else {"time": 1.0, "fuel_base": 1.0}
        built_conns.append(Connection(index=i, a=a, b=b, attrs=attrs))
    if upc is not None and not isinstance(upc, Upc):
        upc = Upc(*upc)
    return AssemblyGraph(
        name=name,
        parts=tuple(built_parts),
        connections=tuple(built_conns),
        constraints=ConstraintSet(precedence=tuple(precedence), upc=upc),
    )


def _preset_attrs(rng: random.Random) -> dict[str, float]:
    return {
        "time": round(rng.uniform(0.5, 3.0), 3),
        "travel": round(rng.uniform(1.0, 10.0), 3),
        "fuel_base": round(rng.uniform(0.2, 2.0), 3),
    }


def _grid_structure(name: str, rows: int, cols: int, rng: random.Random) -> AssemblyGraph:
    parts = [
        Part(id=r * cols + c + 1, label=f"p{r * cols + c + 1}",
             mass=round(rng.uniform(0.5, 2.5), 3),
             position=(float(c), float(r), 0.0))
        for r in range(rows)
        for c in range(cols)
    ]
    pairs = []
    for r in range(rows):
        for c in range(cols - 1):
            pairs.append((r * cols + c + 1, r * cols + c + 2))
    for c in range(cols):
        for r in range(rows - 1):
            pairs.append((r * cols + c + 1, (r + 1) * cols + c + 1))
    conns = [
        Connection(index=i, a=a, b=b, attrs=_preset_attrs(rng))
        for i, (a, b) in enumerate(pairs)
    ]
    return AssemblyGraph(name=name, parts=tuple(parts), connections=tuple(conns))


def _random_structure(
    name: str, n_parts: int, n_connections: int, rng: random.Random
) -> AssemblyGraph:
    if n_connections < n_parts - 1:
        raise StructureError("too few connections for a connected structure")
    parts = [
        Part(
            id=i,
            label=f"p{i}",
            mass=round(rng.uniform(0.5, 2.5), 3),
            position=tuple(round(rng.uniform(-5.0, 5.0), 3) for _ in range(3)),
        )
        for i in range(1, n_parts + 1)
    ]
    pairs = [(rng.randrange(1, i), i) for i in range(2, n_parts + 1)]
    existing = {tuple(sorted(p)) for p in pairs}
    while len(pairs) < n_connections:
        a = rng.randrange(1, n_parts + 1)
        b = rng.randrange(1, n_parts + 1)
        if a == b or tuple(sorted((a, b))) in existing:
            continue
        pairs.append((a, b))
        existing.add(tuple(sorted((a, b))))
    conns = [
        Connection(index=i, a=a, b=b, attrs=_preset_attrs(rng))
        for i, (a, b) in enumerate(pairs)
    ]
    return AssemblyGraph(name=name, parts=tuple(parts), connections=tuple(conns))


def random_connected_structure(
    n_parts: int, n_connections: int, seed: int, name: str | None = None
) -> AssemblyGraph:
    """Seeded random connected structure (tree plus extra distinct edges)."""
    rng = random.Random(f"random:{n_parts}:{n_connections}:{seed}")
    return _random_structure(name or f"random-{n_parts}-{n_connections}-{seed}",
                             n_parts, n_connections, rng)


def generate_preset(name: str, seed: int = 0) -> AssemblyGraph:
    """Deterministic named preset with the published (parts, connections) sizes.

    The four small presets are fixed regardless of seed; the three large ones
    (hubble, iss, jwst) are seeded random stand-ins with the right sizes since
    the exact topologies are not published.
    """
    if name not in PRESET_NAMES:
        raise StructureError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    if name == "4brick":
        rng = random.Random("preset:4brick")
        parts = [Part(id=i, label=f"brick{i}",
                      mass=round(rng.uniform(0.5, 2.5), 3),
                      position=(float(i - 1), 0.0, 0.0)) for i in range(1, 5)]
        conns = [
            Connection(index=i, a=i + 1, b=i + 2, attrs=_preset_attrs(rng))
            for i in range(3)
        ]
        return AssemblyGraph(name="4brick", parts=tuple(parts), connections=tuple(conns))
    if name == "2x3":
        return _grid_structure("2x3", 2, 3, random.Random("preset:2x3"))
    if name == "lattice":
        return _grid_structure("lattice", 3, 3, random.Random("preset:lattice"))
    if name == "table":
        rng = random.Random("preset:table")
        corners = [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)]
        parts = [Part(id=1, label="top", mass=round(rng.uniform(2.0, 4.0), 3),
                      position=(0.0, 0.0, 1.0))]
        for k, (x, y) in enumerate(corners):
            parts.append(Part(id=2 + k, label=f"leg{k}-upper",
                              mass=round(rng.uniform(0.5, 1.5), 3),
                              position=(x, y, 0.6)))
            parts.append(Part(id=6 + k, label=f"leg{k}-lower",
                              mass=round(rng.uniform(0.5, 1.5), 3),
                              position=(x, y, 0.2)))
        pairs = [(1, 2 + k) for k in range(4)] + [(2 + k, 6 + k) for k in range(4)]
        conns = [Connection(index=i, a=a, b=b, attrs=_preset_attrs(rng))
                 for i, (a, b) in enumerate(pairs)]
        return AssemblyGraph(name="table", parts=tuple(parts), connections=tuple(conns))
    n, e = PRESET_SIZES[name]
    return _random_structure(name, n, e, random.Random(f"preset:{name}:{seed}"))


def structure_to_dict(graph: AssemblyGraph) -> dict:
    out: dict = {
        "name": graph.name,
        "parts": [
            {"id": p.id, "label": p.label, "mass": p.mass, "position": list(p.position)}
            for p in graph.parts
        ],
        "connections": [
            {"index": c.index, "a": c.a, "b": c.b, "attrs": dict(c.attrs)}
            for c in graph.connections
        ],
    }
    constraints: dict = {}
    if graph.constraints.precedence:
        constraints["precedence"] = [
            {"before": b, "after": a} for b, a in graph.constraints.precedence
        ]
    if graph.constraints.upc is not None:
        constraints["upc"] = {
            "max_subassemblies": graph.constraints.upc.max_subassemblies,
            "max_new_size": graph.constraints.upc.max_new_size,
        }
    if constraints:
        out["constraints"] = constraints
    return out


def structure_from_dict(data: Mapping) -> AssemblyGraph:
    try:
        parts = tuple(
            Part(
                id=int(p["id"]),
                label=str(p.get("label", "")),
                mass=float(p.get("mass", 1.0)),
                position=tuple(p.get("position", (0.0, 0.0, 0.0))),
            )
            for p in data["parts"]
        )
        conns = tuple(
            Connection(
                index=int(c["index"]),
                a=int(c["a"]),
                b=int(c["b"]),
                attrs=c.get("attrs", {}),
            )
            for c in data["connections"]
        )
    except (KeyError, TypeError) as exc:
        raise StructureError(f"malformed structure document: {exc}") from exc
    raw = data.get("constraints") or {}
    precedence = tuple(
        (int(pair["before"]), int(pair["after"])) for pair in raw.get("precedence", ())
    )
    upc = None
    if raw.get("upc") is not None:
        upc = Upc(
            max_subassemblies=int(raw["upc"]["max_subassemblies"]),
            max_new_size=int(raw["upc"]["max_new_size"]),
        )
    return AssemblyGraph(
        name=str(data.get("name", "structure")),
        parts=parts,
        connections=conns,
        constraints=ConstraintSet(precedence=precedence, upc=upc),
    )


def load_structure(path) -> AssemblyGraph:
    """Load and validate a structure JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureError(f"{path}: parse failure: {exc}") from exc
    try:
        return structure_from_dict(data)
    except StructureError as exc:
        raise StructureError(f"{path}: {exc}") from exc


def save_structure(graph: AssemblyGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(structure_to_dict(graph), fh, indent=2)
        fh.write("\n")
