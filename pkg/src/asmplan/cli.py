"""Command-line front end: plan, baseline, stats, replan, validate, export-env, gen.

Exit codes: 0 ok, 2 usage, 3 infeasible, 4 cap exceeded, 5 I/O or bad input
files.  Identical argv + seeds produce identical outputs, except the
``runtime_ms`` field of plan payloads.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time

from . import planners, rl, statespace
from .bits import from_hex, to_hex
from .errors import CapExceededError, InfeasibleError, StructureError
from .rewards import REWARD_KINDS, RewardModel, evaluate_reward
from .structures import (
    PRESET_NAMES,
    AssemblyGraph,
    generate_preset,
    load_structure,
    save_structure,
    validate_sequence,
)

PLANNER_CHOICES = ("vi", "dijkstra", "bellman-ford", "orasp", "oracle")


def _load_graph(args) -> AssemblyGraph:
    if args.structure:
        return load_structure(args.structure)
    return generate_preset(args.preset, seed=args.seed)


def _load_reward(text: str) -> RewardModel:
    if text in REWARD_KINDS:
        return RewardModel(kind=text)
    if text.lstrip().startswith("{"):
        return RewardModel.from_config(json.loads(text))
    with open(text, "r", encoding="utf-8") as fh:
        return RewardModel.from_config(json.load(fh))


def _add_structure_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--structure", help="structure JSON file")
    group.add_argument("--preset", choices=PRESET_NAMES, help="named preset")
    parser.add_argument("--seed", type=int, default=0, help="seed (presets and sampling)")


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _plan_payload(
    structure_name: str,
    model: RewardModel | None,
    planner: str,
    traj: planners.Trajectory,
    width: int,
    expanded_nodes: int,
    runtime_ms: float,
) -> dict:
    return {
        "structure": structure_name,
        "reward": model.to_config() if model else None,
        "planner": planner,
        "disassembly": traj.disassembly_order,
        "assembly": traj.assembly_order,
        "total_reward": traj.total,
        "per_step": [
            {"state": to_hex(state, width), "action": action, "reward": reward}
            for state, action, reward in traj.steps
        ],
        "expanded_nodes": expanded_nodes,
        "runtime_ms": runtime_ms,
    }


def _cmd_plan(args) -> int:
    graph = _load_graph(args)
    model = _load_reward(args.reward)
    start = time.perf_counter()
    if args.planner in ("vi", "dijkstra", "bellman-ford"):
        H = statespace.expand_consolidated(graph, model, max_connections=args.cap)
        if args.dump_h:
            statespace.dump_edges(H, args.dump_h)
        if args.planner == "vi":
            _, traj = planners.value_iteration(H)
        elif args.planner == "dijkstra":
            traj = planners.dijkstra_plan(H)
        else:
            distances = planners.bellman_ford_all(H)
            traj = planners.replan_blocked(H, distances, [])
        expanded = H.node_count
    elif args.planner == "orasp":
        traj, stats = planners.orasp_search(graph, model, rng_seed=args.seed)
        expanded = stats.expanded
    else:
        traj = planners.brute_force_oracle(graph, model)
        expanded = len(planners.reachable_states(graph))
    runtime_ms = (time.perf_counter() - start) * 1000.0
    payload = _plan_payload(
        graph.name, model, args.planner, traj, graph.num_connections, expanded, runtime_ms
    )
    _write_json(payload, args.out)
    return 0


def _cmd_baseline(args) -> int:
    graph = _load_graph(args)
    model = _load_reward(args.reward)
    rows = []
    totals = []
    for i in range(args.samples):
        traj = planners.random_rollout(graph, model, random.Random(f"{args.seed}:{i}"))
        if traj is None:
            rows.append(f"{i},")
        else:
            rows.append(f"{i},{traj.total!r}")
            totals.append(traj.total)
    text = "sample,total\n" + "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    summary = {
        "samples": args.samples,
        "completed": len(totals),
        "mean": sum(totals) / len(totals) if totals else None,
        "min": min(totals) if totals else None,
        "max": max(totals) if totals else None,
    }
    sys.stderr.write(json.dumps(summary) + "\n")
    return 0


def _cmd_stats(args) -> int:
    graph = _load_graph(args)
    model = _load_reward(args.reward)
    H = statespace.expand_consolidated(graph, model, max_connections=args.cap)
    if args.dump_h:
        statespace.dump_edges(H, args.dump_h)
    rows = statespace.growth_stats(args.emax)
    if args.out:
        statespace.write_growth_csv(rows, args.out)
    sys.stdout.write(
        json.dumps({"structure": graph.name, "nodes": H.node_count, "edges": H.edge_count})
        + "\n"
    )
    return 0


def _cmd_replan(args) -> int:
    H = statespace.load_edges(args.hdump)
    blocked = []
    for item in args.block or []:
        state_hex, _, action = item.partition(":")
        blocked.append((from_hex(state_hex, H.width), int(action)))
    start = time.perf_counter()
    distances = planners.bellman_ford_all(H)
    traj = planners.replan_blocked(H, distances, blocked)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    payload = _plan_payload(
        args.hdump, None, "replan", traj, H.width, H.node_count, runtime_ms
    )
    _write_json(payload, args.out)
    return 0


def _cmd_validate(args) -> int:
    graph = _load_graph(args)
    model = _load_reward(args.reward)
    with open(args.sequence, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    seq = [int(a) for a in doc["disassembly"]]
    report = validate_sequence(graph, seq)
    total = None
    if report.valid:
        state = graph.full_state
        total = 0.0
        for a in seq:
            total += evaluate_reward(model, graph, state, a)
            state &= ~(1 << a)
    payload = {
        "valid": report.valid,
        "step": report.step,
        "reason": report.reason,
        "detail": report.detail,
        "total_reward": total,
    }
    _write_json(payload, args.out)
    return 0


def _cmd_export_env(args) -> int:
    graph = _load_graph(args)
    model = _load_reward(args.reward)
    curriculum = rl.Curriculum(
        k_start=args.k_start, k_step=args.k_step, episodes_per_level=args.episodes_per_level
    )
    epsilon = rl.EpsilonSchedule(start=args.eps_start, end=args.eps_end, decay=args.eps_decay)
    rl.export_env_spec(graph, model, curriculum, epsilon, args.seed, args.out)
    return 0


def _cmd_gen(args) -> int:
    graph = generate_preset(args.preset, seed=args.seed)
    save_structure(graph, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asmplan",
        description="Optimal assembly sequencing on a consolidated state-action graph",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="compute an optimal disassembly/assembly plan")
    _add_structure_flags(p)
    p.add_argument("--reward", default="completion", help="kind name, inline JSON, or path")
    p.add_argument("--planner", choices=PLANNER_CHOICES, default="dijkstra")
    p.add_argument("--cap", type=int, default=statespace.DEFAULT_EXPANSION_CAP)
    p.add_argument("--dump-h", help="also dump the expanded graph edge list here")
    p.add_argument("--out", help="plan JSON path (stdout if omitted)")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("baseline", help="seeded random-rollout totals as CSV")
    _add_structure_flags(p)
    p.add_argument("--reward", default="completion")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("stats", help="expanded graph size and closed-form growth table")
    _add_structure_flags(p)
    p.add_argument("--reward", default="completion")
    p.add_argument("--emax", type=int, default=14, help="growth table upper width")
    p.add_argument("--cap", type=int, default=statespace.DEFAULT_EXPANSION_CAP)
    p.add_argument("--dump-h", help="dump the expanded graph edge list here")
    p.add_argument("--out", help="growth CSV path")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("replan", help="re-plan around blocked transitions on a dumped graph")
    p.add_argument("--hdump", required=True, help="edge-list dump from plan/stats --dump-h")
    p.add_argument("--block", action="append", metavar="HEXSTATE:ACTIONIDX",
                   help="blocked transition (repeatable)")
    p.add_argument("--out", help="plan JSON path (stdout if omitted)")
    p.set_defaults(func=_cmd_replan)

    p = sub.add_parser("validate", help="check and score an externally produced sequence")
    _add_structure_flags(p)
    p.add_argument("--sequence", required=True, help="JSON file with a 'disassembly' list")
    p.add_argument("--reward", default="completion")
    p.add_argument("--out", help="report JSON path (stdout if omitted)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("export-env", help="write an environment spec for external trainers")
    _add_structure_flags(p)
    p.add_argument("--reward", default="completion")
    p.add_argument("--k-start", type=int, default=2)
    p.add_argument("--k-step", type=int, default=1)
    p.add_argument("--episodes-per-level", type=int, default=50)
    p.add_argument("--eps-start", type=float, default=1.0)
    p.add_argument("--eps-end", type=float, default=0.05)
    p.add_argument("--eps-decay", type=float, default=0.999)
    p.add_argument("--out", required=True, help="EnvSpec JSON path")
    p.set_defaults(func=_cmd_export_env)

    p = sub.add_parser("gen", help="write a preset structure JSON")
    p.add_argument("--preset", choices=PRESET_NAMES, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        sys.stderr.write(f"error: infeasible: {exc}\n")
        return 3
    except CapExceededError as exc:
        sys.stderr.write(f"error: cap-exceeded: {exc}\n")
        return 4
    except (StructureError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        sys.stderr.write(f"error: input: {exc}\n")
        return 5


if __name__ == "__main__":
    sys.exit(main())
