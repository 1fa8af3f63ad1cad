"""Command line: train on an EnvSpec JSON, evaluate a checkpoint to sequence JSON."""

from __future__ import annotations

import argparse
import sys

from .dqn import TrainConfig, train
from .env import ConformanceError, load_env
from .evaluate import evaluate, save_checkpoint


def _cmd_train(args) -> int:
    env = load_env(args.spec)
    config = TrainConfig(
        episodes=args.episodes,
        hidden=tuple(args.hidden),
        buffer_capacity=args.buffer,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        gamma=args.gamma,
        target_sync_every=args.target_sync,
        train_every=args.train_every,
        eval_every=args.eval_every,
        seed=args.seed,
        metrics_path=args.metrics,
    )
    result = train(env, config)
    save_checkpoint(args.out, result.best_state_dict, env.n_actions, config.hidden)
    print(
        f"trained {result.episodes_run} episodes; "
        f"best greedy total {result.best_greedy_total:.6f}; checkpoint {args.out}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    doc = evaluate(args.checkpoint, args.spec, args.out)
    print(f"greedy total {doc['greedy_total']:.6f} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqn-trainer",
        description="Masked DQN over a disassembly EnvSpec JSON",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and write the best checkpoint")
    p.add_argument("--spec", required=True, help="EnvSpec JSON from the planner")
    p.add_argument("--episodes", type=int, default=5000)
    p.add_argument("--hidden", type=int, nargs="+", default=[256, 256])
    p.add_argument("--buffer", type=int, default=50_000)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--target-sync", type=int, default=250)
    p.add_argument("--train-every", type=int, default=1)
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metrics", help="per-episode greedy-evaluation CSV")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="greedy rollout of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True, help="sequence JSON path")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConformanceError as exc:
        sys.stderr.write(f"error: conformance: {exc}\n")
        return 3
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 5


if __name__ == "__main__":
    sys.exit(main())
