"""Greedy evaluation of a checkpoint into the sequence JSON the planner scores."""

from __future__ import annotations

import json

import torch

from .dqn import QNetwork, greedy_rollout
from .env import load_env


def save_checkpoint(path, state_dict, width: int, hidden: tuple[int, ...]) -> None:
    torch.save({"state_dict": state_dict, "width": width, "hidden": list(hidden)}, path)


def load_checkpoint(path) -> QNetwork:
    blob = torch.load(path, weights_only=False)
    net = QNetwork(int(blob["width"]), tuple(blob["hidden"]))
    net.load_state_dict(blob["state_dict"])
    net.eval()
    return net


def evaluate(checkpoint_path, spec_path, out_path=None) -> dict:
    """Epsilon=0 rollout from the full state, emitted as sequence JSON."""
    env = load_env(spec_path)
    net = load_checkpoint(checkpoint_path)
    if net.width != env.n_actions:
        raise ValueError(
            f"checkpoint width {net.width} != spec width {env.n_actions}"
        )
    order, total = greedy_rollout(env, net)
    doc = {
        "disassembly": order,
        "assembly": order[::-1],
        "greedy_total": total,
        "structure": env.structure.name,
    }
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return doc
