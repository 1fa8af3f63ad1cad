"""Masked DQN: network, replay buffer, and the training loop.

Action selection is epsilon-greedy restricted to the environment's valid-action
mask (invalid entries never reach the argmax), so every emitted sequence is
feasible by construction, trained or not.  Bootstrap targets are masked the
same way and come from a periodically synced target network.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .env import DisassemblyEnv


def state_vector(state: int, width: int) -> np.ndarray:
    return np.array([(state >> j) & 1 for j in range(width)], dtype=np.float32)


class QNetwork(nn.Module):
    """Indicator vector in, one Q-value per connection out."""

    def __init__(self, width: int, hidden: tuple[int, ...] = (256, 256)):
        super().__init__()
        layers: list[nn.Module] = []
        previous = width
        for size in hidden:
            layers += [nn.Linear(previous, size), nn.ReLU()]
            previous = size
        layers.append(nn.Linear(previous, width))
        self.net = nn.Sequential(*layers)
        self.width = width

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions; uniform batches without replacement."""

    def __init__(self, capacity: int, width: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, width), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.next_states = np.zeros((capacity, width), dtype=np.float32)
        self.next_masks = np.zeros((capacity, width), dtype=bool)
        self.dones = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.filled = 0

    def __len__(self) -> int:
        return self.filled

    def push(self, state, action, reward, next_state, next_mask, done) -> None:
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.next_masks[i] = next_mask
        self.dones[i] = done
        self.cursor = (self.cursor + 1) % self.capacity
        self.filled = min(self.filled + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(self.filled, size=batch_size, replace=False)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.next_masks[idx],
            self.dones[idx],
        )


@dataclass
class TrainConfig:
    episodes: int = 5000
    hidden: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 50_000
    batch_size: int = 64
    learning_rate: float = 1e-3
    gamma: float = 1.0
    target_sync_every: int = 250  # gradient steps between hard target syncs
    warmup_transitions: int = 500
    train_every: int = 1
    eval_every: int = 1
    dead_end_value: float = -1e4
    seed: int = 0
    metrics_path: str | None = None


@dataclass
class TrainResult:
    best_greedy_total: float
    best_state_dict: dict = field(repr=False)
    final_state_dict: dict = field(repr=False)
    episodes_run: int


def select_action(
    q_values: np.ndarray, mask: list[bool], epsilon: float, rng: random.Random
) -> int:
    """Epsilon-greedy over valid actions only; argmax never sees masked entries."""
    valid = [a for a, ok in enumerate(mask) if ok]
    if not valid:
        raise RuntimeError("no valid action available (masked dead end)")
    if rng.random() < epsilon:
        return valid[rng.randrange(len(valid))]
    best = valid[0]
    for a in valid[1:]:
        if q_values[a] > q_values[best]:
            best = a
    return best


def greedy_rollout(env: DisassemblyEnv, net: QNetwork) -> tuple[list[int], float]:
    """Epsilon=0 rollout from the full state; the mask keeps it feasible."""
    width = env.n_actions
    state = env.full_state
    order: list[int] = []
    total = 0.0
    with torch.no_grad():
        while state != 0:
            mask = env.mask(state)
            q = net(torch.from_numpy(state_vector(state, width))).numpy()
            a = select_action(q, mask, epsilon=0.0, rng=random.Random(0))
            state, reward, _ = env.step(state, a)
            order.append(a)
            total += reward
    return order, total


def train(env: DisassemblyEnv, config: TrainConfig) -> TrainResult:
    width = env.n_actions
    torch.manual_seed(config.seed)
    rng = random.Random((env.seed, config.seed).__repr__())
    np_rng = np.random.default_rng(config.seed)

    net = QNetwork(width, config.hidden)
    target = QNetwork(width, config.hidden)
    target.load_state_dict(net.state_dict())
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_capacity, width)

    best_total = -float("inf")
    best_state = {k: v.clone() for k, v in net.state_dict().items()}
    grad_steps = 0
    env_steps = 0
    metrics_rows = []

    for episode in range(config.episodes):
        epsilon = env.epsilon_at(episode)
        level = env.curriculum_level(episode)
        state = env.reset(level, rng)
        while state != 0:
            mask = env.mask(state)
            if not any(mask):
                break  # constrained dead end; episode ends without terminal
            vec = state_vector(state, width)
            with torch.no_grad():
                q = net(torch.from_numpy(vec)).numpy()
            action = select_action(q, mask, epsilon, rng)
            next_state, reward, done = env.step(state, action)
            buffer.push(
                vec,
                action,
                reward,
                state_vector(next_state, width),
                np.array(env.mask(next_state), dtype=bool),
                done,
            )
            state = next_state
            env_steps += 1

            if (
                len(buffer) >= max(config.warmup_transitions, config.batch_size)
                and env_steps % config.train_every == 0
            ):
                _gradient_step(net, target, optimizer, buffer, config, np_rng)
                grad_steps += 1
                if grad_steps % config.target_sync_every == 0:
                    target.load_state_dict(net.state_dict())

        if episode % config.eval_every == 0:
            _, greedy_total = greedy_rollout(env, net)
            if greedy_total > best_total:
                best_total = greedy_total
                best_state = {k: v.clone() for k, v in net.state_dict().items()}
            metrics_rows.append((episode, epsilon, level, greedy_total))

    if config.metrics_path:
        with open(config.metrics_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "epsilon", "curriculum_k", "greedy_total"])
            writer.writerows(metrics_rows)

    return TrainResult(
        best_greedy_total=best_total,
        best_state_dict=best_state,
        final_state_dict=net.state_dict(),
        episodes_run=config.episodes,
    )


def _gradient_step(net, target, optimizer, buffer, config, np_rng) -> None:
    states, actions, rewards, next_states, next_masks, dones = buffer.sample(
        config.batch_size, np_rng
    )
    state_t = torch.from_numpy(states)
    action_t = torch.from_numpy(actions).unsqueeze(1)
    reward_t = torch.from_numpy(rewards)
    next_t = torch.from_numpy(next_states)
    done_t = torch.from_numpy(dones)

    q_taken = net(state_t).gather(1, action_t).squeeze(1)
    with torch.no_grad():
        next_q = target(next_t)
        next_q[~torch.from_numpy(next_masks)] = -torch.inf
        best_next = next_q.max(dim=1).values
        # Non-terminal states with an empty mask are wedged: bootstrap with a
        # fixed penalty instead of -inf so the loss stays finite.
        best_next = torch.where(
            torch.isneginf(best_next),
            torch.tensor(config.dead_end_value),
            best_next,
        )
        targets = reward_t + (~done_t) * config.gamma * best_next
    loss = nn.functional.smooth_l1_loss(q_taken, targets)
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
