"""DQN trainer for masked disassembly environments defined by EnvSpec JSON.

Consumes the planner package's exported environment spec, reconstructs the
environment independently (validating itself against the spec's recorded
transitions), trains a masked deep Q-network with curriculum resets and
experience replay, and emits a sequence JSON the planner's ``validate``
subcommand can check and score.
"""

from .dqn import QNetwork, ReplayBuffer, TrainConfig, TrainResult, greedy_rollout, train
from .env import ConformanceError, DisassemblyEnv, load_env
from .evaluate import evaluate, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
