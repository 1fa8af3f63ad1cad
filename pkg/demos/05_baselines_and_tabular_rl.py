"""Random-rollout baselines and the tabular Q-learning reference.

100 uniformly random feasible sequences give the distribution any learned
policy must beat; on small structures the tabular learner recovers the exact
optimum.
"""

import statistics

import asmplan as ap
from asmplan import rl

grid = ap.generate_preset("2x3")
fuel = ap.RewardModel("cubesat_fuel")

totals = [ap.random_rollout(grid, fuel, seed).total for seed in range(100)]
optimum = ap.brute_force_oracle(grid, fuel).total
print(f"2x3 random baseline over 100 rollouts:")
print(f"  mean {statistics.mean(totals):.4f}  min {min(totals):.4f}  "
      f"max {max(totals):.4f}")
print(f"  exact optimum {optimum:.4f} (>= every sample)")

spec = rl.EnvSpec(graph=grid, model=fuel, seed=0)
policy = rl.tabular_q_learning(spec, episodes=5000)
learned = rl.rollout_policy(grid, fuel, policy)
print(f"\ntabular Q-learning greedy total: {learned.total:.4f}")
print(f"matches optimum: {abs(learned.total - optimum) < 1e-9}")
print(f"learned order: {learned.disassembly_order}")

mask = rl.action_mask(grid, grid.full_state)
print(f"\naction mask at the full state: {mask.tolist()}")
state, reward, done = rl.step(grid, fuel, grid.full_state, int(mask.argmax()))
print(f"one step -> state {ap.to_hex(state, grid.num_connections)}, "
      f"reward {reward:.4f}, done {done}")
