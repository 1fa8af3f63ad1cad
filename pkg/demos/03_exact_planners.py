"""Four routes to the same optimal sequence, and what each one buys you.

Value iteration handles stochastic extensions, Dijkstra is the fast
single-pair solve, Bellman-Ford prices every node for instant re-planning,
and the incumbent-pruned depth-first search skips graph construction
entirely -- the practical winner once expansion dominates.
"""

import time

import asmplan as ap

lattice = ap.generate_preset("lattice")
fuel = ap.RewardModel("cubesat_fuel")

t0 = time.perf_counter()
H = ap.expand_consolidated(lattice, fuel)
expansion_s = time.perf_counter() - t0
print(f"expansion: {H.node_count} nodes / {H.edge_count} edges in {expansion_s:.3f}s")

table, vi_traj = ap.value_iteration(H)
print(f"value iteration:  total {vi_traj.total:.4f} "
      f"({table.iterations_used} sweeps, converged={table.converged})")
print(f"dijkstra:         total {ap.dijkstra_plan(H).total:.4f}")
print(f"bellman-ford:     total {ap.bellman_ford_all(H)[0]:.4f} (prices all "
      f"{H.node_count} nodes)")

traj, stats = ap.orasp_search(lattice, fuel, rng_seed=0)
print(f"pruned search:    total {traj.total:.4f} "
      f"(generated {stats.expanded} of {H.node_count} states lazily)")

print(f"\noptimal removal order: {traj.disassembly_order}")
print(f"assembly order (reversed): {ap.reverse_to_assembly(traj)}")

# At Hubble scale the difference becomes decisive.
hubble = ap.generate_preset("hubble")
times = ap.RewardModel("min_time")
t0 = time.perf_counter()
fast, stats = ap.orasp_search(hubble, times, rng_seed=0)
search_s = time.perf_counter() - t0
print(f"\nhubble (E=19) pruned search: total {fast.total:.4f} in {search_s:.1f}s")
print("(full expansion holds 524288 states; run demos/04 to see it built anyway)")
