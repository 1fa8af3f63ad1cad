"""Re-planning around blocked transitions and re-weighting without re-expansion.

Bellman-Ford prices every node up front, so losing access to a transition
means repairing only the prices downstream of it.  Swapping the objective
re-weights the stored edges in place of a second expansion.
"""

import asmplan as ap

lattice = ap.generate_preset("lattice")
fuel = ap.RewardModel("cubesat_fuel")
H = ap.expand_consolidated(lattice, fuel)
distances = ap.bellman_ford_all(H)

baseline = ap.replan_blocked(H, distances, [])
print(f"undisturbed optimum: {baseline.total:.4f}, order {baseline.disassembly_order}")

first_action = baseline.disassembly_order[0]
blocked = [(H.root, first_action)]
detour = ap.replan_blocked(H, distances, blocked)
print(f"block the first move ({ap.to_hex(H.root, H.width)}:{first_action}) -> "
      f"new optimum {detour.total:.4f}, order {detour.disassembly_order}")

more = blocked + [(H.root, detour.disassembly_order[0])]
detour2 = ap.replan_blocked(H, distances, more)
print(f"block that one too -> {detour2.total:.4f}, order {detour2.disassembly_order}")

# Same expansion, different objective: re-weight instead of re-expand.
times = ap.RewardModel("min_time")
H_time = ap.reweighted(H, lattice, times)
print(f"\nre-weighted to time objective: optimum {ap.dijkstra_plan(H_time).total:.4f}")
fresh = ap.expand_consolidated(lattice, times)
print(f"fresh expansion agrees:        optimum {ap.dijkstra_plan(fresh).total:.4f}")
