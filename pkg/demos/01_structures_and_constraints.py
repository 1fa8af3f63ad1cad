"""Structures, bit-vector states, and constraint checking.

A structure is a connected graph of parts joined by indexed connections.
A partial disassembly is just an int: bit j set iff connection j remains.
"""

import asmplan as ap

brick = ap.generate_preset("4brick")
print(f"{brick.name}: {brick.num_parts} parts, {brick.num_connections} connections")
for c in brick.connections:
    print(f"  connection {c.index}: parts {c.a}-{c.b}, attrs {c.attrs}")

full = brick.full_state
print(f"\nfull state {ap.to_hex(full, 3)} -> components {ap.connected_components(brick, full)}")
mid = ap.apply_action(full, 1)
print(f"remove middle  -> components {ap.connected_components(brick, mid)}")

# A precedence pair: connection 1 must come out before connection 0.
constrained = ap.assembly_graph(
    "4brick", [1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)], precedence=[(1, 0)]
)
print(f"\nfeasible at full, unconstrained: {sorted(ap.feasible_actions(brick, full))}")
print(f"feasible at full, with precedence: {sorted(ap.feasible_actions(constrained, full))}")

report = ap.validate_sequence(constrained, [0, 1, 2])
print(f"order [0,1,2] -> valid={report.valid}, step={report.step}, reason={report.reason}")
report = ap.validate_sequence(constrained, [2, 1, 0])
print(f"order [2,1,0] -> valid={report.valid}")

# Carry limits: no split may create a piece of more than 1 part here.
carry = ap.assembly_graph(
    "4brick", [1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)], upc=(4, 1)
)
print(f"feasible with carry limit 1: {sorted(ap.feasible_actions(carry, full))} "
      "(the middle connection would split off a 2-part piece)")
