"""Hand the environment to an external trainer and score what comes back.

The exported JSON embeds the structure, reward config, curriculum, and 32
recorded transitions; a reconstruction that replays all 32 is certified to
step identically.  Sequences produced elsewhere come back through
validate_sequence / the CLI validate subcommand for scoring.
"""

import json
import pathlib
import tempfile

import asmplan as ap
from asmplan import rl

workdir = pathlib.Path(tempfile.mkdtemp(prefix="asmplan-demo-"))
hubble = ap.generate_preset("hubble")
constrained = ap.AssemblyGraph(
    hubble.name, hubble.parts, hubble.connections,
    ap.ConstraintSet(upc=ap.Upc(4, 3)),  # carry <= 3 parts, <= 4 open sites
)
fuel = ap.RewardModel("cubesat_fuel")

env_path = workdir / "hubble_env.json"
spec = rl.export_env_spec(
    constrained, fuel, rl.Curriculum(k_start=2, k_step=1, episodes_per_level=50),
    rl.EpsilonSchedule(start=1.0, end=0.05, decay=0.999), seed=0, path=env_path,
)
doc = json.loads(env_path.read_text())
print(f"wrote {env_path} ({len(doc['conformance'])} conformance transitions)")

rl.verify_conformance(rl.load_env_spec(env_path), doc["conformance"])
print("reloaded spec replays all recorded transitions")

# Pretend an external trainer produced this sequence (here: the exact optimum).
traj, stats = ap.orasp_search(constrained, fuel, 0)
seq_path = workdir / "sequence.json"
seq_path.write_text(json.dumps(
    {"disassembly": traj.disassembly_order, "assembly": traj.assembly_order}
))
struct_path = workdir / "hubble_upc.json"
ap.save_structure(constrained, struct_path)
report = ap.validate_sequence(constrained, traj.disassembly_order)
print(f"\nexternal sequence valid: {report.valid}; total {traj.total:.4f}")
print(f"score it from the shell:\n  asmplan validate --structure {struct_path} "
      f"--sequence {seq_path} --reward cubesat_fuel")
