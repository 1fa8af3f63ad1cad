"""Optimal assembly sequencing as shortest paths on a consolidated state graph.

Pose disassembly of a structure as a deterministic decision process over
bit-vector states, merge all removal orders that reach the same subset of
remaining connections, and solve the resulting DAG exactly (value iteration,
Dijkstra, Bellman-Ford, or incumbent-pruned depth-first search).  Reverse the
optimal removal order to obtain the assembly sequence.  For structures too
large to enumerate, an episodic environment with masked actions feeds an
external reinforcement-learning trainer.
"""

from .bits import from_hex, full_mask, iter_bits, to_hex
from .errors import (
    CapExceededError,
    InfeasibleError,
    InvalidActionError,
    PositiveRewardError,
    StructureError,
)
from .planners import (
    SearchStats,
    StateValueMap,
    Trajectory,
    ValueTable,
    bellman_ford_all,
    brute_force_oracle,
    dijkstra_plan,
    orasp_search,
    random_rollout,
    reachable_states,
    replan_blocked,
    reverse_to_assembly,
    value_iteration,
)
from .rewards import RewardModel, evaluate_reward, rewards_for_actions, total_reward
from .rl import (
    Curriculum,
    EnvSpec,
    EpsilonSchedule,
    action_mask,
    export_env_spec,
    load_env_spec,
    reset,
    rollout_policy,
    state_to_vector,
    step,
    tabular_q_learning,
    vector_to_state,
)
from .statespace import (
    ConsolidatedGraph,
    dump_edges,
    expand_consolidated,
    growth_stats,
    load_edges,
    reweighted,
    write_growth_csv,
)
from .structures import (
    PRESET_NAMES,
    PRESET_SIZES,
    AssemblyGraph,
    Connection,
    ConstraintSet,
    Part,
    SequenceReport,
    Upc,
    analyze_state,
    apply_action,
    assembly_graph,
    connected_components,
    feasible_actions,
    generate_preset,
    load_structure,
    random_connected_structure,
    save_structure,
    structure_from_dict,
    structure_to_dict,
    validate_sequence,
)

__version__ = "0.1.0"
