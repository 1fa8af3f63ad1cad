import dataclasses
import random

import pytest

import asmplan as ap
from asmplan.errors import (
    CapExceededError,
    InfeasibleError,
    PositiveRewardError,
)

from conftest import (
    best_total_by_enumeration,
    drop_edges,
    enumerate_orders,
    random_instance,
    total_of_order,
    with_attrs,
    with_constraints,
)

COMPLETION = ap.RewardModel("completion")


def fourbrick(**kwargs):
    return ap.assembly_graph("4brick", [1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)], **kwargs)


def dp_optimum(H: ap.ConsolidatedGraph) -> float:
    """Test-local optimum over an expanded graph, children-first."""
    val = [0.0] * H.node_count
    for i in reversed(range(H.node_count)):
        actions, succs, weights = H.edges_of(i)
        if len(actions) == 0:
            val[i] = 0.0 if int(H.states[i]) == 0 else float("-inf")
        else:
            val[i] = max(w + val[int(s)] for w, s in zip(weights, succs))
    return val[0]


def replace_weight(H, state, action, weight):
    j = H.edge_id(state, action)
    assert j is not None
    weights = H.edge_weights.copy()
    weights[j] = weight
    return dataclasses.replace(H, edge_weights=weights)


def crafted_middle_penalty_graph():
    """4brick, -1 per removal but -5 for taking the middle connection while
    both neighbors are still attached."""
    H = ap.expand_consolidated(fourbrick(), COMPLETION)
    for state in (0b111,):
        H = replace_weight(H, state, 1, -5.0)
    return H


class TestValueIteration:
    def test_completion_root_value_and_total(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        table, traj = ap.value_iteration(H)
        assert table.values[H.root] == -3
        assert table.values[0] == 0
        assert traj.total == -3
        assert table.converged
        assert table.iterations_used <= H.width + 2

    def test_crafted_penalty_avoided(self):
        H = crafted_middle_penalty_graph()
        # Independent check: enumerate all 6 removal orders on the weights.
        def order_total(order):
            total, state = 0.0, 0b111
            for a in order:
                j = H.edge_id(state, a)
                total += float(H.edge_weights[j])
                state &= ~(1 << a)
            return total

        import itertools

        best = max(map(order_total, itertools.permutations(range(3))))
        assert best == -3.0
        table, traj = ap.value_iteration(H)
        assert traj.total == -3.0
        assert traj.disassembly_order[0] != 1

    def test_two_reward_assignments_two_paths(self):
        # 4-part, 4-connection ring; integer weights chosen so the optimal
        # route through the consolidated graph differs between assignments.
        ring = ap.assembly_graph("4piece", [1, 2, 3, 4], [(1, 2), (2, 3), (3, 4), (4, 1)])
        H = ap.expand_consolidated(ring, COMPLETION)
        variant_a = replace_weight(H, H.root, 0, -9.0)
        variant_b = replace_weight(H, H.root, 2, -9.0)
        _, traj_a = ap.value_iteration(variant_a)
        _, traj_b = ap.value_iteration(variant_b)
        assert traj_a.disassembly_order != traj_b.disassembly_order
        assert traj_a.total == dp_optimum(variant_a)
        assert traj_b.total == dp_optimum(variant_b)
        assert traj_a.disassembly_order[0] != 0
        assert traj_b.disassembly_order[0] != 2

    def test_value_table_bellman_consistency(self):
        g = ap.generate_preset("lattice")
        m = ap.RewardModel("cubesat_fuel")
        H = ap.expand_consolidated(g, m)
        table, _ = ap.value_iteration(H)
        vals = table.values.array
        for i in range(H.node_count):
            actions, succs, weights = H.edges_of(i)
            if len(actions):
                assert vals[i] == pytest.approx(
                    max(w + vals[int(s)] for w, s in zip(weights, succs)), abs=1e-12
                )
        assert vals[H.sink_index] == 0.0

    def test_dead_end_gets_minus_infinity_and_is_avoided(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        dead = 0b011
        edited = drop_edges(H, [(dead, 0), (dead, 1)])
        table, traj = ap.value_iteration(edited)
        assert table.values[dead] == float("-inf")
        assert traj.total == -3.0
        state = H.root
        for a in traj.disassembly_order:
            assert state != dead
            state = ap.apply_action(state, a)

    def test_sink_unreachable_is_infeasible(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        edited = drop_edges(H, [(0b001, 0), (0b010, 1), (0b100, 2)])
        with pytest.raises(InfeasibleError):
            ap.value_iteration(edited)

    def test_bad_epsilon(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        with pytest.raises(ValueError):
            ap.value_iteration(H, epsilon=0.0)


class TestDijkstra:
    def test_completion(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        assert ap.dijkstra_plan(H).total == -3.0

    def test_lattice_unit_times(self):
        g = with_attrs(ap.generate_preset("lattice"), time=1.0)
        H = ap.expand_consolidated(g, ap.RewardModel("min_time"))
        assert ap.dijkstra_plan(H).total == -12.0

    def test_positive_reward_names_edge(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        broken = replace_weight(H, 0b101, 2, 0.5)
        with pytest.raises(PositiveRewardError, match="5 -2->"):
            ap.dijkstra_plan(broken)

    def test_trajectory_is_valid_and_consistent(self):
        g = ap.generate_preset("2x3")
        m = ap.RewardModel("cubesat_fuel")
        H = ap.expand_consolidated(g, m)
        traj = ap.dijkstra_plan(H)
        assert ap.validate_sequence(g, traj.disassembly_order).valid
        assert ap.total_reward(m, g, traj) == pytest.approx(traj.total, abs=1e-12)


class TestBellmanFord:
    def test_completion_distances_by_level(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        dist = ap.bellman_ford_all(H)
        assert dist[H.root] == 0.0
        assert dist[0] == -3.0
        for s in map(int, H.states):
            assert dist[s] == -(3 - bin(s).count("1"))

    def test_lattice_unit_distance_is_depth(self):
        g = with_attrs(ap.generate_preset("lattice"), time=1.0)
        H = ap.expand_consolidated(g, ap.RewardModel("min_time"))
        dist = ap.bellman_ford_all(H)
        for s in map(int, H.states):
            assert dist[s] == -(12 - bin(s).count("1"))

    def test_sink_matches_dijkstra(self):
        g = ap.generate_preset("table")
        m = ap.RewardModel("cubesat_fuel")
        H = ap.expand_consolidated(g, m)
        assert ap.bellman_ford_all(H)[0] == pytest.approx(
            ap.dijkstra_plan(H).total, abs=1e-9
        )


class TestReplanBlocked:
    def test_uniform_block_one_root_edge(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        dist = ap.bellman_ford_all(H)
        traj = ap.replan_blocked(H, dist, [(H.root, 0)])
        assert traj.total == -3.0
        assert traj.disassembly_order[0] in (1, 2)

    def test_forced_expensive_first_action(self):
        H = crafted_middle_penalty_graph()
        dist = ap.bellman_ford_all(H)
        traj = ap.replan_blocked(H, dist, [(H.root, 0), (H.root, 2)])
        assert traj.disassembly_order[0] == 1
        assert traj.total == -7.0

    def test_block_nothing_matches_dijkstra(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        dist = ap.bellman_ford_all(H)
        assert (
            ap.replan_blocked(H, dist, []).disassembly_order
            == ap.dijkstra_plan(H).disassembly_order
        )

    def test_matches_from_scratch_on_edited_graph(self):
        g = ap.generate_preset("lattice")
        m = ap.RewardModel("cubesat_fuel")
        H = ap.expand_consolidated(g, m)
        dist = ap.bellman_ford_all(H)
        rng = random.Random(11)
        for _ in range(5):
            blocked = []
            while len(blocked) < 10:
                i = rng.randrange(H.node_count)
                actions, _, _ = H.edges_of(i)
                if len(actions) == 0:
                    continue
                pick = (int(H.states[i]), int(rng.choice(actions)))
                if pick not in blocked:
                    blocked.append(pick)
            try:
                repaired = ap.replan_blocked(H, dist, blocked)
            except InfeasibleError:
                with pytest.raises(InfeasibleError):
                    ap.dijkstra_plan(drop_edges(H, blocked))
                continue
            scratch = ap.dijkstra_plan(drop_edges(H, blocked))
            assert repaired.total == pytest.approx(scratch.total, abs=1e-9)
            report = ap.validate_sequence(g, repaired.disassembly_order)
            assert report.valid

    def test_all_paths_blocked_is_infeasible(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        dist = ap.bellman_ford_all(H)
        with pytest.raises(InfeasibleError):
            ap.replan_blocked(H, dist, [(H.root, a) for a in range(3)])

    def test_unknown_transition_rejected(self):
        H = ap.expand_consolidated(fourbrick(), COMPLETION)
        dist = ap.bellman_ford_all(H)
        with pytest.raises(ValueError, match="no transition"):
            ap.replan_blocked(H, dist, [(0b011, 2)])

    def test_distances_from_other_graph_rejected(self):
        H1 = ap.expand_consolidated(fourbrick(), COMPLETION)
        H2 = ap.expand_consolidated(fourbrick(), COMPLETION)
        dist = ap.bellman_ford_all(H1)
        with pytest.raises(ValueError, match="different graph"):
            ap.replan_blocked(H2, dist, [])


class TestOraspSearch:
    def test_4brick_completion(self):
        traj, stats = ap.orasp_search(fourbrick(), COMPLETION, 0)
        assert traj.total == -3.0
        assert stats.expanded <= 8

    def test_lattice_cubesat_matches_dijkstra(self):
        g = ap.generate_preset("lattice")
        m = ap.RewardModel("cubesat_fuel")
        traj, stats = ap.orasp_search(g, m, 0)
        H = ap.expand_consolidated(g, m)
        assert traj.total == pytest.approx(ap.dijkstra_plan(H).total, abs=1e-9)
        assert stats.expanded < 2**12

    def test_sound_on_random_integer_rewards(self):
        rng = random.Random(1234)
        for _ in range(40):
            n = rng.randint(4, 8)
            e = rng.randint(n - 1, min(10, n * (n - 1) // 2))
            g = ap.random_connected_structure(n, e, seed=rng.randrange(9999))
            conns = tuple(
                ap.Connection(c.index, c.a, c.b, {"time": float(rng.randint(0, 9))})
                for c in g.connections
            )
            g = ap.AssemblyGraph(g.name, g.parts, conns)
            if rng.random() < 0.4:
                g = with_constraints(g, ((0, e - 1),), ap.Upc(3, 2))
            m = ap.RewardModel("min_time")
            try:
                got = ap.orasp_search(g, m, rng.randrange(99))[0].total
            except InfeasibleError:
                with pytest.raises(InfeasibleError):
                    ap.brute_force_oracle(g, m)
                continue
            assert got == ap.brute_force_oracle(g, m).total  # integers: exact

    def test_progress_bound(self):
        rng = random.Random(77)
        for _ in range(10):
            g, m = random_instance(rng, max_edges=9)
            try:
                _, stats = ap.orasp_search(g, m, 5)
            except InfeasibleError:
                continue
            H = ap.expand_consolidated(g, m)
            assert stats.expanded <= H.node_count

    def test_seeded_rollout_dead_end_still_optimal(self, monkeypatch):
        g = ap.generate_preset("2x3")
        m = ap.RewardModel("min_time")
        monkeypatch.setattr(ap.planners, "random_rollout", lambda *a, **k: None)
        traj, _ = ap.orasp_search(g, m, 0)
        assert traj.total == pytest.approx(ap.brute_force_oracle(g, m).total, abs=1e-9)

    def test_positive_reward_aborts(self, monkeypatch):
        g = fourbrick()
        monkeypatch.setattr(
            ap.planners, "action_weight_table", lambda m, gr: [0.5, -1.0, -1.0]
        )
        with pytest.raises(PositiveRewardError):
            ap.orasp_search(g, ap.RewardModel("min_time"), 0)

    def test_infeasible(self):
        g = fourbrick(precedence=[(1, 0), (1, 2)], upc=(4, 1))
        with pytest.raises(InfeasibleError):
            ap.orasp_search(g, COMPLETION, 0)


class TestBruteForceOracle:
    def test_matches_plain_enumeration(self):
        rng = random.Random(5)
        for _ in range(15):
            n = rng.randint(3, 6)
            e = rng.randint(n - 1, min(5, n * (n - 1) // 2))
            g = ap.random_connected_structure(n, e, seed=rng.randrange(9999))
            m = ap.RewardModel(rng.choice(["min_time", "cubesat_fuel"]))
            assert ap.brute_force_oracle(g, m).total == pytest.approx(
                best_total_by_enumeration(g, m), abs=1e-12
            )

    def test_fig8_limits_to_three_orders(self):
        g = fourbrick(precedence=[(1, 0)])
        orders = enumerate_orders(g)
        assert sorted(orders) == [[1, 0, 2], [1, 2, 0], [2, 1, 0]]
        m = ap.RewardModel("cubesat_fuel")
        best = max(total_of_order(g, m, order) for order in orders)
        traj = ap.brute_force_oracle(g, m)
        assert traj.total == pytest.approx(best, abs=1e-12)
        assert traj.disassembly_order in orders

    def test_cap(self):
        g = ap.random_connected_structure(22, 21, seed=0)
        with pytest.raises(CapExceededError):
            ap.brute_force_oracle(g, ap.RewardModel("completion"))


class TestRandomRollout:
    def test_seeded_determinism(self):
        g = ap.generate_preset("lattice")
        m = ap.RewardModel("min_time")
        a = ap.random_rollout(g, m, 42)
        b = ap.random_rollout(g, m, 42)
        c = ap.random_rollout(g, m, 43)
        assert a.disassembly_order == b.disassembly_order
        assert a.disassembly_order != c.disassembly_order

    def test_completion_total(self):
        for seed in range(5):
            assert ap.random_rollout(fourbrick(), COMPLETION, seed).total == -3.0

    def test_dead_end_reports_none(self):
        g = fourbrick(precedence=[(1, 0), (1, 2)], upc=(4, 1))
        assert ap.random_rollout(g, COMPLETION, 0) is None

    def test_rollouts_never_beat_optimum(self):
        g = ap.generate_preset("lattice")
        m = ap.RewardModel("cubesat_fuel")
        best = ap.orasp_search(g, m, 0)[0].total
        for seed in range(50):
            assert ap.random_rollout(g, m, seed).total <= best + 1e-9


class TestReverseToAssembly:
    def test_examples(self):
        g = fourbrick()
        traj = ap.brute_force_oracle(g, COMPLETION)
        assert ap.reverse_to_assembly(traj) == traj.disassembly_order[::-1]
        solo = ap.assembly_graph("solo", [1], [])
        empty = ap.brute_force_oracle(solo, COMPLETION)
        assert ap.reverse_to_assembly(empty) == []

    def test_forward_reconstruction_reaches_full_state(self):
        rng = random.Random(3)
        for _ in range(10):
            g, m = random_instance(rng, max_edges=9)
            try:
                traj, _ = ap.orasp_search(g, m, 1)
            except InfeasibleError:
                continue
            state = 0
            for a in ap.reverse_to_assembly(traj):
                assert not (state >> a) & 1
                state |= 1 << a
            assert state == g.full_state


class TestPlannerAgreementSmall:
    def test_agreement_with_mixed_constraints(self):
        rng = random.Random(2024)
        for _ in range(25):
            g, m = random_instance(rng, max_edges=10)
            results = {}
            H = ap.expand_consolidated(g, m)
            for name, run in {
                "vi": lambda: ap.value_iteration(H)[1].total,
                "dijkstra": lambda: ap.dijkstra_plan(H).total,
                "bellman": lambda: ap.bellman_ford_all(H)[0],
                "orasp": lambda: ap.orasp_search(g, m, 7)[0].total,
                "oracle": lambda: ap.brute_force_oracle(g, m).total,
            }.items():
                try:
                    results[name] = run()
                except InfeasibleError:
                    results[name] = "infeasible"
            reference = results["oracle"]
            for name, value in results.items():
                if reference == "infeasible":
                    assert value == "infeasible", (name, results)
                else:
                    assert value == pytest.approx(reference, abs=1e-9), (name, results)
