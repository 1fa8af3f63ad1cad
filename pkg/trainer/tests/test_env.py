import json
import random

import pytest

from dqn_trainer import ConformanceError, load_env

from conftest import export_spec, planner_cli


class TestConformance:
    def test_exported_specs_replay(self, tmp_path):
        for preset, upc in [("4brick", None), ("2x3", (3, 2)), ("lattice", (4, 3))]:
            spec = export_spec(tmp_path, preset, upc=upc)
            env = load_env(spec)
            assert env.full_state == (1 << env.n_actions) - 1

    def test_reward_drift_refused(self, fourbrick_spec, tmp_path):
        doc = json.loads(open(fourbrick_spec).read())
        doc["conformance"][3]["reward"] = -123.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ConformanceError, match="reward"):
            load_env(bad)

    def test_transition_drift_refused(self, fourbrick_spec, tmp_path):
        doc = json.loads(open(fourbrick_spec).read())
        doc["conformance"][0]["done"] = not doc["conformance"][0]["done"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        with pytest.raises(ConformanceError, match="next/done"):
            load_env(bad)


class TestEnvSemantics:
    def test_mask_matches_recorded_transitions(self, tmp_path):
        spec_path = export_spec(tmp_path, "lattice", upc=(3, 2))
        env = load_env(spec_path)
        doc = json.loads(open(spec_path).read())
        for triple in doc["conformance"]:
            state = int(triple["state"], 16)
            assert env.mask(state)[triple["action"]]

    def test_masked_step_rejected(self, fourbrick_spec):
        env = load_env(fourbrick_spec)
        state = env.full_state & ~1  # connection 0 already removed
        with pytest.raises(ValueError, match="masked"):
            env.step(state, 0)

    def test_episode_reaches_empty_state(self, fourbrick_spec):
        env = load_env(fourbrick_spec)
        state = env.full_state
        seen = 0
        while state != 0:
            valid = env.valid_actions(state)
            state, _, done = env.step(state, valid[0])
            seen += 1
        assert done and seen == env.n_actions

    def test_reset_levels(self, fourbrick_spec):
        env = load_env(fourbrick_spec)
        rng = random.Random(0)
        assert env.reset(env.n_actions, rng) == env.full_state
        for _ in range(10):
            state = env.reset(1, rng)
            assert bin(state).count("1") == 1

    def test_curriculum_and_epsilon_schedules(self, fourbrick_spec):
        env = load_env(fourbrick_spec)
        assert env.curriculum_level(0) == 2
        assert env.curriculum_level(10_000) == env.n_actions
        assert env.epsilon_at(0) == 1.0
        assert env.epsilon_at(10_000) == pytest.approx(0.05)


class TestRolloutDistribution:
    def test_full_exploration_matches_planner_baseline(self, tmp_path):
        """With epsilon=1 the walk law is uniform-over-valid: aligning the RNG
        stream with the planner's baseline sampler reproduces its totals."""
        spec_path = export_spec(tmp_path, "lattice", upc=None)
        env = load_env(spec_path)
        csv_path = tmp_path / "base.csv"
        planner_cli(
            "baseline", "--preset", "lattice", "--reward", "cubesat_fuel",
            "--samples", "5", "--seed", "7", "--out", str(csv_path),
        )
        rows = csv_path.read_text().strip().splitlines()[1:]
        for i, row in enumerate(rows):
            expected = float(row.split(",")[1])
            walk = env.random_rollout(random.Random(f"7:{i}"))
            assert walk is not None
            assert walk[1] == pytest.approx(expected, abs=1e-9)
