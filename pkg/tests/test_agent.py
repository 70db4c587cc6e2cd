"""Exploration schedule, action selection, training loop, evaluation, curriculum."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dronetrack.agent import (
    LAYER_SIZES,
    METRICS_COLUMNS,
    EvalResult,
    ExplorationParams,
    TrainConfig,
    curriculum_finetune,
    evaluate,
    evaluate_policy,
    exploration_probability,
    format_metrics_row,
    greedy_policy,
    learning_rate,
    random_policy,
    select_action,
    train,
    write_metrics_csv,
)
from dronetrack.agent import EpisodeMetrics
from dronetrack.environment import Action, EnvConfig, Heading, WorldState, generate_environment
from dronetrack.qnet import QNetwork, load_checkpoint
from dronetrack.reward import RewardParams

PARAMS = RewardParams()
EXPLORE = ExplorationParams()


def tiny_train_config(**overrides) -> TrainConfig:
    base = dict(
        episodes=3, lr_initial=1e-3, lr_final=1e-5, gamma=0.1,
        batch_size=4, target_sync=10, warmup=8, replay_capacity=200,
        checkpoint_every=2, seed=0,
    )
    base.update(overrides)
    return TrainConfig(**base)


def hover_state(x: float = 40.0, y: float = 40.0) -> WorldState:
    return WorldState(
        uav_x=x, uav_y=y, level=0, uav_z=5.0,
        target_x=x, target_y=y, heading=Heading.EAST,
        t=0, t_nv=0, last_seen_x=x, last_seen_y=y,
        visible=True, done=False,
    )


class TestExplorationProbability:
    def test_starts_at_exactly_one(self):
        assert exploration_probability(0, EXPLORE) == 1.0

    @given(p_sat=st.floats(min_value=0.01, max_value=0.99),
           alpha=st.floats(min_value=0.01, max_value=5.0))
    def test_starts_at_exactly_one_for_any_parameters(self, p_sat, alpha):
        params = ExplorationParams(p_sat=p_sat, alpha=alpha)
        assert exploration_probability(0, params) == 1.0

    def test_saturates_at_floor(self):
        assert exploration_probability(10_000, EXPLORE) == pytest.approx(0.2, abs=1e-6)

    def test_frozen_mid_schedule_value(self):
        # 0.8 * exp(-1) + 0.2 for the defaults at episode 10.
        assert exploration_probability(10, EXPLORE) == pytest.approx(
            0.49430355293715386, abs=1e-12
        )

    @given(k=st.integers(min_value=0, max_value=10_000))
    def test_bounded_and_above_floor(self, k):
        eps = exploration_probability(k, EXPLORE)
        assert EXPLORE.p_sat <= eps <= 1.0

    @given(k=st.integers(min_value=0, max_value=5_000))
    def test_monotone_nonincreasing(self, k):
        assert exploration_probability(k + 1, EXPLORE) <= exploration_probability(k, EXPLORE)


class TestLearningRate:
    CONFIG = TrainConfig()

    def test_starts_at_initial(self):
        assert learning_rate(0, self.CONFIG) == 0.01

    def test_halves_every_500_episodes(self):
        assert learning_rate(500, self.CONFIG) == pytest.approx(0.005, rel=1e-9)
        assert learning_rate(1000, self.CONFIG) == pytest.approx(0.0025, rel=1e-9)

    def test_floor(self):
        assert learning_rate(10_000_000, self.CONFIG) == self.CONFIG.lr_final

    @given(k=st.integers(min_value=0, max_value=20_000))
    def test_monotone_and_bounded(self, k):
        lr_now = learning_rate(k, self.CONFIG)
        assert learning_rate(k + 1, self.CONFIG) <= lr_now
        assert self.CONFIG.lr_final <= lr_now <= self.CONFIG.lr_initial


class TestSelectAction:
    Q = np.array([5.0, 1.0, 0.0, -1.0, 2.0, 3.0])

    def test_pure_greedy_when_exploration_off(self):
        params = ExplorationParams(p_sat=0.0, alpha=100.0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            assert select_action(self.Q, 10, 0, params, rng) == Action.NORTH

    def test_greedy_ties_go_to_lowest_index(self):
        params = ExplorationParams(p_sat=0.0, alpha=100.0)
        rng = np.random.default_rng(0)
        q = np.array([0.0, 7.0, 7.0, 7.0, 0.0, 0.0])
        assert select_action(q, 10, 0, params, rng) == Action.SOUTH

    def test_saturated_epsilon_frequency(self):
        # At large k epsilon is p_sat = 0.2; the argmax action should win
        # with frequency 0.8 + 0.2 / 6.
        rng = np.random.default_rng(7)
        n = 20_000
        hits = sum(
            select_action(self.Q, 200, 0, EXPLORE, rng) == Action.NORTH for _ in range(n)
        )
        assert hits / n == pytest.approx(0.8 + 0.2 / 6, abs=0.01)

    def test_search_override_frequency(self):
        # Once the target has been lost long enough the schedule is replaced:
        # random with probability p_ss. Estimate p_ss from the rate of
        # non-argmax actions (each has probability p_ss / 6).
        rng = np.random.default_rng(11)
        n = 20_000
        non_greedy = sum(
            select_action(self.Q, 200, EXPLORE.t_nv_threshold, EXPLORE, rng) != Action.NORTH
            for _ in range(n)
        )
        assert (non_greedy / n) * 6 / 5 == pytest.approx(EXPLORE.p_ss, abs=0.02)

    def test_override_ignores_episode_index(self):
        # Same behavior at episode 0 and episode 10^6 once the counter trips.
        rng = np.random.default_rng(13)
        n = 20_000
        non_greedy = sum(
            select_action(self.Q, 0, 99, EXPLORE, rng) != Action.NORTH for _ in range(n)
        )
        assert (non_greedy / n) * 6 / 5 == pytest.approx(EXPLORE.p_ss, abs=0.02)

    def test_below_threshold_keeps_schedule(self):
        # t_nv one short of the trigger: episode 0 means epsilon = 1, i.e.
        # uniformly random actions.
        rng = np.random.default_rng(17)
        counts = np.zeros(len(Action))
        n = 6_000
        for _ in range(n):
            counts[select_action(self.Q, 0, EXPLORE.t_nv_threshold - 1, EXPLORE, rng)] += 1
        assert np.all(counts > 0)
        np.testing.assert_allclose(counts / n, 1 / 6, atol=0.03)


class TestTrain:
    ENV = generate_environment(0, seed=0, t_max=15)

    def test_smoke_and_metrics_shape(self):
        result = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS)
        assert result.episodes == 3
        assert len(result.metrics) == 3
        for k, row in enumerate(result.metrics):
            assert row.episode == k
            assert row.steps == 15
            assert row.epsilon == exploration_probability(k, EXPLORE)
            assert row.lr == learning_rate(k, tiny_train_config())
            assert row.cumulative_reward == pytest.approx(row.mean_step_reward * row.steps)

    def test_deterministic_given_seed(self):
        a = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS)
        b = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS)
        for wa, wb in zip(a.net.weights, b.net.weights):
            assert np.array_equal(wa, wb)
        assert a.metrics == b.metrics

    def test_seed_changes_outcome(self):
        a = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS)
        b = train(self.ENV, tiny_train_config(seed=1), EXPLORE, PARAMS)
        assert any(not np.array_equal(wa, wb) for wa, wb in zip(a.net.weights, b.net.weights))

    def test_zero_lr_keeps_initial_parameters(self):
        seed_net = QNetwork.create(LAYER_SIZES, np.random.default_rng(42))
        config = tiny_train_config(lr_initial=0.0, lr_final=0.0)
        result = train(self.ENV, config, EXPLORE, PARAMS, initial_net=seed_net)
        for w0, w1 in zip(seed_net.weights, result.net.weights):
            assert np.array_equal(w0, w1)

    def test_initial_net_not_mutated(self):
        seed_net = QNetwork.create(LAYER_SIZES, np.random.default_rng(42))
        frozen = [w.copy() for w in seed_net.weights]
        train(self.ENV, tiny_train_config(), EXPLORE, PARAMS, initial_net=seed_net)
        for w0, w1 in zip(frozen, seed_net.weights):
            assert np.array_equal(w0, w1)

    def test_metrics_csv_written_and_reproducible(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        train(self.ENV, tiny_train_config(), EXPLORE, PARAMS, metrics_path=p1)
        train(self.ENV, tiny_train_config(), EXPLORE, PARAMS, metrics_path=p2)
        body = p1.read_bytes()
        assert body == p2.read_bytes()
        lines = body.decode().splitlines()
        assert lines[0] == ",".join(METRICS_COLUMNS)
        assert len(lines) == 4

    def test_checkpoints_written(self, tmp_path):
        result = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS,
                       checkpoint_dir=tmp_path)
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["checkpoint_ep000002.json", "checkpoint_final.json"]
        final = load_checkpoint(tmp_path / "checkpoint_final.json")
        for w, lw in zip(result.net.weights, final.net.weights):
            assert np.array_equal(w, lw)
        assert final.episode == 3
        assert final.rng_state is not None and "action" in final.rng_state

    def test_learning_actually_updates_parameters(self):
        seed_net = QNetwork.create(LAYER_SIZES, np.random.default_rng(42))
        result = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS, initial_net=seed_net)
        assert any(
            not np.array_equal(w0, w1)
            for w0, w1 in zip(seed_net.weights, result.net.weights)
        )


class TestMetricsFormat:
    ROW = EpisodeMetrics(
        episode=3, steps=500, visible_steps=123,
        mean_distance=12.25, mean_distance_3d=15.5,
        mean_step_reward=-0.1, cumulative_reward=-50.0,
        collided=False, epsilon=0.2, lr=0.0025,
    )

    def test_frozen_row(self):
        assert format_metrics_row(self.ROW) == (
            "3,500,123,12.25,15.5,-0.1,-50.0,false,0.2,0.0025"
        )

    def test_floats_round_trip(self):
        fields = format_metrics_row(self.ROW).split(",")
        assert float(fields[3]) == self.ROW.mean_distance
        assert float(fields[8]) == self.ROW.epsilon

    def test_writer_helper(self, tmp_path):
        path = tmp_path / "m.csv"
        write_metrics_csv(path, [self.ROW])
        lines = path.read_text().splitlines()
        assert lines == [
            ",".join(METRICS_COLUMNS),
            "3,500,123,12.25,15.5,-0.1,-50.0,false,0.2,0.0025",
        ]


class TestEvaluate:
    def test_hovering_over_static_target_has_closed_form(self):
        # A target with zero speed under a UAV that only presses DOWN at the
        # bottom level never moves, so every one of the t_max steps pays
        # r_v_c / dist_epsilon + h_v_c / h_min = 6000 + 300.
        config = EnvConfig(obstacles=[], target_speed=0.0, t_max=30)
        policy = lambda obs, state: Action.DOWN
        result = evaluate_policy(
            policy, config, PARAMS, episodes=2, seed=5, initial_state=hover_state(),
        )
        assert result.avg_distance == 0.0
        assert result.avg_time == 30.0
        assert result.avg_reward == pytest.approx(6300.0, abs=1e-9)

    def test_paired_target_walks_across_policies(self):
        # Same evaluation seed, two different policies: per-episode target
        # trajectories must be identical because the walk never consults the
        # UAV.
        config = generate_environment(0, seed=1, t_max=40)
        recs_a: list[list[dict]] = []
        recs_b: list[list[dict]] = []
        net = QNetwork.create(LAYER_SIZES, np.random.default_rng(0))
        evaluate(net, config, PARAMS, episodes=3, seed=9, trajectory_records=recs_a)
        evaluate_policy(random_policy(np.random.default_rng(4)), config, PARAMS,
                        episodes=3, seed=9, trajectory_records=recs_b)
        for ep_a, ep_b in zip(recs_a, recs_b):
            for ra, rb in zip(ep_a, ep_b):
                assert ra["target_x"] == rb["target_x"]
                assert ra["target_y"] == rb["target_y"]

    def test_repeat_evaluation_identical(self):
        config = generate_environment(3, seed=2, t_max=60)
        net = QNetwork.create(LAYER_SIZES, np.random.default_rng(1))
        a = evaluate(net, config, PARAMS, episodes=4, seed=3)
        b = evaluate(net, config, PARAMS, episodes=4, seed=3)
        assert a == b

    def test_evaluation_never_touches_parameters(self):
        config = generate_environment(2, seed=4, t_max=30)
        net = QNetwork.create(LAYER_SIZES, np.random.default_rng(2))
        frozen = [w.copy() for w in net.weights]
        evaluate(net, config, PARAMS, episodes=2, seed=0)
        for w0, w1 in zip(frozen, net.weights):
            assert np.array_equal(w0, w1)

    def test_trajectory_record_schema(self):
        config = generate_environment(2, seed=4, t_max=10)
        recs: list[list[dict]] = []
        net = QNetwork.create(LAYER_SIZES, np.random.default_rng(2))
        evaluate(net, config, PARAMS, episodes=2, seed=0, trajectory_records=recs)
        assert len(recs) == 2
        expected_keys = {
            "t", "uav_x", "uav_y", "uav_z", "target_x", "target_y",
            "action", "reward", "branch", "visible", "occluded_by", "done",
        }
        for episode in recs:
            assert episode, "episode should have at least one step"
            for i, record in enumerate(episode):
                assert set(record) == expected_keys
                assert record["t"] == i + 1
            assert episode[-1]["done"] is True

    def test_wrong_network_shape_rejected(self):
        config = generate_environment(0, seed=0)
        with pytest.raises(ValueError, match="observations"):
            evaluate(QNetwork.create((5, 8, 6), np.random.default_rng(0)),
                     config, PARAMS, episodes=1, seed=0)
        with pytest.raises(ValueError, match="actions"):
            evaluate(QNetwork.create((7, 8, 4), np.random.default_rng(0)),
                     config, PARAMS, episodes=1, seed=0)

    def test_zero_episodes_rejected(self):
        config = generate_environment(0, seed=0)
        net = QNetwork.create(LAYER_SIZES, np.random.default_rng(0))
        with pytest.raises(ValueError):
            evaluate(net, config, PARAMS, episodes=0, seed=0)

    def test_eval_result_as_dict(self):
        r = EvalResult(avg_distance=1.0, avg_time=2.0, avg_reward=3.0)
        assert r.as_dict() == {"avg_distance": 1.0, "avg_time": 2.0, "avg_reward": 3.0}


class TestCurriculum:
    ENV = generate_environment(0, seed=0, t_max=15)

    def make_checkpoint(self):
        result = train(self.ENV, tiny_train_config(), EXPLORE, PARAMS)
        return result.checkpoint()

    def test_finetune_runs_and_resumes_lr(self):
        ckpt = self.make_checkpoint()
        fine = curriculum_finetune(
            ckpt, generate_environment(2, seed=9, t_max=15),
            tiny_train_config(episodes=2), EXPLORE, PARAMS,
        )
        assert len(fine.metrics) == 2
        # Resumed schedule starts from the checkpoint's rate, not lr_initial.
        assert fine.metrics[0].lr == ckpt.lr

    def test_fresh_lr_schedule(self):
        ckpt = self.make_checkpoint()
        config = tiny_train_config(episodes=2, lr_initial=0.123)
        fine = curriculum_finetune(
            ckpt, self.ENV, config, EXPLORE, PARAMS, resume_lr=False,
        )
        assert fine.metrics[0].lr == 0.123

    def test_finetune_starts_from_checkpoint_parameters(self):
        ckpt = self.make_checkpoint()
        config = tiny_train_config(episodes=1, lr_initial=0.0, lr_final=0.0)
        fine = curriculum_finetune(ckpt, self.ENV, config, EXPLORE, PARAMS,
                                   resume_lr=False)
        for w0, w1 in zip(ckpt.net.weights, fine.net.weights):
            assert np.array_equal(w0, w1)

    def test_schema_mismatch_rejected(self):
        ckpt = self.make_checkpoint()
        bad = QNetwork.create((6, 8, 6), np.random.default_rng(0))
        ckpt.net = bad
        with pytest.raises(ValueError):
            curriculum_finetune(ckpt, self.ENV, tiny_train_config(episodes=1),
                                EXPLORE, PARAMS)
