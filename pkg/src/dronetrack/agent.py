"""Training, evaluation and curriculum fine-tuning for the tracking policy.

Exploration has two regimes. Normally the agent is epsilon-greedy with an
exponentially decaying epsilon that saturates at a floor probability. Once
the target has been out of sight for a configured number of steps, a search
override kicks in instead: with high probability the action is drawn
uniformly at random, which sweeps the arena until the target is reacquired.

Evaluation is strictly greedy (no epsilon, no search override) and never
touches network parameters. Per-episode seeds are derived from the
evaluation seed alone, so two policies evaluated with the same seed face
identical spawns and target walks, which makes metric comparisons paired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .environment import (
    OBS_DIM,
    Action,
    EnvConfig,
    WorldState,
    observe,
    reset,
    step,
)
from .qnet import (
    Checkpoint,
    Experience,
    QNetwork,
    ReplayBuffer,
    clip_gradients,
    gradient,
    save_checkpoint,
    sgd_step,
    sync_target,
)
from .reward import RewardParams

LAYER_SIZES = (OBS_DIM, 128, 128, len(Action))

METRICS_COLUMNS = (
    "episode",
    "steps",
    "visible_steps",
    "mean_distance",
    "mean_distance_3d",
    "mean_step_reward",
    "cumulative_reward",
    "collided",
    "epsilon",
    "lr",
)


@dataclass
class ExplorationParams:
    """Schedule constants; the saturation floor keeps late exploration alive."""

    p_sat: float = 0.2
    alpha: float = 0.1
    p_ss: float = 0.9
    t_nv_threshold: int = 5


@dataclass
class TrainConfig:
    episodes: int = 2000
    lr_initial: float = 0.01
    lr_final: float = 1e-4
    # Per-episode multiplicative factor; default halves the rate every 500 episodes.
    lr_decay: float = 0.5 ** (1.0 / 500.0)
    gamma: float = 0.1
    batch_size: int = 64
    target_sync: int = 500
    warmup: int = 1000
    replay_capacity: int = 50_000
    # Global-norm bound on each update; None disables clipping.
    grad_clip_norm: float | None = 10.0
    checkpoint_every: int = 500
    terminate_on_collision: bool = True
    seed: int = 0


@dataclass
class EpisodeMetrics:
    episode: int
    steps: int
    visible_steps: int
    mean_distance: float
    mean_distance_3d: float
    mean_step_reward: float
    cumulative_reward: float
    collided: bool
    epsilon: float
    lr: float


@dataclass
class EvalResult:
    """The three summary metrics: mean ground distance over all steps, mean
    visible steps per episode, mean per-step reward averaged over episodes."""

    avg_distance: float
    avg_time: float
    avg_reward: float

    def as_dict(self) -> dict[str, float]:
        return {
            "avg_distance": self.avg_distance,
            "avg_time": self.avg_time,
            "avg_reward": self.avg_reward,
        }


@dataclass
class TrainResult:
    net: QNetwork
    target_net: QNetwork
    metrics: list[EpisodeMetrics]
    lr_last: float
    episodes: int

    def checkpoint(self, rng_state: dict | None = None) -> Checkpoint:
        return Checkpoint(
            net=self.net,
            target_net=self.target_net,
            lr=self.lr_last,
            episode=self.episodes,
            rng_state=rng_state,
        )


def exploration_probability(k: int, params: ExplorationParams) -> float:
    """Epsilon for episode ``k``: exponential decay onto the ``p_sat`` floor."""
    return (1.0 - params.p_sat) * math.exp(-params.alpha * k) + params.p_sat


def select_action(
    q_values: np.ndarray,
    k: int,
    t_nv: int,
    params: ExplorationParams,
    rng: np.random.Generator,
) -> Action:
    """Pick an action during training.

    With the target lost for at least ``t_nv_threshold`` steps the search
    override replaces the epsilon schedule entirely: random with probability
    ``p_ss``, greedy otherwise. Ties in the greedy arm go to the lowest
    action index.
    """
    if t_nv >= params.t_nv_threshold:
        p_random = params.p_ss
    else:
        p_random = exploration_probability(k, params)
    if rng.random() < p_random:
        return Action(int(rng.integers(len(Action))))
    return Action(int(np.argmax(q_values)))


def learning_rate(k: int, config: TrainConfig) -> float:
    """Learning rate for episode ``k``: multiplicative decay with a floor."""
    return max(config.lr_final, config.lr_initial * config.lr_decay**k)


# --- episode rollout ---------------------------------------------------------

# (observation, state) -> action; policies may ignore either argument.
PolicyFn = Callable[[np.ndarray, WorldState], Action]


def greedy_policy(net: QNetwork) -> PolicyFn:
    def policy(obs: np.ndarray, state: WorldState) -> Action:
        return Action(int(np.argmax(net.forward(obs))))

    return policy


def random_policy(rng: np.random.Generator) -> PolicyFn:
    def policy(obs: np.ndarray, state: WorldState) -> Action:
        return Action(int(rng.integers(len(Action))))

    return policy


@dataclass
class _EpisodeTotals:
    steps: int = 0
    visible_steps: int = 0
    sum_distance: float = 0.0
    sum_distance_3d: float = 0.0
    sum_reward: float = 0.0
    collided: bool = False


def _run_episode(
    policy: PolicyFn,
    env_config: EnvConfig,
    reward_params: RewardParams,
    env_rng: np.random.Generator,
    *,
    terminate_on_collision: bool = True,
    initial_state: WorldState | None = None,
    records: list[dict] | None = None,
) -> _EpisodeTotals:
    state = reset(env_config, env_rng) if initial_state is None else initial_state
    totals = _EpisodeTotals()
    while not state.done:
        obs = observe(state, env_config)
        action = policy(obs, state)
        outcome = step(
            state,
            action,
            env_config,
            reward_params,
            env_rng,
            terminate_on_collision=terminate_on_collision,
        )
        totals.steps += 1
        totals.visible_steps += int(outcome.info.visible)
        totals.sum_distance += outcome.info.distance
        totals.sum_distance_3d += outcome.info.distance_3d
        totals.sum_reward += outcome.reward
        totals.collided = totals.collided or outcome.info.collided
        if records is not None:
            records.append(
                trajectory_record(outcome, state_after=outcome.state, action=action)
            )
        state = outcome.state
    return totals


def trajectory_record(outcome, state_after: WorldState, action: Action) -> dict:
    """One line of the trajectory log, as a JSON-serializable dict."""
    return {
        "t": state_after.t,
        "uav_x": state_after.uav_x,
        "uav_y": state_after.uav_y,
        "uav_z": state_after.uav_z,
        "target_x": state_after.target_x,
        "target_y": state_after.target_y,
        "action": action.name.lower(),
        "reward": outcome.reward,
        "branch": outcome.info.branch.value,
        "visible": outcome.info.visible,
        "occluded_by": outcome.info.occluded_by,
        "done": outcome.done,
    }


# --- training ----------------------------------------------------------------


def train(
    env_config: EnvConfig,
    train_config: TrainConfig,
    exploration: ExplorationParams,
    reward_params: RewardParams,
    *,
    initial_net: QNetwork | None = None,
    initial_target: QNetwork | None = None,
    lr_override: float | None = None,
    metrics_path: str | Path | None = None,
    checkpoint_dir: str | Path | None = None,
) -> TrainResult:
    """Run the full training loop and return the trained networks plus metrics.

    One environment step produces one stored transition and, once the buffer
    holds ``warmup`` transitions, one gradient step; the frozen network syncs
    every ``target_sync`` gradient steps. Metrics are appended to
    ``metrics_path`` (CSV) as episodes finish, and checkpoints land in
    ``checkpoint_dir`` every ``checkpoint_every`` episodes plus a final one.
    """
    root = np.random.SeedSequence(train_config.seed)
    net_ss, action_ss, replay_ss, env_ss = root.spawn(4)
    action_rng = np.random.default_rng(action_ss)
    replay_rng = np.random.default_rng(replay_ss)

    if initial_net is None:
        net = QNetwork.create(LAYER_SIZES, np.random.default_rng(net_ss))
    else:
        net = initial_net.copy()
    target_net = initial_target.copy() if initial_target is not None else net.copy()
    lr_initial = train_config.lr_initial if lr_override is None else lr_override

    buffer = ReplayBuffer(train_config.replay_capacity, net.input_dim)
    metrics: list[EpisodeMetrics] = []
    grad_steps = 0
    lr = lr_initial

    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    writer = _MetricsWriter(metrics_path) if metrics_path is not None else None
    try:
        for k in range(train_config.episodes):
            env_rng = np.random.default_rng(env_ss.spawn(1)[0])
            epsilon = exploration_probability(k, exploration)
            lr = max(train_config.lr_final, lr_initial * train_config.lr_decay**k)

            state = reset(env_config, env_rng)
            totals = _EpisodeTotals()
            obs = observe(state, env_config)
            while not state.done:
                q_values = net.forward(obs)
                action = select_action(q_values, k, state.t_nv, exploration, action_rng)
                outcome = step(
                    state,
                    action,
                    env_config,
                    reward_params,
                    env_rng,
                    terminate_on_collision=train_config.terminate_on_collision,
                )
                next_obs = observe(outcome.state, env_config)
                buffer.push(
                    Experience(obs, int(action), outcome.reward, next_obs, outcome.done)
                )

                totals.steps += 1
                totals.visible_steps += int(outcome.info.visible)
                totals.sum_distance += outcome.info.distance
                totals.sum_distance_3d += outcome.info.distance_3d
                totals.sum_reward += outcome.reward
                totals.collided = totals.collided or outcome.info.collided

                if len(buffer) >= train_config.warmup:
                    batch = buffer.sample(train_config.batch_size, replay_rng)
                    grads = gradient(net, target_net, batch, train_config.gamma)
                    if train_config.grad_clip_norm is not None:
                        clip_gradients(grads, train_config.grad_clip_norm)
                    sgd_step(net, grads, lr)
                    grad_steps += 1
                    if grad_steps % train_config.target_sync == 0:
                        sync_target(net, target_net)

                state = outcome.state
                obs = next_obs

            row = EpisodeMetrics(
                episode=k,
                steps=totals.steps,
                visible_steps=totals.visible_steps,
                mean_distance=totals.sum_distance / totals.steps,
                mean_distance_3d=totals.sum_distance_3d / totals.steps,
                mean_step_reward=totals.sum_reward / totals.steps,
                cumulative_reward=totals.sum_reward,
                collided=totals.collided,
                epsilon=epsilon,
                lr=lr,
            )
            metrics.append(row)
            if writer is not None:
                writer.append(row)
            if checkpoint_dir is not None and (k + 1) % train_config.checkpoint_every == 0:
                save_checkpoint(
                    checkpoint_dir / f"checkpoint_ep{k + 1:06d}.json",
                    Checkpoint(net, target_net, lr, k + 1, _rng_states(action_rng, replay_rng)),
                )
    finally:
        if writer is not None:
            writer.close()

    result = TrainResult(net, target_net, metrics, lr, train_config.episodes)
    if checkpoint_dir is not None:
        save_checkpoint(
            checkpoint_dir / "checkpoint_final.json",
            result.checkpoint(_rng_states(action_rng, replay_rng)),
        )
    return result


def _rng_states(action_rng: np.random.Generator, replay_rng: np.random.Generator) -> dict:
    return {
        "action": action_rng.bit_generator.state,
        "replay": replay_rng.bit_generator.state,
    }


class _MetricsWriter:
    """Appends metric rows to a CSV file as they arrive.

    Floats are written with ``repr`` (shortest round-trip form), so a rerun
    with the same seed produces a byte-identical file.
    """

    def __init__(self, path: str | Path):
        self._fh = open(path, "w", newline="\n")
        self._fh.write(",".join(METRICS_COLUMNS) + "\n")

    def append(self, row: EpisodeMetrics) -> None:
        self._fh.write(format_metrics_row(row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def format_metrics_row(row: EpisodeMetrics) -> str:
    return ",".join(
        [
            str(row.episode),
            str(row.steps),
            str(row.visible_steps),
            repr(row.mean_distance),
            repr(row.mean_distance_3d),
            repr(row.mean_step_reward),
            repr(row.cumulative_reward),
            "true" if row.collided else "false",
            repr(row.epsilon),
            repr(row.lr),
        ]
    )


def write_metrics_csv(path: str | Path, rows: Iterable[EpisodeMetrics]) -> None:
    writer = _MetricsWriter(path)
    try:
        for row in rows:
            writer.append(row)
    finally:
        writer.close()


# --- evaluation ----------------------------------------------------------------


def evaluate_policy(
    policy: PolicyFn,
    env_config: EnvConfig,
    reward_params: RewardParams,
    episodes: int,
    seed: int,
    *,
    terminate_on_collision: bool = True,
    trajectory_records: list[list[dict]] | None = None,
    initial_state: WorldState | None = None,
) -> EvalResult:
    """Roll out a fixed policy and summarize the three tracking metrics.

    Per-episode RNG streams depend only on ``seed`` and the episode index,
    never on the policy, so calls with different policies are paired.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    root = np.random.SeedSequence(seed)
    total_steps = 0
    total_distance = 0.0
    visible_per_episode = []
    reward_per_episode = []
    for ep_ss in root.spawn(episodes):
        env_rng = np.random.default_rng(ep_ss)
        records: list[dict] | None = None
        if trajectory_records is not None:
            records = []
            trajectory_records.append(records)
        totals = _run_episode(
            policy,
            env_config,
            reward_params,
            env_rng,
            terminate_on_collision=terminate_on_collision,
            initial_state=initial_state,
            records=records,
        )
        total_steps += totals.steps
        total_distance += totals.sum_distance
        visible_per_episode.append(totals.visible_steps)
        reward_per_episode.append(totals.sum_reward / totals.steps)
    return EvalResult(
        avg_distance=total_distance / total_steps,
        avg_time=float(np.mean(visible_per_episode)),
        avg_reward=float(np.mean(reward_per_episode)),
    )


def evaluate(
    net: QNetwork,
    env_config: EnvConfig,
    reward_params: RewardParams,
    episodes: int,
    seed: int,
    *,
    terminate_on_collision: bool = True,
    trajectory_records: list[list[dict]] | None = None,
) -> EvalResult:
    """Greedy evaluation of a trained network; parameters are left untouched."""
    _check_schema(net)
    return evaluate_policy(
        greedy_policy(net),
        env_config,
        reward_params,
        episodes,
        seed,
        terminate_on_collision=terminate_on_collision,
        trajectory_records=trajectory_records,
    )


def _check_schema(net: QNetwork) -> None:
    if net.input_dim != OBS_DIM:
        raise ValueError(
            f"checkpoint expects {net.input_dim}-dim observations, environment produces {OBS_DIM}"
        )
    if net.num_actions != len(Action):
        raise ValueError(
            f"checkpoint has {net.num_actions} actions, environment has {len(Action)}"
        )


# --- curriculum ----------------------------------------------------------------


def curriculum_finetune(
    checkpoint: Checkpoint,
    new_env_config: EnvConfig,
    finetune_config: TrainConfig,
    exploration: ExplorationParams,
    reward_params: RewardParams,
    *,
    resume_lr: bool = True,
    metrics_path: str | Path | None = None,
    checkpoint_dir: str | Path | None = None,
) -> TrainResult:
    """Continue training saved parameters on a new arena.

    The exploration episode index restarts at zero; the learning rate resumes
    from the checkpoint's optimizer state unless ``resume_lr`` is false, in
    which case the fine-tune schedule starts fresh.
    """
    _check_schema(checkpoint.net)
    return train(
        new_env_config,
        finetune_config,
        exploration,
        reward_params,
        initial_net=checkpoint.net,
        initial_target=checkpoint.target_net,
        lr_override=checkpoint.lr if resume_lr else None,
        metrics_path=metrics_path,
        checkpoint_dir=checkpoint_dir,
    )
