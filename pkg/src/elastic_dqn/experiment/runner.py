"""Single-run training orchestration: prefill, the env/learn loop, epoching,
and the fixed-probe |Q| series.

Determinism: one SeedSequence per (config, seed) spawns six named child
streams (net init, env resets, action selection, replay sampling, bank
sampling, probe choice) consumed in a fixed pattern, so two agents that share
the common machinery consume identical draws from the streams they share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..agents import ElasticCollector, FixedNCollector, Learner, epsilon_at
from ..clustering import ClusterPipeline
from ..config import RunConfig
from ..envs import make_env
from ..errors import NumericsError
from ..memory import ReplayBuffer, StateBank, Transition
from ..network import QNetwork


@dataclass(frozen=True)
class EpisodeRecord:
    index: int
    steps: int
    reward: float
    end_step: int  # env step (1-based, training phase) at which it finished


@dataclass(frozen=True)
class EpochRecord:
    epoch_index: int
    mean_reward: float
    median_reward: float
    std_reward: float
    episodes_completed: int
    env_steps: int


@dataclass(frozen=True)
class QSample:
    step_index: int
    mean_abs_q: float


@dataclass(frozen=True)
class RunSummary:
    seed: int
    final_window_mean_reward: float
    run_mean_abs_q: float
    run_max_abs_q: float
    episodes_completed: int
    steps_mean: float | None = None
    steps_min: int | None = None
    steps_max: int | None = None
    steps_median: float | None = None
    steps_std: float | None = None
    aborted: bool = False
    abort_reason: str = ""


@dataclass
class RunResult:
    seed: int
    episodes: list[EpisodeRecord]
    epochs: list[EpochRecord]
    qsamples: list[QSample]
    summary: RunSummary
    segment_lengths: list[int] | None
    net: QNetwork


@dataclass
class RunHooks:
    """Test instrumentation; all optional."""

    on_transition: object | None = None  # callable(Transition)
    on_env_step: object | None = None  # callable(reward, terminal, truncated)
    pipeline_factory: object | None = None  # callable(cfg) -> pipeline-like
    fit_dump: object | None = None  # callable(fit, bank, start_obs, next_obs)


@dataclass
class _Rngs:
    init: np.random.Generator
    env: np.random.Generator
    action: np.random.Generator
    replay: np.random.Generator
    bank: np.random.Generator
    probe: np.random.Generator


def _spawn_rngs(seed: int) -> _Rngs:
    children = np.random.SeedSequence(seed).spawn(6)
    return _Rngs(*(np.random.Generator(np.random.PCG64(c)) for c in children))


def _reset(env, env_rng: np.random.Generator) -> np.ndarray:
    return env.reset(int(env_rng.integers(2**63))).observation


def run_training(cfg: RunConfig, seed: int, hooks: RunHooks | None = None) -> RunResult:
    """Train one agent for cfg.total_steps env steps; deterministic per seed."""
    cfg.validate()
    hooks = hooks or RunHooks()
    rngs = _spawn_rngs(seed)
    env = make_env(cfg.env_id)
    gamma = cfg.gamma

    net = QNetwork(
        env.obs_dim,
        cfg.hidden_units,
        env.num_actions,
        rngs.init,
        learning_rate=cfg.learning_rate,
        optimizer=cfg.optimizer,
        loss=cfg.loss,
        seed=seed,
    )
    replay = ReplayBuffer(cfg.replay_capacity, gamma)

    if cfg.agent_id == "elastic":
        bank = StateBank(cfg.state_bank_capacity, cfg.hidden_units, env.obs_dim)
        if hooks.pipeline_factory is not None:
            pipeline = hooks.pipeline_factory(cfg)
        else:
            pipeline = ClusterPipeline(
                sample_size=cfg.state_bank_batch_size,
                min_cluster_size=cfg.min_cluster_size,
                min_samples=cfg.min_samples,
                max_pca_components=cfg.max_pca_components,
                refit_interval=cfg.cluster_refit_interval,
            )
        collector = ElasticCollector(
            gamma, pipeline, bank, clamp_actions=cfg.clamp_actions, fit_dump=hooks.fit_dump
        )
    else:
        bank = None
        collector = FixedNCollector(cfg.n_step if cfg.agent_id == "nstep" else 1, gamma)

    learner = Learner(
        cfg.agent_id,
        net,
        replay,
        batch_size=cfg.batch_size,
        target_update_interval=cfg.target_update_interval,
        initial_replay_size=cfg.initial_replay_size,
        num_approximators=cfg.num_approximators,
    )

    # Prefill: uniform-random 1-step transitions; the bank gets the hidden
    # features of each start state.
    obs = _reset(env, rngs.env)
    prefill_pool = []
    for _ in range(cfg.initial_replay_size):
        action = int(rngs.action.integers(env.num_actions))
        step = env.step(action)
        replay.push(
            Transition(obs, action, step.reward, step.next_observation, gamma, 1, step.terminal)
        )
        prefill_pool.append(obs)
        if bank is not None:
            bank.push(net.hidden_features(obs), obs)
        if step.terminal or step.truncated:
            obs = _reset(env, rngs.env)
        else:
            obs = step.next_observation

    pool = np.stack(prefill_pool)
    probe_size = min(256, pool.shape[0])
    probe = pool[rngs.probe.choice(pool.shape[0], size=probe_size, replace=False)]

    episodes: list[EpisodeRecord] = []
    qsamples: list[QSample] = []
    episode_reward = 0.0
    episode_steps = 0
    aborted = False
    abort_reason = ""

    obs = _reset(env, rngs.env)
    collector.reset_episode(obs, net)
    for t in range(1, cfg.total_steps + 1):
        eps = epsilon_at(t - 1, cfg.epsilon_start, cfg.epsilon_min, cfg.epsilon_decay_steps)
        action = collector.choose_action(obs, eps, rngs.action, net)
        step = env.step(action)
        if hooks.on_env_step is not None:
            hooks.on_env_step(step.reward, step.terminal, step.truncated)
        for tr in collector.observe(
            obs, action, step.reward, step.next_observation,
            step.terminal, step.truncated, net, rngs,
        ):
            replay.push(tr)
            if hooks.on_transition is not None:
                hooks.on_transition(tr)

        if t % cfg.train_frequency == 0:
            try:
                learner.step(rngs.replay)
            except NumericsError as exc:
                aborted = True
                abort_reason = f"step {t}: {exc}"

        episode_reward += step.reward
        episode_steps += 1
        if step.terminal or step.truncated:
            episodes.append(EpisodeRecord(len(episodes), episode_steps, episode_reward, t))
            episode_reward = 0.0
            episode_steps = 0
            obs = _reset(env, rngs.env)
            collector.reset_episode(obs, net)
        else:
            obs = step.next_observation

        if t % 1000 == 0:
            q = net.forward_batch(probe)
            qsamples.append(QSample(t, float(np.abs(q).max(axis=1).mean())))
        if aborted:
            break

    epochs = build_epochs(episodes, cfg.total_steps)
    segment_lengths = collector.emitted_lengths if cfg.agent_id == "elastic" else None
    summary = build_summary(
        seed, episodes, qsamples, cfg.total_steps, cfg.final_window_epochs,
        segment_lengths, aborted, abort_reason,
    )
    return RunResult(seed, episodes, epochs, qsamples, summary, segment_lengths, net)


def build_epochs(episodes: list[EpisodeRecord], total_steps: int) -> list[EpochRecord]:
    """100 equal epochs; an episode belongs to the epoch in which it ends."""
    epoch_len = total_steps // 100
    buckets: list[list[float]] = [[] for _ in range(100)]
    for ep in episodes:
        idx = min((ep.end_step - 1) // epoch_len, 99)
        buckets[idx].append(ep.reward)
    out = []
    for i, rewards in enumerate(buckets):
        if rewards:
            arr = np.asarray(rewards)
            rec = EpochRecord(
                i, float(arr.mean()), float(np.median(arr)), float(arr.std()), len(rewards),
                epoch_len,
            )
        else:
            rec = EpochRecord(i, math.nan, math.nan, math.nan, 0, epoch_len)
        out.append(rec)
    return out


def final_window_rewards(
    episodes: list[EpisodeRecord], total_steps: int, window_epochs: int
) -> list[float]:
    epoch_len = total_steps // 100
    cutoff = total_steps - window_epochs * epoch_len
    return [ep.reward for ep in episodes if ep.end_step > cutoff]


def build_summary(
    seed: int,
    episodes: list[EpisodeRecord],
    qsamples: list[QSample],
    total_steps: int,
    window_epochs: int,
    segment_lengths: list[int] | None,
    aborted: bool = False,
    abort_reason: str = "",
) -> RunSummary:
    window = final_window_rewards(episodes, total_steps, window_epochs)
    q_values = [q.mean_abs_q for q in qsamples]
    steps_stats = {}
    if segment_lengths:
        arr = np.asarray(segment_lengths)
        steps_stats = dict(
            steps_mean=float(arr.mean()),
            steps_min=int(arr.min()),
            steps_max=int(arr.max()),
            steps_median=float(np.median(arr)),
            steps_std=float(arr.std()),
        )
    return RunSummary(
        seed=seed,
        final_window_mean_reward=float(np.mean(window)) if window else math.nan,
        run_mean_abs_q=float(np.mean(q_values)) if q_values else math.nan,
        run_max_abs_q=float(np.max(q_values)) if q_values else math.nan,
        episodes_completed=len(episodes),
        aborted=aborted,
        abort_reason=abort_reason,
        **steps_stats,
    )
