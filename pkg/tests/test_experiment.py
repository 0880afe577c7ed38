import math
from pathlib import Path

import numpy as np
import pytest

from elastic_dqn.config import RunConfig, serialize_config
from elastic_dqn.experiment import (
    EpisodeRecord,
    RunHooks,
    aggregate_runs,
    build_epochs,
    final_window_rewards,
    read_run_dir,
    run_training,
    write_summary_csv,
    write_summary_markdown,
)
from elastic_dqn.experiment.io import (
    read_csv,
    write_episodes_csv,
    write_epochs_csv,
    write_qvalues_csv,
    write_steps_hist_csv,
)


def quick_cfg(**kw):
    base = dict(
        env_id="cartpole",
        agent_id="dqn",
        total_steps=2000,
        seeds=[0],
        learning_rate=1e-3,
        target_update_interval=50,
        replay_capacity=2000,
        initial_replay_size=64,
        epsilon_decay_steps=400,
        hidden_units=12,
    )
    base.update(kw)
    return RunConfig(**base)


# ------------------------------------------------------------------ run shape

def test_run_emits_expected_epoch_and_qsample_counts():
    result = run_training(quick_cfg(), seed=0)
    assert len(result.epochs) == 100
    assert all(e.env_steps == 20 for e in result.epochs)
    assert sum(e.env_steps for e in result.epochs) == 2000
    assert [q.step_index for q in result.qsamples] == [1000, 2000]
    assert all(q.mean_abs_q >= 0.0 for q in result.qsamples)
    assert sum(e.episodes_completed for e in result.epochs) == len(result.episodes)


def test_run_is_deterministic_per_seed():
    a = run_training(quick_cfg(), seed=11)
    b = run_training(quick_cfg(), seed=11)
    assert a.episodes == b.episodes
    assert a.epochs == b.epochs
    assert a.qsamples == b.qsamples
    assert a.summary == b.summary
    assert a.net.param_bytes() == b.net.param_bytes()
    c = run_training(quick_cfg(), seed=12)
    assert c.episodes != a.episodes


def test_episode_end_steps_are_cumulative_step_counts():
    result = run_training(quick_cfg(), seed=4)
    cum = 0
    for ep in result.episodes:
        cum += ep.steps
        assert ep.end_step == cum
    assert cum <= 2000


def test_epoch_attribution_and_nan_for_empty_epochs():
    episodes = [
        EpisodeRecord(0, 30, 30.0, 30),   # ends in epoch 1 (steps 21-40)
        EpisodeRecord(1, 10, 10.0, 40),   # epoch 1 boundary (step 40)
        EpisodeRecord(2, 20, 20.0, 60),   # epoch 2
    ]
    epochs = build_epochs(episodes, total_steps=2000)
    assert epochs[0].episodes_completed == 0
    assert math.isnan(epochs[0].mean_reward)
    assert epochs[1].episodes_completed == 2
    assert epochs[1].mean_reward == 20.0
    assert epochs[1].median_reward == 20.0
    assert epochs[1].std_reward == 10.0
    assert epochs[2].episodes_completed == 1
    assert sum(e.episodes_completed for e in epochs) == 3


def test_final_window_selects_episodes_by_end_step():
    episodes = [
        EpisodeRecord(0, 100, 1.0, 1800),
        EpisodeRecord(1, 100, 2.0, 1801),  # inside the last 10 epochs (cutoff 1800)
        EpisodeRecord(2, 100, 3.0, 2000),
    ]
    assert final_window_rewards(episodes, 2000, 10) == [2.0, 3.0]
    assert final_window_rewards(episodes, 2000, 5) == [3.0]
    assert final_window_rewards(episodes, 2000, 100) == [1.0, 2.0, 3.0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_run_aborts_on_divergence_with_diagnostic():
    cfg = quick_cfg(optimizer="sgd", learning_rate=1e200)
    result = run_training(cfg, seed=0)
    assert result.summary.aborted
    assert "step" in result.summary.abort_reason


# ------------------------------------------------------------------- csv io

def test_csv_round_trips(tmp_path):
    eps = [EpisodeRecord(0, 10, 10.0, 10), EpisodeRecord(1, 5, math.nan, 15)]
    write_episodes_csv(tmp_path / "e.csv", 3, eps)
    header, rows = read_csv(tmp_path / "e.csv")
    assert header == ["seed", "episode", "steps", "reward"]
    assert rows[0] == ["3", "0", "10", "10.0"]
    assert rows[1][3] == "nan" and math.isnan(float(rows[1][3]))

    epochs = build_epochs(eps, 2000)
    write_epochs_csv(tmp_path / "ep.csv", 3, epochs)
    header, rows = read_csv(tmp_path / "ep.csv")
    assert header == ["seed", "epoch", "mean", "median", "std"]
    assert len(rows) == 100

    from elastic_dqn.experiment.runner import QSample

    write_qvalues_csv(tmp_path / "q.csv", 3, [QSample(1000, 1.25)])
    header, rows = read_csv(tmp_path / "q.csv")
    assert rows == [["3", "1000", "1.25"]]

    write_steps_hist_csv(tmp_path / "s.csv", 3, [1, 1, 2, 5, 1])
    header, rows = read_csv(tmp_path / "s.csv")
    assert rows == [["3", "1", "3"], ["3", "2", "1"], ["3", "5", "1"]]


# ----------------------------------------------------------------- aggregate

def _write_run_dir(root: Path, name: str, cfg: RunConfig, seeds_data):
    """seeds_data: {seed: (episode_rewards_per_episode, steps_per_episode, q_values)}"""
    run_dir = root / name
    run_dir.mkdir(parents=True)
    (run_dir / "config.ini").write_text(serialize_config(cfg), encoding="utf-8")
    for seed, (rewards, steps, qs, *rest) in seeds_data.items():
        sdir = run_dir / f"seed_{seed}"
        sdir.mkdir()
        eps = []
        end = 0
        for i, (r, s) in enumerate(zip(rewards, steps)):
            end += s
            eps.append(EpisodeRecord(i, s, r, end))
        write_episodes_csv(sdir / "episodes.csv", seed, eps)
        write_epochs_csv(sdir / "epochs.csv", seed, build_epochs(eps, cfg.total_steps))
        from elastic_dqn.experiment.runner import QSample

        write_qvalues_csv(
            sdir / "qvalues.csv", seed, [QSample(1000 * (i + 1), q) for i, q in enumerate(qs)]
        )
        if rest:
            write_steps_hist_csv(sdir / "steps_hist.csv", seed, rest[0])
    return run_dir


def test_aggregate_matches_spreadsheet_oracle(tmp_path):
    cfg_e = RunConfig(env_id="cartpole", agent_id="elastic", total_steps=2000, seeds=[0, 1, 2])
    cfg_d = RunConfig(env_id="cartpole", agent_id="dqn", total_steps=2000, seeds=[0, 1, 2])
    # single episode covering the whole run: final reward = that episode's reward
    elastic_dir = _write_run_dir(
        tmp_path, "elastic", cfg_e,
        {
            0: ([10.0], [2000], [50.0, 60.0], [1, 1, 2]),
            1: ([12.0], [2000], [40.0], [1, 3]),
            2: ([8.0], [2000], [150.0], [2]),
        },
    )
    dqn_dir = _write_run_dir(
        tmp_path, "dqn", cfg_d,
        {
            0: ([5.0], [2000], [120.0]),
            1: ([6.0], [2000], [130.0]),
            2: ([4.0], [2000], [140.0]),
        },
    )
    rows = aggregate_runs([str(elastic_dir), str(dqn_dir)])
    by_agent = {r["agent"]: r for r in rows}

    el = by_agent["elastic"]
    assert el["mean_reward"] == pytest.approx(10.0)
    assert el["std_reward"] == pytest.approx(2.0)  # sample std of {10, 12, 8}
    assert el["p_vs_elastic"] == 1.0  # itself
    assert el["mean_abs_q"] == pytest.approx((55.0 + 40.0 + 150.0) / 3)
    assert el["median_abs_q"] == pytest.approx(55.0)
    assert el["max_abs_q"] == pytest.approx(150.0)
    assert el["max_q_over_bound"] is True and el["mean_q_over_bound"] is False
    # pooled steps histogram: {1: 3, 2: 2, 3: 1}
    assert el["steps_mean"] == pytest.approx(10.0 / 6.0)
    assert el["steps_min"] == 1 and el["steps_max"] == 3
    assert el["steps_median"] == pytest.approx(1.5)

    dq = by_agent["dqn"]
    assert dq["mean_reward"] == pytest.approx(5.0)
    from elastic_dqn.experiment import welch_t_test

    assert dq["p_vs_elastic"] == pytest.approx(
        welch_t_test([5.0, 6.0, 4.0], [10.0, 12.0, 8.0])[1], abs=1e-12
    )
    assert dq["mean_q_over_bound"] is True
    assert dq["steps_mean"] == ""  # not an elastic run

    # spearman(reward, q) for dqn: rewards (5,6,4) vs qs (120,130,140) -> rho = -0.5
    assert dq["spearman_reward_q"] == pytest.approx(-0.5)


def test_aggregate_identical_runs_yield_p_one_and_zero_std(tmp_path):
    cfg = RunConfig(env_id="cartpole", agent_id="elastic", total_steps=2000, seeds=[0, 1])
    d = _write_run_dir(
        tmp_path, "same", cfg,
        {s: ([7.0], [2000], [10.0], [1]) for s in (0, 1, 2)},
    )
    rows = aggregate_runs([str(d)])
    assert rows[0]["std_reward"] == 0.0
    assert rows[0]["p_vs_elastic"] == 1.0
    assert math.isnan(rows[0]["spearman_reward_q"])


def test_summary_csv_and_markdown(tmp_path):
    cfg = RunConfig(env_id="mountain_car", agent_id="dqn", total_steps=3000, seeds=[0, 1])
    d = _write_run_dir(
        tmp_path, "mc", cfg,
        {0: ([-900.0, -800.0], [1000, 2000], [500.0]), 1: ([-700.0], [3000], [80.0])},
    )
    rows = aggregate_runs([str(d)])
    write_summary_csv(rows, tmp_path / "summary.csv")
    header, data = read_csv(tmp_path / "summary.csv")
    assert header[0] == "agent"
    assert len(data) == 1
    write_summary_markdown(rows, tmp_path / "summary.md")
    md = (tmp_path / "summary.md").read_text()
    assert "**290.000**" in md  # mean |Q| over the bound is bolded
    assert "| dqn |" in md


def test_aggregate_final_window_from_episode_csv(tmp_path):
    # 2000 steps, epoch len 20, window 10 epochs -> cutoff at step 1800
    cfg = RunConfig(env_id="cartpole", agent_id="dqn", total_steps=2000, seeds=[0])
    d = _write_run_dir(
        tmp_path, "w", cfg,
        {0: ([1.0, 2.0, 3.0], [1800, 100, 100], [5.0])},
    )
    run = read_run_dir(d)
    # first episode ends exactly at the cutoff (excluded); mean of (2, 3)
    assert run.final_rewards == [2.5]


def test_read_run_dir_requires_config(tmp_path):
    from elastic_dqn.errors import ConfigurationError

    (tmp_path / "seed_0").mkdir()
    with pytest.raises(ConfigurationError):
        read_run_dir(tmp_path)
