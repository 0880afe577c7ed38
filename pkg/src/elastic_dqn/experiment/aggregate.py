"""Cross-seed aggregation into the comparison table (CSV + markdown).

Each run directory holds a resolved config.ini and one seed_<s>/ directory
per seed with the per-run CSVs. Per-seed final reward is the episode-weighted
mean over the last `final_window_epochs` epochs, reconstructed from
episodes.csv (episode end steps are the cumulative step counts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import RunConfig, parse_config_text
from ..errors import ConfigurationError, ContractViolationError
from .io import read_csv, write_csv
from .stats import overestimation_bound, spearman, welch_t_test

SUMMARY_HEADER = [
    "agent", "env", "seeds",
    "mean_reward", "std_reward", "p_vs_elastic",
    "mean_abs_q", "std_abs_q", "median_abs_q", "max_abs_q",
    "mean_q_over_bound", "max_q_over_bound", "spearman_reward_q",
    "steps_mean", "steps_min", "steps_max", "steps_median", "steps_std",
]


@dataclass
class RunData:
    cfg: RunConfig
    label: str
    path: str
    seeds: list[int]
    final_rewards: list[float]
    mean_qs: list[float]
    pooled_steps: dict[int, int]


def agent_label(cfg: RunConfig) -> str:
    if cfg.agent_id == "nstep":
        return f"{cfg.n_step}step"
    return cfg.agent_id


def final_reward_from_episodes(rows: list[list[str]], total_steps: int, window_epochs: int) -> float:
    """Episode-weighted mean reward over the final window; episodes end at the
    cumulative sum of their step counts."""
    epoch_len = total_steps // 100
    cutoff = total_steps - window_epochs * epoch_len
    end = 0
    rewards = []
    for row in rows:
        end += int(row[2])
        if end > cutoff:
            rewards.append(float(row[3]))
    return float(np.mean(rewards)) if rewards else math.nan


def read_run_dir(path: str | Path) -> RunData:
    path = Path(path)
    cfg_path = path / "config.ini"
    if not cfg_path.is_file():
        raise ConfigurationError(f"{path} has no config.ini; not a run directory")
    cfg = parse_config_text(cfg_path.read_text(encoding="utf-8"))

    seeds, rewards, qs = [], [], []
    pooled: dict[int, int] = {}
    seed_dirs = sorted(path.glob("seed_*"), key=lambda p: int(p.name.split("_")[1]))
    if not seed_dirs:
        raise ConfigurationError(f"{path} has no seed_* directories")
    for sdir in seed_dirs:
        seeds.append(int(sdir.name.split("_")[1]))
        _, ep_rows = read_csv(sdir / "episodes.csv")
        rewards.append(
            final_reward_from_episodes(ep_rows, cfg.total_steps, cfg.final_window_epochs)
        )
        _, q_rows = read_csv(sdir / "qvalues.csv")
        qs.append(float(np.mean([float(r[2]) for r in q_rows])) if q_rows else math.nan)
        hist = sdir / "steps_hist.csv"
        if hist.is_file():
            _, h_rows = read_csv(hist)
            for row in h_rows:
                k, count = int(row[1]), int(row[2])
                pooled[k] = pooled.get(k, 0) + count
    return RunData(cfg, agent_label(cfg), str(path), seeds, rewards, qs, pooled)


def _steps_stats(pooled: dict[int, int]) -> dict[str, float | int]:
    if not pooled:
        return {}
    ks = np.array(sorted(pooled))
    counts = np.array([pooled[int(k)] for k in ks], dtype=np.float64)
    total = counts.sum()
    mean = float((ks * counts).sum() / total)
    var = float((counts * (ks - mean) ** 2).sum() / total)
    cum = np.cumsum(counts)
    half = total / 2.0
    lo = ks[int(np.searchsorted(cum, half, side="left"))]
    hi = ks[int(np.searchsorted(cum, half, side="right"))]
    return {
        "steps_mean": mean,
        "steps_min": int(ks[0]),
        "steps_max": int(ks[-1]),
        "steps_median": (float(lo) + float(hi)) / 2.0,
        "steps_std": math.sqrt(var),
    }


def _p_vs_elastic(run: RunData, elastic: RunData | None) -> float:
    if elastic is None:
        return math.nan
    a, b = run.final_rewards, elastic.final_rewards
    if len(a) == len(b) and all(x == y for x, y in zip(a, b)):
        return 1.0
    try:
        return welch_t_test(a, b)[1]
    except ContractViolationError:
        return math.nan


def aggregate_runs(run_dirs: list[str]) -> list[dict]:
    """One table row per run directory, grouped and compared within each env."""
    runs = [read_run_dir(d) for d in run_dirs]
    rows = []
    for run in sorted(runs, key=lambda r: (r.cfg.env_id, r.label)):
        elastic = next(
            (r for r in runs if r.cfg.env_id == run.cfg.env_id and r.cfg.agent_id == "elastic"),
            None,
        )
        bound = overestimation_bound(run.cfg.gamma)
        qs = np.asarray(run.mean_qs, dtype=np.float64)
        try:
            rho = spearman(run.final_rewards, run.mean_qs)
        except ContractViolationError:
            rho = math.nan
        row = {
            "agent": run.label,
            "env": run.cfg.env_id,
            "seeds": len(run.seeds),
            "mean_reward": float(np.mean(run.final_rewards)),
            "std_reward": float(np.std(run.final_rewards, ddof=1))
            if len(run.final_rewards) > 1
            else math.nan,
            "p_vs_elastic": _p_vs_elastic(run, elastic),
            "mean_abs_q": float(qs.mean()),
            "std_abs_q": float(qs.std(ddof=1)) if qs.size > 1 else math.nan,
            "median_abs_q": float(np.median(qs)),
            "max_abs_q": float(qs.max()),
            "mean_q_over_bound": bool(qs.mean() > bound),
            "max_q_over_bound": bool(qs.max() > bound),
            "spearman_reward_q": rho,
        }
        row.update({k: "" for k in ("steps_mean", "steps_min", "steps_max", "steps_median", "steps_std")})
        row.update(_steps_stats(run.pooled_steps))
        rows.append(row)
    return rows


def write_summary_csv(rows: list[dict], path: str | Path) -> None:
    write_csv(path, SUMMARY_HEADER, ([row[k] for k in SUMMARY_HEADER] for row in rows))


def _md_num(value, bold: bool = False, digits: int = 3) -> str:
    if value == "" or (isinstance(value, float) and math.isnan(value)):
        return ""
    text = f"{value:.{digits}f}" if isinstance(value, float) else str(value)
    return f"**{text}**" if bold else text


def write_summary_markdown(rows: list[dict], path: str | Path) -> None:
    cols = [
        "env", "agent", "seeds", "mean_reward", "std_reward", "p_vs_elastic",
        "mean_abs_q", "median_abs_q", "max_abs_q", "spearman_reward_q",
        "steps_mean", "steps_max",
    ]
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            if c == "p_vs_elastic" and row["agent"] == "elastic":
                cells.append("")
            elif c == "mean_abs_q":
                cells.append(_md_num(v, bold=row["mean_q_over_bound"]))
            elif c == "max_abs_q":
                cells.append(_md_num(v, bold=row["max_q_over_bound"]))
            else:
                cells.append(_md_num(v))
        lines.append("| " + " | ".join(cells) + " |")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
