from .aggregate import (
    SUMMARY_HEADER,
    aggregate_runs,
    final_reward_from_episodes,
    read_run_dir,
    write_summary_csv,
    write_summary_markdown,
)
from .runner import (
    EpisodeRecord,
    EpochRecord,
    QSample,
    RunHooks,
    RunResult,
    RunSummary,
    build_epochs,
    build_summary,
    final_window_rewards,
    run_training,
)
from .stats import overestimation_bound, spearman, welch_t_test

__all__ = [
    "SUMMARY_HEADER",
    "EpisodeRecord",
    "EpochRecord",
    "QSample",
    "RunHooks",
    "RunResult",
    "RunSummary",
    "aggregate_runs",
    "build_epochs",
    "build_summary",
    "final_reward_from_episodes",
    "final_window_rewards",
    "overestimation_bound",
    "read_run_dir",
    "run_training",
    "spearman",
    "welch_t_test",
    "write_summary_csv",
    "write_summary_markdown",
]
