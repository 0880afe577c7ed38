"""Command-line entry point.

Verbs:
  run        train one config across seeds, writing per-seed CSV artifacts
  aggregate  combine finished run directories into summary.csv + summary.md
  clusters   extract one dumped cluster fit as scatter-data CSV

Seed runs are independent processes (spawn) with single-threaded BLAS, so a
rerun with the same config and seed produces byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path

from .config import load_config, parse_config_text, parse_seed_spec, serialize_config
from .envs import ENVIRONMENTS
from .errors import ConfigurationError


def _limit_blas_threads() -> None:
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")


def _make_fit_dump(seed_dir: Path, interval: int, feature_names) :
    from .experiment.io import write_csv

    def dump(fit, bank, start_obs, next_obs):
        if fit.fit_index % interval != 0:
            return
        import numpy as np

        obs = np.vstack([bank.observations_at(fit.sample_indices), start_obs, next_obs])
        path = seed_dir / f"cluster_fit_{fit.fit_index:06d}.csv"
        write_csv(
            path,
            list(feature_names) + ["label"],
            ([float(v) for v in row] + [int(label)] for row, label in zip(obs, fit.labels)),
        )

    return dump


def run_seed(config_text: str, seed: int, out_dir: str) -> tuple[int, bool, str]:
    """Run one seed and write its artifacts under <out_dir>/seed_<seed>/."""
    _limit_blas_threads()
    from .experiment import RunHooks, run_training
    from .experiment.io import (
        write_episodes_csv,
        write_epochs_csv,
        write_qvalues_csv,
        write_steps_hist_csv,
    )

    cfg = parse_config_text(config_text)
    seed_dir = Path(out_dir) / f"seed_{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)

    hooks = RunHooks()
    if cfg.agent_id == "elastic" and cfg.cluster_dump_interval > 0:
        names = ENVIRONMENTS[cfg.env_id].feature_names
        hooks.fit_dump = _make_fit_dump(seed_dir, cfg.cluster_dump_interval, names)

    result = run_training(cfg, seed, hooks)
    write_episodes_csv(seed_dir / "episodes.csv", seed, result.episodes)
    write_epochs_csv(seed_dir / "epochs.csv", seed, result.epochs)
    write_qvalues_csv(seed_dir / "qvalues.csv", seed, result.qsamples)
    if result.segment_lengths is not None:
        write_steps_hist_csv(seed_dir / "steps_hist.csv", seed, result.segment_lengths)
    return seed, result.summary.aborted, result.summary.abort_reason


def cmd_run(args) -> int:
    overrides = {}
    for item in args.override or []:
        if "=" not in item:
            raise ConfigurationError(f"--override expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    cfg = load_config(args.config, overrides)
    if args.seeds:
        cfg.seeds = parse_seed_spec(args.seeds)
        cfg.validate()
    if args.out:
        cfg.out_dir = args.out

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_text = serialize_config(cfg)
    (out_dir / "config.ini").write_text(config_text, encoding="utf-8")

    jobs = args.jobs or os.cpu_count() or 1
    failures = []
    if jobs == 1 or len(cfg.seeds) == 1:
        results = [run_seed(config_text, seed, str(out_dir)) for seed in cfg.seeds]
    else:
        with ProcessPoolExecutor(
            max_workers=min(jobs, len(cfg.seeds)), mp_context=get_context("spawn")
        ) as pool:
            results = list(
                pool.map(run_seed, *zip(*[(config_text, s, str(out_dir)) for s in cfg.seeds]))
            )
    for seed, aborted, reason in results:
        status = f"aborted ({reason})" if aborted else "ok"
        print(f"seed {seed}: {status}")
        if aborted:
            failures.append(seed)
    print(f"artifacts in {out_dir}")
    return 1 if failures else 0


def cmd_aggregate(args) -> int:
    from .experiment import aggregate_runs, write_summary_csv, write_summary_markdown

    rows = aggregate_runs(args.run_dirs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(rows, out / "summary.csv")
    write_summary_markdown(rows, out / "summary.md")
    print((out / "summary.md").read_text(encoding="utf-8"))
    return 0


def cmd_clusters(args) -> int:
    seed_dir = Path(args.run) / f"seed_{args.seed}"
    path = seed_dir / f"cluster_fit_{args.fit:06d}.csv"
    if not path.is_file():
        available = sorted(
            int(p.stem.split("_")[-1]) for p in seed_dir.glob("cluster_fit_*.csv")
        )
        raise ConfigurationError(
            f"no dump for fit {args.fit} in {seed_dir} "
            f"(available: {available if available else 'none - set cluster_dump_interval'})"
        )
    text = path.read_text(encoding="utf-8")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elastic-dqn")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train a config across seeds")
    p_run.add_argument("--config", required=True, help="config path or shipped config name")
    p_run.add_argument("--override", action="append", metavar="KEY=VALUE")
    p_run.add_argument("--seeds", help="e.g. 0..29 or 0,3,7")
    p_run.add_argument("--jobs", type=int, default=None, help="parallel seed workers")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.set_defaults(func=cmd_run)

    p_agg = sub.add_parser("aggregate", help="summarize finished run directories")
    p_agg.add_argument("run_dirs", nargs="+")
    p_agg.add_argument("--out", default=".", help="where to write summary.csv / summary.md")
    p_agg.set_defaults(func=cmd_aggregate)

    p_cl = sub.add_parser("clusters", help="extract a dumped cluster fit as CSV")
    p_cl.add_argument("--run", required=True, help="run directory")
    p_cl.add_argument("--seed", type=int, default=0)
    p_cl.add_argument("--fit", type=int, required=True, help="fit index")
    p_cl.add_argument("--out", help="output CSV path (default: stdout)")
    p_cl.set_defaults(func=cmd_clusters)
    return parser


def main(argv=None) -> int:
    _limit_blas_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
