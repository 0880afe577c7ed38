"""CSV readers/writers for run artifacts.

All files are UTF-8 with '\n' newlines and '.' decimals; floats are written
with repr() (shortest round-trip form) so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

from ..errors import ConfigurationError


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"empty csv: {path}") from None
        return header, [row for row in reader]


def write_episodes_csv(path, seed: int, episodes) -> None:
    write_csv(
        path,
        ["seed", "episode", "steps", "reward"],
        ((seed, e.index, e.steps, e.reward) for e in episodes),
    )


def write_epochs_csv(path, seed: int, epochs) -> None:
    write_csv(
        path,
        ["seed", "epoch", "mean", "median", "std"],
        ((seed, e.epoch_index, e.mean_reward, e.median_reward, e.std_reward) for e in epochs),
    )


def write_qvalues_csv(path, seed: int, qsamples) -> None:
    write_csv(
        path,
        ["seed", "step", "mean_abs_q"],
        ((seed, q.step_index, q.mean_abs_q) for q in qsamples),
    )


def write_steps_hist_csv(path, seed: int, lengths) -> None:
    counts: dict[int, int] = {}
    for k in lengths:
        counts[k] = counts.get(k, 0) + 1
    write_csv(
        path,
        ["seed", "steps_spanned", "count"],
        ((seed, k, counts[k]) for k in sorted(counts)),
    )
