"""Run configuration: a flat record of every knob, stored as sectioned
key=value text files. Shipped files live under elastic_dqn/configs/, one per
(algorithm, environment) pair; parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .agents import AGENT_IDS
from .envs import ENVIRONMENTS
from .errors import ConfigurationError


@dataclass
class RunConfig:
    env_id: str = "cartpole"
    agent_id: str = "dqn"
    total_steps: int = 40000
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str = "runs"
    final_window_epochs: int = 10

    # agent
    learning_rate: float = 1e-4
    target_update_interval: int = 250
    replay_capacity: int = 10000
    initial_replay_size: int = 500
    train_frequency: int = 1
    gamma: float = 0.99
    epsilon_min: float = 0.1
    epsilon_start: float = 1.0
    epsilon_decay: str = "linear"
    epsilon_decay_steps: int = 4000
    batch_size: int = 32
    hidden_units: int = 24
    optimizer: str = "adam"
    loss: str = "squared"

    # nstep
    n_step: int = 1

    # average
    num_approximators: int = 2

    # elastic
    alpha: float = 1.0
    leaf_size: int = 40  # accepted for config completeness; neighbor search is exact
    min_cluster_size: int = 5
    min_samples: int = 5
    metric: str = "euclidean"
    state_bank_capacity: int = 10000
    state_bank_batch_size: int = 1000
    max_pca_components: int = 30
    cluster_refit_interval: int = 1
    cluster_dump_interval: int = 0
    clamp_actions: bool = False

    def validate(self) -> "RunConfig":
        if self.env_id not in ENVIRONMENTS:
            raise ConfigurationError(f"unknown env {self.env_id!r}")
        if self.agent_id not in AGENT_IDS:
            raise ConfigurationError(f"unknown agent {self.agent_id!r}")
        if self.total_steps <= 0 or self.total_steps % 1000 != 0:
            raise ConfigurationError(
                f"total_steps must be a positive multiple of 1000, got {self.total_steps}"
            )
        if not self.seeds:
            raise ConfigurationError("need at least one seed")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon_min <= self.epsilon_start <= 1.0:
            raise ConfigurationError("need 0 <= epsilon_min <= epsilon_start <= 1")
        if self.epsilon_decay != "linear":
            raise ConfigurationError(f"unsupported epsilon decay {self.epsilon_decay!r}")
        if self.epsilon_decay_steps <= 0:
            raise ConfigurationError("epsilon_decay_steps must be positive")
        if self.metric != "euclidean":
            raise ConfigurationError(f"unsupported metric {self.metric!r}")
        if self.alpha != 1.0:
            raise ConfigurationError("only alpha = 1 is supported")
        if self.n_step < 1:
            raise ConfigurationError(f"n_step must be >= 1, got {self.n_step}")
        if self.num_approximators < 1:
            raise ConfigurationError("num_approximators must be >= 1")
        if self.min_cluster_size < 2:
            raise ConfigurationError("min_cluster_size must be >= 2")
        if self.final_window_epochs < 1 or self.final_window_epochs > 100:
            raise ConfigurationError("final_window_epochs must be in 1..100")
        for name in (
            "learning_rate",
            "target_update_interval",
            "replay_capacity",
            "initial_replay_size",
            "train_frequency",
            "batch_size",
            "hidden_units",
            "min_samples",
            "state_bank_capacity",
            "state_bank_batch_size",
            "max_pca_components",
            "cluster_refit_interval",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.batch_size > self.initial_replay_size:
            raise ConfigurationError("batch_size cannot exceed initial_replay_size")
        return self


_SECTIONS = {
    "run": ("env", "agent", "total_steps", "seeds", "out", "final_window_epochs"),
    "agent": (
        "learning_rate",
        "target_update_interval",
        "replay_capacity",
        "initial_replay_size",
        "train_frequency",
        "gamma",
        "epsilon_min",
        "epsilon_start",
        "epsilon_decay",
        "epsilon_decay_steps",
        "batch_size",
        "hidden_units",
        "optimizer",
        "loss",
    ),
    "nstep": ("n_step",),
    "average": ("num_approximators",),
    "elastic": (
        "alpha",
        "leaf_size",
        "min_cluster_size",
        "min_samples",
        "metric",
        "state_bank_capacity",
        "state_bank_batch_size",
        "max_pca_components",
        "cluster_refit_interval",
        "cluster_dump_interval",
        "clamp_actions",
    ),
}

_KEY_TO_FIELD = {"env": "env_id", "agent": "agent_id", "out": "out_dir"}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_seed_spec(spec: str) -> list[int]:
    """'0..29' (inclusive range) or '0,3,7' or a single integer."""
    spec = spec.strip()
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ConfigurationError(f"empty seed range {spec!r}")
        return list(range(lo, hi + 1))
    return [int(part) for part in spec.split(",") if part.strip() != ""]


def _coerce(field_name: str, raw: str):
    kind = _FIELD_TYPES[field_name]
    raw = raw.strip()
    if field_name == "seeds":
        return parse_seed_spec(raw)
    if kind in ("int", int):
        return int(raw)
    if kind in ("float", float):
        return float(raw)
    if kind in ("bool", bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigurationError(f"{field_name}: expected a boolean, got {raw!r}")
    return raw


def _format(field_name: str, value) -> str:
    if field_name == "seeds":
        return ",".join(str(s) for s in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"bad config syntax: {exc}") from exc
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            field_name = _KEY_TO_FIELD.get(key, key)
            if key not in _SECTIONS[section]:
                raise ConfigurationError(f"unknown key {key!r} in section [{section}]")
            setattr(cfg, field_name, _coerce(field_name, raw))
    return cfg.validate()


def serialize_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    for section, keys in _SECTIONS.items():
        if section == "nstep" and cfg.agent_id != "nstep":
            continue
        if section == "average" and cfg.agent_id != "average":
            continue
        if section == "elastic" and cfg.agent_id != "elastic":
            continue
        out.write(f"[{section}]\n")
        for key in keys:
            field_name = _KEY_TO_FIELD.get(key, key)
            out.write(f"{key} = {_format(field_name, getattr(cfg, field_name))}\n")
        out.write("\n")
    return out.getvalue()


def resolve_config_path(name_or_path: str) -> str:
    """A filesystem path as given, or the name of a shipped config."""
    p = Path(name_or_path)
    if p.exists():
        return str(p)
    packaged = resources.files("elastic_dqn").joinpath("configs", f"{name_or_path}.ini")
    if packaged.is_file():
        return str(packaged)
    raise ConfigurationError(f"config {name_or_path!r} not found (path or shipped name)")


def load_config(name_or_path: str, overrides: dict[str, str] | None = None) -> RunConfig:
    path = resolve_config_path(name_or_path)
    cfg = parse_config_text(Path(path).read_text(encoding="utf-8"))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def apply_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    for key, raw in overrides.items():
        field_name = _KEY_TO_FIELD.get(key, key)
        if field_name not in _FIELD_TYPES:
            raise ConfigurationError(f"unknown override key {key!r}")
        setattr(cfg, field_name, _coerce(field_name, raw) if isinstance(raw, str) else raw)
    return cfg.validate()


def shipped_config_names() -> list[str]:
    root = resources.files("elastic_dqn").joinpath("configs")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))
