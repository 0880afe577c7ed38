"""Replay buffer for variable-horizon transitions and the hidden-feature bank.

Both containers are fixed-capacity rings with strict FIFO eviction. Replay
sampling is uniform with replacement and driven by a caller-supplied
generator so runs stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError


@dataclass(frozen=True)
class Transition:
    """Experience spanning one or more env steps.

    accumulated_return is sum(gamma^i * r_i) over the steps_spanned rewards;
    bootstrap_discount is gamma**steps_spanned and is ignored at target time
    when terminal is set.
    """

    start_obs: np.ndarray
    start_action: int
    accumulated_return: float
    end_obs: np.ndarray
    bootstrap_discount: float
    steps_spanned: int
    terminal: bool


class ReplayBuffer:
    def __init__(self, capacity: int, gamma: float) -> None:
        if capacity <= 0:
            raise ContractViolationError(f"capacity must be positive, got {capacity}")
        if not 0.0 < gamma < 1.0:
            raise ContractViolationError(f"gamma must be in (0, 1), got {gamma}")
        self.capacity = capacity
        self.gamma = gamma
        self._items: list[Transition] = []
        self._cursor = 0
        self.pushed_total = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if t.steps_spanned < 1:
            raise ContractViolationError(f"steps_spanned must be >= 1, got {t.steps_spanned}")
        if t.bootstrap_discount != self.gamma**t.steps_spanned:
            raise ContractViolationError(
                "bootstrap_discount is not gamma**steps_spanned "
                f"({t.bootstrap_discount!r} vs {self.gamma**t.steps_spanned!r})"
            )
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._cursor] = t
            self._cursor = (self._cursor + 1) % self.capacity
        self.pushed_total += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform with replacement over current contents."""
        if not self._items:
            raise ContractViolationError("cannot sample from an empty replay buffer")
        if batch_size <= 0:
            raise ContractViolationError(f"batch_size must be positive, got {batch_size}")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def contents(self) -> list[Transition]:
        """Current items, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._cursor :] + self._items[: self._cursor]


class StateBank:
    """Ring of hidden-feature vectors (plus the observations that produced them).

    The observations are carried only so cluster fits can be dumped against
    the raw state space; the clusterer itself sees features alone.
    """

    def __init__(self, capacity: int, feature_dim: int, obs_dim: int) -> None:
        if capacity <= 0:
            raise ContractViolationError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.feature_dim = feature_dim
        self.obs_dim = obs_dim
        self._features = np.zeros((capacity, feature_dim))
        self._observations = np.zeros((capacity, obs_dim))
        self._size = 0
        self._cursor = 0
        self.pushed_total = 0

    def __len__(self) -> int:
        return self._size

    def push(self, features: np.ndarray, observation: np.ndarray) -> None:
        features = np.asarray(features, dtype=np.float64)
        if features.shape != (self.feature_dim,):
            raise ContractViolationError(
                f"feature shape {features.shape} != ({self.feature_dim},)"
            )
        self._features[self._cursor] = features
        self._observations[self._cursor] = observation
        self._cursor = (self._cursor + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        self.pushed_total += 1

    def sample_indices(self, u: int, rng: np.random.Generator) -> np.ndarray:
        if self._size == 0:
            raise ContractViolationError("cannot sample from an empty state bank")
        if u <= 0:
            raise ContractViolationError(f"sample size must be positive, got {u}")
        return rng.integers(0, self._size, size=u)

    def sample_features(self, u: int, rng: np.random.Generator) -> np.ndarray:
        """u rows drawn uniformly with replacement."""
        return self._features[self.sample_indices(u, rng)]

    def features_at(self, idx: np.ndarray) -> np.ndarray:
        return self._features[idx]

    def observations_at(self, idx: np.ndarray) -> np.ndarray:
        return self._observations[idx]

    def contents(self) -> np.ndarray:
        """Stored feature rows, oldest first."""
        if self._size < self.capacity:
            return self._features[: self._size].copy()
        return np.vstack([self._features[self._cursor :], self._features[: self._cursor]])
