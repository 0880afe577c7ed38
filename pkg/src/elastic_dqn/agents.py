"""The learning algorithms: action selection, TD targets, experience
collectors, and the per-step learning update shared by every agent.

Agents differ along two axes only: how transitions are cut from the stream
of env steps (single-step / fixed-n sliding window / cluster-driven elastic
segments) and how bootstrap targets are computed (max, double, averaged
snapshots). Everything else - prefill, replay, epsilon schedule, learning
cadence - is common, which is what makes the stub-based reduction tests
exact.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .clustering import labels_equal
from .errors import ContractViolationError
from .memory import ReplayBuffer, StateBank, Transition
from .network import QNetwork

log = logging.getLogger(__name__)

AGENT_IDS = ("dqn", "nstep", "double", "average", "elastic")


# ------------------------------------------------------------------ epsilon

def epsilon_at(step: int, epsilon_start: float, epsilon_min: float, decay_steps: int) -> float:
    """Linear decay from start to min over decay_steps env steps, then flat."""
    if step < 0:
        raise ContractViolationError(f"step must be >= 0, got {step}")
    if step >= decay_steps:
        return epsilon_min
    frac = step / decay_steps
    return epsilon_start + (epsilon_min - epsilon_start) * frac


def epsilon_greedy(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """With probability epsilon a uniform action, else argmax (lowest index wins ties)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolationError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


# ------------------------------------------------------------------ targets

def td_target_dqn(t: Transition, net: QNetwork) -> float:
    """R for terminal transitions, else R + gamma^k * max_a target(end)[a]."""
    if t.terminal:
        return t.accumulated_return
    return t.accumulated_return + t.bootstrap_discount * float(
        np.max(net.target_forward(t.end_obs))
    )


def td_target_double(t: Transition, net: QNetwork) -> float:
    """Bootstrap value: target net evaluated at the primary net's argmax."""
    if t.terminal:
        return t.accumulated_return
    a_star = int(np.argmax(net.forward(t.end_obs)))
    return t.accumulated_return + t.bootstrap_discount * float(
        net.target_forward(t.end_obs)[a_star]
    )


def td_target_average(t: Transition, snapshots: "SnapshotAverager") -> float:
    """Bootstrap from max_a of the mean q-vector over stored snapshots."""
    if t.terminal:
        return t.accumulated_return
    mean_q = snapshots.mean_q(np.atleast_2d(t.end_obs))[0]
    return t.accumulated_return + t.bootstrap_discount * float(np.max(mean_q))


class SnapshotAverager:
    """The last K target-sync parameter copies, seeded with the initial net."""

    def __init__(self, net: QNetwork, k: int) -> None:
        if k < 1:
            raise ContractViolationError(f"need at least 1 snapshot, got {k}")
        self._snaps: deque[list[np.ndarray]] = deque(maxlen=k)
        self.push(net)

    def push(self, net: QNetwork) -> None:
        self._snaps.append([p.copy() for p in (net.W1, net.b1, net.W2, net.b2)])

    def __len__(self) -> int:
        return len(self._snaps)

    def mean_q(self, obs_batch: np.ndarray) -> np.ndarray:
        total = None
        for w1, b1, w2, b2 in self._snaps:
            h = np.maximum(obs_batch @ w1.T + b1, 0.0)
            q = h @ w2.T + b2
            total = q if total is None else total + q
        return total / len(self._snaps)


# --------------------------------------------------------------- collectors

@dataclass
class SegmentAccumulator:
    """Open elastic segment: start point plus running discounted return.

    R accumulates left to right as R += gamma^k * r (then k advances), so
    recomputing sum(gamma^i * r_i) over reward_log with a running power
    reproduces R bit for bit.
    """

    gamma: float
    start_obs: np.ndarray | None = None
    start_action: int = -1
    start_features: np.ndarray | None = None
    accumulated_return: float = 0.0
    steps_spanned: int = 0
    _gamma_power: float = 1.0
    reward_log: list[float] = field(default_factory=list)

    def begin(self, obs: np.ndarray, action: int, features: np.ndarray) -> None:
        self.start_obs = obs
        self.start_action = action
        self.start_features = features
        self.accumulated_return = 0.0
        self.steps_spanned = 0
        self._gamma_power = 1.0
        self.reward_log = []

    def add_reward(self, reward: float) -> None:
        self.accumulated_return += self._gamma_power * reward
        self._gamma_power *= self.gamma
        self.steps_spanned += 1
        self.reward_log.append(reward)

    @property
    def open(self) -> bool:
        return self.steps_spanned > 0 or self.start_obs is not None


class FixedNCollector:
    """Sliding window emitting k=n transitions, with shorter suffixes flushed
    at episode end (n=1 reduces to classic single-step collection)."""

    def __init__(self, n: int, gamma: float) -> None:
        if n < 1:
            raise ContractViolationError(f"n must be >= 1, got {n}")
        self.n = n
        self.gamma = gamma
        self._window: deque[tuple[np.ndarray, int, float]] = deque()

    def choose_action(
        self, obs: np.ndarray, epsilon: float, rng: np.random.Generator, net: QNetwork
    ) -> int:
        return epsilon_greedy(net.forward(obs), epsilon, rng)

    def reset_episode(self, first_obs: np.ndarray, net: QNetwork) -> None:
        self._window.clear()

    def _emit(self, end_obs: np.ndarray, terminal: bool) -> Transition:
        start_obs, start_action, _ = self._window[0]
        ret = 0.0
        power = 1.0
        for _, _, r in self._window:
            ret += power * r
            power *= self.gamma
        k = len(self._window)
        return Transition(
            start_obs=start_obs,
            start_action=start_action,
            accumulated_return=ret,
            end_obs=end_obs,
            bootstrap_discount=self.gamma**k,
            steps_spanned=k,
            terminal=terminal,
        )

    def observe(
        self,
        obs: np.ndarray,
        action: int,
        reward: float,
        next_obs: np.ndarray,
        terminal: bool,
        truncated: bool,
        net: QNetwork,
        rngs,
    ) -> list[Transition]:
        self._window.append((obs, action, reward))
        out = []
        if len(self._window) == self.n:
            out.append(self._emit(next_obs, terminal))
            self._window.popleft()
        if terminal or truncated:
            while self._window:
                out.append(self._emit(next_obs, terminal))
                self._window.popleft()
        return out


class ElasticCollector:
    """Cluster-label-driven segments: rewards accumulate while the segment's
    start state and the newest state land in the same cluster; the segment
    closes on label change, outliers, terminal, or the step cap.

    A failed fit (degenerate data, numerical trouble) closes the segment
    too - the agent falls open to single-step behavior rather than dying.
    """

    def __init__(
        self,
        gamma: float,
        pipeline,
        bank: StateBank,
        clamp_actions: bool = False,
        fit_dump=None,
    ) -> None:
        self.gamma = gamma
        self.pipeline = pipeline
        self.bank = bank
        self.clamp_actions = clamp_actions
        self.fit_dump = fit_dump
        self.segment = SegmentAccumulator(gamma=gamma)
        self._pending_start: tuple[np.ndarray, np.ndarray] | None = None
        self.emitted_lengths: list[int] = []
        self.failed_fits = 0

    def reset_episode(self, first_obs: np.ndarray, net: QNetwork) -> None:
        self._pending_start = (first_obs, net.hidden_features(first_obs))
        self.segment = SegmentAccumulator(gamma=self.gamma)

    def choose_action(
        self, obs: np.ndarray, epsilon: float, rng: np.random.Generator, net: QNetwork
    ) -> int:
        if self.clamp_actions and self.segment.steps_spanned > 0:
            return self.segment.start_action
        return epsilon_greedy(net.forward(obs), epsilon, rng)

    def observe(
        self,
        obs: np.ndarray,
        action: int,
        reward: float,
        next_obs: np.ndarray,
        terminal: bool,
        truncated: bool,
        net: QNetwork,
        rngs,
    ) -> list[Transition]:
        if self.segment.steps_spanned == 0:
            start_obs, start_features = self._pending_start
            self.segment.begin(start_obs, action, start_features)

        next_features = net.hidden_features(next_obs)
        self.bank.push(next_features, next_obs)

        try:
            label_start, label_next, fit = self.pipeline.label_pair(
                self.bank, self.segment.start_features, next_features, rngs.bank
            )
            similar = labels_equal(label_start, label_next)
        except Exception:
            self.failed_fits += 1
            log.warning("cluster fit failed; treating states as dissimilar", exc_info=True)
            fit = None
            similar = False

        if fit is not None and self.fit_dump is not None:
            self.fit_dump(fit, self.bank, self.segment.start_obs, next_obs)

        self.segment.add_reward(reward)
        if similar and not terminal and not truncated:
            return []

        k = self.segment.steps_spanned
        transition = Transition(
            start_obs=self.segment.start_obs,
            start_action=self.segment.start_action,
            accumulated_return=self.segment.accumulated_return,
            end_obs=next_obs,
            bootstrap_discount=self.gamma**k,
            steps_spanned=k,
            terminal=terminal,
        )
        self.emitted_lengths.append(k)
        self._pending_start = (next_obs, next_features)
        self.segment = SegmentAccumulator(gamma=self.gamma)
        return [transition]


# ------------------------------------------------------------------ learning

class Learner:
    """Replay sampling + per-agent targets + one train_batch per call, with
    target sync (and snapshot capture) at exact multiples of the interval."""

    def __init__(
        self,
        agent_id: str,
        net: QNetwork,
        replay: ReplayBuffer,
        batch_size: int,
        target_update_interval: int,
        initial_replay_size: int,
        num_approximators: int = 2,
    ) -> None:
        if agent_id not in AGENT_IDS:
            raise ContractViolationError(f"unknown agent_id {agent_id!r}")
        self.agent_id = agent_id
        self.net = net
        self.replay = replay
        self.batch_size = batch_size
        self.target_update_interval = target_update_interval
        self.initial_replay_size = initial_replay_size
        self.learn_steps = 0
        self.snapshots = SnapshotAverager(net, num_approximators) if agent_id == "average" else None
        # per-step scratch, filled in one pass over the sampled batch
        self._start_obs = np.empty((batch_size, net.input_dim))
        self._end_obs = np.empty((batch_size, net.input_dim))
        self._actions = np.empty(batch_size, dtype=np.intp)
        self._returns = np.empty(batch_size)
        self._discounts = np.empty(batch_size)
        self._live = np.empty(batch_size)

    def _bootstrap(self, end_obs: np.ndarray) -> np.ndarray:
        if self.agent_id == "double":
            a_star = np.argmax(self.net.forward_batch(end_obs), axis=1)
            return self.net.target_forward_batch(end_obs)[np.arange(end_obs.shape[0]), a_star]
        if self.agent_id == "average":
            return self.snapshots.mean_q(end_obs).max(axis=1)
        return self.net.target_forward_batch(end_obs).max(axis=1)

    def batch_targets(self, batch: list[Transition]) -> np.ndarray:
        end_obs = np.stack([t.end_obs for t in batch])
        returns = np.array([t.accumulated_return for t in batch])
        discounts = np.array([t.bootstrap_discount for t in batch])
        live = np.array([not t.terminal for t in batch], dtype=np.float64)
        return returns + live * discounts * self._bootstrap(end_obs)

    def step(self, rng: np.random.Generator) -> float | None:
        """No-op until the replay holds the warmup prefill."""
        if len(self.replay) < self.initial_replay_size:
            return None
        batch = self.replay.sample(self.batch_size, rng)
        for i, t in enumerate(batch):
            self._start_obs[i] = t.start_obs
            self._end_obs[i] = t.end_obs
            self._actions[i] = t.start_action
            self._returns[i] = t.accumulated_return
            self._discounts[i] = t.bootstrap_discount
            self._live[i] = 0.0 if t.terminal else 1.0
        targets = self._returns + self._live * self._discounts * self._bootstrap(self._end_obs)
        loss = self.net.train_batch(self._start_obs, self._actions, targets)
        self.learn_steps += 1
        if self.learn_steps % self.target_update_interval == 0:
            self.net.sync_target()
            if self.snapshots is not None:
                self.snapshots.push(self.net)
        return loss

