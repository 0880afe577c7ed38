"""One-hidden-layer Q-network with analytic backpropagation.

The network keeps two parameter sets: the primary (trained) weights and a
frozen target copy used for bootstrap values, synced on demand. The hidden
layer is ReLU, the output head is linear, and gradients flow only through
the output selected by each sample's action.

Parameters live in one flat float64 vector; W1/b1/W2/b2 are reshaped views
into it, which keeps the optimizer to a handful of whole-vector operations
(this code runs on every env step).
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ConfigurationError, ContractViolationError, NumericsError

_MAGIC = b"EDQN"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIIq")  # magic, version, input_dim, hidden_units, num_actions, seed


class QNetwork:
    """q(obs) = W2 @ relu(W1 @ obs + b1) + b2, trained on squared TD error."""

    def __init__(
        self,
        input_dim: int,
        hidden_units: int,
        num_actions: int,
        rng: np.random.Generator,
        learning_rate: float = 1e-3,
        optimizer: str = "adam",
        loss: str = "squared",
        seed: int = -1,
    ) -> None:
        if optimizer not in ("adam", "sgd"):
            raise ContractViolationError(f"unknown optimizer {optimizer!r}")
        if loss not in ("squared", "huber"):
            raise ContractViolationError(f"unknown loss {loss!r}")
        self.input_dim = input_dim
        self.hidden_units = hidden_units
        self.num_actions = num_actions
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.loss = loss
        self.seed = seed

        self._sizes = [
            hidden_units * input_dim,
            hidden_units,
            num_actions * hidden_units,
            num_actions,
        ]
        self._shapes = [
            (hidden_units, input_dim),
            (hidden_units,),
            (num_actions, hidden_units),
            (num_actions,),
        ]
        self._theta = np.zeros(sum(self._sizes))
        self._target = np.zeros_like(self._theta)
        self._bind_views()

        # He-style uniform fan-in init, biases at zero.
        bound1 = np.sqrt(6.0 / input_dim)
        bound2 = np.sqrt(6.0 / hidden_units)
        self.W1[:] = rng.uniform(-bound1, bound1, size=self._shapes[0])
        self.W2[:] = rng.uniform(-bound2, bound2, size=self._shapes[2])
        self.sync_target()

        self._adam_m = np.zeros_like(self._theta)
        self._adam_v = np.zeros_like(self._theta)
        self._adam_t = 0
        self._grad = np.zeros_like(self._theta)

    def _views(self, flat: np.ndarray) -> list[np.ndarray]:
        out = []
        offset = 0
        for size, shape in zip(self._sizes, self._shapes):
            out.append(flat[offset : offset + size].reshape(shape))
            offset += size
        return out

    def _bind_views(self) -> None:
        self.W1, self.b1, self.W2, self.b2 = self._views(self._theta)
        self.tW1, self.tb1, self.tW2, self.tb2 = self._views(self._target)

    def _params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    # ---- forward passes -------------------------------------------------

    def _check_obs(self, obs: np.ndarray) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape[-1] != self.input_dim:
            raise ContractViolationError(
                f"observation dim {obs.shape[-1]} != input_dim {self.input_dim}"
            )
        return obs

    def hidden_features(self, obs: np.ndarray) -> np.ndarray:
        """Post-activation hidden layer for one observation."""
        obs = self._check_obs(obs)
        return np.maximum(self.W1 @ obs + self.b1, 0.0)

    def forward(self, obs: np.ndarray) -> np.ndarray:
        obs = self._check_obs(obs)
        return self.W2 @ self.hidden_features(obs) + self.b2

    def forward_batch(self, obs: np.ndarray) -> np.ndarray:
        obs = self._check_obs(np.atleast_2d(obs))
        h = np.maximum(obs @ self.W1.T + self.b1, 0.0)
        return h @ self.W2.T + self.b2

    def hidden_features_batch(self, obs: np.ndarray) -> np.ndarray:
        obs = self._check_obs(np.atleast_2d(obs))
        return np.maximum(obs @ self.W1.T + self.b1, 0.0)

    def target_forward(self, obs: np.ndarray) -> np.ndarray:
        obs = self._check_obs(obs)
        return self.tW2 @ np.maximum(self.tW1 @ obs + self.tb1, 0.0) + self.tb2

    def target_forward_batch(self, obs: np.ndarray) -> np.ndarray:
        obs = self._check_obs(np.atleast_2d(obs))
        h = np.maximum(obs @ self.tW1.T + self.tb1, 0.0)
        return h @ self.tW2.T + self.tb2

    # ---- training -------------------------------------------------------

    def gradients(
        self, obs: np.ndarray, actions: np.ndarray, targets: np.ndarray
    ) -> tuple[list[np.ndarray], float]:
        """Mean-loss gradients over a batch; loss is taken only at each sample's action."""
        obs = self._check_obs(np.atleast_2d(obs))
        actions = np.asarray(actions, dtype=np.intp)
        targets = np.asarray(targets, dtype=np.float64)
        n = obs.shape[0]
        if n == 0:
            raise ContractViolationError("empty training batch")
        if not np.all(np.isfinite(targets)):
            raise NumericsError("non-finite training targets")

        # Overflow is detected by the explicit finiteness checks downstream.
        with np.errstate(over="ignore", invalid="ignore"):
            z = obs @ self.W1.T + self.b1
            h = np.maximum(z, 0.0)
            q = h @ self.W2.T + self.b2
            rows = np.arange(n)
            diff = q[rows, actions] - targets
            if self.loss == "squared":
                loss = float(np.mean(diff**2))
                dsel = 2.0 * diff / n
            else:  # huber, delta=1
                absd = np.abs(diff)
                loss = float(np.mean(np.where(absd <= 1.0, 0.5 * diff**2, absd - 0.5)))
                dsel = np.clip(diff, -1.0, 1.0) / n

            dq = np.zeros_like(q)
            dq[rows, actions] = dsel
            dW2 = dq.T @ h
            db2 = dq.sum(axis=0)
            dh = dq @ self.W2
            dz = dh * (z > 0)
            dW1 = dz.T @ obs
            db1 = dz.sum(axis=0)
        return [dW1, db1, dW2, db2], loss

    def _flat_grad(self, grads: list[np.ndarray]) -> np.ndarray:
        offset = 0
        for g, size in zip(grads, self._sizes):
            self._grad[offset : offset + size] = g.ravel()
            offset += size
        return self._grad

    def train_batch(self, obs: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> float:
        """One optimizer step on the batch; returns the pre-update loss.

        Raises NumericsError and leaves parameters untouched when the update
        would introduce NaN/Inf.
        """
        grads, loss = self.gradients(obs, actions, targets)
        g = self._flat_grad(grads)
        # inf - inf inside the sum turns into nan, so one scalar catches both
        if not np.isfinite(g.sum()):
            raise NumericsError("non-finite gradient, parameters unchanged")

        with np.errstate(over="ignore", invalid="ignore"):
            if self.optimizer == "sgd":
                theta_new = self._theta - self.learning_rate * g
            else:
                beta1, beta2, eps = 0.9, 0.999, 1e-8
                t = self._adam_t + 1
                m_new = beta1 * self._adam_m + (1 - beta1) * g
                v_new = beta2 * self._adam_v + (1 - beta2) * g**2
                step = (m_new / (1 - beta1**t)) / (np.sqrt(v_new / (1 - beta2**t)) + eps)
                theta_new = self._theta - self.learning_rate * step
        if not np.isfinite(theta_new.sum()):
            raise NumericsError("non-finite parameters after update, parameters unchanged")

        if self.optimizer == "adam":
            self._adam_m = m_new
            self._adam_v = v_new
            self._adam_t += 1
        self._theta[:] = theta_new
        return loss

    def sync_target(self) -> None:
        """target := primary, exact copy."""
        self._target[:] = self._theta

    def target_params(self) -> list[np.ndarray]:
        return [self.tW1, self.tb1, self.tW2, self.tb2]

    def param_bytes(self) -> bytes:
        """Primary parameters as bytes (for exact checksum comparisons)."""
        return np.ascontiguousarray(self._theta, dtype="<f8").tobytes()

    # ---- checkpoints ----------------------------------------------------
    # Format (documented in README): header `<4sIIIIq` = magic b"EDQN",
    # version, input_dim, hidden_units, num_actions, seed; then the eight
    # arrays W1, b1, W2, b2, tW1, tb1, tW2, tb2 as flat little-endian
    # float64 in row-major order. Optimizer state is not stored.

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(
                _HEADER.pack(
                    _MAGIC, _VERSION, self.input_dim, self.hidden_units, self.num_actions, self.seed
                )
            )
            for arr in self._params() + self.target_params():
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str, learning_rate: float = 1e-3, optimizer: str = "adam") -> "QNetwork":
        with open(path, "rb") as fh:
            magic, version, input_dim, hidden, actions, seed = _HEADER.unpack(
                fh.read(_HEADER.size)
            )
            if magic != _MAGIC or version != _VERSION:
                raise ConfigurationError(f"not a checkpoint file: {path}")
            net = cls(
                input_dim,
                hidden,
                actions,
                np.random.default_rng(0),
                learning_rate=learning_rate,
                optimizer=optimizer,
                seed=seed,
            )
            views = net._params() + net.target_params()
            for view in views:
                count = view.size
                buf = fh.read(count * 8)
                if len(buf) != count * 8:
                    raise ConfigurationError(f"truncated checkpoint file: {path}")
                view[:] = np.frombuffer(buf, dtype="<f8").reshape(view.shape)
        return net
