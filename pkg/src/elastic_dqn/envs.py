"""Classic-control environments with deterministic physics and seeded resets.

CartPole, MountainCar and Acrobot, transcribed from the standard published
dynamics (Barto/Sutton/Anderson cart-pole, Moore's mountain car, Sutton's
acrobot with the book RK4 equations). Episodes are capped at 1000 steps;
hitting the cap reports ``truncated`` (distinct from ``terminal`` so the
agent can keep bootstrapping through it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolationError

EPISODE_CAP = 1000


@dataclass(frozen=True)
class EnvState:
    observation: np.ndarray
    step_index: int


@dataclass(frozen=True)
class StepResult:
    next_observation: np.ndarray
    reward: float
    terminal: bool
    truncated: bool


class CartPole:
    """Pole balancing. Observation: cart position/velocity, pole angle/angular velocity."""

    env_id = "cartpole"
    num_actions = 2
    obs_dim = 4
    feature_names = ("cart_position", "cart_velocity", "pole_angle", "pole_angular_velocity")

    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    total_mass = masscart + masspole
    length = 0.5  # half the pole length
    polemass_length = masspole * length
    force_mag = 10.0
    tau = 0.02
    theta_threshold = 12 * 2 * math.pi / 360
    x_threshold = 2.4

    def __init__(self) -> None:
        self._state: np.ndarray | None = None
        self._step_index = 0

    def reset(self, seed: int) -> EnvState:
        rng = np.random.default_rng(seed)
        self._state = rng.uniform(low=-0.05, high=0.05, size=4)
        self._step_index = 0
        return EnvState(self._state.copy(), 0)

    def step(self, action: int) -> StepResult:
        if self._state is None:
            raise ContractViolationError("step() before reset()")
        if action not in (0, 1):
            raise ContractViolationError(f"cartpole action must be 0 or 1, got {action}")
        x, x_dot, theta, theta_dot = self._state
        force = self.force_mag if action == 1 else -self.force_mag
        costheta = math.cos(theta)
        sintheta = math.sin(theta)

        temp = (force + self.polemass_length * theta_dot**2 * sintheta) / self.total_mass
        thetaacc = (self.gravity * sintheta - costheta * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * costheta**2 / self.total_mass)
        )
        xacc = temp - self.polemass_length * thetaacc * costheta / self.total_mass

        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * xacc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * thetaacc
        self._state = np.array([x, x_dot, theta, theta_dot])
        self._step_index += 1

        terminal = bool(
            x < -self.x_threshold
            or x > self.x_threshold
            or theta < -self.theta_threshold
            or theta > self.theta_threshold
        )
        truncated = not terminal and self._step_index >= EPISODE_CAP
        return StepResult(self._state.copy(), 1.0, terminal, truncated)


class MountainCar:
    """Underpowered car in a valley. Observation: position, velocity."""

    env_id = "mountain_car"
    num_actions = 3
    obs_dim = 2
    feature_names = ("position", "velocity")

    min_position = -1.2
    max_position = 0.6
    max_speed = 0.07
    goal_position = 0.5
    goal_velocity = 0.0
    force = 0.001
    gravity = 0.0025

    def __init__(self) -> None:
        self._state: np.ndarray | None = None
        self._step_index = 0

    def reset(self, seed: int) -> EnvState:
        rng = np.random.default_rng(seed)
        self._state = np.array([rng.uniform(low=-0.6, high=-0.4), 0.0])
        self._step_index = 0
        return EnvState(self._state.copy(), 0)

    def step(self, action: int) -> StepResult:
        if self._state is None:
            raise ContractViolationError("step() before reset()")
        if action not in (0, 1, 2):
            raise ContractViolationError(f"mountain_car action must be in 0..2, got {action}")
        position, velocity = self._state
        velocity += (action - 1) * self.force + math.cos(3 * position) * (-self.gravity)
        velocity = min(max(velocity, -self.max_speed), self.max_speed)
        position += velocity
        position = min(max(position, self.min_position), self.max_position)
        if position == self.min_position and velocity < 0:
            velocity = 0.0
        self._state = np.array([position, velocity])
        self._step_index += 1

        terminal = bool(position >= self.goal_position and velocity >= self.goal_velocity)
        truncated = not terminal and self._step_index >= EPISODE_CAP
        return StepResult(self._state.copy(), -1.0, terminal, truncated)


class Acrobot:
    """Two-link swing-up. Observation: cos/sin of both joint angles plus both angular velocities."""

    env_id = "acrobot"
    num_actions = 3
    obs_dim = 6
    feature_names = (
        "cos_theta1",
        "sin_theta1",
        "cos_theta2",
        "sin_theta2",
        "theta1_dot",
        "theta2_dot",
    )

    dt = 0.2
    link_length_1 = 1.0
    link_mass_1 = 1.0
    link_mass_2 = 1.0
    link_com_1 = 0.5
    link_com_2 = 0.5
    link_moi = 1.0
    max_vel_1 = 4 * math.pi
    max_vel_2 = 9 * math.pi
    torques = (-1.0, 0.0, 1.0)
    g = 9.8

    def __init__(self) -> None:
        self._state: np.ndarray | None = None  # theta1, theta2, dtheta1, dtheta2
        self._step_index = 0

    def reset(self, seed: int) -> EnvState:
        rng = np.random.default_rng(seed)
        self._state = rng.uniform(low=-0.1, high=0.1, size=4)
        self._step_index = 0
        return EnvState(self._observation(), 0)

    def _observation(self) -> np.ndarray:
        theta1, theta2, dtheta1, dtheta2 = self._state
        return np.array(
            [
                math.cos(theta1),
                math.sin(theta1),
                math.cos(theta2),
                math.sin(theta2),
                dtheta1,
                dtheta2,
            ]
        )

    def _dsdt(self, s: np.ndarray, torque: float) -> np.ndarray:
        m1 = self.link_mass_1
        m2 = self.link_mass_2
        l1 = self.link_length_1
        lc1 = self.link_com_1
        lc2 = self.link_com_2
        i1 = i2 = self.link_moi
        g = self.g
        theta1, theta2, dtheta1, dtheta2 = s
        d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(theta2)) + i1 + i2
        d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(theta2)) + i2
        phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
        phi1 = (
            -m2 * l1 * lc2 * dtheta2**2 * math.sin(theta2)
            - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
            + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2)
            + phi2
        )
        ddtheta2 = (
            torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * math.sin(theta2) - phi2
        ) / (m2 * lc2**2 + i2 - d2**2 / d1)
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2])

    def step(self, action: int) -> StepResult:
        if self._state is None:
            raise ContractViolationError("step() before reset()")
        if action not in (0, 1, 2):
            raise ContractViolationError(f"acrobot action must be in 0..2, got {action}")
        torque = self.torques[action]

        # One RK4 step over dt.
        y0 = self._state
        dt = self.dt
        k1 = self._dsdt(y0, torque)
        k2 = self._dsdt(y0 + dt / 2 * k1, torque)
        k3 = self._dsdt(y0 + dt / 2 * k2, torque)
        k4 = self._dsdt(y0 + dt * k3, torque)
        ns = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

        ns[0] = _wrap(ns[0], -math.pi, math.pi)
        ns[1] = _wrap(ns[1], -math.pi, math.pi)
        ns[2] = min(max(ns[2], -self.max_vel_1), self.max_vel_1)
        ns[3] = min(max(ns[3], -self.max_vel_2), self.max_vel_2)
        self._state = ns
        self._step_index += 1

        terminal = bool(-math.cos(ns[0]) - math.cos(ns[1] + ns[0]) > 1.0)
        reward = 0.0 if terminal else -1.0
        truncated = not terminal and self._step_index >= EPISODE_CAP
        return StepResult(self._observation(), reward, terminal, truncated)


def _wrap(x: float, low: float, high: float) -> float:
    diff = high - low
    while x > high:
        x -= diff
    while x < low:
        x += diff
    return x


ENVIRONMENTS = {
    CartPole.env_id: CartPole,
    MountainCar.env_id: MountainCar,
    Acrobot.env_id: Acrobot,
}


def make_env(env_id: str) -> CartPole | MountainCar | Acrobot:
    try:
        return ENVIRONMENTS[env_id]()
    except KeyError:
        raise ConfigurationError(
            f"unknown env_id {env_id!r}; expected one of {sorted(ENVIRONMENTS)}"
        ) from None
