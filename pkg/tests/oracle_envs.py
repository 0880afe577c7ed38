"""Independent re-implementation of the three classic-control dynamics.

Written procedurally on plain tuples (no shared code with the package) from
the same published equations: Barto/Sutton/Anderson cart-pole with Euler
integration, Moore's mountain car, and the book acrobot with a single RK4
step per action. Init distributions mirror the published ones, drawn from
numpy's default PCG64 generator.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


# ------------------------------------------------------------------ cartpole

def cartpole_reset(seed):
    state = tuple(np.random.default_rng(seed).uniform(-0.05, 0.05, size=4).tolist())
    return state


def cartpole_step(state, action):
    x, x_dot, theta, theta_dot = state
    force = 10.0 if action == 1 else -10.0
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    masspole, length = 0.1, 0.5
    total_mass = 1.0 + masspole
    pml = masspole * length
    temp = (force + pml * theta_dot * theta_dot * sin_t) / total_mass
    theta_acc = (9.8 * sin_t - cos_t * temp) / (
        length * (4.0 / 3.0 - masspole * cos_t * cos_t / total_mass)
    )
    x_acc = temp - pml * theta_acc * cos_t / total_mass
    tau = 0.02
    x = x + tau * x_dot
    x_dot = x_dot + tau * x_acc
    theta = theta + tau * theta_dot
    theta_dot = theta_dot + tau * theta_acc
    twelve_deg = 12 * TWO_PI / 360.0
    done = x < -2.4 or x > 2.4 or theta < -twelve_deg or theta > twelve_deg
    return (x, x_dot, theta, theta_dot), 1.0, done


def cartpole_observation(state):
    return list(state)


# -------------------------------------------------------------- mountain car

def mountain_car_reset(seed):
    rng = np.random.default_rng(seed)
    return (float(rng.uniform(-0.6, -0.4)), 0.0)


def mountain_car_step(state, action):
    position, velocity = state
    velocity = velocity + (action - 1) * 0.001 + math.cos(3 * position) * (-0.0025)
    if velocity > 0.07:
        velocity = 0.07
    if velocity < -0.07:
        velocity = -0.07
    position = position + velocity
    if position > 0.6:
        position = 0.6
    if position < -1.2:
        position = -1.2
    if position == -1.2 and velocity < 0:
        velocity = 0.0
    done = position >= 0.5 and velocity >= 0.0
    return (position, velocity), -1.0, done


def mountain_car_observation(state):
    return list(state)


# ------------------------------------------------------------------- acrobot

def acrobot_reset(seed):
    return tuple(np.random.default_rng(seed).uniform(-0.1, 0.1, size=4).tolist())


def _acrobot_derivatives(state, torque):
    theta1, theta2, dtheta1, dtheta2 = state
    m1 = m2 = 1.0
    l1 = 1.0
    lc1 = lc2 = 0.5
    i1 = i2 = 1.0
    g = 9.8
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
    return (dtheta1, dtheta2, ddtheta1, ddtheta2)


def _wrap_angle(value):
    while value > math.pi:
        value -= TWO_PI
    while value < -math.pi:
        value += TWO_PI
    return value


def acrobot_step(state, action):
    torque = (-1.0, 0.0, 1.0)[action]
    dt = 0.2
    y0 = np.asarray(state, dtype=np.float64)
    k1 = np.asarray(_acrobot_derivatives(tuple(y0), torque))
    k2 = np.asarray(_acrobot_derivatives(tuple(y0 + dt / 2 * k1), torque))
    k3 = np.asarray(_acrobot_derivatives(tuple(y0 + dt / 2 * k2), torque))
    k4 = np.asarray(_acrobot_derivatives(tuple(y0 + dt * k3), torque))
    ns = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    theta1 = _wrap_angle(float(ns[0]))
    theta2 = _wrap_angle(float(ns[1]))
    dtheta1 = min(max(float(ns[2]), -4 * math.pi), 4 * math.pi)
    dtheta2 = min(max(float(ns[3]), -9 * math.pi), 9 * math.pi)
    done = -math.cos(theta1) - math.cos(theta2 + theta1) > 1.0
    reward = 0.0 if done else -1.0
    return (theta1, theta2, dtheta1, dtheta2), reward, done


def acrobot_observation(state):
    theta1, theta2, dtheta1, dtheta2 = state
    return [
        math.cos(theta1),
        math.sin(theta1),
        math.cos(theta2),
        math.sin(theta2),
        dtheta1,
        dtheta2,
    ]


REFERENCE = {
    "cartpole": (cartpole_reset, cartpole_step, cartpole_observation, 2),
    "mountain_car": (mountain_car_reset, mountain_car_step, mountain_car_observation, 3),
    "acrobot": (acrobot_reset, acrobot_step, acrobot_observation, 3),
}
