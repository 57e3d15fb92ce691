"""Armature-controlled DC motor and its fixed-step RK4 integrator.

States are the armature current ``i`` and the shaft speed ``w``::

    J dw/dt = Kt*i - b*w
    La di/dt = V - Ra*i - Kb*w

Speed is carried in a single "speed unit" throughout; no rad/s <-> rpm
conversion happens anywhere in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MotorParams:
    """Physical constants of the motor. Defaults are the reference motor."""

    kt: float = 0.5  # N.m/A
    kb: float = 1.25  # V.s/rad
    ra: float = 5.0  # ohm
    la: float = 0.2  # H
    b: float = 0.008  # N.m.s/rad
    j: float = 0.1  # kg.m^2

    def __post_init__(self):
        for name in ("kt", "kb", "ra", "la", "b", "j"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"MotorParams.{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class PlantState:
    current: float = 0.0
    speed: float = 0.0

    def is_finite(self) -> bool:
        return math.isfinite(self.current) and math.isfinite(self.speed)


def derivatives(state: PlantState, v_in: float, params: MotorParams) -> PlantState:
    """Return ``(di/dt, dw/dt)`` packed in a PlantState."""
    torque = params.kt * state.current
    back_emf = params.kb * state.speed
    di = (v_in - params.ra * state.current - back_emf) / params.la
    dw = (torque - params.b * state.speed) / params.j
    return PlantState(di, dw)


def step_rk4(state: PlantState, v_in: float, dt: float, params: MotorParams) -> PlantState:
    """Advance the motor by one classical Runge-Kutta step with ``v_in`` held."""
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and > 0, got {dt!r}")
    if not (state.is_finite() and math.isfinite(v_in)):
        raise ValueError("step_rk4 requires finite state and voltage")

    i0, w0 = state.current, state.speed
    k1 = derivatives(state, v_in, params)
    k2 = derivatives(PlantState(i0 + 0.5 * dt * k1.current, w0 + 0.5 * dt * k1.speed), v_in, params)
    k3 = derivatives(PlantState(i0 + 0.5 * dt * k2.current, w0 + 0.5 * dt * k2.speed), v_in, params)
    k4 = derivatives(PlantState(i0 + dt * k3.current, w0 + dt * k3.speed), v_in, params)
    return PlantState(
        i0 + dt / 6.0 * (k1.current + 2.0 * k2.current + 2.0 * k3.current + k4.current),
        w0 + dt / 6.0 * (k1.speed + 2.0 * k2.speed + 2.0 * k3.speed + k4.speed),
    )


def equilibrium(v_in: float, params: MotorParams) -> PlantState:
    """Fixed point of the motor for a constant applied voltage."""
    speed = v_in * params.kt / (params.ra * params.b + params.kt * params.kb)
    return PlantState(params.b * speed / params.kt, speed)


def simulate_open_loop(v_in: float, dt: float, n_steps: int, params: MotorParams,
                       state: PlantState | None = None) -> list[PlantState]:
    """Trajectory of ``n_steps`` RK4 steps under constant voltage, initial state included."""
    state = state or PlantState()
    out = [state]
    for _ in range(n_steps):
        state = step_rk4(state, v_in, dt, params)
        out.append(state)
    return out
