"""Sampled-time PID law.

``pid_step`` is a pure transition: it takes the previous controller memory and
returns the new one, so the same gains object can drive any number of loops.

Discretisation:

* integral term accumulated as the trapezoidal integral of ``ki * e`` (gain
  ahead of the integrator), so rescheduling ``ki`` never makes the output jump;
* derivative on error through a first-order low-pass ``N/(s+N)``
  (parallel-form filter coefficient, time constant ``1/N``), discretised
  exactly for a piecewise-linear error so the kick area is independent of dt;
* ``N = inf`` selects the raw backward difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PidGains:
    kp: float = 30.0
    ki: float = 12.0
    kd: float = 1.0

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"PidGains.{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class PidConfig:
    """Discretisation knobs that are not gains.

    ``clamp`` is an optional ``(u_min, u_max)`` pair. When set, the output is
    saturated and the integrator is frozen while pushing further into the
    limit (conditional integration).
    """

    n_filter: float = 100.0
    clamp: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.n_filter > 0:
            raise ValueError("n_filter must be > 0 (use math.inf for no filter)")
        if self.clamp is not None and not self.clamp[0] < self.clamp[1]:
            raise ValueError("clamp must satisfy u_min < u_max")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    d_filt: float = 0.0
    initialized: bool = False

    @classmethod
    def at_rest(cls) -> PidState:
        """Controller already in service with zero error before the first sample.

        A setpoint step applied to a loop in this state produces the usual
        derivative kick, as in a continuous-time loop whose error was zero at
        ``t = 0-``.
        """
        return cls(initialized=True)


@dataclass(frozen=True)
class PidOutput:
    u: float
    state: PidState
    error: float
    error_rate: float


def pid_step(state: PidState, gains: PidGains, setpoint: float, measurement: float,
             dt: float, config: PidConfig = PidConfig()) -> PidOutput:
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and > 0, got {dt!r}")
    if not (math.isfinite(setpoint) and math.isfinite(measurement)):
        raise ValueError("setpoint and measurement must be finite")

    e = setpoint - measurement
    if state.initialized:
        de = e - state.prev_error
        rate = de / dt
        integral = state.integral + 0.5 * gains.ki * (e + state.prev_error) * dt
        if math.isinf(config.n_filter):
            d_filt = rate
        else:
            a = math.exp(-config.n_filter * dt)
            d_filt = a * state.d_filt + (1.0 - a) * rate
    else:
        # first sample: no history, so no derivative and nothing integrated yet
        rate = 0.0
        integral = 0.0
        d_filt = 0.0

    u = gains.kp * e + integral + gains.kd * d_filt

    if config.clamp is not None:
        lo, hi = config.clamp
        if (u > hi and e > 0) or (u < lo and e < 0):
            integral = state.integral if state.initialized else 0.0
            u = gains.kp * e + integral + gains.kd * d_filt
        u = min(max(u, lo), hi)

    new_state = PidState(integral=integral, prev_error=e, d_filt=d_filt, initialized=True)
    return PidOutput(u, new_state, e, rate)
