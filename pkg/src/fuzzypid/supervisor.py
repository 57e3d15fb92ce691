"""Fuzzy self-tuning PID: the gain scheduler wrapped around ``pid_step``."""
from __future__ import annotations

from dataclasses import dataclass

from .fuzzy import FuzzySystem, gains_from_error
from .pid import PidConfig, PidGains, PidState, pid_step


@dataclass(frozen=True)
class FuzzyPidState:
    pid: PidState = PidState()
    last_gains: PidGains = PidGains(0.0, 0.0, 0.0)
    prev_error: float = 0.0

    @classmethod
    def at_rest(cls) -> FuzzyPidState:
        return cls(pid=PidState.at_rest())


@dataclass(frozen=True)
class FuzzyPidOutput:
    u: float
    gains: PidGains
    state: FuzzyPidState
    error: float
    error_rate: float


def fuzzy_pid_step(state: FuzzyPidState, fis: FuzzySystem, setpoint: float, measurement: float,
                   dt: float, config: PidConfig = PidConfig()) -> FuzzyPidOutput:
    """One control sample: schedule gains from (e, de), then apply the PID law with them.

    ``de`` is the raw backward difference of the error, zero on the very
    first sample of a fresh controller.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    e = setpoint - measurement
    de = (e - state.prev_error) / dt if state.pid.initialized else 0.0
    gains = gains_from_error(fis, e, de)
    out = pid_step(state.pid, gains, setpoint, measurement, dt, config)
    return FuzzyPidOutput(out.u, gains, FuzzyPidState(out.state, gains, e), e, de)
