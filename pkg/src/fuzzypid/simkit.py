"""Closed-loop scenarios, step-response metrics and the side-by-side comparison."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fuzzy import FuzzySystem, default_fis
from .pid import PidConfig, PidGains, PidState, pid_step
from .plant import MotorParams, PlantState, step_rk4
from .supervisor import FuzzyPidState, fuzzy_pid_step

CONTROLLERS = ("open-loop", "pid", "fuzzy-pid")
DEFAULT_DURATION = {"open-loop": 5.0, "pid": 12.0, "fuzzy-pid": 2.0}
COLUMN_TITLES = {"open-loop": "DC motor without controller", "pid": "PID", "fuzzy-pid": "Fuzzy PID"}
TRACE_HEADER = ("t", "setpoint", "speed", "control", "error", "derror", "kp", "ki", "kd")


@dataclass(frozen=True)
class SimConfig:
    """One step-response experiment.

    ``duration=None`` picks the per-controller default. With ``start_at_rest``
    the controller is taken to be in service with zero error before ``t=0``,
    so the setpoint step produces a derivative kick, as it does in a
    continuous-time loop.
    """

    controller: str = "pid"
    setpoint: float = 2000.0
    dt: float = 1e-3
    duration: float | None = None
    plant: MotorParams = MotorParams()
    gains: PidGains = PidGains()
    pid: PidConfig = PidConfig()
    fis: FuzzySystem | None = field(default=None, compare=True)
    start_at_rest: bool = True

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt!r}")
        if not math.isfinite(self.setpoint):
            raise ValueError("setpoint must be finite")
        if self.duration is not None and not self.duration >= 100 * self.dt:
            raise ValueError(f"duration must be >= 100*dt ({100 * self.dt:g} s), got {self.duration!r}")

    @property
    def total_time(self) -> float:
        return DEFAULT_DURATION[self.controller] if self.duration is None else self.duration

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / self.dt))

    @property
    def label(self) -> str:
        return COLUMN_TITLES[self.controller]


@dataclass(frozen=True, eq=False)
class SimTrace:
    t: np.ndarray
    setpoint: np.ndarray
    speed: np.ndarray
    control: np.ndarray
    error: np.ndarray
    derror: np.ndarray
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in TRACE_HEADER:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"trace column {name!r} has shape {arr.shape}, expected ({n},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n and np.any(np.diff(self.t) <= 0):
            raise ValueError("trace time must be strictly increasing")

    def __len__(self):
        return len(self.t)

    def columns(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in TRACE_HEADER]

    def identical(self, other: SimTrace) -> bool:
        """Bit-for-bit equality of every column."""
        return all(a.tobytes() == b.tobytes() for a, b in zip(self.columns(), other.columns()))


def run(config: SimConfig) -> SimTrace:
    n = config.n_steps + 1
    cols = {name: np.zeros(n) for name in TRACE_HEADER}
    dt, sp, params = config.dt, config.setpoint, config.plant
    x = PlantState()

    if config.controller == "pid":
        state = PidState.at_rest() if config.start_at_rest else PidState()
    elif config.controller == "fuzzy-pid":
        fis = config.fis or default_fis()
        state = FuzzyPidState.at_rest() if config.start_at_rest else FuzzyPidState()
    prev_e = None

    for k in range(n):
        y = x.speed
        if config.controller == "open-loop":
            u = sp
            e = sp - y
            de = 0.0 if prev_e is None else (e - prev_e) / dt
            prev_e = e
            g = (0.0, 0.0, 0.0)
        elif config.controller == "pid":
            out = pid_step(state, config.gains, sp, y, dt, config.pid)
            u, e, de, state = out.u, out.error, out.error_rate, out.state
            g = (config.gains.kp, config.gains.ki, config.gains.kd)
        else:
            out = fuzzy_pid_step(state, fis, sp, y, dt, config.pid)
            u, e, de, state = out.u, out.error, out.error_rate, out.state
            g = (out.gains.kp, out.gains.ki, out.gains.kd)

        row = (k * dt, sp, y, u, e, de, *g)
        for name, value in zip(TRACE_HEADER, row):
            cols[name][k] = value
        if k < n - 1:
            x = step_rk4(x, u, dt, params)
            if not x.is_finite():
                raise FloatingPointError(f"plant state diverged at t={(k + 1) * dt:g} s")

    return SimTrace(**cols)


@dataclass(frozen=True)
class StepMetrics:
    """Figures of merit of one step response. ``None`` means undefined for this trace."""

    overshoot_pct: float | None
    rise_time_s: float | None
    settling_time_s: float | None
    steady_state_error: float | None
    final_value: float | None = None


def _first_crossing(t, y, level, rising):
    hit = y >= level if rising else y <= level
    idx = int(np.argmax(hit))
    if not hit[idx]:
        return None
    if idx == 0:
        return float(t[0])
    y0, y1 = y[idx - 1], y[idx]
    return float(t[idx - 1] + (level - y0) / (y1 - y0) * (t[idx] - t[idx - 1]))


def metrics(trace: SimTrace, tail_fraction: float = 0.1, band: float = 0.02) -> StepMetrics:
    """Overshoot, 10-90% rise, 2% settling and steady-state error of a step response.

    The final value is the mean of the trailing ``tail_fraction`` of samples.
    If those samples still vary by 0.5% of the setpoint or more, settling time
    and steady-state error are undefined.
    """
    t, y = trace.t, trace.speed
    n = len(y)
    if n == 0:
        raise ValueError("empty trace")
    tail = y[-max(1, int(n * tail_fraction)):]
    final = float(tail.mean())
    setpoint = float(trace.setpoint[-1])
    steady = float(np.ptp(tail)) < 0.005 * abs(setpoint) if setpoint else float(np.ptp(tail)) == 0.0

    y0 = float(y[0])
    amplitude = final - y0
    rising = amplitude >= 0

    overshoot = None
    if final != 0:
        # a trace still creeping monotonically toward its limit has no overshoot,
        # even though its last samples sit slightly beyond the tail mean
        if rising:
            excess = float(y.max()) - max(final, float(y[-1]))
        else:
            excess = min(final, float(y[-1])) - float(y.min())
        overshoot = max(0.0, excess / abs(final) * 100.0)

    rise = None
    if amplitude != 0:
        t10 = _first_crossing(t, y, y0 + 0.1 * amplitude, rising)
        t90 = _first_crossing(t, y, y0 + 0.9 * amplitude, rising)
        if t10 is not None and t90 is not None:
            rise = t90 - t10

    settling = None
    if steady:
        tol = band * abs(final)
        outside = np.nonzero(np.abs(y - final) > tol)[0]
        if len(outside) == 0:
            settling = float(t[0])
        elif outside[-1] < n - 1:
            k = int(outside[-1])
            edge = final + math.copysign(tol, y[k] - final)
            settling = float(t[k] + (edge - y[k]) / (y[k + 1] - y[k]) * (t[k + 1] - t[k]))

    sse = abs(setpoint - final) if steady else None
    return StepMetrics(overshoot, rise, settling, sse, final)


METRIC_ROWS = (
    ("Overshoot(%)", "overshoot_pct"),
    ("Rise time (10-90%) (s)", "rise_time_s"),
    ("Steady state error", "steady_state_error"),
    ("Settling time (2%) (s)", "settling_time_s"),
)


@dataclass(frozen=True)
class Column:
    title: str
    config: SimConfig
    metrics: StepMetrics | None = None
    trace: SimTrace | None = None
    error: str | None = None


@dataclass(frozen=True)
class Comparison:
    columns: tuple[Column, ...]

    def rows(self) -> list[list[str]]:
        out = [["Parameters", *(c.title for c in self.columns)]]
        for label, attr in METRIC_ROWS:
            out.append([label, *(_cell(c, attr) for c in self.columns)])
        return out

    def to_text(self) -> str:
        rows = self.rows()
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
        lines = [sep]
        for i, r in enumerate(rows):
            lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |")
            if i == 0:
                lines.append(sep.replace("-", "="))
        lines.append(sep)
        errors = [f"{c.title}: {c.error}" for c in self.columns if c.error]
        if errors:
            lines += ["", "errors:", *errors]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(self.rows())
        return buf.getvalue()


def _cell(col: Column, attr: str) -> str:
    if col.metrics is None:
        return "error"
    value = getattr(col.metrics, attr)
    if value is None:
        return "undefined"
    if attr == "overshoot_pct":
        return f"{value:.3f}"
    return f"{value:.4g}" if abs(value) >= 1 or value == 0 else f"{value:.4f}"


def compare(configs) -> Comparison:
    """Run each scenario and tabulate its metrics, in input order.

    A failure in one scenario is recorded in its column and does not stop
    the others.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("compare needs at least one scenario")
    columns = []
    for cfg in configs:
        try:
            trace = run(cfg)
            columns.append(Column(cfg.label, cfg, metrics(trace), trace))
        except (ValueError, FloatingPointError) as exc:
            columns.append(Column(cfg.label, cfg, error=str(exc)))
    return Comparison(tuple(columns))


def default_scenarios(**overrides) -> list[SimConfig]:
    return [SimConfig(controller=kind, **overrides) for kind in CONTROLLERS]


def write_trace(trace: SimTrace, path: str | Path) -> None:
    Path(path).write_text(trace_to_csv(trace), encoding="utf-8", newline="")


def trace_to_csv(trace: SimTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for row in zip(*(c.tolist() for c in trace.columns())):
        writer.writerow([repr(v) for v in row])
    return buf.getvalue()


def read_trace(path: str | Path) -> SimTrace:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(TRACE_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(TRACE_HEADER)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
    data = np.array(rows, dtype=float).reshape(-1, len(TRACE_HEADER))
    return SimTrace(*(data[:, i] for i in range(len(TRACE_HEADER))))
