"""DC motor speed control: plant model, PID and fuzzy self-tuning PID, step-response metrics."""
from .fuzzy import FisGeometry, FuzzySystem, default_fis, gains_from_error
from .oracle import closed_loop_poles, open_loop_step, transfer_coeffs
from .pid import PidConfig, PidGains, PidState, pid_step
from .plant import MotorParams, PlantState, derivatives, step_rk4
from .simkit import SimConfig, SimTrace, StepMetrics, compare, metrics, run
from .supervisor import FuzzyPidState, fuzzy_pid_step

__all__ = [
    "FisGeometry", "FuzzySystem", "default_fis", "gains_from_error",
    "closed_loop_poles", "open_loop_step", "transfer_coeffs",
    "PidConfig", "PidGains", "PidState", "pid_step",
    "MotorParams", "PlantState", "derivatives", "step_rk4",
    "SimConfig", "SimTrace", "StepMetrics", "compare", "metrics", "run",
    "FuzzyPidState", "fuzzy_pid_step",
]
__version__ = "0.1.0"
