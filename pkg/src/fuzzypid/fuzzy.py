"""Mamdani inference for scheduling PID gains from (error, error rate).

Two five-term inputs, three seven-term outputs and one 5x5 rule table per
output. AND is ``min``, aggregation is ``max``, and the crisp output is the
centroid of the clipped-and-aggregated output set sampled on a uniform grid.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .pid import PidGains

INPUT_TERMS = ("NL", "NS", "ZE", "PS", "PL")
OUTPUT_TERMS = ("PVS", "PS", "PMS", "PM", "PML", "PL", "PVL")
GAIN_NAMES = ("kp", "ki", "kd")


class NoRuleFired(ValueError):
    pass


@dataclass(frozen=True)
class MembershipFn:
    """Piecewise-linear membership function given by ``(x, mu)`` vertices."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(m)) for x, m in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if len(pts) < 2:
            raise ValueError("a membership function needs at least 2 vertices")
        xs = [x for x, _ in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"vertex abscissae must be strictly increasing: {xs}")
        if any(not 0.0 <= m <= 1.0 for _, m in pts):
            raise ValueError("vertex degrees must lie in [0, 1]")

    @property
    def xs(self) -> tuple[float, ...]:
        return tuple(x for x, _ in self.breakpoints)

    @property
    def peak(self) -> float:
        """Centre of the plateau where the function reaches its maximum."""
        top = max(m for _, m in self.breakpoints)
        at_top = [x for x, m in self.breakpoints if m == top]
        return 0.5 * (at_top[0] + at_top[-1])

    def __call__(self, x: float) -> float:
        return membership(self, x)

    def sample(self, xs: np.ndarray) -> np.ndarray:
        px, pm = zip(*self.breakpoints)
        return np.interp(xs, px, pm, left=0.0, right=0.0)


def membership(mf: MembershipFn, x: float) -> float:
    pts = mf.breakpoints
    if x < pts[0][0] or x > pts[-1][0]:
        return 0.0
    k = bisect.bisect_right(mf.xs, x)
    if k >= len(pts):
        return pts[-1][1]
    (x0, m0), (x1, m1) = pts[k - 1], pts[k]
    return m0 + (m1 - m0) * (x - x0) / (x1 - x0)


def _partition(lo: float, hi: float, peaks) -> tuple[MembershipFn, ...]:
    """Ruspini partition of [lo, hi]: triangles between neighbouring peaks, shoulders at the ends."""
    peaks = [float(p) for p in peaks]
    if any(b <= a for a, b in zip(peaks, peaks[1:])):
        raise ValueError(f"term peaks must be strictly increasing: {peaks}")
    if peaks[0] < lo or peaks[-1] > hi:
        raise ValueError(f"term peaks {peaks} fall outside the universe [{lo}, {hi}]")
    n = len(peaks)
    terms = []
    for k, p in enumerate(peaks):
        if k == 0:
            pts = [(lo, 1.0)] + ([(p, 1.0)] if p > lo else []) + [(peaks[1], 0.0)]
        elif k == n - 1:
            pts = [(peaks[k - 1], 0.0), (p, 1.0)] + ([(hi, 1.0)] if p < hi else [])
        else:
            pts = [(peaks[k - 1], 0.0), (p, 1.0), (peaks[k + 1], 0.0)]
        terms.append(MembershipFn(tuple(pts)))
    return tuple(terms)


def _partition_peaks(terms) -> tuple[float, ...]:
    """Inverse of ``_partition``: the inner plateau edge for shoulders, the apex otherwise."""
    top0 = max(m for _, m in terms[0].breakpoints)
    top1 = max(m for _, m in terms[-1].breakpoints)
    first = [x for x, m in terms[0].breakpoints if m == top0][-1]
    last = [x for x, m in terms[-1].breakpoints if m == top1][0]
    return (first, *(t.peak for t in terms[1:-1]), last)


def _check_partition(terms, lo, hi, what):
    xs = sorted({x for t in terms for x in t.xs if lo <= x <= hi} | {lo, hi})
    mids = [(a + b) / 2 for a, b in zip(xs, xs[1:])]
    for x in xs + mids:
        total = sum(membership(t, x) for t in terms)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"{what}: memberships sum to {total!r} at x={x}, not 1")


@dataclass(frozen=True)
class InputVariable:
    name: str
    lo: float
    hi: float
    terms: tuple[MembershipFn, ...]
    scale: float = 1.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: empty universe [{self.lo}, {self.hi}]")
        if len(self.terms) != len(INPUT_TERMS):
            raise ValueError(f"{self.name}: need exactly {len(INPUT_TERMS)} terms")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"{self.name}: scale must be finite and > 0")
        _check_partition(self.terms, self.lo, self.hi, self.name)
        if membership(self.terms[0], self.lo) != 1.0 or membership(self.terms[-1], self.hi) != 1.0:
            raise ValueError(f"{self.name}: NL/PL must saturate at the universe edges")

    @classmethod
    def from_peaks(cls, name: str, lo: float, hi: float, peaks, scale: float = 1.0) -> InputVariable:
        return cls(name, float(lo), float(hi), _partition(lo, hi, peaks), float(scale))

    @classmethod
    def symmetric(cls, name: str, half_width: float, peak_fracs=(-1.0, -0.25, 0.0, 0.25, 1.0),
                  scale: float = 1.0) -> InputVariable:
        return cls.from_peaks(name, -half_width, half_width, [f * half_width for f in peak_fracs], scale)

    @property
    def peaks(self) -> tuple[float, ...]:
        return _partition_peaks(self.terms)


@dataclass(frozen=True)
class OutputVariable:
    name: str
    max: float
    terms: tuple[MembershipFn, ...]

    def __post_init__(self):
        if not self.max > 0:
            raise ValueError(f"{self.name}: universe max must be > 0")
        if len(self.terms) != len(OUTPUT_TERMS):
            raise ValueError(f"{self.name}: need exactly {len(OUTPUT_TERMS)} terms")
        peaks = _partition_peaks(self.terms)
        if any(b <= a for a, b in zip(peaks, peaks[1:])):
            raise ValueError(f"{self.name}: term peaks must be strictly increasing, got {peaks}")
        if peaks[-1] != self.max:
            raise ValueError(f"{self.name}: PVL must peak at the universe max {self.max}")
        if min(t.xs[0] for t in self.terms) < 0 or max(t.xs[-1] for t in self.terms) > self.max:
            raise ValueError(f"{self.name}: terms must stay inside [0, {self.max}]")

    @classmethod
    def from_peaks(cls, name: str, peaks) -> OutputVariable:
        peaks = tuple(float(p) for p in peaks)
        return cls(name, peaks[-1], _partition(0.0, peaks[-1], peaks))

    @classmethod
    def uniform(cls, name: str, max_value: float) -> OutputVariable:
        return cls.from_peaks(name, [max_value * k / 6 for k in range(7)])

    @property
    def peaks(self) -> tuple[float, ...]:
        return _partition_peaks(self.terms)

    def index(self, term: str) -> int:
        return OUTPUT_TERMS.index(term)


@dataclass(frozen=True)
class RuleTable:
    """Output term per (error term, error-rate term), rows by error."""

    name: str
    cells: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        cells = tuple(tuple(row) for row in self.cells)
        object.__setattr__(self, "cells", cells)
        if len(cells) != 5 or any(len(r) != 5 for r in cells):
            raise ValueError(f"rule table {self.name!r} must be 5x5")
        for row in cells:
            for term in row:
                if term not in OUTPUT_TERMS:
                    raise ValueError(f"rule table {self.name!r}: unknown output term {term!r}")

    def __getitem__(self, key: tuple[str, str]) -> str:
        e_term, de_term = key
        return self.cells[INPUT_TERMS.index(e_term)][INPUT_TERMS.index(de_term)]

    @property
    def index_grid(self) -> np.ndarray:
        return _index_grid(self.cells)

    @classmethod
    def constant(cls, name: str, term: str) -> RuleTable:
        return cls(name, tuple((term,) * 5 for _ in range(5)))


@lru_cache(maxsize=64)
def _index_grid(cells) -> np.ndarray:
    grid = np.array([[OUTPUT_TERMS.index(t) for t in row] for row in cells], dtype=np.intp)
    grid.setflags(write=False)
    return grid


def parse_rule_tables(text: str, source: str = "<rules>") -> dict[str, RuleTable]:
    """Parse ``[name]`` sections of 5 whitespace-separated rows each. ``#`` starts a comment."""
    tables: dict[str, list[list[str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in tables:
                raise ValueError(f"{source}:{lineno}: duplicate table [{current}]")
            tables[current] = []
            continue
        if current is None:
            raise ValueError(f"{source}:{lineno}: row outside of a [table] section")
        row = line.split()
        if len(row) != 5:
            raise ValueError(f"{source}:{lineno}: expected 5 terms, got {len(row)}")
        tables[current].append(row)
    out = {}
    for name, rows in tables.items():
        try:
            out[name] = RuleTable(name, tuple(tuple(r) for r in rows))
        except ValueError as exc:
            raise ValueError(f"{source}: {exc}") from None
    return out


def load_rule_tables(path: str | Path | None = None) -> dict[str, RuleTable]:
    """Load rule tables from ``path``, or the packaged default tables."""
    if path is None:
        text = resources.files("fuzzypid").joinpath("data/rules.txt").read_text(encoding="utf-8")
        source = "rules.txt"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    tables = parse_rule_tables(text, source)
    missing = [g for g in GAIN_NAMES if g not in tables]
    if missing:
        raise ValueError(f"{source}: missing rule tables {missing}")
    return tables


@dataclass(frozen=True)
class FuzzySystem:
    e_var: InputVariable
    de_var: InputVariable
    kp_out: OutputVariable
    ki_out: OutputVariable
    kd_out: OutputVariable
    kp_rules: RuleTable
    ki_rules: RuleTable
    kd_rules: RuleTable
    defuzz_resolution: int = 1001

    def __post_init__(self):
        if self.defuzz_resolution < 101:
            raise ValueError("defuzz_resolution must be >= 101")

    @property
    def outputs(self) -> tuple[OutputVariable, OutputVariable, OutputVariable]:
        return self.kp_out, self.ki_out, self.kd_out

    @property
    def rules(self) -> tuple[RuleTable, RuleTable, RuleTable]:
        return self.kp_rules, self.ki_rules, self.kd_rules


def fuzzify(var: InputVariable, x_physical: float) -> np.ndarray:
    x = min(max(var.scale * x_physical, var.lo), var.hi)
    return np.array([membership(t, x) for t in var.terms])


def infer(rules: RuleTable, e_deg, de_deg) -> np.ndarray:
    strength = np.minimum.outer(np.asarray(e_deg, float), np.asarray(de_deg, float))
    act = np.zeros(len(OUTPUT_TERMS))
    np.maximum.at(act, rules.index_grid.ravel(), strength.ravel())
    return act


@lru_cache(maxsize=64)
def _output_samples(var: OutputVariable, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(0.0, var.max, resolution)
    mus = np.vstack([t.sample(xs) for t in var.terms])
    xs.setflags(write=False)
    mus.setflags(write=False)
    return xs, mus


def defuzz_centroid(var: OutputVariable, activations, resolution: int = 1001) -> float:
    act = np.asarray(activations, float)
    if not np.any(act > 0):
        raise NoRuleFired(f"{var.name}: no rule fired")
    xs, mus = _output_samples(var, int(resolution))
    agg = np.minimum(mus, act[:, None]).max(axis=0)
    return float(np.dot(xs, agg) / agg.sum())


def gains_from_error(fis: FuzzySystem, e: float, de: float) -> PidGains:
    if not (math.isfinite(e) and math.isfinite(de)):
        raise ValueError("e and de must be finite")
    e_deg = fuzzify(fis.e_var, e)
    de_deg = fuzzify(fis.de_var, de)
    values = [defuzz_centroid(out, infer(rules, e_deg, de_deg), fis.defuzz_resolution)
              for out, rules in zip(fis.outputs, fis.rules)]
    # centroid of non-negative weights on [0, max] can only leave it by rounding
    values = [min(max(v, 0.0), out.max) for v, out in zip(values, fis.outputs)]
    return PidGains(*values)


@dataclass(frozen=True)
class FisGeometry:
    """Numeric layout of the membership functions; everything a config file can set.

    Input peaks are absolute positions (after scaling) of NL..PL; output peaks
    are absolute positions of PVS..PVL, the last one being the universe max.

    The defaults are calibrated for the reference motor and a 2000-unit step.
    PL is pushed far out, so the whole step runs on the PS error row, where
    moderate Kp and near-maximal Ki fill the integrator. The narrow ZE band on
    both inputs hands over to the small-Kp cells only for the final approach.
    The error-rate universe is narrow so that any real motion reads as NL,
    keeping Kd on its small PML/PM terms until the speed has settled.
    """

    e_universe: tuple[float, float] = (-100000.0, 100000.0)
    e_peaks: tuple[float, ...] = (-100000.0, -60.0, 0.0, 60.0, 100000.0)
    e_scale: float = 1.0
    de_universe: tuple[float, float] = (-270.0, 270.0)
    de_peaks: tuple[float, ...] = (-270.0, -150.0, 0.0, 150.0, 270.0)
    de_scale: float = 1.0
    kp_peaks: tuple[float, ...] = (0.1, 0.6, 1.1, 3.6, 6.2, 10.8, 30.0)
    ki_peaks: tuple[float, ...] = (11.6, 11.62, 11.64, 11.66, 11.68, 11.7, 12.0)
    kd_peaks: tuple[float, ...] = (0.01, 0.02, 0.03, 0.04, 0.05, 0.12, 1.0)
    resolution: int = 1001

    def build(self, rules: dict[str, RuleTable] | None = None) -> FuzzySystem:
        rules = rules or load_rule_tables()
        return FuzzySystem(
            InputVariable.from_peaks("e", *self.e_universe, self.e_peaks, self.e_scale),
            InputVariable.from_peaks("de", *self.de_universe, self.de_peaks, self.de_scale),
            OutputVariable.from_peaks("kp", self.kp_peaks),
            OutputVariable.from_peaks("ki", self.ki_peaks),
            OutputVariable.from_peaks("kd", self.kd_peaks),
            rules["kp"], rules["ki"], rules["kd"],
            self.resolution,
        )

    @classmethod
    def of(cls, fis: FuzzySystem) -> FisGeometry:
        return cls(
            (fis.e_var.lo, fis.e_var.hi), fis.e_var.peaks, fis.e_var.scale,
            (fis.de_var.lo, fis.de_var.hi), fis.de_var.peaks, fis.de_var.scale,
            fis.kp_out.peaks, fis.ki_out.peaks, fis.kd_out.peaks,
            fis.defuzz_resolution,
        )


DEFAULT_GEOMETRY = FisGeometry()


def default_fis() -> FuzzySystem:
    return _default_fis()


@lru_cache(maxsize=1)
def _default_fis() -> FuzzySystem:
    return DEFAULT_GEOMETRY.build()
