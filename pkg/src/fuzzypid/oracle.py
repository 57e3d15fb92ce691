"""Closed-form linear-systems reference for the motor and the fixed-gain loop.

Nothing here shares code with the numerical integrator; these functions exist
so the simulation can be checked against exact answers.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .plant import MotorParams


@dataclass(frozen=True)
class Poly2:
    """``a2*s**2 + a1*s + a0``."""

    a2: float
    a1: float
    a0: float

    def __post_init__(self):
        if self.a2 == 0:
            raise ValueError("Poly2 leading coefficient must be non-zero")

    def __call__(self, s):
        return (self.a2 * s + self.a1) * s + self.a0

    @property
    def discriminant(self) -> float:
        return self.a1 * self.a1 - 4.0 * self.a2 * self.a0

    def roots(self) -> tuple[complex, complex]:
        """Both roots, the more negative real part first."""
        sq = cmath.sqrt(self.discriminant)
        # avoid cancellation: compute the larger-magnitude root first
        sign = 1.0 if self.a1 >= 0 else -1.0
        q = -0.5 * (self.a1 + sign * sq)
        if q == 0:
            r1 = r2 = 0j
        else:
            r1, r2 = q / self.a2, self.a0 / q
        return tuple(sorted((complex(r1), complex(r2)), key=lambda z: (z.real, z.imag)))


def transfer_coeffs(params: MotorParams) -> tuple[float, Poly2]:
    """Numerator gain and denominator of speed/voltage: Kt / ((J s + b)(La s + Ra) + Kt Kb)."""
    p = params
    return p.kt, Poly2(p.j * p.la, p.j * p.ra + p.b * p.la, p.b * p.ra + p.kt * p.kb)


def dc_gain(params: MotorParams) -> float:
    gain, den = transfer_coeffs(params)
    return gain / den.a0


def open_loop_poles(params: MotorParams) -> tuple[float, float]:
    """Real, distinct open-loop poles (slow pole first)."""
    _, den = transfer_coeffs(params)
    disc = den.discriminant
    if not disc > 0:
        raise ValueError(f"open-loop poles are not real and distinct (discriminant {disc:g})")
    r_fast, r_slow = (z.real for z in den.roots())
    return r_slow, r_fast


def open_loop_step(params: MotorParams, v_step: float, t):
    """Exact speed response to a voltage step applied at t=0 from rest.

    ``t`` may be a scalar or a numpy array. Only the real-distinct-pole
    regime is supported.
    """
    gain, den = transfer_coeffs(params)
    p1, p2 = open_loop_poles(params)
    k = v_step * gain / den.a2
    try:
        import numpy as np

        exp = np.exp
    except ImportError:  # pragma: no cover
        exp = math.exp
    return k * (1.0 / (p1 * p2)
                + exp(p1 * t) / (p1 * (p1 - p2))
                + exp(p2 * t) / (p2 * (p2 - p1)))


def closed_loop_poly(params: MotorParams, gains) -> tuple[float, float, float, float]:
    """Characteristic cubic of plant + PID under unity feedback, highest power first."""
    gain, den = transfer_coeffs(params)
    return (den.a2,
            den.a1 + gain * gains.kd,
            den.a0 + gain * gains.kp,
            gain * gains.ki)


def cubic_roots(a: float, b: float, c: float, d: float) -> list[complex]:
    """Roots of ``a s^3 + b s^2 + c s + d`` by the trigonometric/Cardano method.

    Each root is refined with two Newton steps; results are accurate to about
    1e-9 relative for well-conditioned inputs. Sorted by real part ascending.
    """
    if a == 0:
        raise ValueError("leading coefficient must be non-zero")
    if d == 0:
        roots = [0j, *Poly2(a, b, c).roots()] if b or c else [0j, 0j, 0j]
        return sorted(roots, key=lambda z: (z.real, z.imag))

    B, C, D = b / a, c / a, d / a
    shift = -B / 3.0
    p = C - B * B / 3.0
    q = 2.0 * B ** 3 / 27.0 - B * C / 3.0 + D
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    if disc < 0:
        # three distinct real roots
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        roots = [complex(m * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift) for k in range(3)]
    else:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
        v = math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
        real = u + v + shift
        re = -(u + v) / 2.0 + shift
        im = (u - v) * math.sqrt(3.0) / 2.0
        roots = [complex(real), complex(re, im), complex(re, -im)]

    def f(s):
        return ((a * s + b) * s + c) * s + d

    def fp(s):
        return (3.0 * a * s + 2.0 * b) * s + c

    polished = []
    for r in roots:
        for _ in range(2):
            g = fp(r)
            if g == 0:
                break
            r = r - f(r) / g
        if abs(r.imag) < 1e-12 * max(1.0, abs(r.real)):
            r = complex(r.real)
        polished.append(r)
    return sorted(polished, key=lambda z: (z.real, z.imag))


def closed_loop_poles(params: MotorParams, gains) -> list[complex]:
    """Three closed-loop poles of the fixed-gain PID loop, sorted by real part."""
    if gains.kd < 0:
        raise ValueError("kd must be >= 0")
    return cubic_roots(*closed_loop_poly(params, gains))
