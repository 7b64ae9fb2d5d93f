"""Trigamma function for complex arguments.

Recurrence lift away from the origin followed by the asymptotic series;
target accuracy 1e-10 relative for Re(z) > 0. Arguments left of the line
Re(z) = 1/2 are handled by reflection.
"""

from __future__ import annotations

import cmath

# Bernoulli numbers B_2..B_20
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
)

_LIFT_RADIUS = 10.0


def trigamma(z: complex) -> complex:
    """d^2/dz^2 log Gamma(z), for complex z off the nonpositive integers."""
    z = complex(z)
    # far from the real axis the asymptotic series holds for any Re(z),
    # and sin(pi z) would overflow; reflect only near the axis
    if z.real < 0.5 and abs(z.imag) <= 100.0:
        s = cmath.sin(cmath.pi * z)
        if s == 0:
            raise ZeroDivisionError(f"trigamma pole at z={z}")
        return -trigamma(1.0 - z) + (cmath.pi / s) ** 2
    acc = 0.0 + 0.0j
    while abs(z) < _LIFT_RADIUS:
        acc += 1.0 / (z * z)
        z += 1.0
    w = 1.0 / (z * z)
    tail = 0.0 + 0.0j
    for b in reversed(_BERNOULLI):
        tail = (tail + b) * w
    return acc + 1.0 / z + 0.5 * w + tail / z
