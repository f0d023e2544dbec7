"""Independent reference values, computed without the package under test."""

from __future__ import annotations

import math

# first positive root of tan x = x, frozen from bisection_root() below
BALL_FIRST_EIGENVALUE = 4.493409457909064


def bisection_root(lo: float = math.pi + 1e-9, hi: float = 1.5 * math.pi - 1e-9, iters: int = 200) -> float:
    """Root of sin x - x cos x on (pi, 3 pi / 2) by plain bisection."""
    g = lambda x: math.sin(x) - x * math.cos(x)
    a, b = lo, hi
    for _ in range(iters):
        m = 0.5 * (a + b)
        if g(a) * g(m) <= 0:
            b = m
        else:
            a = m
    return 0.5 * (a + b)


def ball_volume(r: float = 1.0) -> float:
    return 4.0 / 3.0 * math.pi * r ** 3


def torus_volume(R: float, r: float) -> float:
    return 2.0 * math.pi ** 2 * R * r * r
