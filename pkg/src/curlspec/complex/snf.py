"""Small exact integer linear algebra: Smith normal form and lattice kernels."""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def _as_int_object(a) -> np.ndarray:
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    for idx, val in np.ndenumerate(a):
        if isinstance(val, Fraction):
            if val.denominator != 1:
                raise ValueError("matrix has non-integer entries")
            val = val.numerator
        out[idx] = int(val)
    return out


def _identity(n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = int(i == j)
    return out


def smith_normal_form(a, with_transforms: bool = True):
    """Smith normal form U @ A @ V = D over the integers.

    Returns (D, U, V) as object arrays of Python ints; U and V are unimodular.
    Intended for desk-scale matrices (a few hundred rows).
    """
    d = _as_int_object(a).copy()
    m, n = d.shape
    u = _identity(m) if with_transforms else None
    v = _identity(n) if with_transforms else None

    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero magnitude in the trailing block
        block = d[t:, t:]
        nz = [(abs(block[i, j]), i, j) for i in range(m - t) for j in range(n - t) if block[i, j] != 0]
        if not nz:
            break
        _, pi, pj = min(nz)
        pi += t
        pj += t
        d[[t, pi]] = d[[pi, t]]
        d[:, [t, pj]] = d[:, [pj, t]]
        if with_transforms:
            u[[t, pi]] = u[[pi, t]]
            v[:, [t, pj]] = v[:, [pj, t]]
        while True:
            done = True
            for i in range(t + 1, m):
                if d[i, t] != 0:
                    q = d[i, t] // d[t, t]
                    d[i] = d[i] - q * d[t]
                    if with_transforms:
                        u[i] = u[i] - q * u[t]
                    if d[i, t] != 0:
                        done = False
            for j in range(t + 1, n):
                if d[t, j] != 0:
                    q = d[t, j] // d[t, t]
                    d[:, j] = d[:, j] - q * d[:, t]
                    if with_transforms:
                        v[:, j] = v[:, j] - q * v[:, t]
                    if d[t, j] != 0:
                        done = False
            if done:
                # divisibility condition on the trailing block
                bad = [(i, j) for i in range(t + 1, m) for j in range(t + 1, n) if d[i, j] % d[t, t] != 0]
                if not bad:
                    break
                i, _ = bad[0]
                d[t] = d[t] + d[i]
                if with_transforms:
                    u[t] = u[t] + u[i]
                continue
            # move the smallest entry of row/column t into the pivot
            cand = [(abs(d[i, t]), i, t) for i in range(t, m) if d[i, t] != 0]
            cand += [(abs(d[t, j]), t, j) for j in range(t, n) if d[t, j] != 0]
            _, pi, pj = min(cand)
            if pi != t:
                d[[t, pi]] = d[[pi, t]]
                if with_transforms:
                    u[[t, pi]] = u[[pi, t]]
            if pj != t:
                d[:, [t, pj]] = d[:, [pj, t]]
                if with_transforms:
                    v[:, [t, pj]] = v[:, [pj, t]]
        if d[t, t] < 0:
            d[t] = -d[t]
            if with_transforms:
                u[t] = -u[t]
        t += 1
    return d, u, v


def invariant_factors(a) -> list[int]:
    """Nonzero diagonal entries of the Smith normal form."""
    a = np.asarray(a)
    if a.size == 0:
        return []
    d, _, _ = smith_normal_form(a, with_transforms=True)
    return [int(d[i, i]) for i in range(min(d.shape)) if d[i, i] != 0]


def integer_rank(a) -> int:
    return len(invariant_factors(a))


def rationalize(a, max_denominator: int = 64, tol: float = 1e-8) -> np.ndarray:
    """Round a float matrix to nearby rationals, failing loudly if none is close."""
    a = np.asarray(a, dtype=float)
    out = np.empty(a.shape, dtype=object)
    for idx, val in np.ndenumerate(a):
        f = Fraction(val).limit_denominator(max_denominator)
        if abs(float(f) - val) > tol * max(1.0, abs(val)):
            raise ValueError(f"entry {val!r} is not close to a small rational")
        out[idx] = f
    return out


def clear_denominators(a) -> np.ndarray:
    """Scale each row of a rational matrix to integers."""
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for i in range(a.shape[0]):
        den = 1
        for val in a[i]:
            den = den * Fraction(val).denominator // np.gcd(den, Fraction(val).denominator)
        for j in range(a.shape[1]):
            out[i, j] = int(Fraction(a[i, j]) * den)
    return out


def integer_kernel(a) -> np.ndarray:
    """Z-basis (columns) of the saturated integer kernel {x : A x = 0}."""
    a = clear_denominators(a) if np.asarray(a).dtype == object else np.asarray(a)
    d, _, v = smith_normal_form(a)
    r = sum(1 for i in range(min(d.shape)) if d[i, i] != 0)
    return v[:, r:]


def solve_integer(a, b) -> np.ndarray | None:
    """Some integer solution x of A x = b, or None if none exists."""
    a = _as_int_object(a)
    b = _as_int_object(b).reshape(-1)
    d, u, v = smith_normal_form(a)
    c = u.dot(b)
    m, n = a.shape
    y = np.zeros(n, dtype=object)
    for i in range(min(m, n)):
        if d[i, i] != 0:
            if c[i] % d[i, i] != 0:
                return None
            y[i] = c[i] // d[i, i]
        elif c[i] != 0:
            return None
    for i in range(min(m, n), m):
        if c[i] != 0:
            return None
    return v.dot(y)
