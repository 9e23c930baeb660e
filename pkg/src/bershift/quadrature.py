"""Adaptive Simpson quadrature with kink-aware interval splitting.

Integrands coming from the density families are piecewise smooth (the Laplace
density has a kink at its shift point), so the caller passes the kink
locations and each smooth piece is integrated adaptively.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable


class QuadratureBudgetError(RuntimeError):
    pass


def _simpson(f, a, fa, b, fb, m, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, fa, b, fb, m, fm, whole, tol, state):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    state[0] += 2
    if state[0] > state[1]:
        raise QuadratureBudgetError(f"evaluation budget {state[1]} exhausted")
    left = _simpson(f, a, fa, m, fm, lm, flm)
    right = _simpson(f, m, fm, b, fb, rm, frm)
    err = left + right - whole
    if abs(err) <= 15.0 * tol or (b - a) < 1e-14 * (1.0 + abs(a) + abs(b)):
        return left + right + err / 15.0
    return _adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2.0, state) + _adaptive(
        f, m, fm, b, fb, rm, frm, right, tol / 2.0, state
    )


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    tol: float = 1e-10,
    points: Iterable[float] = (),
    max_evals: int = 10**6,
) -> float:
    """Integrate f over [a, b], splitting at the interior `points`."""
    if b <= a:
        return 0.0
    cuts = sorted({a, b, *(p for p in points if a < p < b)})
    state = [0, max_evals]
    total = 0.0
    ptol = tol / max(1, len(cuts) - 1)
    for lo, hi in zip(cuts, cuts[1:]):
        m = 0.5 * (lo + hi)
        flo, fhi, fm = f(lo), f(hi), f(m)
        state[0] += 3
        whole = _simpson(f, lo, flo, hi, fhi, m, fm)
        total += _adaptive(f, lo, flo, hi, fhi, m, fm, whole, ptol, state)
    return total


def wrap_mod(t: float, p: float) -> float:
    """Reduce t into (-|p|/2, |p|/2]."""
    p = abs(p)
    r = t - p * math.floor(t / p + 0.5)
    if r <= -p / 2.0:  # guard the open endpoint against fp rounding
        r += p
    return r


def lattice_dist(t: float, p: float) -> float:
    """Distance from t to the lattice pZ."""
    return abs(wrap_mod(t, p))
