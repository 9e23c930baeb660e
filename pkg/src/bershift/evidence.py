"""Finite-scale trend flags shared by the criterion modules.

A sum evaluated on a doubling window schedule is "cauchy-trending" when the
last increment is below 1e-3 and below a quarter of the previous one, and
shows "divergence" evidence when the increments stay bounded below across
three consecutive windows.  These are reproducible flags, not proofs.
"""

from __future__ import annotations

from typing import List, Sequence

CAUCHY_ABS = 1e-3
DIVERGENCE_FLOOR = 1e-3

CAUCHY = "cauchy-trending"
DIVERGING = "divergence-evidence"
INCONCLUSIVE = "inconclusive"


def increments(partials: Sequence[float]) -> List[float]:
    out = [partials[0]]
    out += [b - a for a, b in zip(partials, partials[1:])]
    return out


def trend(partials: Sequence[float]) -> str:
    """Classify a nondecreasing sequence of windowed partial sums."""
    if len(partials) < 2:
        return INCONCLUSIVE
    inc = increments(partials)
    if inc[-1] < CAUCHY_ABS and inc[-1] < 0.25 * max(inc[-2], 1e-300):
        return CAUCHY
    if inc[-1] < CAUCHY_ABS and inc[-2] < CAUCHY_ABS:
        return CAUCHY
    if len(inc) >= 3 and all(x >= DIVERGENCE_FLOOR for x in inc[-3:]):
        return DIVERGING
    return INCONCLUSIVE


def vanishing(partials: Sequence[float], tol: float = 1e-3) -> bool:
    """Partial sums of a signed series heading to zero."""
    if not partials:
        return False
    last = abs(partials[-1])
    peak = max(abs(x) for x in partials)
    return last < tol and (peak == 0.0 or last <= 0.5 * peak or peak < tol)
