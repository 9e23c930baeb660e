"""Global nonsingularity / conservativeness statistics for a measure family.

Per group element g the module accumulates, over a finite window of
coordinates h, the three sums

    hellinger_sum = sum_h H^2(mu_{gh}, mu_h)
    neglog_sum    = sum_h -log(1 - H^2(mu_{gh}, mu_h))
    C             = sum_h D(mu_h, mu_{gh})

which satisfy hellinger_sum <= neglog_sum <= C term by term.  Growth and
dissipativity reports are finite-scale estimates and say so explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .measures import MeasureFamily

CHAIN_SLACK = 1e-12


def cutoff_T(kappa: float, t: float) -> float:
    """Clamp t to [-kappa, kappa]."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return max(-kappa, min(kappa, t))


@dataclass
class CocycleStats:
    g_index: int
    g_label: str
    hellinger_sum: float
    neglog_sum: float
    C: float
    window_radius: int
    tail_bound: Optional[float]  # None means "uncertified"

    def as_row(self) -> dict:
        return {
            "g_index": self.g_index,
            "g_label": self.g_label,
            "hellinger_sum": self.hellinger_sum,
            "neglog_sum": self.neglog_sum,
            "C": self.C,
            "window_radius": self.window_radius,
            "tail_bound": "uncertified" if self.tail_bound is None else self.tail_bound,
        }


def kakutani_sum(family: MeasureFamily, g, window: Sequence) -> Tuple[float, Optional[float]]:
    """Partial Kakutani sum over the window plus the registered tail bound."""
    total = 0.0
    for h in window:
        total += family.pair_stats(g, h)[0]
    radius = max((family.group.word_length(h) for h in window), default=0)
    return total, family.tail_certificate(g, radius)


def c_of_g(family: MeasureFamily, g, window: Sequence, radius: Optional[int] = None) -> CocycleStats:
    """All three windowed sums in one pass, with the chain asserted."""
    hs = 0.0
    ns = 0.0
    c = 0.0
    for h in window:
        h2, neglog, d = family.pair_stats(g, h)
        if not (h2 <= neglog + CHAIN_SLACK and neglog <= d + CHAIN_SLACK):
            raise AssertionError(f"divergence chain violated at h={h!r}: {h2}, {neglog}, {d}")
        hs += h2
        ns += neglog
        c = c + d if math.isfinite(d) and math.isfinite(c) else math.inf
    if radius is None:
        radius = max((family.group.word_length(h) for h in window), default=0)
    return CocycleStats(
        g_index=family.group.index(g),
        g_label=family.group.label(g),
        hellinger_sum=hs,
        neglog_sum=ns,
        C=c,
        window_radius=radius,
        tail_bound=family.tail_certificate(g, radius),
    )


def product_hellinger_check(family: MeasureFamily, g, window: Sequence) -> Tuple[float, float]:
    """(1 - H^2(g^{-1}mu, mu), prod_h (1 - H^2(mu_gh, mu_h))) over the window.

    The left side is accumulated in log space from the per-coordinate
    Bhattacharyya integrals; the right side is a plain product of the
    per-coordinate Hellinger complements.
    """
    log_bc = 0.0
    prod = 1.0
    for h in window:
        h2, _, _ = family.pair_stats(g, h)
        log_bc += math.log1p(-h2)
        prod *= 1.0 - h2
    return math.exp(log_bc), prod


@dataclass
class GrowthReport:
    s_grid: List[float]
    counts: List[int]
    slopes: List[float]
    estimate: float
    verdict: str  # "evidence > 6" | "evidence <= 6" | "saturated"
    saturated: bool
    ball_radius: int
    table: List[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "s_grid": self.s_grid,
            "counts": self.counts,
            "slopes": self.slopes,
            "estimate": self.estimate,
            "verdict": self.verdict,
            "saturated": self.saturated,
            "ball_radius": self.ball_radius,
        }


def growth_report(
    family: MeasureFamily,
    s_grid: Sequence[float],
    ball: Sequence,
    window: Optional[Sequence] = None,
) -> GrowthReport:
    """Counts |{g : C(g^{+-1}) <= s}| on the stored ball plus slope estimates.

    The report is flagged saturated unless every counted element lies strictly
    inside the ball (so larger balls could only change counts at larger s).
    """
    if not s_grid:
        raise ValueError("empty threshold grid")
    group = family.group
    window = list(window if window is not None else ball)
    radius = max(group.word_length(h) for h in ball)
    cvals: Dict[object, float] = {}
    for g in ball:
        cvals[g] = c_of_g(family, g, window).C
    smax = max(s_grid)
    counts: List[int] = []
    slopes: List[float] = []
    saturated = False
    for s in sorted(s_grid):
        sel = [
            g
            for g in ball
            if cvals[g] <= s and cvals.get(group.inv(g), math.inf) <= s
        ]
        counts.append(len(sel))
        if any(group.word_length(g) >= radius for g in sel):
            saturated = True
        slopes.append(math.log(len(sel)) / s if len(sel) > 0 and s > 0 else 0.0)
    estimate = max(slopes) if slopes else 0.0
    if saturated:
        verdict = "saturated"
    else:
        verdict = "evidence > 6" if estimate > 6.0 else "evidence <= 6"
    table = [
        {"s": s, "count": c, "slope": sl}
        for s, c, sl in zip(sorted(s_grid), counts, slopes)
    ]
    return GrowthReport(sorted(s_grid), counts, slopes, estimate, verdict, saturated, radius, table)


@dataclass
class PoincareReport:
    s_grid: List[float]
    counts: List[int]
    slopes: List[float]
    estimate: float  # finite-scale lower estimate of the exponent

    def to_json(self) -> dict:
        return {"s_grid": self.s_grid, "counts": self.counts,
                "slopes": self.slopes, "estimate": self.estimate}


def poincare_exponent(norms: Dict[object, float], s_grid: Sequence[float]) -> PoincareReport:
    """Count table of |{g : ||c_g||^2 <= s}| and the max of log(count)/s.

    Finite data cannot certify the limsup; the estimate is reported with the
    full table so the trend is visible.
    """
    if not s_grid:
        raise ValueError("empty threshold grid")
    grid = sorted(s_grid)
    counts = [sum(1 for v in norms.values() if v <= s) for s in grid]
    slopes = [math.log(c) / s if c > 0 and s > 0 else 0.0 for c, s in zip(counts, grid)]
    return PoincareReport(grid, counts, slopes, max(slopes) if slopes else 0.0)


@dataclass
class DissipativityReport:
    shell_radii: List[int]
    shell_increments: List[float]
    partial_sums: List[float]

    def to_json(self) -> dict:
        return {"shell_radii": self.shell_radii,
                "shell_increments": self.shell_increments,
                "partial_sums": self.partial_sums}


def dissipativity_sum(norms: Dict[object, float], group, ball: Sequence) -> DissipativityReport:
    """Partial sums of exp(-||c_g||^2) by word-length shell."""
    by_shell: Dict[int, float] = {}
    for g in ball:
        r = group.word_length(g)
        by_shell[r] = by_shell.get(r, 0.0) + math.exp(-norms[g])
    radii = sorted(by_shell)
    inc = [by_shell[r] for r in radii]
    partial = []
    acc = 0.0
    for x in inc:
        acc += x
        partial.append(acc)
    return DissipativityReport(radii, inc, partial)


def cocycle_norms(family: MeasureFamily, ball: Sequence, window: Sequence) -> Dict[object, float]:
    """||c_g||^2 = sum_h H^2(mu_gh, mu_h) over the window, per g in the ball."""
    return {g: kakutani_sum(family, g, window)[0] for g in ball}


def stats_csv(rows: Sequence[CocycleStats]) -> str:
    header = "g_index,g_label,hellinger_sum,neglog_sum,C,window_radius,tail_bound"
    lines = [header]
    for r in rows:
        d = r.as_row()
        lines.append(
            f"{d['g_index']},{d['g_label']},{d['hellinger_sum']!r},{d['neglog_sum']!r},"
            f"{d['C']!r},{d['window_radius']},{d['tail_bound']}"
        )
    return "\n".join(lines) + "\n"
