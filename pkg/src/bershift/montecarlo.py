"""Sampling the product space: windowed log Radon-Nikodym cocycles, Maharam
skew-product steps, lattice-concentration statistics, strong-recurrence
weights, and the two-point flip probe.

Coordinates outside the window are never materialized; every statistic whose
full-product definition involves all coordinates carries its window as part
of its identity, with tail certificates where the construction registers
them.  All randomness flows from a master seed through index-derived
substreams (numpy SeedSequence keyed on (seed, stream indices), the standard
splitmix-style derivation), so reports are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .measures import DiscreteMeasure, MeasureFamily
from .quadrature import lattice_dist


def derive_rng(master_seed: int, *indices: int) -> np.random.Generator:
    """Independent substream keyed by (master_seed, indices)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((master_seed, *indices))))


@dataclass
class Configuration:
    """Coordinates x_h for h in a finite window, with its seed lineage."""

    window: List
    coords: Dict
    lineage: Tuple[int, ...] = ()

    def copy(self) -> "Configuration":
        return Configuration(list(self.window), dict(self.coords), self.lineage)


def sample_configuration(family: MeasureFamily, window: Sequence,
                         rng: np.random.Generator, lineage: Tuple[int, ...] = ()) -> Configuration:
    coords = {h: family.measure(h).sample(rng) for h in window}
    return Configuration(list(window), coords, lineage)


@dataclass
class RNEstimate:
    log_value: float
    window_radius: int
    tail_bound: Optional[float]  # None = "uncertified"

    def certified(self) -> bool:
        return self.tail_bound is not None


def log_rn(family: MeasureFamily, g, x: Configuration,
           window: Optional[Sequence] = None) -> RNEstimate:
    """log d(g^{-1} mu)/d mu (x) restricted to the window:
    sum_{h in window} log(dmu_{gh}/dmu_h)(x_h)."""
    window = x.window if window is None else window
    total = 0.0
    for h in window:
        total += family.log_rn_pair(g, h, x.coords[h])
    radius = max((family.group.word_length(h) for h in window), default=0)
    cert = None
    fn = getattr(family, "rn_tail_certificate", None)
    if fn is not None:
        cert = fn(g, radius)
    return RNEstimate(total, radius, cert)


def shift(x: Configuration, g, group) -> Configuration:
    """(g.x)_h = x_{g^{-1}h}: relabel onto the translated window."""
    ginv = group.inv(g)
    new_coords = {group.mul(g, h): v for h, v in x.coords.items()}
    return Configuration([group.mul(g, h) for h in x.window], new_coords, x.lineage)


def maharam_step(x: Configuration, t: float, g, family: MeasureFamily) -> Tuple[Configuration, float]:
    """Skew-product step g.(x,t) = (g.x, t + log_rn(g, x))."""
    est = log_rn(family, g, x)
    return shift(x, g, family.group), t + est.log_value


# --------------------------------------------------------------------------
# lattice-concentration statistic


def _log_rn_lattice_parts(family: MeasureFamily, g, x: Configuration,
                          window: Sequence) -> Optional[Tuple[float, int]]:
    """(const, integer) with log_rn = const + integer * p_fam, exact path."""
    info = family.lattice_info()
    if info is None:
        return None
    group = family.group
    const = 0.0
    level = 0
    for h in window:
        gh = group.mul(g, h)
        const += info.const(gh) - info.const(h)
        level += info.level(gh, x.coords[h]) - info.level(h, x.coords[h])
    return const, level


@dataclass
class LatticeStatReport:
    p: float
    windows: List[int]
    medians: List[float]
    p90s: List[float]
    medians_shifted: List[float]
    p90s_shifted: List[float]
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "windows": self.windows,
            "median_raw": self.medians,
            "p90_raw": self.p90s,
            "median_shifted": self.medians_shifted,
            "p90_shifted": self.p90s_shifted,
            "samples": self.samples,
            "seed": self.seed,
        }


def lattice_stat(family: MeasureFamily, p: float, windows: Sequence[int],
                 samples: int, seed: int, workers: int = 1) -> LatticeStatReport:
    """Per window: distribution of d(log_rn(g, .), pZ) over sampled x and
    generators g, raw and after the phase-optimal shift.  Every sample gets
    its own derived stream and the reduction order is fixed, so the report
    is bit-identical for any worker partition."""
    if p == 0:
        raise ValueError("p must be nonzero")
    group = family.group
    gens = group.generators()
    windows = sorted(windows)
    big = group.ball(windows[-1])
    balls = [group.ball(w) for w in windows]
    info = family.lattice_info()

    values: List[List[float]] = [[] for _ in windows]  # raw log_rn values per window
    for i in range(samples):  # per-sample streams: worker count cannot matter
        rng = derive_rng(seed, 0, i)
        x = sample_configuration(family, big, rng)
        for wi, ball in enumerate(balls):
            for g in gens:
                if info is not None:
                    const, lvl = _log_rn_lattice_parts(family, g, x, ball)
                    values[wi].append((const, lvl))
                else:
                    values[wi].append(log_rn(family, g, x, ball).log_value)

    def dist(v, pp) -> float:
        if info is not None:
            const, lvl = v
            ratio = info.p / pp
            k = round(ratio)
            if abs(ratio - k) < 1e-12 and k != 0:
                return lattice_dist(const, pp)
            return lattice_dist(const + lvl * info.p, pp)
        return lattice_dist(v, pp)

    medians, p90s, med_s, p90_s = [], [], [], []
    for wi in range(len(windows)):
        raw = np.array([dist(v, p) for v in values[wi]])
        medians.append(float(np.median(raw)))
        p90s.append(float(np.quantile(raw, 0.9)))
        # phase-optimal shift per generator block
        shifted = []
        per_gen = len(gens)
        arr = values[wi]
        for gi in range(per_gen):
            block = arr[gi::per_gen]
            if info is not None:
                logs = [c + l * info.p for (c, l) in block]
            else:
                logs = list(block)
            w = 2.0 * math.pi / p
            z = sum(complex(math.cos(w * v), math.sin(w * v)) for v in logs)
            t = 0.0 if abs(z) < 1e-13 else (p / (2.0 * math.pi)) * math.atan2(z.imag, z.real)
            shifted.extend(lattice_dist(v - t, p) for v in logs)
        shifted = np.array(shifted)
        med_s.append(float(np.median(shifted)))
        p90_s.append(float(np.quantile(shifted, 0.9)))
    return LatticeStatReport(p, list(windows), medians, p90s, med_s, p90_s, samples, seed)


# --------------------------------------------------------------------------
# strong-recurrence weights


def recurrence_weights(family: MeasureFamily, eta: Dict[object, float],
                       x: Configuration, t: Optional[float] = None,
                       alpha: float = 0.5) -> Dict[object, float]:
    """The ergodic-average weights p(g, x) built from a finitely supported
    probability measure eta on G; they sum to 1 over g exactly.  With the
    Maharam coordinate t, the densities pick up the factor from
    dnu_alpha(t) = (alpha/2) exp(-alpha |t|) dt."""
    total_eta = sum(eta.values())
    if abs(total_eta - 1.0) > 1e-12:
        raise ValueError("eta must be a probability measure")
    group = family.group
    support = [g for g, w in eta.items() if w > 0]
    # omega(k, x) for all k in (support . support^{-1})
    kset = {}
    for h in support:
        for s in support:
            k = group.mul(h, group.inv(s))
            kset[k] = None
    omega: Dict[object, float] = {}
    for k in kset:
        lv = log_rn(family, k, x).log_value
        if t is not None:
            lv += -alpha * abs(t + lv) + alpha * abs(t)
        omega[k] = lv  # keep in log space
    weights: Dict[object, float] = {}
    for h in support:
        # denominator: sum_k eta(h k^{-1}) omega(k, x) over k with hk^{-1} in supp
        logs = []
        coeffs = []
        for s in support:  # s = h k^{-1}  =>  k = s^{-1} h
            k = group.mul(group.inv(s), h)
            logs.append(omega[k])
            coeffs.append(eta[s])
        m = max(logs)
        denom = sum(c * math.exp(l - m) for c, l in zip(coeffs, logs))
        for s in support:
            k = group.mul(group.inv(s), h)
            w = eta[h] * eta[s] * math.exp(omega[k] - m) / denom
            weights[k] = weights.get(k, 0.0) + w
    norm = sum(weights.values())
    if abs(norm - 1.0) > 1e-9:
        raise AssertionError(f"recurrence weights sum to {norm}, not 1")
    return weights


@dataclass
class RecurrenceReport:
    windows: List[int]
    estimates: List[float]  # Monte Carlo estimate of ||p_n(e,.)||_1
    std_errors: List[float]
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {"windows": self.windows, "estimates": self.estimates,
                "std_errors": self.std_errors, "samples": self.samples, "seed": self.seed}


def recurrence_norm_estimates(family: MeasureFamily, windows: Sequence[int],
                              samples: int, seed: int, workers: int = 1) -> RecurrenceReport:
    """||p_n(e, .)||_1 for eta_n uniform on the ball of radius n, estimated
    by Monte Carlo over configurations."""
    group = family.group
    e = group.identity()
    estimates, stderrs = [], []
    for wi, n in enumerate(windows):
        ball = group.ball(n)
        eta = {g: 1.0 / len(ball) for g in ball}
        conf_window = group.ball(2 * n)
        vals = []
        for i in range(samples):
            rng = derive_rng(seed, 1, wi, i)
            x = sample_configuration(family, conf_window, rng)
            w = recurrence_weights(family, eta, x)
            vals.append(w.get(e, 0.0))
        vals = np.array(vals)
        estimates.append(float(vals.mean()))
        stderrs.append(float(vals.std(ddof=1) / math.sqrt(len(vals))))
    return RecurrenceReport(list(windows), estimates, stderrs, samples, seed)


# --------------------------------------------------------------------------
# flip probe (two-point families on Z with a flip-pair schedule)


@dataclass
class FlipResult:
    m: int  # flip location index
    pair: Tuple[int, int]  # coordinates flipped: (2m, 2m + k_m)
    observed: Tuple[int, int]
    ratio: float
    failed: bool = False


def flip_probe(family, x_or_rng, n0: int, horizon: int,
               rng: Optional[np.random.Generator] = None) -> FlipResult:
    """Find the smallest m >= n0 whose probe pair reads (0,1) or (1,0),
    apply the flip, and return the exact two-point density ratio.

    The family must expose `flip_schedule` (m -> k_m) and `zero_mass`
    (coordinate -> mu_n(0)); coordinates are sampled lazily, so the probe
    never materializes the full configuration.
    """
    if rng is None:
        rng = x_or_rng
    sched = family.flip_schedule
    for m in range(n0, horizon + 1):
        k_m = sched(m)
        a_even = family.zero_mass(2 * m)
        a_odd = family.zero_mass(2 * m + k_m)
        u, v = rng.random(2)
        x_even = 0 if u < a_even else 1
        x_odd = 0 if v < a_odd else 1
        if (x_even, x_odd) in ((0, 1), (1, 0)):
            r_m = family.flip_ratio(m)
            ratio = 1.0 / r_m if (x_even, x_odd) == (0, 1) else r_m
            return FlipResult(m, (2 * m, 2 * m + k_m), (x_even, x_odd), ratio)
    return FlipResult(-1, (0, 0), (0, 0), math.nan, failed=True)


def flip_apply(family, x: Configuration, m: int) -> Tuple[Configuration, float]:
    """Apply the flip of coordinates (2m, 2m+k_m) to a materialized
    configuration; returns the flipped configuration and the density ratio."""
    k_m = family.flip_schedule(m)
    i, j = 2 * m, 2 * m + k_m
    y = x.copy()
    y.coords[i], y.coords[j] = x.coords[j], x.coords[i]
    before = (x.coords[i], x.coords[j])
    if before == (0, 1):
        ratio = 1.0 / family.flip_ratio(m)
    elif before == (1, 0):
        ratio = family.flip_ratio(m)
    else:
        ratio = 1.0
    return y, ratio


@dataclass
class FlipProbeReport:
    n0: int
    horizon: int
    probes: int
    failures: int
    ratios: List[float]
    locations: List[int]
    seed: int

    def to_json(self) -> dict:
        return {"n0": self.n0, "horizon": self.horizon, "probes": self.probes,
                "failures": self.failures, "ratio_histogram": _hist(self.ratios),
                "seed": self.seed}


def _hist(vals: List[float]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for v in vals:
        key = f"{v:.12g}"
        out[key] = out.get(key, 0) + 1
    return dict(sorted(out.items()))


def run_flip_probes(family, n0: int, probes: int, seed: int,
                    horizon: int = 5000, workers: int = 1) -> FlipProbeReport:
    ratios: List[float] = []
    locations: List[int] = []
    failures = 0
    for idx in range(probes):  # one derived stream per probe
        rng = derive_rng(seed, 2, idx)
        res = flip_probe(family, rng, n0, horizon)
        if res.failed:
            failures += 1
        else:
            ratios.append(res.ratio)
            locations.append(res.m)
    return FlipProbeReport(n0, horizon, probes, failures, ratios, locations, seed)


# --------------------------------------------------------------------------
# permutation-flow sums


def perm_flow_sum(family: MeasureFamily, nu, x: Configuration,
                  windows: Sequence[int], U_of=None, rho_of=None,
                  p: Optional[float] = None) -> dict:
    """Partial sums of F(x) = sum_h (log dmu_h/dnu(x_h) + log nu(U_h)) over
    the window schedule; with rho_g and a period p instead, the sums
    sum_h (log dmu_h/dnu(x_h) - log rho_h) are reported mod p."""
    group = family.group
    partials = []
    acc = 0.0
    done: set = set()
    for r in sorted(windows):
        for h in group.ball(r):
            if h in done or h not in x.coords:
                continue
            done.add(h)
            mu_h = family.measure(h)
            if isinstance(mu_h, DiscreteMeasure):
                v = mu_h.log_weight(x.coords[h]) - nu.log_weight(x.coords[h])
            else:
                v = mu_h.log_pdf(x.coords[h]) - nu.log_pdf(x.coords[h])
            if U_of is not None:
                v += math.log(nu.mass(U_of(h)))
            elif rho_of is not None:
                v -= math.log(rho_of(h))
            acc += v
        partials.append(acc)
    out = {"windows": sorted(windows), "partials": partials}
    if p is not None:
        out["partials_mod_p"] = [lattice_dist(v, p) for v in partials]
    return out
