"""Equivalent probability measures on a base space and their exact arithmetic.

Discrete measures keep log-weights (products over thousands of coordinates
underflow otherwise); densities on R are one of the built-in shapes (laplace,
cauchy-squared, gaussian) translated by a shift.  Pairwise statistics
(Hellinger, Bhattacharyya, the divergence D) have closed forms wherever the
shapes admit them and fall back to kink-aware quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .quadrature import integrate

# --------------------------------------------------------------------------
# discrete measures


class DiscreteMeasure:
    """Finite (or truncated-countable) measure with log-space weights.

    `tail_mass` is a certified bound on mass outside the modelled support;
    the modelled weights sum to 1 - tail_mass.
    """

    def __init__(self, labels: Sequence, logw: Sequence[float], tail_mass: float = 0.0):
        self.labels = tuple(labels)
        self.logw = np.asarray(logw, dtype=float)
        if len(self.labels) != len(self.logw):
            raise ValueError("labels and weights differ in length")
        if np.any(~np.isfinite(self.logw)):
            raise ValueError("weights must be positive")
        self.tail_mass = float(tail_mass)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        total = float(np.exp(self.logw).sum()) + self.tail_mass
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"total mass {total} differs from 1")

    @staticmethod
    def from_weights(labels: Sequence, weights: Sequence[float], tail_mass: float = 0.0):
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        return DiscreteMeasure(labels, np.log(w), tail_mass)

    def weight(self, label) -> float:
        return float(math.exp(self.logw[self._index[label]]))

    def log_weight(self, label) -> float:
        i = self._index.get(label)
        if i is None:
            raise KeyError(f"point {label!r} outside support")
        return float(self.logw[i])

    def mass(self, labels: Iterable) -> float:
        idx = [self._index[l] for l in labels if l in self._index]
        if not idx:
            return 0.0
        return float(np.exp(self.logw[idx]).sum())

    def same_support(self, other: "DiscreteMeasure") -> bool:
        return self.labels == other.labels

    def restrict(self, labels: Iterable) -> "DiscreteMeasure":
        keep = [l for l in self.labels if l in set(labels)]
        if not keep:
            raise ValueError("restriction to a null set")
        idx = [self._index[l] for l in keep]
        lw = self.logw[idx]
        lw = lw - _logsumexp(lw)
        return DiscreteMeasure(keep, lw)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        w = np.exp(self.logw)
        w = w / w.sum()
        cdf = np.cumsum(w)
        u = rng.random(size if size is not None else 1)
        pos = np.searchsorted(cdf, u, side="right")
        pos = np.minimum(pos, len(self.labels) - 1)
        out = [self.labels[i] for i in pos]
        return out if size is not None else out[0]

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "logw": [float(x) for x in self.logw]}

    @staticmethod
    def from_json(obj: dict) -> "DiscreteMeasure":
        labels = [tuple(l) if isinstance(l, list) else l for l in obj["labels"]]
        return DiscreteMeasure(labels, obj["logw"], obj.get("tail_mass", 0.0))


def _logsumexp(lw: np.ndarray) -> float:
    m = float(np.max(lw))
    return m + math.log(float(np.exp(lw - m).sum()))


def two_point(a: float) -> DiscreteMeasure:
    """Measure on {0,1} with mass a at 0."""
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0,1)")
    return DiscreteMeasure((0, 1), (math.log(a), math.log1p(-a)))


# --------------------------------------------------------------------------
# densities on R

_SHAPES = ("laplace", "cauchy2", "gauss")


def _phi(shape: str, t: float) -> float:
    if shape == "laplace":
        return 0.5 * math.exp(-abs(t))
    if shape == "cauchy2":
        return (2.0 / math.pi) / (1.0 + t * t) ** 2
    if shape == "gauss":
        return math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    raise ValueError(f"unknown shape {shape!r}")


def _log_phi(shape: str, t: float) -> float:
    if shape == "laplace":
        return -abs(t) - math.log(2.0)
    if shape == "cauchy2":
        return math.log(2.0 / math.pi) - 2.0 * math.log1p(t * t)
    if shape == "gauss":
        return -0.5 * t * t - 0.5 * math.log(2.0 * math.pi)
    raise ValueError(f"unknown shape {shape!r}")


def _cutoff(shape: str, tol: float) -> float:
    # |t| beyond which all integrands we form are below tol
    if shape == "cauchy2":
        return max(50.0, (2.0 / (tol * math.pi)) ** (1.0 / 3.0))
    return 45.0  # exp(-45) ~ 3e-20


class DensityMeasure:
    """dnu_s(t) = phi(t + s) dt for a built-in strictly positive shape phi."""

    def __init__(self, shape: str, shift: float = 0.0):
        if shape not in _SHAPES:
            raise ValueError(f"shape must be one of {_SHAPES}")
        self.shape = shape
        self.shift = float(shift)

    def pdf(self, t: float) -> float:
        return _phi(self.shape, t + self.shift)

    def log_pdf(self, t: float) -> float:
        return _log_phi(self.shape, t + self.shift)

    def kinks(self) -> Tuple[float, ...]:
        return (-self.shift,) if self.shape == "laplace" else ()

    def quad_interval(self, tol: float = 1e-12) -> Tuple[float, float]:
        T = _cutoff(self.shape, tol) + abs(self.shift)
        return (-T, T)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        n = size if size is not None else 1
        u = rng.random(n)
        if self.shape == "laplace":
            x = np.where(u < 0.5, np.log(2.0 * u), -np.log(2.0 * (1.0 - u)))
        elif self.shape == "gauss":
            x = rng.standard_normal(n)
        else:
            x = np.array([_cauchy2_ppf(v) for v in u])
        x = x - self.shift
        return x if size is not None else float(x[0])

    def to_json(self) -> dict:
        return {"phi": self.shape, "shift": self.shift}

    @staticmethod
    def from_json(obj: dict) -> "DensityMeasure":
        return DensityMeasure(obj["phi"], obj.get("shift", 0.0))


def _cauchy2_cdf(t: float) -> float:
    return 0.5 + (math.atan(t) + t / (1.0 + t * t)) / math.pi


def _cauchy2_ppf(u: float) -> float:
    lo, hi = -1.0, 1.0
    while _cauchy2_cdf(lo) > u:
        lo *= 2.0
    while _cauchy2_cdf(hi) < u:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _cauchy2_cdf(mid) < u:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# pairwise statistics


def bhattacharyya(p, q) -> float:
    """integral of sqrt(dp/dz) sqrt(dq/dz) dz, in [0, 1].

    Defined for any pair via a common dominating measure, so restrictions
    (whose support is strictly smaller) are fine; disjoint supports give 0.
    """
    if isinstance(p, DiscreteMeasure) and isinstance(q, DiscreteMeasure):
        if p.same_support(q):
            return float(np.exp(0.5 * (p.logw + q.logw)).sum())
        common = [l for l in p.labels if l in q._index]
        return sum(
            math.exp(0.5 * (p.log_weight(l) + q.log_weight(l))) for l in common
        )
    if isinstance(p, DensityMeasure) and isinstance(q, DensityMeasure):
        if p.shape == q.shape:
            d = abs(p.shift - q.shift)
            if p.shape == "laplace":
                return math.exp(-d / 2.0) * (1.0 + d / 2.0)
            if p.shape == "gauss":
                return math.exp(-d * d / 8.0)
            if p.shape == "cauchy2":
                return 1.0 / (1.0 + d * d / 4.0)
        return _bc_quad(p, q)
    raise TypeError("cannot mix discrete and density measures")


def _bc_quad(p: DensityMeasure, q: DensityMeasure, tol: float = 1e-10) -> float:
    a1, b1 = p.quad_interval()
    a2, b2 = q.quad_interval()
    a, b = min(a1, a2), max(b1, b2)
    pts = p.kinks() + q.kinks()
    f = lambda t: math.exp(0.5 * (p.log_pdf(t) + q.log_pdf(t)))
    return integrate(f, a, b, tol=tol, points=pts)


def hellinger2(p, q) -> float:
    """Squared Hellinger distance 1 - integral sqrt(dp dq); symmetric, in [0,1]."""
    return 1.0 - bhattacharyya(p, q)


def d_divergence(p, q) -> float:
    """(1/2) log integral (dp/dq) dp; asymmetric, in [0, +inf]."""
    if isinstance(p, DiscreteMeasure) and isinstance(q, DiscreteMeasure):
        if p.same_support(q):
            val = float(np.exp(2.0 * p.logw - q.logw).sum())
            return 0.5 * math.log(val)
        if any(l not in q._index for l in p.labels):
            return math.inf  # p has mass where q vanishes
        val = sum(math.exp(2.0 * p.log_weight(l) - q.log_weight(l)) for l in p.labels)
        return 0.5 * math.log(val)
    if isinstance(p, DensityMeasure) and isinstance(q, DensityMeasure):
        if p.shape == q.shape:
            return 0.5 * math.log(theta_closed(p.shape, p.shift - q.shift))
        val = _moment_quad(p, q)
        return 0.5 * math.log(val) if math.isfinite(val) else math.inf
    raise TypeError("cannot mix discrete and density measures")


def _moment_quad(p: DensityMeasure, q: DensityMeasure, tol: float = 1e-10) -> float:
    a1, b1 = p.quad_interval()
    a2, b2 = q.quad_interval()
    a, b = min(a1, a2), max(b1, b2)
    pts = p.kinks() + q.kinks()
    log_f = lambda t: 2.0 * p.log_pdf(t) - q.log_pdf(t)
    # divergence sentinel: a growing log-integrand towards the cuts means the
    # q-tail is too thin for the shift; report +inf instead of overflowing
    probes = np.linspace(a, b, 33)
    if max(log_f(t) for t in probes) > 600.0 or max(log_f(a), log_f(b)) > math.log(tol):
        return math.inf
    val = integrate(lambda t: math.exp(log_f(t)), a, b, tol=tol, points=pts)
    return val


def theta_closed(shape: str, s: float) -> float:
    """theta(s) = integral phi(t+s)^2/phi(t) dt for the built-in shapes."""
    s = abs(s)
    if shape == "laplace":
        return (2.0 / 3.0) * math.exp(s) + (1.0 / 3.0) * math.exp(-2.0 * s)
    if shape == "gauss":
        return math.exp(s * s)
    if shape == "cauchy2":
        return 1.0 + 2.0 * s * s + 5.0 * s ** 4 / 8.0
    raise ValueError(f"unknown shape {shape!r}")


def theta(shape: str, s: float, *, closed_form: bool = True, tol: float = 1e-10) -> float:
    """theta(s), by closed form when available, else quadrature."""
    if closed_form:
        return theta_closed(shape, s)
    return theta_quad(shape, s, tol=tol)


def theta_quad(shape: str, s: float, tol: float = 1e-10) -> float:
    nu_s = DensityMeasure(shape, s)
    nu_0 = DensityMeasure(shape, 0.0)
    a1, b1 = nu_s.quad_interval()
    a2, b2 = nu_0.quad_interval()
    a, b = min(a1, a2), max(b1, b2)
    pts = nu_s.kinks() + nu_0.kinks()
    f = lambda t: math.exp(2.0 * nu_s.log_pdf(t) - nu_0.log_pdf(t))
    return integrate(f, a, b, tol=tol, points=pts)


def zeta_map(a: float) -> float:
    """Increasing bijection (0,1) -> R: inverse of the Laplace distribution function."""
    if not 0.0 < a < 1.0:
        raise ValueError("argument must lie strictly inside (0,1)")
    if a <= 0.5:
        return math.log(2.0 * a)
    return -math.log(2.0 * (1.0 - a))


def two_point_moment_bound(a: float, b: float) -> Tuple[float, float]:
    """((a^2/b + (1-a)^2/(1-b)), exp(|zeta(a)-zeta(b)|^2)); first <= second."""
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        raise ValueError("a, b must lie in (0,1)")
    moment = a * a / b + (1.0 - a) ** 2 / (1.0 - b)
    bound = math.exp((zeta_map(a) - zeta_map(b)) ** 2)
    return moment, bound


def restrict_normalize(nu: DiscreteMeasure, labels: Iterable) -> DiscreteMeasure:
    return nu.restrict(labels)


def pushforward(p: DiscreteMeasure, pi: Callable) -> DiscreteMeasure:
    """Image measure under a map of labels."""
    acc: Dict[object, float] = {}
    for lab, lw in zip(p.labels, p.logw):
        acc[pi(lab)] = acc.get(pi(lab), 0.0) + math.exp(lw)
    labs = sorted(acc.keys(), key=repr)
    return DiscreteMeasure.from_weights(labs, [acc[l] for l in labs], p.tail_mass)


# --------------------------------------------------------------------------
# measure families indexed by a group


@dataclass
class LatticeInfo:
    """Exact lattice structure: log dmu_g/dmu_e(x) = const(g) + n(g,x) * p."""

    p: float  # lattice gap (log lambda), nonzero
    const: Callable[[object], float]  # g -> log rho_g (modulo the lattice part)
    level: Callable[[object, object], int]  # (g, x) -> integer lattice coordinate


class MeasureFamily:
    """Assignment g -> mu_g of mutually equivalent measures, with e -> reference."""

    def __init__(self, group, *, strong_bounded: bool = False, weak_bounded: bool = True):
        self.group = group
        self.strong_bounded = strong_bounded
        self.weak_bounded = weak_bounded
        self.desk_substitutions: List[str] = []
        self.metadata: Dict[str, object] = {}
        self._pair_cache: Dict[Tuple, Tuple[float, float, float]] = {}

    # -- required hooks -----------------------------------------------------
    def measure(self, g):
        raise NotImplementedError

    def measure_key(self, g):
        """Hashable key; equal keys mean identical measures."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    # -- optional hooks ------------------------------------------------------
    def lattice_info(self) -> Optional[LatticeInfo]:
        return None

    def tail_certificate(self, g, radius: int) -> Optional[float]:
        """Bound on the kakutani/C sum omitted beyond the ball `radius`."""
        return None

    # -- generic machinery ----------------------------------------------------
    def reference(self):
        return self.measure(self.group.identity())

    def log_rn_point(self, g, x) -> float:
        """log dmu_g/dmu_e(x)."""
        mg, me = self.measure(g), self.reference()
        if isinstance(mg, DiscreteMeasure):
            return mg.log_weight(x) - me.log_weight(x)
        return mg.log_pdf(x) - me.log_pdf(x)

    def rn(self, g, x) -> float:
        """dmu_g/dmu_e(x), computed in log space."""
        return math.exp(self.log_rn_point(g, x))

    def log_rn_pair(self, g, h, x) -> float:
        """log dmu_{gh}/dmu_h(x)."""
        gh = self.group.mul(g, h)
        m1, m2 = self.measure(gh), self.measure(h)
        if isinstance(m1, DiscreteMeasure):
            return m1.log_weight(x) - m2.log_weight(x)
        return m1.log_pdf(x) - m2.log_pdf(x)

    def pair_stats(self, g, h) -> Tuple[float, float, float]:
        """(H^2, -log(1-H^2), D) for the pair (mu_{gh}, mu_h)."""
        gh = self.group.mul(g, h)
        key = (self.measure_key(gh), self.measure_key(h))
        hit = self._pair_cache.get(key)
        if hit is not None:
            return hit
        if key[0] == key[1]:
            out = (0.0, 0.0, 0.0)
        else:
            m1, m2 = self.measure(gh), self.measure(h)
            h2 = hellinger2(m1, m2)
            neglog = -math.log1p(-h2) if h2 < 1.0 else math.inf
            d = d_divergence(m2, m1)  # D(mu_h, mu_{gh})
            out = (h2, neglog, d)
        self._pair_cache[key] = out
        return out

    def sample_point(self, g, rng: np.random.Generator):
        return self.measure(g).sample(rng)

    def check_weak_bounded(self, x, ball: Sequence) -> float:
        """sup over the ball of |log dmu_g/dmu_e(x)| (finite-ball witness)."""
        return max(abs(self.log_rn_point(g, x)) for g in ball)


class ConstantFamily(MeasureFamily):
    """mu_g = nu for every g."""

    def __init__(self, group, nu):
        super().__init__(group, strong_bounded=True)
        self.nu = nu

    def measure(self, g):
        return self.nu

    def measure_key(self, g):
        return "const"

    def tail_certificate(self, g, radius: int) -> Optional[float]:
        return 0.0

    def to_json(self) -> dict:
        body = self.nu.to_json() if not isinstance(self.nu, DensityMeasure) else self.nu.to_json()
        return {"type": "constant", "group": self.group.spec.to_json(), "nu": body,
                "nu_kind": "density" if isinstance(self.nu, DensityMeasure) else "discrete"}


class TwoPointFamily(MeasureFamily):
    """mu_g on {0,1} with mu_g(0) = a(g)."""

    def __init__(self, group, a_of: Callable[[object], float], rule_json: dict | None = None):
        super().__init__(group)
        self.a_of = a_of
        self.rule_json = rule_json or {}
        self._cache: Dict[float, DiscreteMeasure] = {}

    def measure(self, g):
        a = self.a_of(g)
        m = self._cache.get(a)
        if m is None:
            m = two_point(a)
            self._cache[a] = m
        return m

    def measure_key(self, g):
        return self.a_of(g)

    def pair_stats_values(self, a: float, b: float) -> Tuple[float, float, float]:
        h2 = 1.0 - (math.sqrt(a * b) + math.sqrt((1.0 - a) * (1.0 - b)))
        neglog = -math.log1p(-h2)
        d = 0.5 * math.log(a * a / b + (1.0 - a) ** 2 / (1.0 - b))
        return h2, neglog, d

    def pair_stats(self, g, h):
        gh = self.group.mul(g, h)
        a, b = self.a_of(h), self.a_of(gh)
        if a == b:
            return (0.0, 0.0, 0.0)
        h2, neglog, _ = self.pair_stats_values(a, b)
        # D(mu_h, mu_gh): first argument is the h measure
        d = 0.5 * math.log(a * a / b + (1.0 - a) ** 2 / (1.0 - b))
        return h2, neglog, d

    def to_json(self) -> dict:
        return {"type": "two_point", "group": self.group.spec.to_json(), "rule": self.rule_json}


class DensityShiftFamily(MeasureFamily):
    """mu_g = nu_{F(g)} with dnu_s(t) = phi(t+s) dt (bounded shift function F)."""

    def __init__(self, group, shape: str, f_of: Callable[[object], float],
                 rule_json: dict | None = None):
        super().__init__(group, strong_bounded=(shape == "laplace"))
        self.shape = shape
        self.f_of = f_of
        self.rule_json = rule_json or {}
        self._cache: Dict[float, DensityMeasure] = {}

    def measure(self, g):
        s = self.f_of(g)
        m = self._cache.get(s)
        if m is None:
            m = DensityMeasure(self.shape, s)
            self._cache[s] = m
        return m

    def measure_key(self, g):
        return self.f_of(g)

    def pair_stats(self, g, h):
        gh = self.group.mul(g, h)
        d = self.f_of(gh) - self.f_of(h)
        if d == 0.0:
            return (0.0, 0.0, 0.0)
        bc = bhattacharyya(self.measure(gh), self.measure(h))
        h2 = 1.0 - bc
        neglog = -math.log1p(-h2)
        dd = 0.5 * math.log(theta_closed(self.shape, d))
        return h2, neglog, dd

    def to_json(self) -> dict:
        return {"type": "density_shift", "group": self.group.spec.to_json(),
                "phi": self.shape, "shift_rule": self.rule_json}


class LevelFamily(MeasureFamily):
    """mu_g = level_measures[level_of(g)]; used by the N-function schedules."""

    def __init__(self, group, level_measures: Sequence[DiscreteMeasure],
                 level_of: Callable[[object], int], rule_json: dict | None = None):
        super().__init__(group)
        self.level_measures = list(level_measures)
        self.level_of = level_of
        self.rule_json = rule_json or {}

    def measure(self, g):
        return self.level_measures[self.level_of(g)]

    def measure_key(self, g):
        return self.level_of(g)

    def to_json(self) -> dict:
        return {"type": "levels", "group": self.group.spec.to_json(),
                "levels": [m.to_json() for m in self.level_measures], "rule": self.rule_json}


class LatticeSectionFamily(MeasureFamily):
    """dmu_g/dmu_0 = rho_g * lam on the section A_g, rho_g off it.

    lam may be any positive factor != 1 (a factor above 1 is the same lattice
    with the complementary sections); the type III_lambda constructions
    restrict it to (0,1) at build time.
    """

    def __init__(self, group, base: DiscreteMeasure, section_of: Callable[[object], frozenset],
                 lam: float, rule_json: dict | None = None):
        if lam <= 0.0 or lam == 1.0:
            raise ValueError("the lattice factor must be positive and != 1")
        super().__init__(group, strong_bounded=True)
        self.base = base
        self.section_of = section_of
        self.lam = lam
        self.rule_json = rule_json or {}
        self._cache: Dict[frozenset, DiscreteMeasure] = {}
        self._rho_cache: Dict[frozenset, float] = {}

    def rho(self, g) -> float:
        A = self.section_of(g)
        r = self._rho_cache.get(A)
        if r is None:
            mass = self.base.mass(A)
            r = 1.0 / (self.lam * mass + (1.0 - mass))
            self._rho_cache[A] = r
        return r

    def measure(self, g):
        A = self.section_of(g)
        m = self._cache.get(A)
        if m is None:
            logrho = math.log(self.rho(g))
            loglam = math.log(self.lam)
            lw = self.base.logw + logrho + np.array(
                [loglam if lab in A else 0.0 for lab in self.base.labels]
            )
            m = DiscreteMeasure(self.base.labels, lw, self.base.tail_mass)
            self._cache[A] = m
        return m

    def measure_key(self, g):
        return self.section_of(g)

    def lattice_info(self) -> LatticeInfo:
        p = math.log(self.lam)
        e_section = self.section_of(self.group.identity())

        def const(g):
            return math.log(self.rho(g)) - math.log(self.rho(self.group.identity()))

        def level(g, x):
            return int(x in self.section_of(g)) - int(x in e_section)

        return LatticeInfo(p=p, const=const, level=level)

    def section_symdiff_zeta(self, g, window: Sequence) -> float:
        """zeta(g.A symdiff A) accumulated over the window: sum_h mu_0(A_{gh} symdiff A_h)."""
        total = 0.0
        for h in window:
            gh = self.group.mul(g, h)
            total += self.base.mass(self.section_of(gh) ^ self.section_of(h))
        return total

    def to_json(self) -> dict:
        return {"type": "prop51", "group": self.group.spec.to_json(),
                "base": self.base.to_json(), "lam": self.lam, "rule": self.rule_json}
