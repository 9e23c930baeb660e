"""Verifiers for Krieger-type witnesses: given a candidate reference measure,
base subsets, shifts, or a lattice period, accumulate the summability
statistics whose convergence or divergence is the evidence for type II_1,
II_infty, or membership of 2*pi/p in the T-invariant.

Witnesses are inputs, not searched for: the existence proofs extract them
non-constructively, so this module verifies rather than discovers.  The one
heuristic is a Hellinger clustering of the measure family, labeled as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import evidence
from .measures import (
    DiscreteMeasure,
    MeasureFamily,
    hellinger2,
    restrict_normalize,
)
from .quadrature import lattice_dist


@dataclass
class TypeWitness:
    """Candidate data for the type checks; any piece may be absent."""

    nu: object  # reference measure ~ mu_e
    U_of: Optional[Callable[[object], frozenset]] = None  # g -> base subset
    t_of: Optional[Callable[[object], float] | str] = None  # g -> shift, or "lattice_const"
    p: Optional[float] = None
    rho_of: Optional[Callable[[object], float]] = None

    def __post_init__(self):
        if self.p is not None and self.p == 0:
            raise ValueError("lattice period p must be nonzero")

    @staticmethod
    def from_json(obj: dict) -> "TypeWitness":
        """Table-backed witness: {"nu": discrete measure, "U": {g: [labels]},
        "t": {g: shift} | "lattice_const", "p": real, "rho": {g: value}}."""
        nu = DiscreteMeasure.from_json(obj["nu"])
        U_of = None
        if "U" in obj:
            table = {int(g): frozenset(v) for g, v in obj["U"].items()}
            U_of = lambda g, t=table: t[int(g)]
        t_of = obj.get("t")
        if isinstance(t_of, dict):
            t_table = {int(g): float(v) for g, v in t_of.items()}
            t_of = lambda g, t=t_table: t[int(g)]
        rho_of = None
        if "rho" in obj:
            r_table = {int(g): float(v) for g, v in obj["rho"].items()}
            rho_of = lambda g, t=r_table: t[int(g)]
        return TypeWitness(nu=nu, U_of=U_of, t_of=t_of, p=obj.get("p"), rho_of=rho_of)


@dataclass
class SumTrack:
    name: str
    partials: List[float]
    verdict: str

    def to_json(self) -> dict:
        return {"name": self.name, "partials": self.partials, "verdict": self.verdict}


@dataclass
class WitnessVerdict:
    sums: Dict[str, SumTrack]
    alpha: Dict[str, dict] = field(default_factory=dict)
    flags: Dict[str, bool] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "sums": {k: v.to_json() for k, v in self.sums.items()},
            "alpha": self.alpha,
            "flags": self.flags,
        }


def _windows_to_balls(family: MeasureFamily, windows: Sequence[int]) -> List[List]:
    return [family.group.ball(r) for r in windows]


def _track(name: str, partials: List[float]) -> SumTrack:
    return SumTrack(name, partials, evidence.trend(partials))


def check_II1(family: MeasureFamily, nu, windows: Sequence[int]) -> SumTrack:
    """Partial sums of H^2(mu_g, nu); a cauchy trend is II_1 evidence."""
    shells = _level_shells(family, windows)
    if shells is not None:
        partials = _aggregate(shells, lambda lvl: hellinger2(family.level_measures[lvl], nu))
        return _track("sum_h2_to_nu", partials)
    partials = []
    acc = 0.0
    done: set = set()
    for ball in _windows_to_balls(family, windows):
        for g in ball:
            if g in done:
                continue
            done.add(g)
            acc += hellinger2(family.measure(g), nu)
        partials.append(acc)
    return _track("sum_h2_to_nu", partials)


def _level_shells(family: MeasureFamily, windows: Sequence[int]):
    """Aggregated (level, count) shells per window for level-structured
    families whose boxes are too large to enumerate; None otherwise."""
    fn = getattr(family, "window_level_counts", None)
    if fn is None:
        return None
    return [fn(w) for w in windows]


def _aggregate(shells, value_of_level) -> List[float]:
    cache: Dict[int, float] = {}
    partials = []
    for counts in shells:
        total = 0.0
        for lvl, cnt in counts:
            if lvl not in cache:
                cache[lvl] = value_of_level(lvl)
            total += cnt * cache[lvl]
        partials.append(total)
    return partials


def check_IIinf(family: MeasureFamily, witness: TypeWitness,
                windows: Sequence[int]) -> WitnessVerdict:
    """The three II_infty sums plus, per generator, the homomorphism sums
    sum_h (log nu(U_gh) - log nu(U_h)) whose vanishing the criterion needs."""
    if witness.U_of is None:
        raise ValueError("witness must supply the subsets U_g")
    nu = witness.nu
    U_of = witness.U_of
    shells = _level_shells(family, windows)

    def u_mass(g) -> float:
        return nu.mass(U_of(g))

    restr_cache: Dict[frozenset, DiscreteMeasure] = {}

    def restricted(g) -> DiscreteMeasure:
        U = U_of(g)
        m = restr_cache.get(U)
        if m is None:
            if nu.mass(U) <= 0:
                raise ValueError("witness subset with nu(U_g) = 0")
            m = restrict_normalize(nu, U)
            restr_cache[U] = m
        return m

    if shells is not None:
        lvl_meas = family.level_measures
        lvl_U = family.level_subset  # level -> frozenset, supplied by builder
        mu_esc = getattr(family, "level_mu_escape",
                         lambda l: 1.0 - lvl_meas[l].mass(lvl_U(l)))
        nu_esc = getattr(family, "level_nu_escape",
                         lambda l: 1.0 - nu.mass(lvl_U(l)))
        s1 = _aggregate(shells, lambda l: hellinger2(lvl_meas[l], restrict_normalize(nu, lvl_U(l))))
        s2 = _aggregate(shells, mu_esc)
        s3 = _aggregate(shells, nu_esc)
    else:
        s1, s2, s3 = [], [], []
        acc1 = acc2 = acc3 = 0.0
        done: set = set()
        for ball in _windows_to_balls(family, windows):
            for g in ball:
                if g in done:
                    continue
                done.add(g)
                mu_g = family.measure(g)
                acc1 += hellinger2(mu_g, restricted(g))
                acc2 += 1.0 - mu_g.mass(U_of(g))
                acc3 += 1.0 - nu.mass(U_of(g))
            s1.append(acc1)
            s2.append(acc2)
            s3.append(acc3)

    sums = {
        "h2_to_restriction": _track("h2_to_restriction", s1),
        "mu_escape_mass": _track("mu_escape_mass", s2),
        "nu_escape_mass": _track("nu_escape_mass", s3),
    }

    alpha: Dict[str, dict] = {}
    group = family.group
    for gen in group.generators():
        partials = []
        for ball in _windows_to_balls(family, windows):
            total = 0.0
            for h in ball:
                gh = group.mul(gen, h)
                total += math.log(u_mass(gh)) - math.log(u_mass(h))
            partials.append(total)
        alpha[group.label(gen)] = {
            "partials": partials,
            "vanishing": evidence.vanishing(partials),
        }

    flags = {
        "shape_ok": (
            sums["h2_to_restriction"].verdict == evidence.CAUCHY
            and sums["mu_escape_mass"].verdict == evidence.CAUCHY
            and sums["nu_escape_mass"].verdict == evidence.DIVERGING
            and all(a["vanishing"] for a in alpha.values())
        )
    }
    return WitnessVerdict(sums, alpha, flags)


def _term_T_invariant(family: MeasureFamily, g, nu, t_g: float, p: float) -> float:
    """integral of d(log dmu_g/dnu - t_g, pZ)^2 dmu_g, exact for discrete."""
    info = family.lattice_info()
    mu_g = family.measure(g)
    ref = family.reference()
    if (
        info is not None
        and isinstance(mu_g, DiscreteMeasure)
        and isinstance(nu, DiscreteMeasure)
        and nu.labels == ref.labels
        and np.array_equal(nu.logw, ref.logw)
    ):
        # exact path: log dmu_g/dnu(x) = const(g) + level(g,x) * p_fam
        resid = info.const(g) - t_g
        ratio = info.p / p
        k = round(ratio)
        lattice_multiple = abs(ratio - k) < 1e-12 and k != 0
        total = 0.0
        for lab, lw in zip(mu_g.labels, mu_g.logw):
            m = info.level(g, lab)
            if lattice_multiple:
                d = lattice_dist(resid, p)  # m * p_fam lies in pZ exactly
            else:
                d = lattice_dist(resid + m * info.p, p)
            total += math.exp(lw) * d * d
        return total
    if isinstance(mu_g, DiscreteMeasure):
        total = 0.0
        for lab, lw in zip(mu_g.labels, mu_g.logw):
            v = mu_g.log_weight(lab) - nu.log_weight(lab) - t_g
            d = lattice_dist(v, p)
            total += math.exp(lw) * d * d
        return total
    # density case: quadrature against mu_g
    from .quadrature import integrate

    lo, hi = mu_g.quad_interval()
    pts = mu_g.kinks() + nu.kinks()

    def f(t):
        v = mu_g.log_pdf(t) - nu.log_pdf(t) - t_g
        return lattice_dist(v, p) ** 2 * mu_g.pdf(t)

    return integrate(f, lo, hi, tol=1e-10, points=pts)


def _phase_shift(family: MeasureFamily, g, nu, p: float) -> float:
    """Phase-optimal shift: t with |z| = exp(-2 pi i t / p) z for the
    characteristic value z of log dmu_g/dnu under mu_g."""
    mu_g = family.measure(g)
    w = 2.0 * math.pi / p
    if isinstance(mu_g, DiscreteMeasure):
        z = 0.0 + 0.0j
        for lab, lw in zip(mu_g.labels, mu_g.logw):
            v = mu_g.log_weight(lab) - nu.log_weight(lab)
            z += math.exp(lw) * complex(math.cos(w * v), math.sin(w * v))
    else:
        from .quadrature import integrate

        lo, hi = mu_g.quad_interval()
        pts = mu_g.kinks() + nu.kinks()
        re = integrate(lambda t: math.cos(w * (mu_g.log_pdf(t) - nu.log_pdf(t))) * mu_g.pdf(t),
                       lo, hi, tol=1e-10, points=pts)
        im = integrate(lambda t: math.sin(w * (mu_g.log_pdf(t) - nu.log_pdf(t))) * mu_g.pdf(t),
                       lo, hi, tol=1e-10, points=pts)
        z = complex(re, im)
    if abs(z) < 1e-13:
        return 0.0
    return (p / (2.0 * math.pi)) * math.atan2(z.imag, z.real)


def check_T_invariant(family: MeasureFamily, p: float, witness: TypeWitness,
                      windows: Sequence[int]) -> WitnessVerdict:
    """Partial sums of the lattice-distance integrals at period p; a cauchy
    trend is evidence that 2*pi/p lies in the T-invariant."""
    if p == 0:
        raise ValueError("p must be nonzero")
    nu = witness.nu
    info = family.lattice_info()

    def shift_of(g) -> float:
        if witness.t_of == "lattice_const":
            if info is None:
                raise ValueError("family has no exact lattice structure")
            return info.const(g)
        if callable(witness.t_of):
            return witness.t_of(g)
        return _phase_shift(family, g, nu, p)

    partials = []
    acc = 0.0
    done: set = set()
    term_cache: Dict[object, float] = {}
    for ball in _windows_to_balls(family, windows):
        for g in ball:
            if g in done:
                continue
            done.add(g)
            key = family.measure_key(g)
            if key not in term_cache:
                term_cache[key] = _term_T_invariant(family, g, nu, shift_of(g), p)
            acc += term_cache[key]
        partials.append(acc)
    track = _track(f"t_invariant_p={p}", partials)
    return WitnessVerdict({"lattice_sq": track},
                          flags={"cauchy": track.verdict == evidence.CAUCHY})


def alpha_homomorphism(rho_of: Callable[[object], float], p: float, g,
                       group, windows: Sequence[int]) -> dict:
    """Partial sums mod p of sum_h (log rho_gh - log rho_h), with the
    absolute sums tracked so non-summable inputs are flagged."""
    if p == 0:
        raise ValueError("p must be nonzero")
    partials = []
    abs_partials = []
    for r in windows:
        ball = group.ball(r)
        total = 0.0
        abs_total = 0.0
        for h in ball:
            term = math.log(rho_of(group.mul(g, h))) - math.log(rho_of(h))
            total += term
            abs_total += abs(term)
        partials.append(total)
        abs_partials.append(abs_total)
    mod = [lattice_dist(v, p) for v in partials]
    return {
        "partials": partials,
        "partials_mod_p": mod,
        "abs_partials": abs_partials,
        "abs_summable": evidence.trend(abs_partials) != evidence.DIVERGING,
        "vanishing": evidence.vanishing(mod),
        "value_mod_p": mod[-1] if mod else None,
        "converged": evidence.vanishing(mod, tol=1e-9),
    }


@dataclass
class HellingerCluster:
    representative_key: object
    members: List[object]
    attained_in_outer_shell: bool


def hellinger_limit_points(family: MeasureFamily, ball: Sequence, tol: float) -> List[HellingerCluster]:
    """Single-linkage clustering of {mu_g : g in ball} under Hellinger
    distance.  Heuristic: clusters still attained on the outermost shell are
    the candidates for limit points; completeness is not claimed."""
    group = family.group
    keys: Dict[object, object] = {}
    for g in ball:
        k = family.measure_key(g)
        keys.setdefault(k, g)
    reps = list(keys.items())
    n = len(reps)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = math.sqrt(max(0.0, hellinger2(family.measure(reps[i][1]),
                                              family.measure(reps[j][1]))))
            if d <= tol:
                ri, rj = find(i), find(j)
                parent[ri] = rj
    radius = max(group.word_length(g) for g in ball)
    outer_keys = {family.measure_key(g) for g in ball if group.word_length(g) == radius}
    clusters: Dict[int, HellingerCluster] = {}
    for i, (k, g) in enumerate(reps):
        r = find(i)
        c = clusters.get(r)
        if c is None:
            c = HellingerCluster(k, [], False)
            clusters[r] = c
        c.members.append(k)
        if k in outer_keys:
            c.attained_in_outer_shell = True
    return list(clusters.values())
