"""Classification pipeline: compose the criterion modules into an evidence
report with an explicit epistemic status.

Verdicts are evidence summaries, never proofs: every verdict cites the table
ids it rests on, and a mandatory caveats array carries every desk-scale
substitution and uncertified tail.  Reports are byte-identical on rerun at a
pinned seed.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import evidence
from .criteria import (
    c_of_g,
    cocycle_norms,
    dissipativity_sum,
    growth_report,
    kakutani_sum,
)
from .measures import MeasureFamily
from .montecarlo import lattice_stat
from .permwitness import (
    TypeWitness,
    alpha_homomorphism,
    check_II1,
    check_IIinf,
    check_T_invariant,
)

SPEC_VERSION = "1"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


@dataclass
class ClassifyConfig:
    seed: int = 20240601
    windows: tuple = (4, 8, 16, 32)
    growth_ball: int = 8
    growth_window: int = 8
    p_grid_extra: tuple = (1.0, 0.5, 2.0)
    lattice_windows: tuple = (8, 16, 32, 64)
    lattice_samples: int = 200
    threads: int = 1

    @staticmethod
    def from_json(obj: dict) -> "ClassifyConfig":
        known = {k: v for k, v in obj.items() if k in ClassifyConfig.__dataclass_fields__}
        for key in ("windows", "p_grid_extra", "lattice_windows"):
            if key in known:
                known[key] = tuple(known[key])
        return ClassifyConfig(**known)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "windows": list(self.windows),
            "growth_ball": self.growth_ball,
            "growth_window": self.growth_window,
            "p_grid_extra": list(self.p_grid_extra),
            "lattice_windows": list(self.lattice_windows),
            "lattice_samples": self.lattice_samples,
            "threads": self.threads,
            "spec_version": SPEC_VERSION,
        }


@dataclass
class ClassificationReport:
    family: dict
    family_hash: str
    verdict: str
    supporting_tables: List[str]
    tables: Dict[str, object]
    caveats: List[str]
    config: dict

    def to_json(self) -> dict:
        return {
            "spec_version": SPEC_VERSION,
            "family": self.family,
            "family_hash": self.family_hash,
            "verdict": self.verdict,
            "supporting_tables": self.supporting_tables,
            "tables": self.tables,
            "caveats": self.caveats,
            "config": self.config,
        }

    def dumps(self) -> str:
        return canonical_json(self.to_json())


def _family_hash(family: MeasureFamily) -> str:
    return hashlib.sha256(canonical_json(family.to_json()).encode()).hexdigest()


def _is_level_family(family) -> bool:
    return hasattr(family, "window_level_counts")


def classify(family: MeasureFamily, config: Optional[ClassifyConfig] = None) -> ClassificationReport:
    config = config or ClassifyConfig()
    group = family.group
    tables: Dict[str, object] = {}
    caveats: List[str] = list(family.desk_substitutions)
    supporting: List[str] = []

    level_mode = _is_level_family(family)
    sum_windows = (
        list(range(1, len(family.schedule.lo) + 1)) if level_mode else list(config.windows)
    )

    # 1. nonsingularity evidence: kakutani sums per generator
    kak = {}
    for gen in group.generators():
        partials = []
        cert = None
        for r in config.windows:
            val, cert = kakutani_sum(family, gen, group.ball(r))
            partials.append(val)
        kak[group.label(gen)] = {
            "windows": list(config.windows),
            "partials": partials,
            "trend": evidence.trend(partials),
            "tail_bound": "uncertified" if cert is None else cert,
        }
        if cert is None:
            caveats.append(f"kakutani tail uncertified for generator {group.label(gen)}")
    tables["kakutani"] = kak

    # 2. growth / dissipativity
    ball = group.ball(config.growth_ball)
    window = group.ball(config.growth_window)
    norms = cocycle_norms(family, ball, window)
    cvals = {g: c_of_g(family, g, window).C for g in ball}
    finite = [v for v in cvals.values() if math.isfinite(v) and v > 0]
    smax = max(finite) if finite else 1.0
    s_grid = [smax * k / 4.0 for k in range(1, 5)]
    gr = growth_report(family, s_grid, ball, window)
    tables["growth"] = gr.to_json()
    if gr.saturated:
        caveats.append("growth report ball-limited (saturated counts)")
    tables["dissipativity"] = dissipativity_sum(norms, group, ball).to_json()

    # 3. II_1 test
    ii1 = check_II1(family, family.reference(), sum_windows)
    tables["ii1"] = ii1.to_json()

    # 4. II_infty witness test, when the construction supplies a witness
    iiinf_ok = False
    witness_nu = getattr(family, "witness_nu", None)
    if witness_nu is not None:
        wit = TypeWitness(nu=witness_nu, U_of=family.witness_U_of)
        verdict = check_IIinf(family, wit, sum_windows)
        tables["iiinf"] = verdict.to_json()
        iiinf_ok = verdict.flags["shape_ok"]
    else:
        tables["iiinf"] = None
        caveats.append("no II_infty witness supplied; that branch is untested")

    # 5. T-invariant sweep and lattice statistic over the p grid
    info = family.lattice_info()
    p_grid: List[float] = []
    if info is not None:
        p_grid.append(abs(info.p))
    declared = family.metadata.get("declared_lambda")
    if declared is not None:
        p_decl = abs(math.log(declared))
        if all(abs(p_decl - q) > 1e-12 for q in p_grid):
            p_grid.append(p_decl)
    for q in config.p_grid_extra:
        if all(abs(q - qq) > 1e-12 for qq in p_grid):
            p_grid.append(q)

    witness = TypeWitness(nu=family.reference(),
                          t_of="lattice_const" if info is not None else None)
    concentrated: List[float] = []
    tinv = {}
    t_windows = [w for w in config.windows]
    for p in p_grid:
        res = check_T_invariant(family, p, witness, t_windows)
        tinv[f"{p:.12g}"] = res.to_json()
        if res.flags["cauchy"]:
            concentrated.append(p)
    tables["t_invariant"] = tinv

    lat = {}
    for p in p_grid:
        rep = lattice_stat(family, p, config.lattice_windows,
                           config.lattice_samples, config.seed, config.threads)
        lat[f"{p:.12g}"] = rep.to_json()
    tables["lattice_stat"] = lat

    # 6. alpha homomorphism on the lattice families
    alpha_ok = None
    if info is not None and hasattr(family, "rho"):
        alpha = {}
        ok = True
        for gen in group.generators():
            res = alpha_homomorphism(family.rho, info.p, gen, group, t_windows)
            alpha[group.label(gen)] = res
            ok = ok and res["vanishing"]
        tables["alpha"] = alpha
        alpha_ok = ok

    # verdict composition
    if ii1.verdict == evidence.CAUCHY:
        verdict = "type II_1 (mu ~ nu^G evidence)"
        supporting = ["ii1", "kakutani"]
    elif iiinf_ok:
        verdict = "consistent with type II_infty"
        supporting = ["iiinf", "kakutani"]
    elif concentrated:
        p_star = max(concentrated)
        lam = math.exp(-abs(p_star))
        if alpha_ok:
            verdict = f"consistent with type III_lambda, lambda={lam:.6g}"
            supporting = ["t_invariant", "alpha", "lattice_stat", "kakutani"]
        else:
            verdict = "consistent with type III_1 (lattice concentration with nonvanishing homomorphism)"
            supporting = ["t_invariant", "alpha", "lattice_stat", "kakutani"]
        if len(concentrated) > 1:
            caveats.append(
                "several commensurable lattices concentrate; the statistic alone"
                " cannot pick the minimal one (largest gap reported)")
    elif witness_nu is None and tables["iiinf"] is None and ii1.verdict == evidence.INCONCLUSIVE:
        verdict = "undetermined beyond type-II_1 test"
        supporting = ["ii1"]
    else:
        verdict = "consistent with type III_1 (no lattice concentration at any grid p)"
        supporting = ["t_invariant", "lattice_stat", "kakutani", "growth"]

    return ClassificationReport(
        family=family.to_json(),
        family_hash=_family_hash(family),
        verdict=verdict,
        supporting_tables=supporting,
        tables=_tables_json(tables),
        caveats=caveats,
        config=config.to_json(),
    )


def _tables_json(tables: Dict[str, object]):
    out = {}
    for k, v in tables.items():
        out[k] = v
    return out


# --------------------------------------------------------------------------
# scenario suite


PAPER_EXAMPLES_MANIFEST = {
    "name": "paper-examples",
    "scenarios": [
        {
            "name": "constant-two-point",
            "construct": {"name": "constant", "params": {"a": 0.5}},
            "expect": {"verdict_contains": "II_1"},
        },
        {
            "name": "example55-lam-half",
            "construct": {"name": "example55", "params": {"lam": 0.5}},
            "expect": {"verdict_contains": "lambda=0.5"},
        },
        {
            "name": "thm54-desk",
            "construct": {"name": "thm54", "params": {"levels": 4}},
            "expect": {"verdict_contains": "II_infty"},
        },
        {
            "name": "thmD-laplace",
            "construct": {"name": "thmD",
                          "params": {"phi": "laplace",
                                     "rule": {"name": "indicator_halfline", "kappa": 0.25}}},
            "expect": {"verdict_contains": "III_1"},
        },
    ],
}


@dataclass
class SuiteResult:
    ok: bool
    results: List[dict]
    reports: Dict[str, dict]

    def to_json(self) -> dict:
        return {"ok": self.ok, "results": self.results, "reports": self.reports}


def run_suite(manifest: dict, seed: Optional[int] = None) -> SuiteResult:
    from .constructions import construct_by_name

    results = []
    reports = {}
    ok = True
    for sc in manifest.get("scenarios", []):
        name = sc["name"]
        fam = construct_by_name(sc["construct"]["name"], sc["construct"].get("params", {}))
        cfg = ClassifyConfig.from_json(sc.get("config", {}))
        if seed is not None:
            cfg.seed = seed
        report = classify(fam, cfg)
        reports[name] = report.to_json()
        expect = sc.get("expect", {})
        needle = expect.get("verdict_contains")
        passed = needle is None or needle in report.verdict
        if not passed:
            ok = False
        results.append({
            "name": name,
            "verdict": report.verdict,
            "expected_contains": needle,
            "ok": passed,
        })
    return SuiteResult(ok, results, reports)


def load_manifest(name_or_obj) -> dict:
    if isinstance(name_or_obj, dict):
        return name_or_obj
    if name_or_obj == "paper-examples":
        return PAPER_EXAMPLES_MANIFEST
    raise ValueError(f"unknown manifest {name_or_obj!r}")
