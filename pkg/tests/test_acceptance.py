"""Acceptance criteria, one test per criterion, each printing a pass/fail line.

Tolerances and runtime budgets are pinned here; the Monte Carlo shapes run at
the pinned seed 20240601.
"""

import math
import time

import numpy as np

from bershift import evidence
from bershift.classify import canonical_json, load_manifest, run_suite
from bershift.constructions import (
    DensityFamilySpec,
    Prop51Spec,
    build_cor52,
    build_example55,
    build_N_function,
    build_prop51,
    build_thm53,
    build_thm54,
    build_thmD,
    build_thmE,
    remark62_constants,
    thm53_c_bound_check,
    w_a_set,
    zeta_one_sided,
)
from bershift.criteria import c_of_g, poincare_exponent, product_hellinger_check
from bershift.groups import FreeProductGroup, GroupSpec, ball_count
from bershift.measures import (
    DiscreteMeasure,
    d_divergence,
    hellinger2,
    pushforward,
    theta_closed,
    theta_quad,
    two_point_moment_bound,
)
from bershift.montecarlo import (
    lattice_stat,
    recurrence_norm_estimates,
    run_flip_probes,
)
from bershift.quadrature import lattice_dist
from bershift.tailflow import (
    AtomicReal,
    TailWalkSpec,
    center_measure,
    eigenvalue_criterion,
    ore_periodicity,
    semifinite_criterion,
)

SEED = 20240601


def _report(num: int, label: str, ok: bool, started: float, budget: float):
    elapsed = time.time() - started
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"[{status}] criterion {num}: {label} ({elapsed:.1f}s / budget {budget:.0f}s)")
    assert ok, f"criterion {num} failed"
    assert elapsed < budget, f"criterion {num} over budget: {elapsed:.1f}s"


def test_criterion_1_closed_forms_vs_quadrature():
    t0 = time.time()
    ok = True
    for s in (0.5, 1.0, 2.0):
        cf = (2.0 / 3.0) * math.exp(s) + (1.0 / 3.0) * math.exp(-2.0 * s)
        ok &= abs(theta_closed("laplace", s) - cf) <= 1e-12
        ok &= abs(theta_quad("laplace", s) - cf) / cf < 1e-6
    for kappa in (0.5, 1.0, 2.0):
        rc = remark62_constants(kappa)
        ok &= abs(rc.beta - math.log(1.0 + kappa ** 2 / 4.0)) <= 1e-14
        ok &= abs(rc.alpha - math.log(1.0 + 2.0 * kappa ** 2 + 5.0 * kappa ** 4 / 8.0)) <= 1e-14
        ok &= rc.max_relative_error() < 1e-6
    _report(1, "theta/beta/alpha closed forms vs quadrature", ok, t0, 5.0)


def test_criterion_2_free_product_combinatorics():
    t0 = time.time()
    ok = True
    for a in (2, 3):
        G = FreeProductGroup(a)
        for m in range(1, 6):
            ok &= ball_count(a, m) == G.bfs_ball_count(m)
    wa2 = w_a_set(2)
    for g in wa2.group.ball(4):
        ok &= wa2.translate_symdiff_size(g) == wa2.group.word_length(g)
    wa3 = w_a_set(3)
    for g in wa3.group.ball(2):
        ok &= wa3.translate_symdiff_size(g) == wa3.group.word_length(g)
    _report(2, "ball counts vs BFS; |gW_a symdiff W_a| = |g|", ok, t0, 10.0)


def test_criterion_3_inequality_suites():
    t0 = time.time()
    violations = 0
    rng = np.random.default_rng(SEED)

    # divergence chain on 1e4 random equivalent pairs
    for _ in range(10_000):
        n = int(rng.integers(2, 9))
        w1 = rng.random(n) + 1e-3
        w2 = rng.random(n) + 1e-3
        p1, p2 = w1 / w1.sum(), w2 / w2.sum()
        bc = float(np.sqrt(p1 * p2).sum())
        h2 = 1.0 - bc
        neglog = -math.log1p(-h2)
        d = 0.5 * math.log(float((p1 * p1 / p2).sum()))
        if not (h2 <= neglog + 1e-12 and neglog <= d + 1e-12):
            violations += 1

    # pushforward monotonicity on 1e4 random pairs and maps
    for _ in range(10_000):
        n = int(rng.integers(2, 17))
        k = int(rng.integers(1, 9))
        w1 = rng.random(n) + 1e-3
        w2 = rng.random(n) + 1e-3
        p1, p2 = w1 / w1.sum(), w2 / w2.sum()
        table = rng.integers(0, k, size=n)
        q1 = np.bincount(table, weights=p1, minlength=k)
        q2 = np.bincount(table, weights=p2, minlength=k)
        keep = q1 > 0
        d_down = 0.5 * math.log(float((q1[keep] * q1[keep] / q2[keep]).sum()))
        d_up = 0.5 * math.log(float((p1 * p1 / p2).sum()))
        if d_down > d_up + 1e-12:
            violations += 1

    # two-point moment bound
    for _ in range(10_000):
        a, b = rng.uniform(1e-4, 1.0 - 1e-4, 2)
        moment, bound = two_point_moment_bound(float(a), float(b))
        if moment > bound + 1e-12:
            violations += 1

    # centering lemma factor 8 against brute-force double sums
    for i in range(10_000):
        n = int(rng.integers(1, 13))
        atoms = rng.uniform(-25, 25, n)
        w = rng.random(n) + 1e-3
        w = w / w.sum()
        mu = AtomicReal(atoms, w)
        kappa = (0.5, 1.0, 2.0)[i % 3]
        res = center_measure(mu, kappa)
        brute = float((np.clip(atoms[:, None] - atoms[None, :], -kappa, kappa) ** 2
                       * w[:, None] * w[None, :]).sum())
        if res.lhs > 8.0 * brute + 1e-12:
            violations += 1

    # sin^2 / lattice-distance sandwich on a 1e4-point grid
    for x in np.linspace(-3.0, 3.0, 10_000):
        d = lattice_dist(x, 1.0)
        s = math.sin(math.pi * x) ** 2
        if not (4.0 * d * d <= s + 1e-12 and s <= math.pi ** 2 * d * d + 1e-12):
            violations += 1

    _report(3, f"inequality suites (violations={violations})", violations == 0, t0, 60.0)


def test_criterion_4_product_hellinger_identity():
    t0 = time.time()
    fam = build_example55(0.5)
    ok = True
    window = fam.group.ball(256)
    for g in (1, -1, 2, -3):
        lhs, rhs = product_hellinger_check(fam, g, window)
        ok &= abs(lhs - rhs) <= 1e-12
    _report(4, "product Hellinger identity on windows up to 256", ok, t0, 30.0)


def test_criterion_5_prop51_bound():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    base = DiscreteMeasure.from_weights(range(1, 9), [1.0 / 8] * 8)
    violations = 0
    lams = (0.25, 0.5, 0.75)
    for trial in range(1000):
        lam = lams[trial % 3]
        sections = {}
        for g in range(-32, 33):
            size = int(rng.integers(0, 4))
            if size:
                sections[g] = frozenset(
                    int(v) for v in rng.choice(range(1, 9), size, replace=False))
        fam = build_prop51(Prop51Spec(GroupSpec("Z"), base, sections, lam))
        window = fam.group.ball(36)
        g = int(rng.integers(1, 4))
        zeta = fam.section_symdiff_zeta(g, window)
        for gg in (g, -g):
            if c_of_g(fam, gg, window).C > (lam ** -2 / 2.0) * zeta + 1e-12:
                violations += 1
        into, outof = zeta_one_sided(fam, g, window)
        if abs(into - outof) > 1e-12:
            violations += 1
    _report(5, f"Prop 5.1 bound sweep (violations={violations})", violations == 0, t0, 120.0)


def test_criterion_6_thmE_inequality_chain():
    t0 = time.time()
    fam = build_thmE()
    ok = True
    for k in range(1, 6):
        for N in range(1, int(math.isqrt(fam.b[k - 1])) + 1):
            exact, tail = fam.cocycle_norm_sq(N)
            ok &= math.sqrt(exact + tail) <= fam.thmE_norm_bound(N, k) + 1e-9
    rng = np.random.default_rng(SEED)
    for _ in range(10_000):
        n = int(rng.integers(-3000, 3001))
        N = int(rng.integers(-50, 51))
        M = int(rng.integers(-50, 51))
        ok &= abs(fam.cocycle(N + M, n)
                  - fam.cocycle(N, n) - fam.cocycle(M, n - N)) <= 1e-12
    _report(6, "Thm E norm chain + exact cocycle identity", ok, t0, 60.0)


def test_criterion_7_poincare_scaling():
    t0 = time.time()
    G = FreeProductGroup(2)
    ball = G.ball(8)
    norms1 = {g: float(G.word_length(g)) for g in ball}
    grid = [float(s) for s in range(1, 9)]
    rep1 = poincare_exponent(norms1, grid)
    ok = rep1.estimate >= 0.85 * math.log(3.0)
    norms2 = {g: 4.0 * G.word_length(g) for g in ball}
    rep2 = poincare_exponent(norms2, [4.0 * s for s in grid])
    ok &= rep2.counts == rep1.counts
    ok &= rep2.estimate == rep1.estimate / 4.0
    _report(7, "Poincare estimate and exact kappa^-2 scaling", ok, t0, 30.0)


def test_criterion_8_tailflow_suite():
    t0 = time.time()
    ok = True
    rade = TailWalkSpec.named("rademacher")
    rep = ore_periodicity(rade, 2.0, 256)
    ok &= rep.fired == "ore1"
    ok &= semifinite_criterion(rade, 1.0, 256).verdict != evidence.CAUCHY

    gauss = TailWalkSpec.named("shrinking_gauss", C=2.0)
    ok &= ore_periodicity(gauss, 2.0, 2048).fired is None
    ok &= semifinite_criterion(gauss, 1.0, 4096).verdict == evidence.CAUCHY

    contaminated = TailWalkSpec.named("contaminated_rademacher")
    repc = ore_periodicity(contaminated, 2.0, 512)
    ok &= repc.fired == "ore3"
    ok &= isinstance(repc.details["select_subset"], dict)

    p = 0.75
    lattice = TailWalkSpec.named("lattice_shift", p=p, offset=0.31, drift=0.017)
    ok &= eigenvalue_criterion(lattice, p, 256).partial_sums[-1] == 0.0
    _report(8, "tailflow criterion suite", ok, t0, 30.0)


def test_criterion_9_monte_carlo_shapes():
    t0 = time.time()
    ok = True

    # (a) lattice statistic on the Cor 5.2 desk instance at p = log(1/2)
    cor = build_cor52(0.5)
    rep_a = lattice_stat(cor, math.log(0.5), [8, 16, 32, 64], 300, SEED)
    ok &= all(b < a for a, b in zip(rep_a.medians, rep_a.medians[1:]))
    ok &= rep_a.medians[-1] < 0.05

    # (b) the translated Laplace family stays spread at every grid p
    lap = build_thmD(DensityFamilySpec("laplace",
                                       {"name": "indicator_halfline", "kappa": 0.25}))
    for p in (1.0, 0.5, 2.0):
        rep_b = lattice_stat(lap, p, [8, 16, 32, 64], 300, SEED)
        ok &= rep_b.medians[-1] > 0.2

    # (c) recurrence-weight estimates decrease on Example 5.5
    ex = build_example55(0.5)
    rep_c = recurrence_norm_estimates(ex, [4, 8, 16, 32], 100, SEED)
    ok &= all(b < a for a, b in zip(rep_c.estimates, rep_c.estimates[1:]))
    ok &= rep_c.estimates[-1] < 0.5 * rep_c.estimates[0]

    # (d) flip probes land in the predicted finite ratio set
    th = build_thmE()
    n0 = th.probe_start()
    rep_d = run_flip_probes(th, n0, 10_000, SEED)
    a, b = th.spec.flip_target
    predicted = set()
    for m in range(n0, max(rep_d.locations) + 1):
        r = th.flip_ratio(m)
        predicted.add(f"{r:.12g}")
        predicted.add(f"{1.0 / r:.12g}")
    ok &= all(f"{r:.12g}" in predicted for r in rep_d.ratios)
    ok &= all(a <= abs(math.log(r)) <= b for r in rep_d.ratios)
    ok &= rep_d.failures < 50  # reported, not violations

    _report(9, "seed-pinned Monte Carlo shapes (a-d)", ok, t0, 300.0)


def test_criterion_10_construction_validators():
    t0 = time.time()
    b53 = build_thm53(4)
    ok = b53.reverify()
    ok &= all(1.0 <= r <= 2.0 for r in b53.rhos)
    for n in range(1, 5):
        for m in range(n + 1, 5):
            bound = math.exp(3.0 * b53.gammas[n - 1])
            lm = b53.family.level_measures
            ok &= math.exp(2.0 * d_divergence(lm[n], lm[m])) <= bound
            ok &= math.exp(2.0 * d_divergence(lm[m], lm[n])) <= bound
    ok &= all(row["ok"] for row in thm53_c_bound_check(b53, 1))

    b54 = build_thm54(4)
    ok &= b54.reverify()
    shell_exact = [c for c in b54.constraints if c["name"] == "shell_deficit"]
    ok &= len(shell_exact) == 4 and all(c["ok"] for c in shell_exact)
    for n, k_n in enumerate(b54.k_seq, start=1):
        ok &= (1.0 - b54.deltas[n]) ** k_n < 2.0 ** (-n)
    boundary = [c for c in b54.constraints if c["name"] == "boundary_mass"]
    ok &= all(c["ok"] for c in boundary)

    nf = build_N_function([4, 16, 64, 256], [1, 2, 3, 4])
    checks = nf.verify_identities(64)
    ok &= bool(checks) and all(c["identity1"] and c["identity2"] for c in checks)
    _report(10, "Thm 5.3/5.4 constraint lists + N-function identities", ok, t0, 60.0)


def test_criterion_11_pipeline_end_to_end():
    t0 = time.time()
    manifest = load_manifest("paper-examples")
    first = run_suite(manifest, seed=SEED)
    ok = first.ok
    verdicts = {r["name"]: r["verdict"] for r in first.results}
    ok &= "II_1" in verdicts["constant-two-point"]
    ok &= "lambda=0.5" in verdicts["example55-lam-half"]
    ok &= "II_infty" in verdicts["thm54-desk"]
    ok &= "III_1" in verdicts["thmD-laplace"]
    second = run_suite(manifest, seed=SEED)
    for name in first.reports:
        ok &= canonical_json(first.reports[name]) == canonical_json(second.reports[name])
    _report(11, "suite paper-examples verdicts, byte-identical rerun", ok, t0, 300.0)
