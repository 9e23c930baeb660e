"""Centering lemma, walk criteria, subset selection, trajectory simulation."""

import math

import numpy as np
import pytest

from bershift import evidence
from bershift.quadrature import lattice_dist
from bershift.tailflow import (
    AtomicReal,
    CriterionReport,
    TailWalkSpec,
    TruncGaussReal,
    UniformReal,
    center_measure,
    eigenvalue_criterion,
    ore_periodicity,
    select_subset,
    semifinite_criterion,
    simulate_walk,
)


# ---- center_measure ---------------------------------------------------------


def test_center_dirac():
    res = center_measure(AtomicReal.dirac(3.5), 1.0)
    assert res.a == pytest.approx(3.5)
    assert res.eps == 0.0 and res.lhs == 0.0
    assert res.guarantee_ok


def test_center_two_spikes_branch():
    mu = AtomicReal([0.0, 10.0], [0.5, 0.5])
    res = center_measure(mu, 1.0)
    assert res.eps == pytest.approx(0.5)  # > kappa^2/8, so a = 0
    assert res.a == 0.0
    assert res.lhs == pytest.approx(0.5)
    assert res.lhs <= 8.0 * res.eps


def test_center_guarantee_random_sweep():
    # factor-8 guarantee against brute-force double sums, 1e4 cases
    rng = np.random.default_rng(17)
    for i in range(10_000):
        n = int(rng.integers(1, 13))
        atoms = rng.uniform(-20, 20, n)
        w = rng.random(n) + 1e-3
        mu = AtomicReal(atoms, w / w.sum())
        kappa = (0.5, 1.0, 2.0)[i % 3]
        res = center_measure(mu, kappa)
        brute = float(
            (np.clip(atoms[:, None] - atoms[None, :], -kappa, kappa) ** 2
             * (w / w.sum())[:, None] * (w / w.sum())[None, :]).sum())
        assert res.eps == pytest.approx(brute, rel=1e-12)
        assert res.lhs <= 8.0 * brute + 1e-12


def test_center_translation_equivariance_scan_branch():
    # tight cluster so the scan branch runs: the center shifts along, the
    # term is unchanged exactly
    rng = np.random.default_rng(23)
    atoms = rng.uniform(-0.1, 0.1, 8)
    w = rng.random(8)
    w = w / w.sum()
    mu = AtomicReal(atoms, w)
    r0 = center_measure(mu, 1.0)
    assert r0.eps <= 1.0 / 8.0
    for shift in (-3.0, 0.7, 11.0):
        r1 = center_measure(AtomicReal(atoms + shift, w), 1.0)
        assert r1.a == pytest.approx(r0.a + shift, abs=1e-12)
        assert r1.lhs == pytest.approx(r0.lhs, abs=1e-12)


# ---- semifinite criterion -----------------------------------------------------


def test_uniform_and_gauss_integral_oracles():
    # closed-form measure integrals vs Monte Carlo / Riemann oracles
    rng = np.random.default_rng(47)
    mu = UniformReal(-0.7, 1.9)
    grid = np.linspace(mu.lo, mu.hi, 200_001)
    dx = (mu.hi - mu.lo) / (len(grid) - 1)
    for kappa in (0.5, 1.0):
        riemann = float(np.clip(grid - 0.2, -kappa, kappa).__pow__(2).mean())
        assert mu.cutoff_sq(0.2, kappa) == pytest.approx(riemann, rel=1e-4)
        xs = mu.sample(rng, 200_000)
        ys = mu.sample(rng, 200_000)
        mc = float((np.clip(xs - ys, -kappa, kappa) ** 2).mean())
        assert mu.self_pair_cutoff_sq(kappa) == pytest.approx(mc, rel=0.02)
    d = mu.lattice_sq(0.1, 0.75)
    riemann_d = float(np.mean([lattice_dist(t - 0.1, 0.75) ** 2 for t in grid]))
    assert d == pytest.approx(riemann_d, rel=1e-4)

    tg = TruncGaussReal(0.3, 0.8, -2.0, 2.0)
    xs = tg.sample(rng, 200_000)
    assert tg.mean() == pytest.approx(float(xs.mean()), abs=0.01)
    assert tg.var() == pytest.approx(float(xs.var()), abs=0.01)
    assert tg.mass_in(-0.5, 1.0) == pytest.approx(
        float(((xs >= -0.5) & (xs <= 1.0)).mean()), abs=0.005)
    for kappa in (0.5, 1.5):
        mc = float((np.clip(xs - 0.1, -kappa, kappa) ** 2).mean())
        assert tg.cutoff_sq(0.1, kappa) == pytest.approx(mc, abs=0.01)
    mc_lat = float(np.mean([lattice_dist(t - 0.2, 1.1) ** 2 for t in xs[:50_000]]))
    assert tg.lattice_sq(0.2, 1.1) == pytest.approx(mc_lat, abs=0.01)


def test_semifinite_dirac_sequence_zero():
    spec = TailWalkSpec(rule=lambda n: AtomicReal.dirac(float(n)))
    rep = semifinite_criterion(spec, 1.0, 64)
    assert all(t == 0.0 for t in rep.terms)
    assert rep.verdict == evidence.CAUCHY


def test_semifinite_shrinking_uniform():
    spec = TailWalkSpec.named("shrinking_uniform")
    rep = semifinite_criterion(spec, 1.0, 1024)
    # closed form: term_n = Var = (1/3) n^{-2} once the window covers support
    for n in (4, 10, 100):
        assert rep.terms[n - 1] == pytest.approx(1.0 / (3.0 * n * n), rel=1e-9)
    assert rep.verdict == evidence.CAUCHY


def test_semifinite_rademacher_diverges():
    spec = TailWalkSpec.named("rademacher")
    rep = semifinite_criterion(spec, 1.0, 256)
    assert all(t == pytest.approx(1.0) for t in rep.terms)
    assert rep.verdict == evidence.DIVERGING


def test_semifinite_translation_invariance():
    # terms are unchanged when every increment measure is shifted; on the
    # scan branch the centers shift along (see the equivariance test above),
    # on the eps > kappa^2/8 branch the clamp saturates identically
    base = TailWalkSpec.named("rademacher")
    shifted = TailWalkSpec(rule=lambda n: AtomicReal([-1 + 5.0 * n, 1 + 5.0 * n], [0.5, 0.5]))
    r0 = semifinite_criterion(base, 1.0, 64)
    r1 = semifinite_criterion(shifted, 1.0, 64)
    assert r0.terms == pytest.approx(r1.terms, abs=1e-12)
    tight = TailWalkSpec(rule=lambda n: UniformReal(-0.05, 0.05))
    tight_shift = TailWalkSpec(rule=lambda n: UniformReal(-0.05 + 3.0, 0.05 + 3.0))
    t0 = semifinite_criterion(tight, 1.0, 16)
    t1 = semifinite_criterion(tight_shift, 1.0, 16)
    assert t0.terms == pytest.approx(t1.terms, abs=1e-12)
    assert all(c1 == pytest.approx(c0 + 3.0, abs=1e-12)
               for c0, c1 in zip(t0.centers, t1.centers))


# ---- eigenvalue criterion ------------------------------------------------------


def test_eigenvalue_lattice_supported_exact_zero():
    p = 0.75
    spec = TailWalkSpec.named("lattice_shift", p=p, offset=0.33, drift=0.01)
    rep = eigenvalue_criterion(spec, p, 128)
    assert all(t == 0.0 for t in rep.terms)
    assert rep.partial_sums[-1] == 0.0
    # p/2: the lattice pZ sits inside (p/2)Z, so the sums still vanish
    rep_half = eigenvalue_criterion(spec, p / 2.0, 128)
    assert rep_half.partial_sums[-1] == 0.0
    # 2p with drifting offsets: divergence evidence
    rep_2p = eigenvalue_criterion(spec, 2.0 * p, 128)
    assert rep_2p.verdict == evidence.DIVERGING


def test_eigenvalue_drifting_gauss_converges():
    p = 1.0
    spec = TailWalkSpec.named("drifting_gauss", p=p)
    rep = eigenvalue_criterion(spec, p, 2048)
    for n in (8, 32, 100):
        assert rep.terms[n - 1] < 2.0 / (n * n)
    assert rep.verdict == evidence.CAUCHY


def test_eigenvalue_uniform_period_constant_terms():
    p = 1.5
    spec = TailWalkSpec.named("uniform_period", p=p)
    rep = eigenvalue_criterion(spec, p, 64)
    # oracle: for a full period the distance integral is p^2/12 at any center
    mu = UniformReal(0.0, p)
    grid_vals = [mu.lattice_sq(c, p) for c in np.linspace(-1, 1, 11)]
    assert all(v == pytest.approx(p * p / 12.0, rel=1e-12) for v in grid_vals)
    assert all(t == pytest.approx(p * p / 12.0, rel=1e-12) for t in rep.terms)
    assert rep.verdict == evidence.DIVERGING


def test_sin_squared_sandwich():
    # 4 d(x,Z)^2 <= sin^2(pi x) <= pi^2 d(x,Z)^2 on a dense grid
    for x in np.linspace(-3.0, 3.0, 10_000):
        d = lattice_dist(x, 1.0)
        s = math.sin(math.pi * x) ** 2
        assert 4.0 * d * d <= s + 1e-12
        assert s <= math.pi ** 2 * d * d + 1e-12


# ---- Ore periodicity criteria ---------------------------------------------------


def test_ore_rademacher_fires_criterion_1():
    spec = TailWalkSpec.named("rademacher")
    rep = ore_periodicity(spec, 2.0, 128)
    assert rep.fired == "ore1"
    assert rep.flags["ore1"]
    semi = semifinite_criterion(spec, 1.0, 128)
    assert semi.verdict != evidence.CAUCHY  # dichotomy on the designed case


def test_ore_shrinking_gauss_none_fires():
    # sum Var = sum n^{-2}: the dyadic increments drop below the divergence
    # floor only around N ~ 2e3, so the horizon must reach that scale
    spec = TailWalkSpec.named("shrinking_gauss", C=2.0)
    rep = ore_periodicity(spec, 2.0, 2048)
    assert rep.fired is None
    semi = semifinite_criterion(spec, 1.0, 4096)
    assert semi.verdict == evidence.CAUCHY


def test_ore_contaminated_rademacher_fires_criterion_3():
    spec = TailWalkSpec.named("contaminated_rademacher")
    rep = ore_periodicity(spec, 2.0, 256)
    assert rep.fired == "ore3"
    sel = rep.details["select_subset"]
    assert sel["sum_restricted_var"] > 10.0
    assert sel["sum_outside_mass"] < 1.0
    semi = semifinite_criterion(spec, 1.0, 256)
    assert semi.verdict != evidence.CAUCHY


def test_ore_criterion2_diagnostic_present():
    spec = TailWalkSpec.named("rademacher")
    rep = ore_periodicity(spec, 2.0, 16)
    diag = rep.details["concentration_diagnostic"]
    assert len(diag) == 16
    assert set(diag[0]["mass_outside_eps"]) == {"0.1", "0.25", "0.5"}


# ---- subset selection -------------------------------------------------------------


def test_select_subset_singleton_blocks():
    a = [1.0] * 64
    b = [2.0 ** (-n) for n in range(1, 65)]
    res = select_subset(a, b, 1.0)
    assert not res.insufficient
    assert all(lo == hi for lo, hi in res.blocks)  # singleton blocks
    assert res.sum_b <= 1.0 + 1e-12
    assert res.sum_a >= len(res.blocks)  # grows by >= M per block


def test_select_subset_harmonic():
    N = 10 ** 6
    a = [1.0 / n for n in range(1, N + 1)]
    b = [1.0 / (n * n) for n in range(1, N + 1)]
    res = select_subset(a, b, 1.0)
    assert not res.insufficient
    widths = [hi - lo + 1 for lo, hi in res.blocks]
    assert all(w2 > w1 for w1, w2 in zip(widths, widths[1:]))  # geometric growth
    assert res.sum_a >= len(res.blocks) * 1.0
    assert res.sum_b < 2.0


def test_select_subset_zero_b_and_insufficient():
    res = select_subset([0.5] * 32, [0.0] * 32, 0.5)
    assert res.sum_b == 0.0 and not res.insufficient
    short = select_subset([0.1], [1.0], 1.0)
    assert short.insufficient


def test_select_subset_a_unbounded_rejected():
    with pytest.raises(ValueError):
        select_subset([2.0], [0.1], 1.0)


# ---- walk simulation ---------------------------------------------------------------


def test_walk_deterministic_increments():
    spec = TailWalkSpec(rule=lambda n: AtomicReal.dirac(1.0))
    rng = np.random.default_rng(0)
    traj = simulate_walk(spec, 20, rng)
    assert list(traj[0]) == [float(n) for n in range(21)]


def test_walk_rademacher_variance():
    spec = TailWalkSpec.named("rademacher")
    rng = np.random.default_rng(20240601)
    traj = simulate_walk(spec, 100, rng, paths=100_000)
    var = float(np.var(traj[:, 100] - traj[:, 0]))
    assert abs(var - 100.0) < 3.0


def test_walk_lattice_closure_exact():
    p = 0.5
    drift = 0.1
    spec = TailWalkSpec.named("lattice_shift", p=p, offset=0.0, drift=drift)
    rng = np.random.default_rng(3)
    traj = simulate_walk(spec, 50, rng, paths=16)
    for row in traj:
        for n in range(51):
            offset_sum = drift * (n * (n + 1) / 2.0)
            assert lattice_dist(row[n] - offset_sum, p) < 1e-9


def test_walk_csv():
    from bershift.tailflow import walk_csv

    spec = TailWalkSpec(rule=lambda n: AtomicReal.dirac(1.0))
    text = walk_csv(simulate_walk(spec, 3, np.random.default_rng(0), paths=2))
    lines = text.splitlines()
    assert lines[0] == "path_id,n,X_n"
    assert len(lines) == 1 + 2 * 4


def test_walk_spec_json_round_trip():
    spec = TailWalkSpec.named("contaminated_rademacher", spike=12.0)
    again = TailWalkSpec.from_json(spec.to_json())
    m1, m2 = spec.measure(5), again.measure(5)
    assert list(m1.atoms) == list(m2.atoms)
    with pytest.raises(ValueError):
        TailWalkSpec.named("nonsense")
    with pytest.raises(ValueError):
        spec.measure(0)
