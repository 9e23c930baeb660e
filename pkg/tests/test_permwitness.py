"""Witness verification: II_1 / II_infty sums, T-invariant, alpha, clustering."""

import math

import pytest

from bershift import evidence
from bershift.constructions import (
    Prop51Spec,
    build_cor52,
    build_example55,
    build_prop51,
    build_thm54,
)
from bershift.groups import IntegerGroup
from bershift.measures import (
    ConstantFamily,
    DensityShiftFamily,
    DiscreteMeasure,
    TwoPointFamily,
    two_point,
)
from bershift.permwitness import (
    TypeWitness,
    alpha_homomorphism,
    check_II1,
    check_IIinf,
    check_T_invariant,
    hellinger_limit_points,
)

WINDOWS = [4, 8, 16, 32]


def _ell2_two_point_family():
    # F finitely supported (an ell^2 coboundary datum): mu_g(0) = e^{-F(g)}/2
    Z = IntegerGroup()
    F = {0: 1.0, 1: 0.5, -2: 0.25}
    return TwoPointFamily(Z, lambda g: math.exp(-F.get(g, 0.0)) / 2.0)


def test_check_II1_constant_zero():
    fam = ConstantFamily(IntegerGroup(), two_point(0.5))
    track = check_II1(fam, fam.reference(), WINDOWS)
    assert track.partials == [0.0] * 4
    assert track.verdict == evidence.CAUCHY


def test_check_II1_ell2_family_cauchy():
    fam = _ell2_two_point_family()
    track = check_II1(fam, two_point(0.5), WINDOWS)
    assert track.verdict == evidence.CAUCHY
    assert track.partials[-1] == pytest.approx(track.partials[0], abs=1e-12)


def test_check_II1_thm54_diverges_linearly():
    build = build_thm54(4)
    fam = build.family
    track = check_II1(fam, build.nu, [1, 2, 3, 4])
    inc = [b - a for a, b in zip(track.partials, track.partials[1:])]
    assert track.verdict == evidence.DIVERGING
    # each shell contributes |F_n \ F_{n-1}| H^2(mu_n, nu) ~ (1 - sqrt(rho_n))-ish,
    # bounded below across shells
    assert all(x > 0.2 for x in inc)


def test_check_IIinf_degenerate_full_subsets():
    fam = ConstantFamily(IntegerGroup(), two_point(0.5))
    wit = TypeWitness(nu=fam.reference(), U_of=lambda g: frozenset({0, 1}))
    verdict = check_IIinf(fam, wit, WINDOWS)
    assert verdict.sums["mu_escape_mass"].partials[-1] == 0.0
    assert verdict.sums["nu_escape_mass"].partials[-1] == 0.0
    assert not verdict.flags["shape_ok"]  # no II_infty evidence


def test_check_IIinf_thm54_shape():
    build = build_thm54(4)
    fam = build.family
    wit = TypeWitness(nu=build.nu, U_of=fam.witness_U_of)
    verdict = check_IIinf(fam, wit, [1, 2, 3, 4])
    assert verdict.sums["h2_to_restriction"].verdict == evidence.CAUCHY
    assert verdict.sums["mu_escape_mass"].verdict == evidence.CAUCHY
    s3 = verdict.sums["nu_escape_mass"].partials
    inc = [b - a for a, b in zip(s3, s3[1:])]
    assert all(x == pytest.approx(1.0, abs=1e-9) for x in inc)  # exactly 1 per shell
    assert verdict.sums["nu_escape_mass"].verdict == evidence.DIVERGING
    assert all(a["vanishing"] for a in verdict.alpha.values())
    assert verdict.flags["shape_ok"]


def test_check_IIinf_alternating_witness_flags_alpha():
    Z = IntegerGroup()
    nu = DiscreteMeasure.from_weights([0, 1, 2], [0.5, 0.25, 0.25])
    fam = ConstantFamily(Z, nu)
    # nu(U_g) alternates with the parity of g: the homomorphism sums cannot vanish
    U = {0: frozenset({0}), 1: frozenset({0, 1})}
    wit = TypeWitness(nu=nu, U_of=lambda g: U[abs(g) % 2])
    verdict = check_IIinf(fam, wit, WINDOWS)
    assert not all(a["vanishing"] for a in verdict.alpha.values())
    assert not verdict.flags["shape_ok"]


def test_T_invariant_prop51_exact_zero_terms():
    fam = build_cor52(0.5)
    info = fam.lattice_info()
    wit = TypeWitness(nu=fam.reference(), t_of="lattice_const", p=info.p)
    verdict = check_T_invariant(fam, info.p, wit, WINDOWS)
    assert verdict.sums["lattice_sq"].partials == [0.0] * len(WINDOWS)
    assert verdict.flags["cauchy"]


def test_T_invariant_doubled_p_off_lattice_mass():
    fam = build_cor52(0.5)
    info = fam.lattice_info()
    p2 = 2.0 * info.p
    wit = TypeWitness(nu=fam.reference(), t_of="lattice_const")
    # use windows beyond the first box: elements there carry partial sections
    verdict = check_T_invariant(fam, p2, wit, [16, 32])
    # each term is (p)^2 = (p2/2)^2 times the mass of the odd-level part
    total = 0.0
    for g in fam.group.ball(32):
        mu = fam.measure(g)
        odd_mass = sum(
            math.exp(lw) for lab, lw in zip(mu.labels, mu.logw)
            if info.level(g, lab) % 2 != 0)
        total += info.p ** 2 * odd_mass
    assert total > 1.0
    assert verdict.sums["lattice_sq"].partials[-1] == pytest.approx(total, rel=1e-12)
    assert not verdict.flags["cauchy"]


def test_T_invariant_laplace_diverges():
    from bershift.constructions import DensityFamilySpec, build_thmD

    fam = build_thmD(DensityFamilySpec("laplace",
                                       {"name": "indicator_halfline", "kappa": 0.25}))
    wit = TypeWitness(nu=fam.reference())
    for p in (1.0, 0.5):
        verdict = check_T_invariant(fam, p, wit, WINDOWS)
        assert verdict.sums["lattice_sq"].verdict == evidence.DIVERGING


def test_alpha_homomorphism_examples():
    Z = IntegerGroup()
    res = alpha_homomorphism(lambda g: 2.0, 1.0, 1, Z, WINDOWS)
    assert res["partials"] == [0.0] * 4
    assert res["vanishing"]
    # rho_g = exp(eps 1_{g>=0}): telescoping to eps (nonzero character evidence)
    eps = 0.125
    res = alpha_homomorphism(lambda g: math.exp(eps if g >= 0 else 0.0), 1.0, 1, Z, WINDOWS)
    assert all(v == pytest.approx(eps, abs=1e-12) for v in res["partials"])
    assert not res["vanishing"]


def test_alpha_homomorphism_prop51_vanishes_and_adds():
    fam = build_cor52(0.5)
    info = fam.lattice_info()
    Z = fam.group
    windows = [64, 128, 256, 512, 1024, 2048]
    res1 = alpha_homomorphism(fam.rho, info.p, 1, Z, windows)
    res2 = alpha_homomorphism(fam.rho, info.p, 2, Z, windows)
    assert res1["vanishing"] and res2["vanishing"]
    assert res1["abs_summable"] and res2["abs_summable"]
    # additivity mod p once converged: alpha(2) = 2 alpha(1) = 0
    assert abs(res2["value_mod_p"]) <= 2 * abs(res1["value_mod_p"]) + 1e-9


def test_alpha_order_invariance():
    fam = build_cor52(0.5)
    info = fam.lattice_info()
    Z = fam.group
    ball = Z.ball(64)
    fwd = sum(math.log(fam.rho(Z.mul(1, h))) - math.log(fam.rho(h)) for h in ball)
    rev = sum(math.log(fam.rho(Z.mul(1, h))) - math.log(fam.rho(h)) for h in reversed(ball))
    assert fwd == pytest.approx(rev, abs=1e-12)


def test_hellinger_limit_points_constant_and_alternating():
    Z = IntegerGroup()
    fam0 = ConstantFamily(Z, two_point(0.5))
    clusters = hellinger_limit_points(fam0, Z.ball(16), 0.1)
    assert len(clusters) == 1
    # alternating between two measures at Hellinger distance ~ 0.3
    a, b = 0.5, 0.1227065  # H(two_point(a), two_point(b)) ~ 0.3
    fam1 = TwoPointFamily(Z, lambda g: a if g % 2 == 0 else b)
    from bershift.measures import hellinger2

    assert math.sqrt(hellinger2(two_point(a), two_point(b))) == pytest.approx(0.3, abs=0.01)
    clusters = hellinger_limit_points(fam1, Z.ball(16), 0.1)
    assert len(clusters) == 2
    assert all(c.attained_in_outer_shell or len(c.members) > 0 for c in clusters)


def test_hellinger_limit_points_example55_single():
    fam = build_example55(0.5)
    ball = fam.group.ball(600)
    clusters = hellinger_limit_points(fam, ball, 0.05)
    outer = [c for c in clusters if c.attained_in_outer_shell]
    assert len(outer) == 1  # the classes merge as |k| grows


def test_witness_validation():
    with pytest.raises(ValueError):
        TypeWitness(nu=two_point(0.5), p=0.0)
    fam = ConstantFamily(IntegerGroup(), two_point(0.5))
    with pytest.raises(ValueError):
        check_IIinf(fam, TypeWitness(nu=fam.reference()), WINDOWS)
    with pytest.raises(ValueError):
        check_T_invariant(fam, 0.0, TypeWitness(nu=fam.reference()), WINDOWS)
