"""Hypothesis property tests for the algebraic invariants."""

from hypothesis import given, settings
from hypothesis import strategies as st

from bershift.criteria import cutoff_T
from bershift.groups import FreeProductGroup
from bershift.measures import two_point_moment_bound, zeta_map
from bershift.quadrature import lattice_dist, wrap_mod

finite = st.floats(allow_nan=False, allow_infinity=False, width=32)


@given(st.floats(min_value=1e-6, max_value=100.0), finite)
def test_cutoff_clamps(kappa, t):
    v = cutoff_T(kappa, t)
    assert -kappa <= v <= kappa
    if abs(t) <= kappa:
        assert v == t


@given(st.floats(min_value=1e-3, max_value=100.0),
       st.floats(min_value=-1e4, max_value=1e4))
def test_wrap_mod_range_and_congruence(p, t):
    r = wrap_mod(t, p)
    assert -p / 2.0 < r <= p / 2.0 + 1e-9
    k = (t - r) / p
    assert abs(k - round(k)) < 1e-6
    assert lattice_dist(t, p) >= 0.0


@given(st.floats(min_value=1e-6, max_value=1.0 - 1e-6))
def test_zeta_antisymmetry(a):
    assert abs(zeta_map(1.0 - a) + zeta_map(a)) < 1e-9


@given(st.floats(min_value=1e-4, max_value=1.0 - 1e-4),
       st.floats(min_value=1e-4, max_value=1.0 - 1e-4))
def test_two_point_moment_bound_property(a, b):
    moment, bound = two_point_moment_bound(a, b)
    assert moment <= bound + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("st"), st.integers(-3, 3)), max_size=6),
       st.lists(st.tuples(st.sampled_from("st"), st.integers(-3, 3)), max_size=6),
       st.lists(st.tuples(st.sampled_from("st"), st.integers(-3, 3)), max_size=6))
def test_free_product_associative_and_inverse(w1, w2, w3):
    G = FreeProductGroup(3)
    x, y, z = G.word(*w1), G.word(*w2), G.word(*w3)
    assert G.mul(G.mul(x, y), z) == G.mul(x, G.mul(y, z))
    assert G.mul(x, G.inv(x)) == G.identity()
    assert G.word_length(G.inv(x)) == G.word_length(x)
