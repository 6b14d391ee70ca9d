import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo import hexlattice, model, spatial
from onetwo.model import GuardError, Weights

SHAPES = [(1, 1), (1, 2), (2, 1)]
weights = st.tuples(*(st.fractions(min_value=Fraction(1, 10), max_value=10) for _ in range(3))).map(
    lambda t: Weights(*t))
spin = st.sampled_from([1, -1])


@given(weights, spin, spin, spin)
def test_potential_matches_local_weight_ratio(w, s1, s2, s3):
    co = spatial.PotentialCoeffs.from_weights(w)
    x = spatial.potential_arg(co, s1, s2, s3)
    total = w.a + w.b + w.c
    # exactly one +1 spin (or one -1 spin) picks out that edge's weight
    if s1 + s2 + s3 in (1, -1):
        odd = [s1, s2, s3].index(1 if s1 + s2 + s3 == -1 else -1)
        assert x == 4 * (w.c, w.b, w.a)[odd] / total
    else:
        assert x == 0
        assert spatial.potential_u(co, s1, s2, s3) == float("inf")


def test_potential_rejects_bad_input():
    with pytest.raises(ValueError):
        spatial.PotentialCoeffs(0, 0, 0)
    with pytest.raises(ValueError):
        spatial.potential_arg(spatial.PotentialCoeffs.from_weights(Weights()), 1, 0, 1)


@given(st.sampled_from(SHAPES), st.integers(0, 10**6))
def test_spin_round_trip(shape, seed):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    for s in model.enumerate_states(g, b):
        sig = spatial.spins(g, s)
        assert spatial.from_spins(sig) == s
        assert spatial.spins_valid(g, sig)


@given(st.sampled_from(SHAPES), st.integers(0, 10**6), weights)
def test_boltzmann_factor_is_proportional_to_weight(shape, seed, w):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    states = model.enumerate_states(g, b).states
    ref = states[0]
    r0 = spatial.boltzmann_factor(g, w, ref) / model.config_weight(g, w, ref)
    for s in states[1:]:
        assert spatial.boltzmann_factor(g, w, s) == r0 * model.config_weight(g, w, s)


def test_gibbs_measure_both_modes(box12):
    g, b = box12
    w = Weights(1, 2, 3)
    mu = spatial.gibbs_measure(g, w, b, mode="rational")
    assert mu == model.measure(g, w.rational(), b)
    mf = spatial.gibbs_measure(g, w, b)
    assert mf == pytest.approx([float(x) for x in mu], abs=1e-12)


def test_kagome_degrees():
    g = hexlattice.build_box(2, 2)
    kg = spatial.kagome_index(g)
    assert all(kg.degree(k) == 4 for k in g.internal)
    assert all(kg.degree(k) == 2 for k in g.boundary)
    assert len(set(kg.points)) == g.n_edges
    sub = spatial.kagome_index(g, g.internal)
    assert all(sub.degree(k) == 0 for k in g.boundary)


@pytest.mark.parametrize("modulo", [False, True])
def test_marginal_routes_agree(box13, modulo):
    g, b = box13
    w = Weights(1, 2, 3)
    delta = list(g.internal[3:8])
    a = spatial.marginal_law(g, w, b, delta, modulo=modulo, mode="rational")
    c = spatial.marginal_law_split(g, w, b, delta, modulo=modulo, mode="rational")
    assert a == c
    assert sum(a.values()) == 1


def test_split_guard(box13):
    g, b = box13
    with pytest.raises(GuardError):
        spatial.marginal_law_split(g, Weights(), b, list(g.internal[:spatial.SPLIT_GUARD + 1]))


def test_marginal_tv_shrinks_under_coarsening(h1):
    g, _ = h1
    w = Weights(1, 2, 3)
    taus = [t for t in (model.random_boundary(g, random.Random(i)) for i in range(6))]
    fine = list(g.internal)
    coarse = fine[:3]
    for t1 in taus:
        for t2 in taus:
            # the law on fewer edges is a pushforward, so tv can only drop
            assert (spatial.marginal_tv(g, w, coarse, t1, t2, mode="rational")
                    <= spatial.marginal_tv(g, w, fine, t1, t2, mode="rational"))


def test_boundary_sides_on_single_hexagon(h1):
    g, _ = h1
    sides = spatial.boundary_sides(g)
    assert sides == {"NE": (10, 11), "SW": (0, 1), "NW": (0, 5), "SE": (7, 10)}
    assert set().union(*map(set, sides.values())) == set(g.boundary)
    assert spatial.center_line(g, "M1") == (4, 8)
    assert spatial.center_line(g, "M2") == (2, 9)
    assert spatial.agreement_edges(g, "M1") == (0, 5, 7, 10)


@given(st.integers(1, 4), st.integers(1, 4))
def test_sides_cover_boundary(k, n):
    g = hexlattice.build_box(k, n)
    sides = spatial.boundary_sides(g)
    assert set().union(*map(set, sides.values())) == set(g.boundary)
    assert len(spatial.center_line(g, "M1")) >= 1
    assert len(spatial.center_line(g, "M2")) >= 1


@pytest.mark.parametrize("w,value,center,m1,m2", [
    ((1, 1, 1), 1.74782, 0.03353, 0.42857, 0.42857),
    ((1, 2, 3), 2.38420, 0.34191, 0.58333, 0.43781),
    ((9, 1, 1), 2.56040, 0.87453, 0.42147, 0.42147),
])
def test_condition_f_level_one(w, value, center, m1, m2):
    # frozen from the enumeration route (the pfaffian route agrees to 1e-15)
    r = spatial.condition_F(1, Weights(*w), spatial.THEOREM_PRESET)
    assert r.value == pytest.approx(value, abs=1e-5)
    assert r.terms["center"] == pytest.approx(center, abs=1e-5)
    assert r.terms["M1"] == pytest.approx(m1, abs=1e-5)
    assert r.terms["M2"] == pytest.approx(m2, abs=1e-5)
    assert r.value == pytest.approx(r.terms["center"] + 2 * r.terms["M1"] + 2 * r.terms["M2"])
    assert not r.holds
    assert set(r.to_json()) >= {"value", "threshold", "holds", "terms", "route"}


def test_condition_f_guards():
    with pytest.raises(GuardError):
        spatial.condition_F(2, Weights(), 0.1)
    with pytest.raises(ValueError):
        spatial.condition_F(0, Weights(), 0.1)
    with pytest.raises(ValueError):
        spatial.condition_F(1, Weights(), 0.1, route="guess")


def test_saw_counts_bounded_by_non_reversing_walks():
    counts = spatial.saw_counts(6)
    assert counts[:2] == [16, 240]
    assert counts[0] == 16
    for k, c in enumerate(counts, start=1):
        assert c <= 16 * 15 ** (k - 1)
        # no self-intersection before three steps; from then on some are lost
        assert (c == 16 * 15 ** (k - 1)) == (k <= 2)


def test_saw_engines_agree():
    assert spatial.saw_counts(5, engine="python") == spatial.saw_counts(5, engine="numba")


def test_saw_guard_and_graph():
    with pytest.raises(GuardError):
        spatial.saw_counts(spatial.SAW_GUARD + 1)
    assert spatial.SAWGraph().degree == 16
    assert len(spatial.SAWGraph().neighbours((0, 0))) == 16


def test_connective_estimate():
    counts = [16, 240, 3552, 51904, 752456, 10838808, 155321248, 2216096040]
    lo, hi = spatial.connective_estimate(counts)
    assert lo == pytest.approx(counts[-1] / counts[-2])
    assert hi == pytest.approx(min(c ** (1 / k) for k, c in enumerate(counts, 1)))
    assert 14 < lo <= hi < 16
    assert spatial.threshold_from_counts(counts) == pytest.approx(1 / hi)
