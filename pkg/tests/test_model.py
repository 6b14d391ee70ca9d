import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo import hexlattice, model
from onetwo.model import GuardError, Weights

SHAPES = [(1, 1), (1, 2), (2, 1)]
weights = st.tuples(*(st.fractions(min_value=Fraction(1, 10), max_value=10) for _ in range(3))).map(
    lambda t: Weights(*t))


def test_weights_validation_and_parse():
    with pytest.raises(ValueError):
        Weights(0, 1, 1)
    w = Weights.parse("1, 2/3, 4")
    assert w.as_tuple() == (1, Fraction(2, 3), 4)
    assert w.rational().b == Fraction(2, 3)
    assert isinstance(w.floats().a, float)
    with pytest.raises(ValueError):
        Weights.parse("1,2")


@given(st.sampled_from(SHAPES), st.integers(0, 10**6))
def test_enumeration_matches_brute_force(shape, seed):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    space = model.enumerate_states(g, b)
    assert space.admissible
    assert sorted(space.states) == sorted(model.brute_force_states(g, b))
    for s in space:
        assert model.is_valid(g, s)
        assert model.boundary_of(g, s) == b


@given(st.sampled_from(SHAPES), st.integers(0, 10**6), weights)
def test_measure_is_normalised_product_law(shape, seed, w):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    space = model.enumerate_states(g, b)
    mu = model.measure(g, w, b, space, mode="rational")
    assert sum(mu) == 1
    z = model.partition_function(g, w, b, space)
    assert z == sum(model.config_weight(g, w, s) for s in space)
    assert all(p == model.config_weight(g, w, s) / z for p, s in zip(mu, space))


@given(st.sampled_from(SHAPES), st.integers(0, 10**6), weights)
def test_complement_preserves_validity_and_weight(shape, seed, w):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    for s in model.enumerate_states(g, b):
        c = model.complement(g, s)
        assert model.is_valid(g, c)
        assert model.config_weight(g, w, c) == model.config_weight(g, w, s)


def test_local_weights_by_pattern():
    g = hexlattice.build_box(1, 1)
    w = Weights(2, 3, 5)
    vi = 0
    inc = g.incident[vi]
    for k in inc:
        # one present edge or the complementary two present edges
        one = 1 << k
        two = sum(1 << j for j in inc if j != k)
        assert model.local_weight(g, w, one, vi) == w.of(g.classes[k])
        assert model.local_weight(g, w, two, vi) == w.of(g.classes[k])
    assert model.local_weight(g, w, 0, vi) == 0
    assert model.local_weight(g, w, sum(1 << j for j in inc), vi) == 0


def test_alternating_boundary_on_single_hexagon():
    g = hexlattice.build_box(1, 1)
    b = model.alternating_boundary(g)
    assert b == 1058
    assert len(model.enumerate_states(g, b)) == 2


@pytest.mark.parametrize("shape", [(1, 1), (1, 2)])
def test_every_box_boundary_is_admissible(shape):
    # exhaustive over all 2^|boundary| conditions (derived by enumeration)
    g = hexlattice.build_box(*shape)
    for bits in range(1 << len(g.boundary)):
        b = sum(1 << e for i, e in enumerate(g.boundary) if bits >> i & 1)
        assert model.is_admissible(g, b)


def test_guard():
    g = hexlattice.build_box(2, 3)
    with pytest.raises(GuardError, match="desk-scale guard"):
        model.enumerate_states(g, 0, max_free=5)


def test_mask_helpers():
    m = model.mask_from_edges([0, 3, 5])
    assert model.present_edges(m) == [0, 3, 5]
    g = hexlattice.build_box(1, 1)
    assert model.complement(g, 0) == model.full_mask(g)
