import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo import hexlattice, model, pfaffian, spatial
from onetwo.model import Weights


@given(st.integers(0, 10**6), st.integers(2, 14))
def test_kasteleyn_orientation_counts_matchings(seed, n):
    pg = pfaffian.random_planar_graph(np.random.default_rng(seed), n, max_weight=3)
    o = pfaffian.kasteleyn_orientation(pg)
    assert pfaffian.is_kasteleyn(pg, o)
    res = pfaffian.pfaffian_count(pg, o)
    assert res.value == pfaffian.brute_force_matchings(pg)
    A = pfaffian.skew_matrix(pg, o, "rational")
    assert pfaffian.pfaffian_exact(A) ** 2 == pfaffian.det_exact(A)
    Af = pfaffian.skew_matrix(pg, o, "float")
    assert abs(pfaffian.pfaffian_float(Af)) == pytest.approx(float(res.value), rel=1e-9, abs=1e-9)


@given(st.integers(0, 10**6), st.integers(3, 14))
def test_euler_formula(seed, n):
    pg = pfaffian.random_planar_graph(np.random.default_rng(seed), n)
    _, ncomp = pfaffian.components(pg)
    assert ncomp == 1
    assert pg.n - len(pg.edges) + len(pfaffian.planar_faces(pg)) == 2


def test_pfaffian_of_small_matrices():
    A = [[0, Fraction(3)], [Fraction(-3), 0]]
    assert pfaffian.pfaffian_exact(A) == 3
    B = np.array([[0, 1, 2, 3], [-1, 0, 4, 5], [-2, -4, 0, 6], [-3, -5, -6, 0]], dtype=float)
    # af - be + cd for the 4x4 skew matrix
    assert pfaffian.pfaffian_float(B) == pytest.approx(1 * 6 - 2 * 5 + 3 * 4)


def test_json_roundtrip():
    pg = pfaffian.random_planar_graph(np.random.default_rng(5), 9)
    again = pfaffian.PlainGraph.from_json(pg.to_json())
    assert again.to_json() == pg.to_json()


@given(st.sampled_from([(1, 1), (1, 2), (2, 1), (1, 3)]), st.integers(0, 10**6))
def test_partition_function_matches_enumeration(shape, seed):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    w = Weights(1, 2, 3)
    assert pfaffian.partition_function(g, w, b) == model.partition_function(g, w, b)


def test_parity_vector_shape(box12):
    g, b = box12
    assert len(pfaffian.parity_vector(g, b)) == len(pfaffian.crossing_hexagons(g))
    for c in pfaffian.classify_boundary(g, b):
        assert c.type in (1, 2, 3)


@pytest.mark.parametrize("modulo", [False, True])
def test_boundary_marginal_rational(box13, modulo):
    g, b = box13
    w = Weights(9, 1, 1)
    delta = list(g.internal[2:6])
    ref = spatial.marginal_law(g, w, b, delta, modulo=modulo, mode="rational")
    got = pfaffian.boundary_marginal(g, w, b, delta, mode="rational", modulo=modulo)
    assert got == ref


def test_class_laws_cover_every_boundary_class(h1):
    g, _ = h1
    delta = list(g.internal[:2])
    laws, vecs = pfaffian.class_laws(g, Weights(1, 2, 3), delta)
    assert len(laws) == len(vecs) > 0
    for law in laws:
        assert sum(law) == pytest.approx(1.0) if not isinstance(law, dict) else sum(law.values()) == pytest.approx(1.0)
