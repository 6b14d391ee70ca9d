import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo import chain, hexlattice, model
from onetwo.model import GuardError, Weights

SHAPES = [(1, 1), (1, 2), (2, 1)]
weights = st.tuples(*(st.fractions(min_value=Fraction(1, 10), max_value=10) for _ in range(3))).map(
    lambda t: Weights(*t))


@given(weights)
def test_reverse_cases_have_reciprocal_rates(w):
    for case, back in chain.REVERSE.items():
        if case in (chain.SAME, chain.NONE):
            continue
        assert chain.case_rate(case, w) * chain.case_rate(back, w) == 1


@given(st.sampled_from(SHAPES), st.integers(0, 10**6), weights)
def test_rows_are_lazy_and_balanced(shape, seed, w):
    g = hexlattice.build_box(*shape)
    b = model.random_boundary(g, random.Random(seed))
    kern = chain.Kernel(g, w, b)
    for s in model.enumerate_states(g, b):
        row = kern.row(s)
        assert sum(row.values()) == 1
        assert row[s] >= Fraction(1, 2)
        ws = model.config_weight(g, w, s)
        for t, p in row.items():
            if t == s:
                continue
            # independent of the matrix: weight ratio against the reverse row
            assert ws * p == model.config_weight(g, w, t) * kern.row(t)[s]


def test_classify_move(h1):
    g, b = h1
    s, t = model.enumerate_states(g, b).states
    assert chain.classify_move(g, s, t) == chain.FACE
    assert chain.classify_move(g, s, s) == chain.SAME
    with pytest.raises(ValueError):
        chain.classify_move(g, s, s ^ (1 << g.boundary[0]))


def test_c_lambda_bounds_total_move_mass(box13):
    g, b = box13
    w = Weights(1, 2, 3).rational()
    kern = chain.Kernel(g, w, b)
    assert kern.C == Fraction(1, 2 * (len(g.internal) + len(g.faces)) * 3)
    for s in model.enumerate_states(g, b):
        assert sum(p for _, p in kern.moves(s)) <= Fraction(1, 2)


def test_transition_prob_matches_row(box12):
    g, b = box12
    kern = chain.Kernel(g, Weights(1, 2, 3).rational(), b)
    space = model.enumerate_states(g, b)
    for s in space:
        row = kern.row(s)
        for t in space:
            assert chain.transition_prob(kern, s, t) == row.get(t, 0)


def test_dense_and_sparse_agree(box12):
    g, b = box12
    kern = chain.Kernel(g, Weights(9, 1, 1), b)
    space = model.enumerate_states(g, b)
    P = chain.transition_matrix(kern, space)
    S = chain.transition_sparse(kern, space).toarray()
    R = chain.transition_matrix(kern, space, "rational")
    assert np.allclose(P, S)
    assert np.allclose(P, np.array(R, dtype=float))
    assert np.allclose(P.sum(axis=1), 1)


def test_run_is_seeded(box12):
    g, b = box12
    kern = chain.Kernel(g, Weights(1, 2, 3), b)
    s0 = model.enumerate_states(g, b)[0]
    a = list(chain.run(kern, s0, 500, np.random.default_rng(3)))
    c = list(chain.run(kern, s0, 500, np.random.default_rng(3)))
    assert a == c and len(a) == 500
    assert all(model.is_valid(g, s) for s in a)


def test_step_stays_in_support(box12):
    g, b = box12
    kern = chain.Kernel(g, Weights(1, 2, 3), b)
    gen = np.random.default_rng(1)
    s = model.enumerate_states(g, b)[0]
    for _ in range(200):
        t = chain.step(kern, s, gen)
        assert t in kern.row(s)
        s = t


def test_guards(box13):
    g, b = box13
    space = model.enumerate_states(g, b)
    kern = chain.Kernel(g, Weights(), b)
    with pytest.raises(GuardError):
        chain.transition_matrix(kern, space, guard=10)
