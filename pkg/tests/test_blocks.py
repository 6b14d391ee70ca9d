import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onetwo import analysis, blocks, dimer, hexlattice, model
from onetwo.model import Weights

W = Weights(1, 2, 3).rational()


def test_strip_columns():
    assert blocks.strip_columns(4, 2) == [(1, 2), (2, 3), (3, 4), (3, 4)]
    assert blocks.strip_columns(6, 4) == [(1, 2), (1, 4), (2, 5), (3, 6), (3, 6), (5, 6)]
    with pytest.raises(ValueError):
        blocks.strip_columns(3, 2)
    with pytest.raises(ValueError):
        blocks.strip_columns(4, 4)


@given(st.sampled_from([4, 6, 8]), st.sampled_from([2, 4]))
def test_strip_columns_cover_and_fit(n, ell):
    if ell >= n:
        return
    cols = blocks.strip_columns(n, ell)
    assert len(cols) == n
    assert all(1 <= lo <= hi <= n and hi - lo + 1 <= ell for lo, hi in cols)
    assert set().union(*(range(lo, hi + 1) for lo, hi in cols)) == set(range(1, n + 1))


def test_square_block_count():
    g = hexlattice.build_box(2, 2)
    assert len(blocks.square_blocks(2, 2, g)) == 9
    assert len(blocks.square_blocks(2, 1, g)) == 4
    assert len(blocks.whole_block(g)) == 1
    assert set(blocks.whole_block(g)[0].edges) == set(g.internal)


def test_subblocks_partition_the_block():
    g = hexlattice.build_box(1, 4)
    for blk in blocks.strip_blocks(1, 4, 2, g):
        flat = [k for part in blk.subblocks for k in part]
        assert sorted(flat) == sorted(blk.edges)


def test_conditional_law_is_the_restricted_measure(box13):
    g, b = box13
    space = model.enumerate_states(g, b)
    mu = dict(zip(space.states, model.measure(g, W, b, space, mode="rational")))
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[0, 1], [2]]), W, b)
    for s in space.states[::7]:
        for bi in range(len(kern)):
            mask = kern.blockset[bi].mask
            agree = {t: p for t, p in mu.items() if (t & ~mask) == (s & ~mask)}
            z = sum(agree.values())
            assert kern.conditional_law(s, bi) == {t: p / z for t, p in agree.items()}


def test_sequential_update_law_is_the_conditional_law(box13):
    g, b = box13
    space = model.enumerate_states(g, b)
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[[0], [1]], [[1], [2]]], subgroups=True), W, b)
    for s in space.states[::5]:
        for bi in range(len(kern)):
            assert blocks.sequential_law(kern, s, bi) == kern.conditional_law(s, bi)


def test_projections_are_reversible_idempotents(box12):
    g, b = box12
    space = model.enumerate_states(g, b)
    pi = np.array(model.measure(g, W, b, space, mode="float"))
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[0], [1]]), W, b)
    for bi in range(len(kern)):
        P = blocks.block_projection(kern, space, bi)
        assert np.allclose(P @ P, P)
        assert analysis.reversibility_residual(P, pi) < 1e-12
    M = blocks.block_matrix(kern, space)
    R = blocks.block_matrix(kern, space, mode="rational")
    assert np.allclose(M, np.array(R, dtype=float))
    assert np.allclose(pi @ M, pi)


def test_coupling_of_equal_states_stays_together(box12, rng):
    g, b = box12
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[0], [1]]), W, b)
    s = model.enumerate_states(g, b)[3]
    for _ in range(50):
        x, y = blocks.coupled_step(kern, s, s, rng)
        assert x == y


def test_coupled_law_is_a_distribution(box12):
    g, b = box12
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[0], [1]]), W, b)
    space = model.enumerate_states(g, b)
    s = space[0]
    t = dimer.apply_move(g, s, dimer.legal_moves(g, s)[0])
    assert sum(blocks.coupled_law(kern, s, t).values()) == 1


def test_contraction_estimate_fields(box12):
    g, b = box12
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[0], [1]]), Weights(1, 2, 3), b)
    space = model.enumerate_states(g, b)
    s = space[0]
    t = dimer.apply_move(g, s, dimer.legal_moves(g, s)[0])
    est = blocks.contraction_estimate(kern, [(s, t)], np.random.default_rng(0), trials=200)
    assert est["pairs"] == 1 and est["trials"] == 200
    assert est["mean_ratio"] >= 0 and est["stderr"] >= 0
    with pytest.raises(ValueError):
        blocks.contraction_estimate(kern, [(s, s)], np.random.default_rng(0), trials=5)


def test_block_step_is_seeded(box12):
    g, b = box12
    kern = blocks.BlockKernel(blocks.face_blocks(g, [[0], [1]]), Weights(1, 2, 3), b)
    s = model.enumerate_states(g, b)[0]

    def walk(seed):
        gen = np.random.default_rng(seed)
        x, out = s, []
        for _ in range(100):
            x = blocks.block_step(kern, x, gen)
            out.append(x)
        return out

    assert walk(4) == walk(4)


def test_hamming():
    assert blocks.hamming(0b1011, 0b0001) == 2
