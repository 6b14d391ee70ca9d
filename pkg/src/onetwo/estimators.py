"""Estimator-style wrappers: fit on (lattice, boundary), read fitted attributes.

Parameters go to the constructor and are returned by ``get_params``; fitted
state ends in an underscore.  No scikit-learn dependency.
"""
from __future__ import annotations

import inspect

import numpy as np

from . import analysis, blocks, chain
from .model import Weights, enumerate_states, measure


class _Base:
    def get_params(self, deep=True):
        names = [p for p in inspect.signature(type(self).__init__).parameters if p != "self"]
        return {k: getattr(self, k) for k in names}

    def set_params(self, **params):
        valid = self.get_params()
        for k, v in params.items():
            if k not in valid:
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def _weights(self):
        w = self.weights
        return w if isinstance(w, Weights) else Weights(*w)

    def _check_fitted(self):
        if not hasattr(self, "graph_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted")


class SingleMoveSampler(_Base):
    """Runs the single-edge / single-face chain."""

    def __init__(self, weights=(1, 1, 1), n_steps=10_000, seed=0, start=None):
        self.weights = weights
        self.n_steps = n_steps
        self.seed = seed
        self.start = start

    def fit(self, g, boundary):
        self.graph_ = g
        self.kernel_ = chain.Kernel(g, self._weights(), boundary)
        self.rng_ = np.random.default_rng(self.seed)
        if self.start is None:
            space = enumerate_states(g, boundary)
            if not space.admissible:
                raise ValueError("boundary condition admits no configuration")
            self.state_ = space.states[0]
        else:
            self.state_ = self.start
        return self

    def sample(self, n_steps=None):
        """Trajectory of the next n_steps states (continues from the last one)."""
        self._check_fitted()
        n = self.n_steps if n_steps is None else n_steps
        out = np.fromiter(chain.run(self.kernel_, self.state_, n, self.rng_), dtype=object, count=n)
        if n:
            self.state_ = out[-1]
        return out

    def empirical_distribution(self, space, n_steps=None):
        idx = space.index
        counts = np.zeros(len(space))
        for s in self.sample(n_steps):
            counts[idx[s]] += 1
        return counts / counts.sum()


class BlockSampler(SingleMoveSampler):
    """Runs block dynamics on strip or square blocks."""

    def __init__(self, weights=(1, 1, 1), n_steps=1_000, seed=0, start=None, kind="strip", ell=2):
        super().__init__(weights, n_steps, seed, start)
        self.kind = kind
        self.ell = ell

    def _blockset(self, g):
        _, k, n = g.shape
        if self.kind == "strip":
            return blocks.strip_blocks(k, n, self.ell, g)
        if self.kind == "square":
            return blocks.square_blocks(n, self.ell, g)
        if self.kind == "whole":
            return blocks.whole_block(g)
        raise ValueError(f"unknown block kind {self.kind!r}")

    def fit(self, g, boundary):
        super().fit(g, boundary)
        self.kernel_ = blocks.BlockKernel(self._blockset(g), self._weights(), boundary)
        return self

    def sample(self, n_steps=None):
        self._check_fitted()
        n = self.n_steps if n_steps is None else n_steps
        out = np.empty(n, dtype=object)
        s = self.state_
        for t in range(n):
            s = blocks.block_step(self.kernel_, s, self.rng_)
            out[t] = s
        self.state_ = s
        return out


class MixingAnalyzer(_Base):
    """Exact spectral gap, mixing time and relaxation sandwich of a chain."""

    def __init__(self, weights=(1, 1, 1), eps=0.25, chain="single", ell=2, curve_len=0):
        self.weights = weights
        self.eps = eps
        self.chain = chain
        self.ell = ell
        self.curve_len = curve_len

    def fit(self, g, boundary):
        w = self._weights()
        self.graph_ = g
        self.space_ = enumerate_states(g, boundary)
        if not self.space_.admissible:
            raise ValueError("boundary condition admits no configuration")
        if self.chain == "single":
            self.P_ = chain.transition_matrix(chain.Kernel(g, w, boundary), self.space_)
        else:
            sampler = BlockSampler(w, kind=self.chain, ell=self.ell)
            self.P_ = blocks.block_matrix(blocks.BlockKernel(sampler._blockset(g), w, boundary), self.space_)
        self.pi_ = np.array(measure(g, w, boundary, self.space_, mode="float"))
        rep = analysis.report(self.P_, self.pi_, self.eps, self.curve_len)
        self.report_ = rep
        self.gamma_ = rep["gamma"]
        self.gamma_star_ = rep["gamma_star"]
        self.t_mix_ = rep["t_mix"]
        self.diameter_ = rep["diameter"]
        self.sandwich_ = (rep["sandwich"]["lower"], rep["sandwich"]["upper"])
        return self

    def score(self):
        """True when the exact mixing time lies inside the relaxation sandwich."""
        self._check_fitted()
        lo, hi = self.sandwich_
        return lo - 1e-9 <= self.t_mix_ <= hi + 1e-9
