"""Nodewise graph construction."""

import numpy as np
import pytest

from stepgauss.graph import build_graph
from stepgauss.rng import gaussian, rng_for


def chain_block(gen, n, k, rho=0.5):
    """k variables with chain (lag-one) dependence."""
    z = gaussian(gen, (n, k))
    x = np.empty((n, k))
    x[:, 0] = z[:, 0]
    for j in range(1, k):
        x[:, j] = rho * x[:, j - 1] + np.sqrt(1 - rho * rho) * z[:, j]
    return x


class TestBuildGraph:
    def test_single_variable_empty(self, rng):
        g = build_graph(rng.normal(size=(30, 1)), alpha=0.05)
        assert g.edges == ()
        assert g.nodes == 1

    def test_chain_edge_found_independent_absent(self):
        gen = rng_for(42, 0, 0)
        n = 400
        x1 = gaussian(gen, n)
        x2 = x1 + 0.1 * gaussian(gen, n)
        x3 = gaussian(gen, n)
        g = build_graph(np.column_stack([x1, x2, x3]), alpha=0.05)
        assert (0, 1) in g.edges
        assert (0, 2) not in g.edges
        assert (1, 2) not in g.edges

    def test_cutoff_is_alpha_over_q(self, rng):
        g = build_graph(rng.normal(size=(50, 10)), alpha=0.05)
        assert g.cutoff == pytest.approx(0.005)

    def test_provenance_symmetric_pair(self):
        gen = rng_for(43, 0, 0)
        n = 500
        x1 = gaussian(gen, n)
        x2 = x1 + 0.05 * gaussian(gen, n)
        g = build_graph(np.column_stack([x1, x2]), alpha=0.05)
        assert g.edges == ((0, 1),)
        assert set(g.provenance[(0, 1)]) == {0, 1}
        assert g.edges_and == ((0, 1),)

    def test_and_rule_subset_of_or(self):
        gen = rng_for(44, 0, 0)
        x = chain_block(gen, 300, 8, rho=0.4)
        g = build_graph(x, alpha=0.1)
        assert set(g.edges_and) <= set(g.edges)
        # rules differ exactly on single-direction discoveries
        for e in set(g.edges) - set(g.edges_and):
            assert len(set(g.provenance[e])) == 1

    def test_two_noise_blocks_no_cross_edges(self):
        gen = rng_for(45, 0, 0)
        a = gaussian(gen, (300, 6))
        b = gaussian(rng_for(45, 0, 1), (300, 6))
        g = build_graph(np.hstack([a, b]), alpha=0.05)
        cross = [e for e in g.edges if (e[0] < 6) != (e[1] < 6)]
        assert len(cross) <= 1

    def test_threads_identical(self):
        gen = rng_for(46, 0, 0)
        x = chain_block(gen, 200, 10)
        g1 = build_graph(x, alpha=0.05, threads=1)
        g8 = build_graph(x, alpha=0.05, threads=8)
        assert g1.edges == g8.edges
        assert g1.provenance == g8.provenance
