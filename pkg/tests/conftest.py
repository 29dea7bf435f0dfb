"""Shared brute-force oracles. These stay independent of the library paths
they check: isomorphism by trying all n! permutations, events by enumerating
every injection between vertex subsets."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from recon_lab.graph_core import Graph, pair_count, pair_index
from recon_lab.sampling import EdgeProbabilities, SeedSpec, sample_graph


def permute_graph(g: Graph, perm) -> Graph:
    return Graph.from_edges(g.n, [(perm[u], perm[v]) for u, v in g.edges()])


def brute_find_isomorphism(g: Graph, h: Graph):
    """First permutation mapping g onto h, by exhaustive search (n <= 8)."""
    if g.n != h.n:
        return None
    for perm in itertools.permutations(range(g.n)):
        if all(h.has_edge(perm[u], perm[v]) for u, v in g.edges()) and all(
            g.has_edge(u, v) == h.has_edge(perm[u], perm[v])
            for u in range(g.n)
            for v in range(u + 1, g.n)
        ):
            return perm
    return None


def brute_automorphisms(g: Graph):
    out = []
    for perm in itertools.permutations(range(g.n)):
        if all(
            g.has_edge(u, v) == g.has_edge(perm[u], perm[v])
            for u in range(g.n)
            for v in range(u + 1, g.n)
        ):
            out.append(perm)
    return out


class BruteCanonicalizer:
    """Min-over-all-permutations edge mask, vectorized per vertex count."""

    def __init__(self):
        self._tables: dict[int, np.ndarray] = {}

    def _table(self, n: int) -> np.ndarray:
        if n not in self._tables:
            perms = list(itertools.permutations(range(n)))
            npairs = pair_count(n)
            pairs = [(u, v) for v in range(n) for u in range(v)]
            t = np.empty((len(perms), npairs), dtype=np.int64)
            for r, p in enumerate(perms):
                for k, (u, v) in enumerate(pairs):
                    t[r, k] = pair_index(p[u], p[v])
            self._tables[n] = np.int64(1) << t
        return self._tables[n]

    def canonical_mask(self, g: Graph) -> int:
        if g.n <= 1:
            return 0
        powers = self._table(g.n)
        mask = g.edge_mask()
        cols = [k for k in range(pair_count(g.n)) if (mask >> k) & 1]
        if not cols:
            return 0
        return int(powers[:, cols].sum(axis=1).min())


@pytest.fixture(scope="session")
def brute_canon():
    return BruteCanonicalizer()


def injection_event_oracle(g: Graph, delta: int) -> bool:
    """True iff no non-identity injection between (n-delta)-subsets induces
    an isomorphism of induced subgraphs."""
    n = g.n - delta
    for w_set in itertools.combinations(range(g.n), n):
        for image in itertools.permutations(range(g.n), n):
            if image == w_set:
                continue
            if all(
                g.has_edge(w_set[i], w_set[j]) == g.has_edge(image[i], image[j])
                for i in range(n)
                for j in range(i + 1, n)
            ):
                return False
    return True


def all_graphs(n: int):
    for mask in range(1 << pair_count(n)):
        yield Graph.from_edge_mask(n, mask)


def random_graph(n: int, p: float, master: int, stream: int) -> Graph:
    return sample_graph(EdgeProbabilities.constant(n, p), SeedSpec(master, stream))
