"""Decks, hypomorphism search, constructive reconstruction, and exhaustive checks.

The constructive routine takes a hypomorphism sigma and hunts for anchor
vertices x, y with card isomorphisms pinned across sigma; when the two-anchor
conditions close, the x-card isomorphism extends to a full isomorphism, which
is re-verified edge-by-edge before being returned.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Optional

import numpy as np

from .graph_core import Graph, ResourceCapError, induced_subgraph, pair_count, pair_index, to_graph6
from .isomorphism import (
    Certificate,
    VertexMap,
    canonical_form,
    find_isomorphism,
    is_asymmetric,
    is_fixed_set,
    verify_map,
)

VERIFY_MAX_N = 7


@dataclass(frozen=True)
class Deck:
    """Multiset of certificates of the one-vertex-deleted subgraphs."""

    n: int
    entries: tuple[tuple[Certificate, int], ...]  # sorted by certificate

    @classmethod
    def of(cls, g: Graph) -> "Deck":
        if g.n < 1:
            raise ValueError("deck needs at least one vertex")
        counts: dict[Certificate, int] = {}
        for v in range(g.n):
            cert = canonical_form(delete_vertex(g, v))
            counts[cert] = counts.get(cert, 0) + 1
        return cls(g.n, tuple(sorted(counts.items())))

    def multiplicity_total(self) -> int:
        return sum(m for _, m in self.entries)

    def to_json(self) -> str:
        return json.dumps([[cert.to_hex(), mult] for cert, mult in self.entries])

    def digest(self) -> bytes:
        """128-bit hash of the sorted certificate multiset."""
        h = hashlib.blake2b(digest_size=16)
        for cert, mult in self.entries:
            h.update(cert.bits)
            h.update(cert.n.to_bytes(4, "little"))
            h.update(mult.to_bytes(4, "little"))
        return h.digest()


def deck(g: Graph) -> Deck:
    return Deck.of(g)


@dataclass(frozen=True)
class Hypomorphism:
    """Bijection sigma with G - v isomorphic to H - sigma(v) for every v."""

    map: VertexMap

    def verify(self, g: Graph, h: Graph) -> bool:
        if g.n != h.n or self.map.domain != g.n:
            return False
        return all(
            canonical_form(delete_vertex(g, v)) == canonical_form(delete_vertex(h, self.map(v)))
            for v in range(g.n)
        )


def delete_vertex(g: Graph, v: int) -> Graph:
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range")
    return induced_subgraph(g, [u for u in range(g.n) if u != v])


def _shift_down(v: int, removed: int) -> int:
    """Label of v inside G - removed."""
    return v if v < removed else v - 1


def _shift_up(i: int, removed: int) -> int:
    """Original label of position i of G - removed."""
    return i if i < removed else i + 1


def find_hypomorphism(g: Graph, h: Graph) -> Optional[Hypomorphism]:
    """Exact bipartite matching between vertices grouped by card certificate."""
    if g.n != h.n:
        raise ValueError(f"vertex counts differ: {g.n} vs {h.n}")
    n = g.n
    gcards = [canonical_form(delete_vertex(g, v)) for v in range(n)]
    hcards = [canonical_form(delete_vertex(h, w)) for w in range(n)]
    allowed = [[w for w in range(n) if hcards[w] == gcards[v]] for v in range(n)]
    match_of_h = [-1] * n

    def augment(v: int, visited: list[bool]) -> bool:
        for w in allowed[v]:
            if visited[w]:
                continue
            visited[w] = True
            if match_of_h[w] == -1 or augment(match_of_h[w], visited):
                match_of_h[w] = v
                return True
        return False

    for v in range(n):
        if not augment(v, [False] * n):
            return None
    image = [0] * n
    for w, v in enumerate(match_of_h):
        image[v] = w
    return Hypomorphism(VertexMap(n, tuple(image)))


def reconstruct_two_anchor(g: Graph, h: Graph, sigma: Hypomorphism) -> Optional[VertexMap]:
    """Constructive reconstruction from a hypomorphism via two anchor vertices.

    Searches ordered anchor pairs (x, y) in lexicographic order for card
    isomorphisms phi_x: G-x ~= H-sigma(x) with phi_x(y) = sigma(y) and
    phi_y: G-y ~= H-sigma(y) with phi_y(x) = sigma(x), such that the
    x-neighborhood away from the anchors is a fixed set of G-{x,y}. On success
    phi_x extends by x -> sigma(x) to a full isomorphism, verified edge-exactly
    before return. Returns None when no anchor pair qualifies: that outcome
    means the method does not apply, never that the graphs are non-isomorphic.
    """
    if g.n < 3:
        raise ValueError("needs at least 3 vertices")
    if h.n != g.n:
        raise ValueError("vertex counts differ")
    if not sigma.verify(g, h):
        raise ValueError("sigma is not a hypomorphism for these graphs")
    n = g.n
    sig = sigma.map
    for x in range(n):
        sx = sig(x)
        for y in range(n):
            if y == x:
                continue
            # condition (iii): the x-neighborhood off the anchors is fixed setwise
            rest = [v for v in range(n) if v not in (x, y)]
            a = induced_subgraph(g, rest)
            s_x = {rest.index(v) for v in rest if g.has_edge(x, v)}
            if not is_fixed_set(a, s_x):
                continue
            sy = sig(y)
            phi_x = find_isomorphism(
                delete_vertex(g, x),
                delete_vertex(h, sx),
                pins={_shift_down(y, x): _shift_down(sy, sx)},
            )
            if phi_x is None:
                continue
            phi_y = find_isomorphism(
                delete_vertex(g, y),
                delete_vertex(h, sy),
                pins={_shift_down(x, y): _shift_down(sx, sy)},
            )
            if phi_y is None:
                continue
            image = [0] * n
            image[x] = sx
            for v in range(n):
                if v != x:
                    image[v] = _shift_up(phi_x(_shift_down(v, x)), sx)
            if verify_map(g, h, image):
                return VertexMap(n, tuple(image))
    return None


def unique_asymmetric_pair(g: Graph) -> Optional[tuple[int, int]]:
    """A pair whose deletion leaves a unique asymmetric (n-2)-subgraph, if any."""
    if g.n < 3:
        raise ValueError("needs at least 3 vertices")
    certs: dict[tuple[int, int], Certificate] = {}
    counts: dict[Certificate, int] = {}
    for x, y in combinations(range(g.n), 2):
        rest = [v for v in range(g.n) if v not in (x, y)]
        cert = canonical_form(induced_subgraph(g, rest))
        certs[(x, y)] = cert
        counts[cert] = counts.get(cert, 0) + 1
    for x, y in combinations(range(g.n), 2):
        if counts[certs[(x, y)]] != 1:
            continue
        rest = [v for v in range(g.n) if v not in (x, y)]
        if is_asymmetric(induced_subgraph(g, rest)):
            return (x, y)
    return None


@dataclass(frozen=True)
class ReconstructibilityReport:
    n: int
    class_count: int
    collision_count: int
    collisions: tuple[tuple[str, ...], ...]  # groups of graph6 strings sharing a deck

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "class_count": self.class_count,
            "collision_count": self.collision_count,
            "collisions": [list(group) for group in self.collisions],
        }


def _pair_permutation_powers(n: int) -> np.ndarray:
    """For every vertex permutation, 2^(permuted pair index) per pair index."""
    perms = list(permutations(range(n)))
    npairs = pair_count(n)
    table = np.empty((len(perms), npairs), dtype=np.int64)
    pairs = [(u, v) for v in range(n) for u in range(v)]
    for r, p in enumerate(perms):
        for k, (u, v) in enumerate(pairs):
            table[r, k] = pair_index(p[u], p[v])
    return (np.int64(1) << table)


def iso_class_representatives(n: int) -> list[int]:
    """Minimum edge-mask representative of every isomorphism class on n vertices."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > VERIFY_MAX_N:
        raise ResourceCapError(
            f"exhaustive enumeration capped at n={VERIFY_MAX_N}", required=n, cap=VERIFY_MAX_N
        )
    npairs = pair_count(n)
    if n == 1:
        return [0]
    powers = _pair_permutation_powers(n)
    seen = np.zeros(1 << npairs, dtype=bool)
    reps = []
    for mask in range(1 << npairs):
        if seen[mask]:
            continue
        reps.append(mask)  # sweeping ascending, so mask is its orbit minimum
        cols = [k for k in range(npairs) if (mask >> k) & 1]
        orbit = powers[:, cols].sum(axis=1) if cols else np.zeros(len(powers), dtype=np.int64)
        seen[orbit] = True
    return reps


def verify_reconstructibility_exhaustive(n: int) -> ReconstructibilityReport:
    """Group all isomorphism classes on n vertices by deck and report collisions.

    A collision is a deck shared by non-isomorphic classes; the hash-grouped
    candidates are confirmed by exact deck comparison, so false positives are
    impossible.
    """
    reps = iso_class_representatives(n)
    by_digest: dict[bytes, list[tuple[int, Deck]]] = {}
    for rep in reps:
        g = Graph.from_edge_mask(n, rep)
        d = Deck.of(g)
        by_digest.setdefault(d.digest(), []).append((rep, d))
    collisions: list[tuple[str, ...]] = []
    for digest in sorted(by_digest):
        group = by_digest[digest]
        if len(group) < 2:
            continue
        # confirm exact deck equality within the hash bucket
        by_deck: dict[tuple, list[int]] = {}
        for rep, d in group:
            by_deck.setdefault(d.entries, []).append(rep)
        for entries, members in sorted(by_deck.items()):
            if len(members) >= 2:
                collisions.append(tuple(to_graph6(Graph.from_edge_mask(n, m)) for m in members))
    return ReconstructibilityReport(
        n=n,
        class_count=len(reps),
        collision_count=len(collisions),
        collisions=tuple(sorted(collisions)),
    )
