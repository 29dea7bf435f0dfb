"""Bitset-backed undirected graphs, edit application, and perturbation balls.

Vertices are labeled 0..n-1. Adjacency is stored as one integer bitmask per
vertex, so edge tests and row intersections cost O(n/word). Vertex pairs are
indexed colexicographically, which is also the bit order of the graph6 wire
format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

# Enumeration caps. Larger balls are handled by sampling in the harness, never
# by enumeration.
BALL_CAP = 1 << 20
BALL_CAP_TOTAL = 1 << 22


class ResourceCapError(RuntimeError):
    """An enumeration would exceed a hard resource cap."""

    def __init__(self, message: str, required: int | None = None, cap: int | None = None):
        super().__init__(message)
        self.required = required
        self.cap = cap


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(u: int, v: int) -> int:
    """Colex index of the unordered pair {u, v}: (0,1)->0, (0,2)->1, (1,2)->2, ..."""
    if u == v:
        raise ValueError(f"self-pair ({u},{v}) has no index")
    if u > v:
        u, v = v, u
    return v * (v - 1) // 2 + u


def pair_of_index(k: int) -> tuple[int, int]:
    """Inverse of pair_index."""
    if k < 0:
        raise ValueError("negative pair index")
    # v is the largest integer with C(v,2) <= k
    v = int((1 + (1 + 8 * k) ** 0.5) / 2)
    while v * (v - 1) // 2 > k:
        v -= 1
    while (v + 1) * v // 2 <= k:
        v += 1
    u = k - v * (v - 1) // 2
    return u, v


def pair_bijection(n: int) -> tuple[dict[tuple[int, int], int], list[tuple[int, int]]]:
    """The fixed indexing of V^(2): forward dict and inverse list, for n >= 2."""
    if n < 2:
        raise ValueError("pair indexing needs n >= 2")
    inverse = [pair_of_index(k) for k in range(pair_count(n))]
    forward = {pair: k for k, pair in enumerate(inverse)}
    return forward, inverse


class VertexPair(NamedTuple):
    u: int
    v: int

    @classmethod
    def make(cls, a: int, b: int) -> "VertexPair":
        if a == b:
            raise ValueError(f"vertex pair must have distinct endpoints, got ({a},{b})")
        if a < 0 or b < 0:
            raise ValueError(f"negative vertex in pair ({a},{b})")
        return cls(a, b) if a < b else cls(b, a)

    @property
    def index(self) -> int:
        return pair_index(self.u, self.v)


class Graph:
    """Immutable simple undirected graph on vertices 0..n-1."""

    __slots__ = ("n", "rows", "_edge_mask")

    def __init__(self, n: int, rows: Sequence[int]):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        if len(rows) != n:
            raise ValueError("adjacency row count does not match n")
        for u, row in enumerate(rows):
            if row >> n:
                raise ValueError(f"row {u} has bits beyond vertex range")
            if (row >> u) & 1:
                raise ValueError(f"self-loop at vertex {u}")
        for u in range(n):
            for v in range(u + 1, n):
                if ((rows[u] >> v) & 1) != ((rows[v] >> u) & 1):
                    raise ValueError(f"asymmetric adjacency at ({u},{v})")
        self.n = n
        self.rows = tuple(rows)
        self._edge_mask: int | None = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls._unsafe(n, [0] * n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls._unsafe(n, [full ^ (1 << u) for u in range(n)])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        rows = [0] * n
        for a, b in edges:
            p = VertexPair.make(a, b)
            if p.v >= n:
                raise ValueError(f"edge ({a},{b}) out of range for n={n}")
            rows[p.u] |= 1 << p.v
            rows[p.v] |= 1 << p.u
        return cls._unsafe(n, rows)

    @classmethod
    def from_edge_mask(cls, n: int, mask: int) -> "Graph":
        """Build from a bitmask over colex pair indices."""
        if mask >> pair_count(n):
            raise ValueError("edge mask has bits beyond the pair range")
        rows = [0] * n
        k = 0
        for v in range(n):
            for u in range(v):
                if (mask >> k) & 1:
                    rows[u] |= 1 << v
                    rows[v] |= 1 << u
                k += 1
        g = cls._unsafe(n, rows)
        g._edge_mask = mask
        return g

    @classmethod
    def _unsafe(cls, n: int, rows: Sequence[int]) -> "Graph":
        g = object.__new__(cls)
        g.n = n
        g.rows = tuple(rows)
        g._edge_mask = None
        return g

    # -- basic queries -------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"vertex out of range: ({u},{v})")
        return u != v and bool((self.rows[u] >> v) & 1)

    def degree(self, u: int) -> int:
        return self.rows[u].bit_count()

    def edge_count(self) -> int:
        return sum(r.bit_count() for r in self.rows) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            row = self.rows[u] >> (u + 1)
            v = u + 1
            while row:
                if row & 1:
                    yield (u, v)
                row >>= 1
                v += 1

    def edge_mask(self) -> int:
        """Edge set as a bitmask over colex pair indices."""
        if self._edge_mask is None:
            mask = 0
            k = 0
            for v in range(self.n):
                rv = self.rows[v]
                for u in range(v):
                    if (rv >> u) & 1:
                        mask |= 1 << k
                    k += 1
            self._edge_mask = mask
        return self._edge_mask

    def adjacency_bytes(self) -> bytes:
        """Canonical-input key: n plus the packed colex edge bits."""
        nbytes = (pair_count(self.n) + 7) // 8
        return self.n.to_bytes(4, "little") + self.edge_mask().to_bytes(max(nbytes, 1), "little")

    def to_adjacency(self) -> np.ndarray:
        """Dense symmetric uint8 adjacency matrix."""
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for u, v in self.edges():
            a[u, v] = 1
            a[v, u] = 1
        return a

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.n, self.rows))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={list(self.edges())})"


@dataclass(frozen=True)
class EditSet:
    """A collection of vertex pairs generating a perturbation ball.

    In subset mode all pairs are distinct; tuple mode allows repeats and models
    i.i.d. draws with replacement. Membership queries go through a bitset over
    pair indices either way.
    """

    n: int
    pairs: tuple[VertexPair, ...]
    mode: str  # "subset" | "tuple"

    def __post_init__(self):
        if self.mode not in ("subset", "tuple"):
            raise ValueError(f"unknown edit-set mode {self.mode!r}")
        for p in self.pairs:
            if p.v >= self.n:
                raise ValueError(f"pair {tuple(p)} out of range for n={self.n}")
        if self.mode == "subset" and len(set(self.pairs)) != len(self.pairs):
            raise ValueError("subset-mode edit set contains repeated pairs")
        object.__setattr__(self, "_index_bitset", self._build_bitset())

    def _build_bitset(self) -> int:
        bits = 0
        for p in self.pairs:
            bits |= 1 << p.index
        return bits

    @property
    def index_bitset(self) -> int:
        return self._index_bitset  # type: ignore[attr-defined]

    def distinct_pairs(self) -> tuple[VertexPair, ...]:
        return tuple(sorted(set(self.pairs), key=lambda p: p.index))

    def __contains__(self, pair: tuple[int, int]) -> bool:
        p = VertexPair.make(*pair)
        return bool((self.index_bitset >> p.index) & 1)

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]], mode: str = "subset") -> "EditSet":
        return cls(n, tuple(VertexPair.make(a, b) for a, b in pairs), mode)

    def to_json(self) -> str:
        return json.dumps([[p.u, p.v] for p in self.pairs])

    @classmethod
    def from_json(cls, text: str, n: int, mode: str = "subset") -> "EditSet":
        raw = json.loads(text)
        return cls.from_pairs(n, [(int(a), int(b)) for a, b in raw], mode=mode)


# -- operations --------------------------------------------------------------


def induced_subgraph(g: Graph, vertices: Iterable[int]) -> Graph:
    """G[U], relabeled to 0..|U|-1 by ascending original label."""
    u_sorted = sorted(set(vertices))
    if u_sorted and (u_sorted[0] < 0 or u_sorted[-1] >= g.n):
        raise ValueError(f"vertex set {u_sorted} out of range for n={g.n}")
    k = len(u_sorted)
    rows = [0] * k
    for i in range(k):
        gi = g.rows[u_sorted[i]]
        ri = 0
        for j in range(k):
            if (gi >> u_sorted[j]) & 1:
                ri |= 1 << j
        rows[i] = ri
    return Graph._unsafe(k, rows)


def apply_edits(g: Graph, add: Iterable[tuple[int, int]], remove: Iterable[tuple[int, int]]) -> Graph:
    """G + add - remove. The two sets must not overlap."""
    add_n = {VertexPair.make(a, b) for a, b in add}
    rem_n = {VertexPair.make(a, b) for a, b in remove}
    clash = add_n & rem_n
    if clash:
        raise ValueError(f"add/remove sets overlap on {sorted(tuple(p) for p in clash)}")
    rows = list(g.rows)
    for p in add_n | rem_n:
        if p.v >= g.n:
            raise ValueError(f"pair {tuple(p)} out of range for n={g.n}")
    for p in add_n:
        rows[p.u] |= 1 << p.v
        rows[p.v] |= 1 << p.u
    for p in rem_n:
        rows[p.u] &= ~(1 << p.v)
        rows[p.v] &= ~(1 << p.u)
    return Graph._unsafe(g.n, rows)


def _with_pair_assignments(g: Graph, pairs: Sequence[VertexPair], assignment: int) -> Graph:
    rows = list(g.rows)
    for j, p in enumerate(pairs):
        if (assignment >> j) & 1:
            rows[p.u] |= 1 << p.v
            rows[p.v] |= 1 << p.u
        else:
            rows[p.u] &= ~(1 << p.v)
            rows[p.v] &= ~(1 << p.u)
    return Graph._unsafe(g.n, rows)


def enumerate_ball(g: Graph, edits: EditSet, cap: int = BALL_CAP) -> Iterator[Graph]:
    """Stream B_S(G): every presence/absence assignment on the pairs of S.

    Members come out in Gray-code order over assignments, so consecutive graphs
    differ by a single edge toggle.
    """
    if edits.mode != "subset":
        raise ValueError("enumerate_ball requires a subset-mode edit set")
    if edits.n != g.n:
        raise ValueError("edit set and graph have different vertex counts")
    pairs = edits.pairs
    k = len(pairs)
    if 1 << k > cap:
        raise ResourceCapError(
            f"ball of size 2^{k} exceeds enumeration cap {cap}", required=1 << k, cap=cap
        )
    rows = list(g.rows)
    # start at the all-absent assignment (Gray code of 0)
    for p in pairs:
        rows[p.u] &= ~(1 << p.v)
        rows[p.v] &= ~(1 << p.u)
    yield Graph._unsafe(g.n, rows.copy())
    prev = 0
    for i in range(1, 1 << k):
        gray = i ^ (i >> 1)
        j = (gray ^ prev).bit_length() - 1
        p = pairs[j]
        rows[p.u] ^= 1 << p.v
        rows[p.v] ^= 1 << p.u
        prev = gray
        yield Graph._unsafe(g.n, rows.copy())


def ball_size(edits: EditSet) -> int:
    return 1 << len(set(edits.pairs))


def radius_ball_size(n: int, r: int) -> int:
    total = 0
    c = 1
    npairs = pair_count(n)
    for k in range(r + 1):
        total += c
        c = c * (npairs - k) // (k + 1)
    return total


def enumerate_radius_ball(g: Graph, r: int, cap: int = BALL_CAP_TOTAL) -> Iterator[Graph]:
    """Stream B_r(G): every graph at edge-set Hamming distance <= r, once each."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    total = radius_ball_size(g.n, r)
    if total > cap:
        raise ResourceCapError(
            f"radius ball holds {total} graphs, exceeding cap {cap}", required=total, cap=cap
        )
    npairs = pair_count(g.n)
    mask = g.edge_mask()
    for k in range(r + 1):
        for combo in combinations(range(npairs), k):
            toggled = mask
            for idx in combo:
                toggled ^= 1 << idx
            yield Graph.from_edge_mask(g.n, toggled)


# -- graph6 ------------------------------------------------------------------


def to_graph6(g: Graph) -> str:
    """Encode in graph6: size header, then colex upper-triangle bits, 6 per byte."""
    n = g.n
    if n <= 62:
        header = chr(n + 63)
    elif n <= 258047:
        header = chr(126) + "".join(chr(((n >> shift) & 0x3F) + 63) for shift in (12, 6, 0))
    else:
        raise ValueError("graph6 supports at most 258047 vertices here")
    mask = g.edge_mask()
    npairs = pair_count(n)
    chars = []
    for start in range(0, npairs, 6):
        group = 0
        for t in range(6):
            k = start + t
            if k < npairs and (mask >> k) & 1:
                group |= 1 << (5 - t)
        chars.append(chr(group + 63))
    return header + "".join(chars)


def from_graph6(text: str) -> Graph:
    s = text.strip()
    if s.startswith(">>graph6<<"):
        s = s[10:]
    if not s:
        raise ValueError("empty graph6 string")
    vals = [ord(c) - 63 for c in s]
    if any(v < 0 or v > 63 for v in vals):
        raise ValueError("invalid graph6 character")
    if vals[0] <= 62:
        n, body = vals[0], vals[1:]
    elif len(vals) >= 4 and vals[0] == 63:
        n = (vals[1] << 12) | (vals[2] << 6) | vals[3]
        body = vals[4:]
    else:
        raise ValueError("truncated graph6 size header")
    npairs = pair_count(n)
    expected = (npairs + 5) // 6
    if len(body) != expected:
        raise ValueError(f"graph6 body length {len(body)}, expected {expected} for n={n}")
    mask = 0
    for j, group in enumerate(body):
        for t in range(6):
            k = 6 * j + t
            if (group >> (5 - t)) & 1:
                if k >= npairs:
                    raise ValueError("nonzero padding bits in graph6 body")
                mask |= 1 << k
    return Graph.from_edge_mask(n, mask)
