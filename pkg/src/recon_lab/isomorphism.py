"""Canonical forms, isomorphism witnesses, and automorphism queries.

The canonical labeling is classic individualization-refinement: refine an
ordered partition by neighbor counts until stable, branch on the smallest
non-singleton cell (lowest vertex first), and keep the lexicographically least
relabeled adjacency bitstring over all leaves. Automorphisms discovered from
coinciding leaves prune sibling branches, which keeps symmetric inputs from
exploding into full factorial search.

Everything here is exact. Highly symmetric graphs beyond a few hundred
vertices are outside the intended envelope.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

from .graph_core import Graph, ResourceCapError, pair_count

AUT_ENUM_MAX_N = 12
AUT_ENUM_COUNT_CAP = 1_000_000
_LEAF_MEMO_CAP = 4096


class Certificate(NamedTuple):
    """Canonical form: vertex count plus canonical edge bitstring. Totally ordered."""

    n: int
    bits: bytes

    def to_hex(self) -> str:
        return f"{self.n:04x}:{self.bits.hex()}"

    @classmethod
    def from_hex(cls, text: str) -> "Certificate":
        npart, bitpart = text.split(":")
        return cls(int(npart, 16), bytes.fromhex(bitpart))


@dataclass(frozen=True)
class VertexMap:
    """An injective map 0..domain-1 -> vertex labels."""

    domain: int
    image: tuple[int, ...]

    def __post_init__(self):
        if len(self.image) != self.domain:
            raise ValueError("image length does not match domain size")
        if len(set(self.image)) != self.domain:
            raise ValueError("vertex map is not injective")

    def __call__(self, v: int) -> int:
        return self.image[v]

    def is_identity(self) -> bool:
        return all(self.image[v] == v for v in range(self.domain))

    def inverse(self) -> "VertexMap":
        inv = [0] * self.domain
        for v, w in enumerate(self.image):
            inv[w] = v
        return VertexMap(self.domain, tuple(inv))

    def compose(self, other: "VertexMap") -> "VertexMap":
        """self after other: v -> self(other(v))."""
        return VertexMap(self.domain, tuple(self.image[other.image[v]] for v in range(self.domain)))


# -- partition refinement -----------------------------------------------------


def _refine(rows: Sequence[int], cells: list[list[int]]) -> list[list[int]]:
    """Refine an ordered partition by per-cell neighbor counts until stable."""
    while True:
        masks = []
        for cell in cells:
            m = 0
            for v in cell:
                m |= 1 << v
            masks.append(m)
        new_cells: list[list[int]] = []
        changed = False
        for cell in cells:
            if len(cell) == 1:
                new_cells.append(cell)
                continue
            buckets: dict[tuple[int, ...], list[int]] = {}
            for v in cell:
                rv = rows[v]
                sig = tuple((rv & m).bit_count() for m in masks)
                buckets.setdefault(sig, []).append(v)
            if len(buckets) == 1:
                new_cells.append(cell)
            else:
                changed = True
                for sig in sorted(buckets):
                    new_cells.append(buckets[sig])
        if not changed:
            return new_cells
        cells = new_cells


def _canonical_bits(rows: Sequence[int], n: int, inv: Sequence[int]) -> bytes:
    """Adjacency bitstring after relabeling vertex inv[pos] -> pos, colex order."""
    mask = 0
    k = 0
    for j in range(n):
        rj = rows[inv[j]]
        for i in range(j):
            if (rj >> inv[i]) & 1:
                mask |= 1 << k
            k += 1
    nbytes = (pair_count(n) + 7) // 8
    return mask.to_bytes(max(nbytes, 1), "little")


def _orbit_reps(n: int, autos: list[tuple[int, ...]], prefix: tuple[int, ...]) -> list[int]:
    """Union-find representatives under automorphisms fixing the prefix pointwise."""
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for sigma in autos:
        if all(sigma[p] == p for p in prefix):
            for v in range(n):
                ra, rb = find(v), find(sigma[v])
                if ra != rb:
                    parent[ra] = rb
    return [find(v) for v in range(n)]


def _canonical_search(g: Graph) -> tuple[bytes, tuple[int, ...], list[tuple[int, ...]]]:
    """Return (best bitstring, best relabeling orig->pos, discovered automorphisms)."""
    n, rows = g.n, g.rows
    if n == 0:
        return b"\x00", (), []
    best: dict[str, object] = {"bits": None, "perm": None}
    leaf_perms: dict[bytes, list[int]] = {}
    autos: list[tuple[int, ...]] = []

    def visit_leaf(cells: list[list[int]]) -> None:
        inv = [c[0] for c in cells]
        perm = [0] * n
        for pos, v in enumerate(inv):
            perm[v] = pos
        bits = _canonical_bits(rows, n, inv)
        prior = leaf_perms.get(bits)
        if prior is not None:
            other_inv = [0] * n
            for v, pos in enumerate(prior):
                other_inv[pos] = v
            sigma = tuple(other_inv[perm[v]] for v in range(n))
            if any(sigma[v] != v for v in range(n)) and sigma not in autos:
                autos.append(sigma)
        elif len(leaf_perms) < _LEAF_MEMO_CAP:
            leaf_perms[bits] = perm
        if best["bits"] is None or bits < best["bits"]:  # type: ignore[operator]
            best["bits"] = bits
            best["perm"] = tuple(perm)

    def descend(cells: list[list[int]], prefix: tuple[int, ...]) -> None:
        target = None
        for c in cells:
            if len(c) > 1 and (target is None or len(c) < len(target)):
                target = c
        if target is None:
            visit_leaf(cells)
            return
        explored: list[int] = []
        for v in sorted(target):
            if explored:
                reps = _orbit_reps(n, autos, prefix)
                if any(reps[v] == reps[u] for u in explored):
                    continue
            explored.append(v)
            branched: list[list[int]] = []
            for c in cells:
                if c is target:
                    branched.append([v])
                    branched.append([w for w in c if w != v])
                else:
                    branched.append(list(c))
            descend(_refine(rows, branched), prefix + (v,))

    descend(_refine(rows, [list(range(n))]), ())
    return best["bits"], best["perm"], autos  # type: ignore[return-value]


_cert_cache: dict[bytes, Certificate] = {}
_cert_autos: dict[bytes, list[tuple[int, ...]]] = {}
_cert_lock = threading.Lock()


def canonical_form(g: Graph) -> Certificate:
    """Certificate equal across exactly the isomorphism class of the graph."""
    key = g.adjacency_bytes()
    with _cert_lock:
        hit = _cert_cache.get(key)
    if hit is not None:
        return hit
    bits, _perm, autos = _canonical_search(g)
    cert = Certificate(g.n, bits)
    with _cert_lock:
        _cert_cache[key] = cert
        _cert_autos[key] = autos
    return cert


def clear_certificate_cache() -> None:
    with _cert_lock:
        _cert_cache.clear()
        _cert_autos.clear()


# -- joint color refinement for isomorphism search ----------------------------


def _neighbors(rows: Sequence[int], v: int) -> Iterator[int]:
    row = rows[v]
    w = 0
    while row:
        if row & 1:
            yield w
        row >>= 1
        w += 1


def _joint_stable_colors(g: Graph, h: Graph) -> Optional[tuple[list[int], list[int]]]:
    """Refine both graphs with a shared palette; None if color histograms split."""
    n = g.n
    cg = [0] * n
    ch = [0] * n
    ncolors = 1
    while True:
        sig_g = [
            (cg[v], tuple(sorted(cg[w] for w in _neighbors(g.rows, v)))) for v in range(n)
        ]
        sig_h = [
            (ch[v], tuple(sorted(ch[w] for w in _neighbors(h.rows, v)))) for v in range(n)
        ]
        palette = {sig: i for i, sig in enumerate(sorted(set(sig_g) | set(sig_h)))}
        cg = [palette[s] for s in sig_g]
        ch = [palette[s] for s in sig_h]
        if sorted(cg) != sorted(ch):
            return None
        if len(palette) == ncolors:
            return cg, ch
        ncolors = len(palette)


def _iso_dfs(
    g: Graph,
    h: Graph,
    cg: list[int],
    ch: list[int],
    pins: dict[int, int],
) -> Iterator[tuple[int, ...]]:
    """Yield all color-respecting bijections g->h honoring pins, lazily."""
    n = g.n
    cand = {v: sorted(w for w in range(n) if ch[w] == cg[v]) for v in range(n)}
    for x, y in pins.items():
        if cg[x] != ch[y]:
            return
        cand[x] = [y]
    order = sorted(range(n), key=lambda v: (len(cand[v]), v))
    image = [-1] * n
    used = [False] * n

    def extend(i: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(image)
            return
        v = order[i]
        rv = g.rows[v]
        for w in cand[v]:
            if used[w]:
                continue
            rw = h.rows[w]
            ok = True
            for j in range(i):
                u = order[j]
                if ((rv >> u) & 1) != ((rw >> image[u]) & 1):
                    ok = False
                    break
            if ok:
                image[v] = w
                used[w] = True
                yield from extend(i + 1)
                used[w] = False
                image[v] = -1

    yield from extend(0)


def find_isomorphism(
    g: Graph, h: Graph, pins: Optional[dict[int, int]] = None
) -> Optional[VertexMap]:
    """A bijection witnessing g ~= h (honoring any pinned assignments), else None."""
    if g.n != h.n:
        return None
    if g.n == 0:
        return VertexMap(0, ())
    if g.edge_count() != h.edge_count():
        return None
    colors = _joint_stable_colors(g, h)
    if colors is None:
        return None
    for image in _iso_dfs(g, h, colors[0], colors[1], pins or {}):
        return VertexMap(g.n, image)
    return None


def automorphisms(g: Graph, generators_only: bool = False) -> list[VertexMap]:
    """All automorphisms (identity included) for n <= 12; generators beyond.

    Full enumeration refuses graphs whose group would not fit in memory; pass
    generators_only=True to get a generating set from the canonical search
    instead.
    """
    if generators_only:
        return [VertexMap(g.n, sigma) for sigma in automorphism_generators(g)]
    if g.n > AUT_ENUM_MAX_N:
        raise ResourceCapError(
            f"automorphism enumeration capped at n={AUT_ENUM_MAX_N}; "
            "use generators_only=True",
            required=g.n,
            cap=AUT_ENUM_MAX_N,
        )
    if g.n == 0:
        return [VertexMap(0, ())]
    colors = _joint_stable_colors(g, g)
    assert colors is not None
    out = []
    for image in _iso_dfs(g, g, colors[0], colors[1], {}):
        out.append(VertexMap(g.n, image))
        if len(out) > AUT_ENUM_COUNT_CAP:
            raise ResourceCapError(
                "automorphism group larger than the enumeration cap",
                required=len(out),
                cap=AUT_ENUM_COUNT_CAP,
            )
    return out


def automorphism_generators(g: Graph) -> list[tuple[int, ...]]:
    """Non-identity automorphisms discovered by the canonical search."""
    key = g.adjacency_bytes()
    with _cert_lock:
        autos = _cert_autos.get(key)
    if autos is None:
        canonical_form(g)
        with _cert_lock:
            autos = _cert_autos.get(key, [])
    return list(autos)


def find_nontrivial_automorphism(g: Graph) -> Optional[VertexMap]:
    """Some non-identity automorphism, or None if the graph is asymmetric.

    A discrete refinement partition certifies asymmetry without any search.
    """
    if g.n <= 1:
        return None
    cells = _refine(g.rows, [list(range(g.n))])
    if all(len(c) == 1 for c in cells):
        return None
    colors = _joint_stable_colors(g, g)
    assert colors is not None
    identity = tuple(range(g.n))
    for image in _iso_dfs_prefer_moves(g, colors[0]):
        if image != identity:
            return VertexMap(g.n, image)
    return None


def is_asymmetric(g: Graph) -> bool:
    """True iff the only automorphism is the identity."""
    return find_nontrivial_automorphism(g) is None


def _iso_dfs_prefer_moves(g: Graph, colors: list[int]) -> Iterator[tuple[int, ...]]:
    """Automorphism DFS trying non-fixed images first, to short-circuit symmetry."""
    n = g.n
    cand = {v: sorted(w for w in range(n) if colors[w] == colors[v]) for v in range(n)}
    order = sorted(range(n), key=lambda v: (len(cand[v]), v))
    image = [-1] * n
    used = [False] * n

    def extend(i: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(image)
            return
        v = order[i]
        rv = g.rows[v]
        moved_first = sorted(cand[v], key=lambda w: (w == v, w))
        for w in moved_first:
            if used[w]:
                continue
            rw = g.rows[w]
            ok = True
            for j in range(i):
                u = order[j]
                if ((rv >> u) & 1) != ((rw >> image[u]) & 1):
                    ok = False
                    break
            if ok:
                image[v] = w
                used[w] = True
                yield from extend(i + 1)
                used[w] = False
                image[v] = -1

    yield from extend(0)


def are_similar(g: Graph, x: int, y: int) -> bool:
    """True iff some automorphism maps x to y."""
    if not (0 <= x < g.n and 0 <= y < g.n):
        raise ValueError(f"vertex out of range: {x}, {y}")
    if x == y:
        return True
    return find_isomorphism(g, g, pins={x: y}) is not None


def is_fixed_set(g: Graph, subset: Sequence[int]) -> bool:
    """True iff every automorphism maps the subset onto itself setwise."""
    u = set(subset)
    if any(v < 0 or v >= g.n for v in u):
        raise ValueError(f"subset {sorted(u)} out of range for n={g.n}")
    try:
        maps = automorphisms(g)
        return all(set(m.image[v] for v in u) == u for m in maps)
    except ResourceCapError:
        gens = automorphism_generators(g)
        return all(set(sigma[v] for v in u) == u for sigma in gens)


def verify_map(g: Graph, h: Graph, image: Sequence[int]) -> bool:
    """Edge-exact check that the bijection is an isomorphism g -> h."""
    n = g.n
    if h.n != n or len(image) != n or len(set(image)) != n:
        return False
    for v in range(n):
        for w in range(v + 1, n):
            if ((g.rows[v] >> w) & 1) != ((h.rows[image[v]] >> image[w]) & 1):
                return False
    return True
