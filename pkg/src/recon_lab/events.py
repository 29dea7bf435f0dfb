"""Subgraph uniqueness/asymmetry events over graphs, collections, and balls.

For a graph on n+delta vertices, the event holds when every injection between
n-subsets that induces an isomorphism of induced subgraphs is the identity.
Equivalently: the C(n+delta, delta) subgraphs have pairwise distinct
certificates and each is asymmetric (the equivalence is exercised by tests
against an exhaustive injection oracle).

Deciding the event over every subgraph of a large random graph is the hot
path of the Monte Carlo harness, so graphs with >= 16 vertices go through a
vectorized multi-subgraph color-refinement engine; anything it cannot settle
(non-discrete partitions, invariant collisions) escalates to the exact
canonical-form machinery. Both roads produce identical verdicts.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph_core import (
    BALL_CAP,
    EditSet,
    Graph,
    ResourceCapError,
    induced_subgraph,
    pair_count,
    pair_index,
    _with_pair_assignments,
)
from .isomorphism import (
    canonical_form,
    find_isomorphism,
    find_nontrivial_automorphism,
)
from .sampling import EdgeProbabilities

MAX_DELTA = 4
_BULK_MIN_NV = 16
_LEX_SCAN_CAP = 20_000_000
EXACT_ORACLE_MAX_PAIRS = 18
_EXACT_T_CAP = 500_000

_MASK46 = np.uint64((1 << 46) - 1)
_PRIME1 = np.uint64(0x9E3779B97F4A7C15)
_PRIME2 = np.uint64(0xBF58476D1CE4E5B9)
_ROUND_C = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class EventWitness:
    """A violating injection: W -> V inducing an isomorphism yet moving a vertex.

    graph_id identifies which member of an examined collection (or ball, in
    Gray-code order) was violated; it is 0 for single-graph checks.
    """

    W: tuple[int, ...]
    image: tuple[int, ...]
    graph_id: int = 0

    def moves_vertex(self) -> bool:
        return any(w != im for w, im in zip(self.W, self.image))

    def verify(self, g: Graph) -> bool:
        """Re-check the defining property against the graph it indicts."""
        if len(set(self.image)) != len(self.image) or not self.moves_vertex():
            return False
        if any(v < 0 or v >= g.n for v in self.W + self.image):
            return False
        for i in range(len(self.W)):
            for j in range(i + 1, len(self.W)):
                lhs = g.has_edge(self.W[i], self.W[j])
                rhs = g.has_edge(self.image[i], self.image[j])
                if lhs != rhs:
                    return False
        return True

    def to_dict(self) -> dict:
        return {"W": list(self.W), "image": list(self.image), "graph_id": self.graph_id}


class EventResult:
    """Outcome of an event query: truthy iff the event holds."""

    __slots__ = ("holds", "witness")

    def __init__(self, holds: bool, witness: Optional[EventWitness] = None):
        if not holds and witness is None:
            raise ValueError("violated result requires a witness")
        self.holds = holds
        self.witness = witness

    def __bool__(self) -> bool:
        return self.holds

    def __repr__(self) -> str:
        return "EventResult(holds)" if self.holds else f"EventResult(violated, {self.witness})"


_asym_cache: dict[bytes, bool] = {}
_asym_lock = threading.Lock()


def _cached_is_asymmetric(sub: Graph) -> bool:
    key = sub.adjacency_bytes()
    with _asym_lock:
        hit = _asym_cache.get(key)
    if hit is not None:
        return hit
    res = find_nontrivial_automorphism(sub) is None
    with _asym_lock:
        _asym_cache[key] = res
    return res


def _validate_delta(g: Graph, delta: int) -> int:
    if delta < 0 or delta > MAX_DELTA:
        raise ValueError(f"delta must lie in [0, {MAX_DELTA}], got {delta}")
    n = g.n - delta
    if n < 1:
        raise ValueError(f"graph on {g.n} vertices is too small for delta={delta}")
    return n


def _dup_witness(g: Graph, w1: Sequence[int], w2: Sequence[int], gid: int) -> EventWitness:
    sub1 = induced_subgraph(g, w1)
    sub2 = induced_subgraph(g, w2)
    m = find_isomorphism(sub1, sub2)
    if m is None:  # certificates matched, so this cannot happen
        raise AssertionError("certificate collision without isomorphism")
    image = tuple(w2[m.image[i]] for i in range(len(w1)))
    wit = EventWitness(tuple(w1), image, gid)
    assert wit.verify(g)
    return wit


def _sym_witness(g: Graph, w: Sequence[int], gid: int) -> EventWitness:
    sub = induced_subgraph(g, w)
    sigma = find_nontrivial_automorphism(sub)
    if sigma is None:
        raise AssertionError("symmetric subgraph lost its automorphism")
    image = tuple(w[sigma.image[i]] for i in range(len(w)))
    wit = EventWitness(tuple(w), image, gid)
    assert wit.verify(g)
    return wit


# -- exhaustive lexicographic scan (ordered-witness mode) ----------------------


def _scan_lex(g: Graph, delta: int, gid: int) -> EventResult:
    """Quantify over all injections in lexicographic (W, image) order."""
    n = _validate_delta(g, delta)
    nv = g.n
    work = math.comb(nv, n) * math.perm(nv, n)
    if work > _LEX_SCAN_CAP:
        raise ResourceCapError(
            "ordered-witness scan is capped to small instances",
            required=work,
            cap=_LEX_SCAN_CAP,
        )
    for w_set in combinations(range(nv), n):
        for image in permutations(range(nv), n):
            if image == w_set:
                continue
            ok = True
            for i in range(n):
                ri = g.rows[w_set[i]]
                qi = g.rows[image[i]]
                for j in range(i + 1, n):
                    if ((ri >> w_set[j]) & 1) != ((qi >> image[j]) & 1):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                wit = EventWitness(w_set, image, gid)
                assert wit.verify(g)
                return EventResult(False, wit)
    return EventResult(True)


# -- certificate path ----------------------------------------------------------


def _check_plain(g: Graph, delta: int, gid: int) -> EventResult:
    n = g.n - delta
    seen: dict = {}
    for w_set in combinations(range(g.n), n):
        sub = induced_subgraph(g, w_set)
        cert = canonical_form(sub)
        prev = seen.get(cert)
        if prev is not None:
            return EventResult(False, _dup_witness(g, prev, w_set, gid))
        seen[cert] = w_set
        if not _cached_is_asymmetric(sub):
            return EventResult(False, _sym_witness(g, w_set, gid))
    return EventResult(True)


# -- vectorized multi-subgraph refinement engine -------------------------------


def _mix(x: np.ndarray) -> np.ndarray:
    y = x ^ (x >> np.uint64(31))
    y = y * _PRIME1
    y = y ^ (y >> np.uint64(33))
    return y & _MASK46


def _mix2(x: np.ndarray) -> np.ndarray:
    y = x ^ (x >> np.uint64(29))
    y = y * _PRIME2
    return y ^ (y >> np.uint64(32))


def _bulk_refine(g: Graph, removed_sets: list[tuple[int, ...]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run color refinement on every induced subgraph simultaneously.

    Returns (discrete flags, class counts, multiset hashes), one entry per
    removed set. Hashes are isomorphism-invariant, so distinct hashes prove
    distinct isomorphism classes; equal hashes are settled exactly by callers.
    """
    nv = g.n
    k = len(removed_sets)
    adj = g.to_adjacency().astype(np.float64)
    present = np.ones((k, nv), dtype=bool)
    for i, rem in enumerate(removed_sets):
        for v in rem:
            present[i, v] = False
    n = int(present[0].sum())
    colors = np.ones((k, nv), dtype=np.uint64)
    counts = np.ones(k, dtype=np.int64)
    active = np.ones(k, dtype=bool)
    sentinel = np.uint64(0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for _ in range(nv + 2):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            sub = colors[idx]
            hashed = _mix(sub)
            gm = hashed.astype(np.float64) * present[idx]
            sums = gm @ adj  # exact: summands < 2^46, n < 2^7
            sub = sub * _PRIME1 + sums.astype(np.uint64) + _ROUND_C
            colors[idx] = sub
            vals = np.where(present[idx], sub, sentinel)
            vals.sort(axis=1)
            head = vals[:, :n]
            newcounts = 1 + np.count_nonzero(np.diff(head, axis=1), axis=1)
            stalled = newcounts <= counts[idx]
            discrete = newcounts >= n
            counts[idx] = newcounts
            active[idx[stalled | discrete]] = False
        hashes = np.where(present, _mix2(colors), np.uint64(0)).sum(axis=1, dtype=np.uint64)
    return counts >= n, counts, hashes


def _check_bulk(g: Graph, delta: int, gid: int) -> EventResult:
    nv = g.n
    removed_sets = list(combinations(range(nv), delta))
    all_vertices = set(range(nv))
    discrete, counts, hashes = _bulk_refine(g, removed_sets)

    def w_of(i: int) -> tuple[int, ...]:
        return tuple(sorted(all_vertices - set(removed_sets[i])))

    # symmetric subgraphs: only non-discrete rows can hide an automorphism
    for i in np.flatnonzero(~discrete):
        w_set = w_of(int(i))
        if not _cached_is_asymmetric(induced_subgraph(g, w_set)):
            return EventResult(False, _sym_witness(g, w_set, gid))
    # duplicate classes: equal invariant signature forces an exact comparison
    groups: dict[tuple[int, int], list[int]] = {}
    for i in range(len(removed_sets)):
        groups.setdefault((int(counts[i]), int(hashes[i])), []).append(i)
    for sig in sorted(groups):
        rows = groups[sig]
        if len(rows) < 2:
            continue
        by_cert: dict = {}
        for i in rows:
            w_set = w_of(i)
            cert = canonical_form(induced_subgraph(g, w_set))
            prev = by_cert.get(cert)
            if prev is not None:
                return EventResult(False, _dup_witness(g, prev, w_set, gid))
            by_cert[cert] = w_set
    return EventResult(True)


# -- public checks -------------------------------------------------------------


def check_event(g: Graph, delta: int, ordered_witness: bool = False, graph_id: int = 0) -> EventResult:
    """Decide the uniqueness/asymmetry event for a single graph."""
    _validate_delta(g, delta)
    if ordered_witness:
        return _scan_lex(g, delta, graph_id)
    if g.n >= _BULK_MIN_NV and delta >= 1:
        return _check_bulk(g, delta, graph_id)
    return _check_plain(g, delta, graph_id)


def check_event_collection(
    graphs: Iterable[Graph], delta: int, ordered_witness: bool = False
) -> EventResult:
    """Conjunction of the event over a stream; short-circuits at the first violation."""
    nv: Optional[int] = None
    count = 0
    for gid, g in enumerate(graphs):
        if nv is None:
            nv = g.n
            _validate_delta(g, delta)
        elif g.n != nv:
            raise ValueError(f"mixed vertex counts in collection: {nv} vs {g.n}")
        res = check_event(g, delta, ordered_witness=ordered_witness, graph_id=gid)
        if not res.holds:
            return res
        count += 1
    if count == 0:
        raise ValueError("empty collection")
    return EventResult(True)


def check_event_ball(
    g: Graph,
    edits: EditSet,
    delta: int,
    ordered_witness: bool = False,
    cap: int = BALL_CAP,
) -> EventResult:
    """The event over every member of the perturbation ball B_S(G).

    Members are visited in Gray-code order. At small scale the certificates of
    subgraphs untouched by a toggle are carried over between members; large
    graphs instead run the vectorized engine per member.
    """
    n = _validate_delta(g, delta)
    if edits.n != g.n:
        raise ValueError("edit set and graph have different vertex counts")
    pairs = edits.distinct_pairs()
    k = len(pairs)
    if 1 << k > cap:
        raise ResourceCapError(
            f"ball of size 2^{k} exceeds cap {cap}; certify a sample instead",
            required=1 << k,
            cap=cap,
        )
    if g.n >= _BULK_MIN_NV or ordered_witness:
        member_rows = list(g.rows)
        for p in pairs:
            member_rows[p.u] &= ~(1 << p.v)
            member_rows[p.v] &= ~(1 << p.u)
        prev_gray = 0
        for mid in range(1 << k):
            if mid:
                gray = mid ^ (mid >> 1)
                j = (gray ^ prev_gray).bit_length() - 1
                p = pairs[j]
                member_rows[p.u] ^= 1 << p.v
                member_rows[p.v] ^= 1 << p.u
                prev_gray = gray
            member = Graph._unsafe(g.n, list(member_rows))
            res = check_event(member, delta, ordered_witness=ordered_witness, graph_id=mid)
            if not res.holds:
                return res
        return EventResult(True)
    return _ball_incremental(g, pairs, delta)


def _ball_incremental(g: Graph, pairs: Sequence, delta: int) -> EventResult:
    """Gray-code walk keeping per-subgraph certificates; recheck only touched ones."""
    n = g.n - delta
    nv = g.n
    subsets = list(combinations(range(nv), n))
    touched: list[list[int]] = []
    for p in pairs:
        touched.append([i for i, w in enumerate(subsets) if p.u in w and p.v in w])

    member = _with_pair_assignments(g, pairs, 0)
    certs = []
    asyms = []
    for w_set in subsets:
        sub = induced_subgraph(member, w_set)
        certs.append(canonical_form(sub))
        asyms.append(_cached_is_asymmetric(sub))
    cnt: dict = {}
    for c in certs:
        cnt[c] = cnt.get(c, 0) + 1
    dup_certs = sum(1 for v in cnt.values() if v >= 2)
    sym_rows = asyms.count(False)

    def locate(mid: int) -> EventResult:
        if sym_rows:
            i = asyms.index(False)
            return EventResult(False, _sym_witness(member, subsets[i], mid))
        first: dict = {}
        for i, c in enumerate(certs):
            if cnt[c] >= 2:
                if c in first:
                    return EventResult(
                        False, _dup_witness(member, subsets[first[c]], subsets[i], mid)
                    )
                first[c] = i
        raise AssertionError("violation counters out of sync")

    if dup_certs or sym_rows:
        return locate(0)
    prev_gray = 0
    k = len(pairs)
    for mid in range(1, 1 << k):
        gray = mid ^ (mid >> 1)
        j = (gray ^ prev_gray).bit_length() - 1
        prev_gray = gray
        p = pairs[j]
        rows = list(member.rows)
        rows[p.u] ^= 1 << p.v
        rows[p.v] ^= 1 << p.u
        member = Graph._unsafe(nv, rows)
        for i in touched[j]:
            old = certs[i]
            cnt[old] -= 1
            if cnt[old] == 1:
                dup_certs -= 1
            sub = induced_subgraph(member, subsets[i])
            new = canonical_form(sub)
            certs[i] = new
            cnt[new] = cnt.get(new, 0) + 1
            if cnt[new] == 2:
                dup_certs += 1
            was = asyms[i]
            asyms[i] = _cached_is_asymmetric(sub)
            if was != asyms[i]:
                sym_rows += 1 if not asyms[i] else -1
        if dup_certs or sym_rows:
            return locate(mid)
    return EventResult(True)


def check_event_radius(g: Graph, r: int, delta: int, cap: int = BALL_CAP) -> EventResult:
    """The event over every graph within edge-set Hamming distance r."""
    from .graph_core import enumerate_radius_ball

    return check_event_collection(enumerate_radius_ball(g, r, cap=cap), delta)


# -- exact failure probability (tiny instances) --------------------------------


def _small_universe_tables(nv: int, delta: int) -> tuple[np.ndarray, np.ndarray]:
    """fails[mask] plus Bernoulli-ready bit table for all graphs on nv vertices."""
    n = nv - delta
    m = pair_count(nv)
    masks = np.arange(1 << m, dtype=np.int64)
    subsets = list(combinations(range(nv), n))
    sub_npairs = pair_count(n)
    # interned certificate ids and asymmetry flags for every graph on n vertices
    cert_ids = np.empty(1 << sub_npairs, dtype=np.int32)
    asym = np.empty(1 << sub_npairs, dtype=bool)
    interned: dict = {}
    for sm in range(1 << sub_npairs):
        sub = Graph.from_edge_mask(n, sm)
        cert = canonical_form(sub)
        cert_ids[sm] = interned.setdefault(cert, len(interned))
        asym[sm] = _cached_is_asymmetric(sub)
    ids = np.empty((1 << m, len(subsets)), dtype=np.int32)
    any_sym = np.zeros(1 << m, dtype=bool)
    for col, w_set in enumerate(subsets):
        positions = []
        for j in range(n):
            for i in range(j):
                positions.append(pair_index(w_set[i], w_set[j]))
        sub_masks = np.zeros(1 << m, dtype=np.int64)
        for bit, pos in enumerate(positions):
            sub_masks |= ((masks >> pos) & 1) << bit
        ids[:, col] = cert_ids[sub_masks]
        any_sym |= ~asym[sub_masks]
    ids.sort(axis=1)
    dup = (np.diff(ids, axis=1) == 0).any(axis=1) if len(subsets) > 1 else np.zeros(1 << m, bool)
    fails = dup | any_sym
    return fails, masks


def _surjection_count(eps: int, t: int) -> int:
    return sum((-1) ** j * math.comb(t, j) * (t - j) ** eps for j in range(t + 1))


def exact_event_failure_probability(
    n: int, delta: int, p: EdgeProbabilities, eps: int = 0, mode: str = "none"
) -> float:
    """Exact Pr[the event fails] under the product-Bernoulli law, averaged over S.

    Ground-truth oracle for the harness: enumerates every labeled graph on
    n+delta vertices (weighted by p) and every distinct-support class of the
    edit distribution. Only feasible when C(n+delta, 2) <= 18.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if delta < 0 or delta > MAX_DELTA:
        raise ValueError(f"delta must lie in [0, {MAX_DELTA}]")
    nv = n + delta
    m = pair_count(nv)
    if m > EXACT_ORACLE_MAX_PAIRS:
        raise ResourceCapError(
            f"exact oracle needs C(n+delta,2) <= {EXACT_ORACLE_MAX_PAIRS}, got {m}",
            required=m,
            cap=EXACT_ORACLE_MAX_PAIRS,
        )
    if p.n != nv:
        raise ValueError(f"edge probabilities are for n={p.n}, expected {nv}")
    if mode not in ("none", "tuple", "subset"):
        raise ValueError(f"unknown edit mode {mode!r}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")

    fails, masks = _small_universe_tables(nv, delta)
    weights = np.ones(1 << m, dtype=np.float64)
    for i in range(m):
        bit = ((masks >> i) & 1).astype(bool)
        weights *= np.where(bit, p.values[i], 1.0 - p.values[i])

    if mode == "none" or eps == 0:
        return min(max(float(weights[fails].sum()), 0.0), 1.0)

    if mode == "subset" and eps > m:
        raise ValueError(f"subset mode needs eps <= {m}")
    t_range = range(1, min(eps, m) + 1) if mode == "tuple" else [eps]
    n_support = sum(math.comb(m, t) for t in t_range)
    if n_support > _EXACT_T_CAP:
        raise ResourceCapError(
            "edit-distribution support too large to enumerate",
            required=n_support,
            cap=_EXACT_T_CAP,
        )

    total = 0.0
    weight_sum = 0.0
    idx = masks
    for t in t_range:
        if mode == "tuple":
            w_t = _surjection_count(eps, t) / float(m) ** eps
        else:
            w_t = 1.0 / math.comb(m, eps)
        if w_t == 0.0:
            continue
        for combo in combinations(range(m), t):
            f = fails
            for b in combo:
                bit = 1 << b
                f = f[idx & ~bit] | f[idx | bit]
            total += w_t * float(weights[f].sum())
            weight_sum += w_t
    if mode == "tuple":
        # distinct-support classes of the tuple law sum to 1 exactly
        assert abs(weight_sum - 1.0) < 1e-9, weight_sum
    return min(max(total, 0.0), 1.0)
