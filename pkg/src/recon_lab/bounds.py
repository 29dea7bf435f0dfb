"""Closed-form calculators behind the tail bounds.

Everything the asymptotic proofs evaluate numerically lives here: the
two-point mixing bound f, the subset-containment lower bound, orbit statistics
of injections on vertex pairs, the census of injections by moved-vertex count,
the three union-bound terms in both the vanishing- and constant-probability
regimes, and the with/without-replacement transfer (eps', Paley-Zygmund floor).

All sums run in log space with binomials via lgamma; "sufficiently large n"
statements are made concrete by threshold scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .graph_core import pair_count


def f_bound(x: float, y: float, c0: float) -> float:
    """xy + (1-x)(1-y) + (x(1-y) + (1-x)y) * c0, the per-orbit-pair factor."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"x, y must lie in [0,1], got {x}, {y}")
    if not (0.0 < c0 <= 1.0):
        raise ValueError(f"c0 must lie in (0,1], got {c0}")
    return x * y + (1.0 - x) * (1.0 - y) + (x * (1.0 - y) + (1.0 - x) * y) * c0


def subset_containment_bound(n: int, m: int, k: int) -> tuple[float, float]:
    """(exact, lower): Pr[T in S] for fixed |T|=k under a uniform m-subset of n.

    exact = C(n-k, m-k) / C(n, m); lower = ((m-k)/n)^k; exact >= lower always.
    """
    if not 0 <= k <= m <= n:
        raise ValueError(f"need 0 <= k <= m <= n, got k={k}, m={m}, n={n}")
    if n == 0:
        return 1.0, 1.0
    exact = math.comb(n - k, m - k) / math.comb(n, m)
    lower = ((m - k) / n) ** k
    return exact, lower


@dataclass(frozen=True)
class OrbitStats:
    """Orbit partition of W^(2) united with phi(W)^(2) under e -> phi(e)."""

    moved: int  # number of vertices of W moved by phi
    orbit_counts: dict[int, int]  # orbit length -> count (M_i)
    total_pairs: int  # sum of i * M_i = |W^(2) u phi(W)^(2)|

    def long_orbit_pair_sum(self) -> int:
        """Sum of i * M_i over orbits of length >= 2."""
        return sum(i * c for i, c in self.orbit_counts.items() if i >= 2)


def orbit_stats(w_set: Sequence[int], image: Sequence[int]) -> OrbitStats:
    """Chase pair orbits of an injection phi: W -> V while phi stays defined."""
    w_list = list(w_set)
    if len(set(image)) != len(image):
        raise ValueError("phi must be injective")
    if len(w_list) != len(image):
        raise ValueError("image length must match |W|")
    phi = dict(zip(w_list, image))
    wset = set(w_list)
    iset = set(image)
    moved = sum(1 for w in w_list if phi[w] != w)

    def pairs_of(vertices: set[int]) -> set[frozenset]:
        vs = sorted(vertices)
        return {
            frozenset((vs[i], vs[j]))
            for i in range(len(vs))
            for j in range(i + 1, len(vs))
        }

    universe = pairs_of(wset) | pairs_of(iset)

    def step(e: frozenset) -> Optional[frozenset]:
        a, b = tuple(e)
        if a in phi and b in phi:
            nxt = frozenset((phi[a], phi[b]))
            return nxt if nxt != e else None  # fixed pair: orbit of length 1
        return None

    # predecessor map for walking chains back to their source
    pred: dict[frozenset, frozenset] = {}
    for e in universe:
        nxt = step(e)
        if nxt is not None:
            pred[nxt] = e

    visited: set[frozenset] = set()
    counts: dict[int, int] = {}
    for start in universe:
        if start in visited:
            continue
        # rewind to the chain head (or detect a cycle)
        head = start
        seen_back = {head}
        while head in pred:
            prv = pred[head]
            if prv in seen_back:
                break  # cycle
            head = prv
            seen_back.add(head)
        orbit = [head]
        seen_fwd = {head}
        cur = head
        while True:
            nxt = step(cur)
            if nxt is None or nxt in seen_fwd:
                break
            orbit.append(nxt)
            seen_fwd.add(nxt)
            cur = nxt
        for e in orbit:
            visited.add(e)
        counts[len(orbit)] = counts.get(len(orbit), 0) + 1
    total = sum(i * c for i, c in counts.items())
    assert total == len(universe)
    return OrbitStats(moved=moved, orbit_counts=counts, total_pairs=total)


@dataclass(frozen=True)
class InjectionCensus:
    """Exact count of injections moving exactly m vertices, with the 2 n^m m^delta cap."""

    exact: int
    bound: float
    min_valid_n: Optional[int]  # smallest n' <= n with exact <= bound on [n', n]


def injection_census(n: int, m: int, delta: int) -> InjectionCensus:
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")

    def exact_at(nn: int) -> int:
        # choose the moved set, then inject it into the m+delta free targets
        # with no fixed points (inclusion-exclusion over forced fixed points)
        derange = sum(
            (-1) ** j * math.comb(m, j) * math.perm(m + delta - j, m - j)
            for j in range(m + 1)
        )
        return math.comb(nn, m) * derange

    def bound_at(nn: int) -> float:
        return 2.0 * nn**m * (m**delta if m > 0 else (1 if delta == 0 else 0))

    exact = exact_at(n)
    bound = bound_at(n)
    min_valid: Optional[int] = None
    for start in range(m, n + 1):
        if all(exact_at(t) <= bound_at(t) for t in range(start, n + 1)):
            min_valid = start
            break
    return InjectionCensus(exact=exact, bound=bound, min_valid_n=min_valid)


@dataclass(frozen=True)
class BoundParams:
    """Free constants of the union-bound evaluation.

    c is the edit-density ratio (eps <= c * C(n,2)); c0 must exceed
    1 - e^(-2c); c1 defaults to the midpoint of its admissible interval
    (0, 2 - 2*c0) in the vanishing regime and is derived from beta and c0 in
    the constant regime; gamma = (1 + 1/c) / 2 drives the with/without
    replacement transfer.
    """

    n: int
    delta: int
    alpha: float
    rho: float
    beta: float
    c: float = 0.5
    c0: Optional[float] = None
    c1: Optional[float] = None
    c2: float = 0.5
    eps: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0,1), got {self.c}")
        if not 0.0 < self.c2 < 1.0:
            raise ValueError(f"c2 must lie in (0,1), got {self.c2}")
        if self.c0 is not None:
            lo = 1.0 - math.exp(-2.0 * self.c)
            if not lo < self.c0 < 1.0:
                raise ValueError(f"c0 must lie in ({lo:.6f}, 1), got {self.c0}")
        if not 0.0 < self.beta <= 0.5:
            raise ValueError(f"beta must lie in (0, 1/2], got {self.beta}")
        if self.alpha * self.beta > 0.5:
            raise ValueError(f"empty box: alpha*beta = {self.alpha * self.beta} > 1/2")

    @property
    def gamma(self) -> float:
        return (1.0 + 1.0 / self.c) / 2.0

    def resolved_c0(self) -> float:
        if self.c0 is not None:
            return self.c0
        lo = 1.0 - math.exp(-2.0 * self.c)
        return (lo + 1.0) / 2.0

    def resolved_c1(self, regime: str) -> float:
        c0 = self.resolved_c0()
        if regime == "vanishing-beta":
            if self.c1 is not None:
                if not 0.0 < self.c1 < 2.0 - 2.0 * c0:
                    raise ValueError(
                        f"c1 must lie in (0, {2.0 - 2.0 * c0:.6f}), got {self.c1}"
                    )
                return self.c1
            return (2.0 - 2.0 * c0) / 2.0
        # constant regime: c1 is pinned by beta and c0
        b = self.beta
        val = b * b + (1.0 - b) ** 2 + 2.0 * b * (1.0 - b) * c0
        return -math.log(val)


@dataclass(frozen=True)
class UnionBoundTerms:
    term1: float
    term2: float
    term3: float
    total: float
    target: float  # exp(-rho * beta * n) (vanishing) or exp(-rho * n) (constant)
    rates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "term1": self.term1,
            "term2": self.term2,
            "term3": self.term3,
            "total": self.total,
            "target": self.target,
            **{f"rate_{k}": v for k, v in self.rates.items()},
        }


def _logsumexp(values: list[float]) -> float:
    if not values:
        return -math.inf
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(sum(math.exp(v - top) for v in values))


def _safe_exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def union_bound_failure(params: BoundParams, regime: str = "vanishing-beta") -> UnionBoundTerms:
    """Evaluate the three union-bound summations exactly (in log space).

    regime "vanishing-beta": terms carry the box scale alpha*beta(n);
    regime "constant-beta": alpha is absent and c1 derives from beta and c0.
    """
    if regime not in ("vanishing-beta", "constant-beta"):
        raise ValueError(f"unknown regime {regime!r}")
    n, d = params.n, params.delta
    if n < 4:
        raise ValueError("n too small for the union bound shape")
    c1 = params.resolved_c1(regime)
    c2 = params.c2
    if regime == "vanishing-beta":
        scale = c1 * c2 * params.alpha * params.beta * n
        target = math.exp(-params.rho * params.beta * n)
    else:
        scale = c1 * c2 * n
        target = math.exp(-params.rho * n)
    ln = math.log(n)
    sqrt_n = math.isqrt(n)
    log_t1 = math.log(4.0) + (d + 1) * ln - scale / 2.0
    log_t2 = _logsumexp(
        [
            math.log(4.0) + d * ln + m * ln + d * math.log(m) - (scale / 4.0) * m
            for m in range(2, sqrt_n + 1)
        ]
    )
    log_t3 = _logsumexp(
        [
            math.log(4.0) + d * ln + m * ln + d * math.log(m) - (scale / 8.0) * m
            for m in range(sqrt_n, n + 1)
        ]
    )
    t1, t2, t3 = _safe_exp(log_t1), _safe_exp(log_t2), _safe_exp(log_t3)
    return UnionBoundTerms(
        term1=t1,
        term2=t2,
        term3=t3,
        total=t1 + t2 + t3,
        target=target,
        rates={"c1": c1, "c2": c2, "scale": scale},
    )


def minimal_alpha(c1: float, c2: float, delta: int, rho_prime: float) -> float:
    """The proof's alpha: the largest of its three displayed lower bounds."""
    a1 = (2.0 / (c1 * c2)) * (rho_prime + delta + 1)
    a2 = (4.0 / (c1 * c2)) * (5.0 / 4.0 + 3.0 * delta / 4.0 + rho_prime / 2.0)
    a3 = (8.0 / (c1 * c2)) * (3.0 / 2.0 + delta + rho_prime / 2.0)
    return max(a1, a2, a3)


def union_bound_threshold_n(
    delta: int,
    rho: float,
    rho_prime: float,
    beta_fn: Callable[[int], float],
    c: float = 0.5,
    c0: Optional[float] = None,
    c2: float = 0.5,
    n_max: int = 100_000,
) -> Optional[int]:
    """Smallest n with total <= 3*exp(-rho' beta(n) n) under the proof's alpha.

    The proof's minimal alpha is large, so for beta = log(n)/n the box
    constraint alpha*beta <= 1/2 is what delays feasibility; the inequality is
    confirmed at the threshold and on a log-spaced sample up to n_max.
    """
    probe = BoundParams(n=10, delta=delta, alpha=1.0, rho=rho, beta=0.25, c=c, c0=c0, c2=c2)
    c1 = probe.resolved_c1("vanishing-beta")
    alpha = minimal_alpha(c1, probe.c2, delta, rho_prime)

    def feasible(n: int) -> bool:
        beta = beta_fn(n)
        return 0.0 < beta <= 0.5 and alpha * beta <= 0.5

    def holds(n: int) -> bool:
        beta = beta_fn(n)
        params = BoundParams(
            n=n, delta=delta, alpha=alpha, rho=rho, beta=beta, c=c, c0=c0, c2=c2
        )
        terms = union_bound_failure(params, "vanishing-beta")
        return terms.total <= 3.0 * math.exp(-rho_prime * beta * n)

    n = 4
    while n <= n_max and not feasible(n):
        n += max(1, n // 256)
    while n > 4 and feasible(n - 1):
        n -= 1
    hit = None
    while n <= n_max:
        if feasible(n) and holds(n):
            hit = n
            break
        n += max(1, n // 256)
    if hit is None:
        return None
    # confirm on a log-spaced sample beyond the threshold
    probe_n = hit
    while probe_n <= n_max:
        if feasible(probe_n) and not holds(probe_n):
            return None
        probe_n = max(probe_n + 1, int(probe_n * 1.35))
    return hit


def eps_prime(n: int, eps: int, c: float) -> float:
    """Tuple length whose distinct count dominates a without-replacement eps.

    Returns N * log(1 / (1 - gamma*eps/N)) with gamma = (1 + 1/c)/2; defined
    because gamma*eps/N <= (c+1)/2 < 1.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0,1), got {c}")
    npairs = pair_count(n)
    if eps < 0 or eps > c * npairs:
        raise ValueError(f"eps must lie in [0, c*C(n,2)] = [0, {c * npairs}], got {eps}")
    if eps == 0:
        return 0.0
    gamma = (1.0 + 1.0 / c) / 2.0
    ratio = gamma * eps / npairs
    assert ratio <= (c + 1.0) / 2.0 < 1.0
    return npairs * math.log(1.0 / (1.0 - ratio))


def paley_zygmund_floor(c: float) -> float:
    """(1 - 1/gamma)^2 / 2: the constant-probability floor on Pr[Z >= eps]."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0,1), got {c}")
    gamma = (1.0 + 1.0 / c) / 2.0
    return (1.0 - 1.0 / gamma) ** 2 / 2.0


# -- negative association: exact small-instance calculators --------------------


def tuple_membership_probability(npairs: int, eps: int) -> float:
    """Pr[a fixed pair lands in S] for S an eps-tuple of uniform draws."""
    return -math.expm1(eps * math.log1p(-1.0 / npairs)) if eps else 0.0


def tuple_containment_joint(npairs: int, eps: int, k: int) -> float:
    """Exact Pr[all of k fixed distinct pairs appear in an eps-tuple draw]."""
    if k < 0 or k > npairs:
        raise ValueError("k out of range")
    return sum(
        (-1) ** j * math.comb(k, j) * (1.0 - j / npairs) ** eps for j in range(k + 1)
    )


def na_orbit_events_exact(
    nv: int,
    p: float,
    eps: int,
    pair_indices_a: Sequence[int],
    pair_indices_b: Sequence[int],
) -> tuple[float, list[float]]:
    """Exact (joint, marginals) for the matched-or-edited pair events.

    Event j: pairs a_j, b_j agree in the graph, or one of them lands in the
    eps-tuple edit draw. Graphs on nv vertices carry uniform edge probability
    p; all 2k pairs must be distinct.
    """
    k = len(pair_indices_a)
    if len(pair_indices_b) != k:
        raise ValueError("index lists must have equal length")
    allp = list(pair_indices_a) + list(pair_indices_b)
    if len(set(allp)) != 2 * k:
        raise ValueError("the 2k pairs must be pairwise distinct")
    m = pair_count(nv)
    if any(i < 0 or i >= m for i in allp):
        raise ValueError("pair index out of range")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0,1)")

    def match_prob_terms(mask: int, j: int) -> bool:
        a = (mask >> pair_indices_a[j]) & 1
        b = (mask >> pair_indices_b[j]) & 1
        return a == b

    joint = 0.0
    marginals = [0.0] * k
    for mask in range(1 << m):
        w = p ** bin(mask).count("1") * (1.0 - p) ** (m - bin(mask).count("1"))
        mism = [j for j in range(k) if not match_prob_terms(mask, j)]
        # Pr_S[every mismatched j has a_j or b_j in S], disjoint pairs:
        # inclusion-exclusion over subsets avoided by S entirely
        pr_all = sum(
            (-1) ** len(sub) * (1.0 - 2 * len(sub) / m) ** eps
            for sub in _subsets(mism)
        )
        joint += w * pr_all
        pr_one = 1.0 - (1.0 - 2.0 / m) ** eps
        for j in range(k):
            marginals[j] += w * (1.0 if j not in mism else pr_one)
    return joint, marginals


def _subsets(items: list[int]):
    n = len(items)
    for bits in range(1 << n):
        yield [items[i] for i in range(n) if (bits >> i) & 1]
