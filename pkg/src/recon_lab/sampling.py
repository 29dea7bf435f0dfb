"""Seeded sampling of product-Bernoulli graphs and edit sets.

All randomness flows through Philox, a counter-based generator keyed by
(master_seed, stream_id). Each Monte Carlo trial gets its own stream, so
results cannot depend on scheduling or worker count.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from typing import Union

import numpy as np

from .graph_core import Graph, EditSet, VertexPair, pair_count, pair_of_index

_EPROBS_MAGIC = b"RLEPRB01"

RandomSource = Union["SeedSpec", np.random.Generator]


def _as_generator(source: RandomSource) -> np.random.Generator:
    if isinstance(source, np.random.Generator):
        return source
    return source.generator()


@dataclass(frozen=True)
class SeedSpec:
    """Pure function (master_seed, stream_id) -> generator state."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, offset: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, (self.stream_id + offset) & 0xFFFFFFFFFFFFFFFF)

    def __str__(self) -> str:
        return f"{self.master_seed}:{self.stream_id}"


@dataclass(frozen=True)
class EdgeProbabilities:
    """Per-pair inclusion probabilities, indexed by the colex pair bijection."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (pair_count(self.n),):
            raise ValueError(
                f"expected {pair_count(self.n)} probabilities for n={self.n}, got {vals.shape}"
            )
        if np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ValueError("edge probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)

    @classmethod
    def constant(cls, n: int, p: float) -> "EdgeProbabilities":
        return cls(n, np.full(pair_count(n), float(p)))

    def to_binary(self) -> bytes:
        head = _EPROBS_MAGIC + struct.pack("<Q", self.n)
        return head + self.values.astype("<f8").tobytes()

    @classmethod
    def from_binary(cls, blob: bytes) -> "EdgeProbabilities":
        if blob[:8] != _EPROBS_MAGIC:
            raise ValueError("bad magic in edge-probability blob")
        (n,) = struct.unpack("<Q", blob[8:16])
        vals = np.frombuffer(blob[16:], dtype="<f8")
        return cls(int(n), vals.copy())

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "EdgeProbabilities":
        obj = json.loads(text)
        return cls(int(obj["n"]), np.asarray(obj["values"], dtype=np.float64))


def uniform_box_probabilities(
    n: int,
    beta: float,
    alpha: float,
    fill: str = "constant",
    seed: RandomSource | None = None,
) -> EdgeProbabilities:
    """Probabilities confined to the box [alpha*beta, 1 - alpha*beta].

    Constant fill pins every entry at the left endpoint alpha*beta (the
    extreme admissible probability); random fill draws each entry
    independently uniform in the box, exercising non-uniformity.
    """
    lo = alpha * beta
    if lo > 0.5:
        raise ValueError(f"empty box: alpha*beta = {lo} > 1/2")
    if lo < 0.0:
        raise ValueError("alpha*beta must be nonnegative")
    hi = 1.0 - lo
    npairs = pair_count(n)
    if fill == "constant":
        vals = np.full(npairs, lo)
    elif fill in ("uniform", "uniform-random-in-box"):
        if seed is None:
            raise ValueError("random fill requires a SeedSpec")
        rng = _as_generator(seed)
        vals = lo + (hi - lo) * rng.random(npairs)
    else:
        raise ValueError(f"unknown fill mode {fill!r}")
    return EdgeProbabilities(n, vals)


def sample_graph(p: EdgeProbabilities, seed: RandomSource) -> Graph:
    """One draw from the product-Bernoulli graph distribution."""
    rng = _as_generator(seed)
    draws = rng.random(pair_count(p.n)) < p.values
    rows = [0] * p.n
    for k in np.flatnonzero(draws):
        u, v = pair_of_index(int(k))
        rows[u] |= 1 << v
        rows[v] |= 1 << u
    return Graph._unsafe(p.n, rows)


def sample_edit_tuple(n: int, eps: int, seed: RandomSource) -> EditSet:
    """eps independent uniform pair draws with replacement (tuple mode)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    rng = _as_generator(seed)
    idx = rng.integers(0, pair_count(n), size=eps) if eps else np.empty(0, dtype=np.int64)
    pairs = tuple(VertexPair(*pair_of_index(int(k))) for k in idx)
    return EditSet(n, pairs, "tuple")


def sample_edit_subset(n: int, eps: int, seed: RandomSource) -> EditSet:
    """Uniformly random eps-element subset of the pair universe (subset mode)."""
    npairs = pair_count(n)
    if not 0 <= eps <= npairs:
        raise ValueError(f"eps must lie in [0, {npairs}], got {eps}")
    rng = _as_generator(seed)
    # partial Fisher-Yates over pair indices
    arr = np.arange(npairs)
    for i in range(eps):
        j = i + int(rng.integers(0, npairs - i))
        arr[i], arr[j] = arr[j], arr[i]
    chosen = sorted(int(k) for k in arr[:eps])
    pairs = tuple(VertexPair(*pair_of_index(k)) for k in chosen)
    return EditSet(n, pairs, "subset")


def expected_distinct(npairs: int, eps: int) -> float:
    """E|set(S)| for S a tuple of eps uniform draws from npairs symbols."""
    if eps == 0:
        return 0.0
    return float(npairs * -math.expm1(eps * math.log1p(-1.0 / npairs)))
