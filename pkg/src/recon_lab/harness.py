"""Seeded Monte Carlo experiments over the perturbation scenarios.

A declarative config (TOML or dict) names the scenario, the vertex counts,
the probability box, the edit budget, and the trial count. Each trial derives
its own counter-based random stream from (master_seed, stream id), so the
resulting CSV is a pure function of the config: worker count and scheduling
cannot change a byte. Per-trial wall time is therefore recorded as 0 unless
timing is explicitly enabled, which is documented to break byte-determinism.

CSV schema (frozen): scenario,n,delta,beta,alpha,eps,mode,trial,seed,outcome,
exactness,bound,wall_ms
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import beta as _beta_dist

from .graph_core import (
    EditSet,
    Graph,
    VertexPair,
    _with_pair_assignments,
    pair_count,
    radius_ball_size,
)
from .events import EventResult, check_event, check_event_ball, check_event_collection
from .graph_core import enumerate_radius_ball
from .sampling import (
    EdgeProbabilities,
    SeedSpec,
    sample_edit_subset,
    sample_edit_tuple,
    sample_graph,
    uniform_box_probabilities,
)

CSV_COLUMNS = (
    "scenario,n,delta,beta,alpha,eps,mode,trial,seed,outcome,exactness,bound,wall_ms"
)

SCENARIOS = (
    "event-random-S-tuple",
    "event-random-S-subset",
    "planted-P",
    "radius-ball",
    "planted-clique",
    "nonrecon-proxy",
)

_SCENARIO_MODE = {
    "event-random-S-tuple": "tuple",
    "event-random-S-subset": "subset",
    "planted-P": "planted",
    "planted-clique": "planted",
    "radius-ball": "radius",
    "nonrecon-proxy": "radius",
}


class ConfigError(ValueError):
    pass


_EVAL_NS = {
    "C": math.comb,
    "floor": math.floor,
    "ceil": math.ceil,
    "log": math.log,
    "log2": math.log2,
    "sqrt": math.sqrt,
    "min": min,
    "max": max,
}


def _eval_expr(spec, n: int) -> float:
    """Evaluate an int or a small arithmetic expression over n and N = C(n,2)."""
    if isinstance(spec, (int, float)):
        return spec
    ns = dict(_EVAL_NS, n=n, N=math.comb(n, 2))
    try:
        return eval(str(spec), {"__builtins__": {}}, ns)  # config input is trusted
    except Exception as exc:
        raise ConfigError(f"cannot evaluate expression {spec!r} at n={n}: {exc}") from exc


def beta_value(beta_spec, n: int) -> float:
    if beta_spec == "log":
        return math.log(n) / n
    if beta_spec == "sqrt-inv":
        return n ** -0.5
    try:
        return float(beta_spec)
    except (TypeError, ValueError):
        raise ConfigError(f"unknown beta preset {beta_spec!r} (use 'log', 'sqrt-inv', or a constant)")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    n_list: tuple[int, ...]
    trials: int
    delta: int = 2
    beta: str = "log"
    alpha: float = 1.0
    eps: object = 0  # int or expression over n, N
    p_fill: str = "constant"
    master_seed: int = 0
    rho: float = 1.0
    exact_ball_limit: int = 4096
    sampled_members: int = 4
    planted_pairs: Optional[tuple[tuple[int, int], ...]] = None
    planted_clique: object = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if not self.n_list:
            raise ConfigError("at least one n is required")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.delta < 0 or self.delta > 4:
            raise ConfigError("delta must lie in [0, 4]")
        if self.p_fill not in ("constant", "uniform"):
            raise ConfigError("p_fill must be 'constant' or 'uniform'")
        if self.exact_ball_limit < 1:
            raise ConfigError("exact_ball_limit must be >= 1")
        if self.sampled_members < 1:
            raise ConfigError("sampled_members must be >= 1")
        if self.scenario == "planted-P" and not self.planted_pairs:
            raise ConfigError("planted-P needs [planted] pairs")
        if self.scenario == "nonrecon-proxy" and self.delta != 2:
            raise ConfigError("nonrecon-proxy is defined through the two-deletion event")
        for n in self.n_list:
            nv = n + self.delta
            if n < 1 or nv < 2:
                raise ConfigError(f"n={n} too small")
            b = beta_value(self.beta, n)
            if not 0.0 < b <= 0.5 and self.p_fill == "constant":
                raise ConfigError(f"beta({n}) = {b} outside (0, 1/2]")
            if self.alpha * b > 0.5:
                raise ConfigError(f"empty probability box at n={n}: alpha*beta = {self.alpha * b}")
            e = self.eps_at(n)
            if e < 0:
                raise ConfigError(f"eps({n}) = {e} negative")
            if self.scenario == "event-random-S-subset" and e > pair_count(nv):
                raise ConfigError(f"eps({n}) = {e} exceeds the pair universe C({nv},2)")
            if self.scenario == "planted-clique":
                k = self.clique_size_at(n)
                if not 0 <= k <= nv:
                    raise ConfigError(f"clique size {k} out of range at n={n}")
            if self.planted_pairs:
                for u, v in self.planted_pairs:
                    if not (0 <= u < nv and 0 <= v < nv and u != v):
                        raise ConfigError(f"planted pair ({u},{v}) invalid for n+delta={nv}")

    def eps_at(self, n: int) -> int:
        return int(_eval_expr(self.eps, n))

    def clique_size_at(self, n: int) -> int:
        spec = self.planted_clique if self.planted_clique is not None else "floor(sqrt(n))"
        return int(_eval_expr(spec, n))

    def planted_pairs_at(self, n: int) -> tuple[tuple[int, int], ...]:
        if self.scenario == "planted-P":
            return tuple((min(u, v), max(u, v)) for u, v in self.planted_pairs)
        k = self.clique_size_at(n)
        return tuple((i, j) for i in range(k) for j in range(i + 1, k))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "n": list(self.n_list),
            "trials": self.trials,
            "delta": self.delta,
            "beta": self.beta,
            "alpha": self.alpha,
            "eps": self.eps,
            "p_fill": self.p_fill,
            "master_seed": self.master_seed,
            "rho": self.rho,
            "exact_ball_limit": self.exact_ball_limit,
            "sampled_members": self.sampled_members,
            "planted_pairs": [list(p) for p in self.planted_pairs] if self.planted_pairs else None,
            "planted_clique": self.planted_clique,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        n = raw.pop("n", None)
        if n is None:
            raise ConfigError("config needs n (an int or a list)")
        n_list = tuple(int(x) for x in (n if isinstance(n, (list, tuple)) else [n]))
        planted = raw.pop("planted", {}) or {}
        pairs = planted.get("pairs") or raw.pop("planted_pairs", None)
        clique = planted.get("clique", raw.pop("planted_clique", None))
        known = {
            "scenario",
            "trials",
            "delta",
            "beta",
            "alpha",
            "eps",
            "p_fill",
            "master_seed",
            "rho",
            "exact_ball_limit",
            "sampled_members",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(
            n_list=n_list,
            planted_pairs=tuple(tuple(int(a) for a in p) for p in pairs) if pairs else None,
            planted_clique=clique,
            **{k: raw[k] for k in known if k in raw},
        )

    @classmethod
    def from_toml(cls, path: str | Path) -> "ExperimentConfig":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


@dataclass(frozen=True)
class TrialRecord:
    config_hash: str
    scenario: str
    n: int
    delta: int
    beta: str
    alpha: float
    eps: int
    mode: str
    trial: int
    seed: str
    outcome: str  # "holds" | "violated"
    exactness: str
    bound: float
    wall_ms: int
    witness: Optional[dict] = None

    def csv_row(self) -> str:
        return ",".join(
            [
                self.scenario,
                str(self.n),
                str(self.delta),
                self.beta,
                repr(self.alpha),
                str(self.eps),
                self.mode,
                str(self.trial),
                self.seed,
                self.outcome,
                self.exactness,
                repr(self.bound),
                str(self.wall_ms),
            ]
        )


def clopper_pearson(k: int, n: int, conf: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for k successes out of n."""
    if not 0 <= k <= n or n == 0:
        raise ValueError(f"need 0 <= k <= n with n > 0, got k={k}, n={n}")
    a = 1.0 - conf
    lo = 0.0 if k == 0 else float(_beta_dist.ppf(a / 2.0, k, n - k + 1))
    hi = 1.0 if k == n else float(_beta_dist.ppf(1.0 - a / 2.0, k + 1, n - k))
    return lo, hi


# -- per-trial evaluation -------------------------------------------------------


def _probabilities_for(cfg: ExperimentConfig, n_idx: int) -> EdgeProbabilities:
    n = cfg.n_list[n_idx]
    nv = n + cfg.delta
    b = beta_value(cfg.beta, n)
    fill = "constant" if cfg.p_fill == "constant" else "uniform"
    seed = SeedSpec(cfg.master_seed, (1 << 60) + n_idx)
    return uniform_box_probabilities(nv, b, cfg.alpha, fill=fill, seed=seed)


def _stream_id(n_idx: int, trial: int) -> int:
    return ((n_idx + 1) << 40) | trial


def _random_assignment_member(g: Graph, pairs, gen) -> Graph:
    bits = gen.integers(0, 2, size=len(pairs))
    assignment = 0
    for j, b in enumerate(bits):
        if b:
            assignment |= 1 << j
    return _with_pair_assignments(g, pairs, assignment)


def _random_radius_member(g: Graph, r: int, gen) -> Graph:
    npairs = pair_count(g.n)
    arr = np.arange(npairs)
    for i in range(min(r, npairs)):
        j = i + int(gen.integers(0, npairs - i))
        arr[i], arr[j] = arr[j], arr[i]
    mask = g.edge_mask()
    for k in arr[: min(r, npairs)]:
        mask ^= 1 << int(k)
    return Graph.from_edge_mask(g.n, mask)


def _ball_trial(cfg, g, pairs, delta, gen) -> tuple[str, str, Optional[dict]]:
    """Exact ball certification when it fits the configured limit, else sampling."""
    distinct = tuple(sorted(set(pairs)))
    k = len(distinct)
    members = 1 << k
    if members <= cfg.exact_ball_limit:
        edits = EditSet(g.n, tuple(VertexPair.make(u, v) for u, v in distinct), "subset")
        res = check_event_ball(g, edits, delta, cap=max(members, 2))
        return _outcome(res), "exact", _wit(res)
    vp = [VertexPair.make(u, v) for u, v in distinct]
    for _ in range(cfg.sampled_members):
        member = _random_assignment_member(g, vp, gen)
        res = check_event(member, delta)
        if not res.holds:
            return "violated", "sampled-lower-bound", _wit(res)
    return "holds", "sampled-lower-bound", None


def _radius_trial(cfg, g, r, delta, gen) -> tuple[str, str, Optional[dict]]:
    members = radius_ball_size(g.n, r)
    if members <= cfg.exact_ball_limit:
        res = check_event_collection(enumerate_radius_ball(g, r, cap=max(members, 2)), delta)
        return _outcome(res), "exact", _wit(res)
    for _ in range(cfg.sampled_members):
        member = _random_radius_member(g, r, gen)
        res = check_event(member, delta)
        if not res.holds:
            return "violated", "sampled-lower-bound", _wit(res)
    return "holds", "sampled-lower-bound", None


def _outcome(res: EventResult) -> str:
    return "holds" if res.holds else "violated"


def _wit(res: EventResult) -> Optional[dict]:
    return res.witness.to_dict() if res.witness is not None else None


def run_trial(cfg: ExperimentConfig, n_idx: int, trial: int, probs: EdgeProbabilities,
              timing: bool = False) -> TrialRecord:
    n = cfg.n_list[n_idx]
    nv = n + cfg.delta
    seed = SeedSpec(cfg.master_seed, _stream_id(n_idx, trial))
    gen = seed.generator()
    t0 = time.perf_counter()
    g = sample_graph(probs, gen)
    eps = cfg.eps_at(n)
    scenario = cfg.scenario

    if scenario == "event-random-S-tuple":
        s = sample_edit_tuple(nv, eps, gen)
        outcome, exactness, wit = _ball_trial(cfg, g, [tuple(p) for p in s.pairs], cfg.delta, gen)
    elif scenario == "event-random-S-subset":
        s = sample_edit_subset(nv, eps, gen)
        outcome, exactness, wit = _ball_trial(cfg, g, [tuple(p) for p in s.pairs], cfg.delta, gen)
    elif scenario in ("planted-P", "planted-clique"):
        pairs = cfg.planted_pairs_at(n)
        eps = len(pairs)
        outcome, exactness, wit = _ball_trial(cfg, g, pairs, cfg.delta, gen)
    elif scenario == "radius-ball":
        outcome, exactness, wit = _radius_trial(cfg, g, eps, cfg.delta, gen)
    elif scenario == "nonrecon-proxy":
        if eps == 0:
            res = check_event(g, 2)
            outcome, exactness, wit = _outcome(res), "exact", _wit(res)
        else:
            outcome, exactness, wit = _radius_trial(cfg, g, eps, 2, gen)
        exactness = f"proxy:{exactness}"
    else:  # unreachable: config validation pins the scenario set
        raise AssertionError(scenario)

    wall = int(round((time.perf_counter() - t0) * 1000)) if timing else 0
    b = beta_value(cfg.beta, n)
    return TrialRecord(
        config_hash=cfg.config_hash(),
        scenario=scenario,
        n=n,
        delta=cfg.delta,
        beta=str(cfg.beta),
        alpha=float(cfg.alpha),
        eps=eps,
        mode=_SCENARIO_MODE[scenario],
        trial=trial,
        seed=str(seed),
        outcome=outcome,
        exactness=exactness,
        bound=math.exp(-cfg.rho * b * n),
        wall_ms=wall,
        witness=wit,
    )


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list[TrialRecord]
    csv_text: str
    summary: list[dict] = field(default_factory=list)


def run_experiment(
    cfg: ExperimentConfig,
    threads: int = 1,
    out_csv: Optional[str | Path] = None,
    timing: bool = False,
    progress: Optional[Callable[[int, int], None]] = None,
) -> ExperimentReport:
    """Run all trials; the CSV text depends only on the config (and timing flag)."""
    probs = [_probabilities_for(cfg, i) for i in range(len(cfg.n_list))]
    jobs = [(i, t) for i in range(len(cfg.n_list)) for t in range(cfg.trials)]
    records: list[Optional[TrialRecord]] = [None] * len(jobs)

    def work(j: int) -> None:
        i, t = jobs[j]
        records[j] = run_trial(cfg, i, t, probs[i], timing=timing)
        if progress is not None:
            progress(j + 1, len(jobs))

    if threads <= 1:
        for j in range(len(jobs)):
            work(j)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(len(jobs))))

    done = [r for r in records if r is not None]
    assert len(done) == len(jobs)
    csv_text = CSV_COLUMNS + "\n" + "".join(r.csv_row() + "\n" for r in done)
    report = ExperimentReport(cfg, done, csv_text, summary=summarize_rows(done))
    if out_csv is not None:
        out_path = Path(out_csv)
        out_path.write_text(csv_text)
        manifest = {
            "config": cfg.to_dict(),
            "config_hash": cfg.config_hash(),
            "csv": out_path.name,
            "columns": CSV_COLUMNS,
        }
        out_path.with_suffix(out_path.suffix + ".manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
    return report


def replay(cfg: ExperimentConfig, trial: int, n: Optional[int] = None,
           timing: bool = False) -> TrialRecord:
    """Bit-identical re-execution of one recorded trial."""
    if n is None:
        n_idx = 0
    else:
        try:
            n_idx = cfg.n_list.index(n)
        except ValueError:
            raise ConfigError(f"n={n} is not part of this config (has {list(cfg.n_list)})")
    if not 0 <= trial < cfg.trials:
        raise ConfigError(f"trial index {trial} out of range [0, {cfg.trials})")
    probs = _probabilities_for(cfg, n_idx)
    return run_trial(cfg, n_idx, trial, probs, timing=timing)


# -- CSV aggregation ------------------------------------------------------------


def parse_csv(path: str | Path) -> list[dict]:
    """Parse a harness CSV, validating the frozen schema; errors carry line numbers."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    if lines[0] != CSV_COLUMNS:
        raise ValueError(f"line 1: expected header {CSV_COLUMNS!r}, got {lines[0]!r}")
    cols = CSV_COLUMNS.split(",")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(cols):
            raise ValueError(f"line {i}: expected {len(cols)} fields, got {len(parts)}")
        row = dict(zip(cols, parts))
        try:
            row["n"] = int(row["n"])
            row["delta"] = int(row["delta"])
            row["eps"] = int(row["eps"])
            row["trial"] = int(row["trial"])
            row["bound"] = float(row["bound"])
            row["wall_ms"] = int(row["wall_ms"])
        except ValueError as exc:
            raise ValueError(f"line {i}: {exc}") from exc
        if row["outcome"] not in ("holds", "violated"):
            raise ValueError(f"line {i}: bad outcome {row['outcome']!r}")
        rows.append(row)
    return rows


def summarize_rows(rows: Sequence) -> list[dict]:
    """Group rows by (scenario, n, ...) and attach rates, intervals, and flags."""
    groups: dict[tuple, list] = {}
    for r in rows:
        d = r if isinstance(r, dict) else r.__dict__
        key = (d["scenario"], d["n"], d["delta"], d["beta"], d["alpha"], d["eps"], d["mode"])
        groups.setdefault(key, []).append(d)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        members = groups[key]
        trials = len(members)
        fails = sum(1 for d in members if d["outcome"] == "violated")
        lo, hi = clopper_pearson(fails, trials, 0.95)
        bound = float(members[0]["bound"])
        exact_kinds: dict[str, int] = {}
        for d in members:
            exact_kinds[d["exactness"]] = exact_kinds.get(d["exactness"], 0) + 1
        walls = [int(d["wall_ms"]) for d in members]
        out.append(
            {
                "scenario": key[0],
                "n": key[1],
                "delta": key[2],
                "beta": key[3],
                "alpha": float(key[4]),
                "eps": key[5],
                "mode": key[6],
                "trials": trials,
                "violations": fails,
                "failure_rate": fails / trials,
                "ci95_lo": lo,
                "ci95_hi": hi,
                "bound": bound,
                "bound_below_empirical": bound < lo,
                "exactness": ";".join(f"{k}:{v}" for k, v in sorted(exact_kinds.items())),
                "wall_ms_mean": sum(walls) / trials,
                "wall_ms_max": max(walls),
            }
        )
    return out


def summarize(path: str | Path) -> list[dict]:
    return summarize_rows(parse_csv(path))


def summary_table(summary: list[dict]) -> str:
    if not summary:
        return "(no rows)"
    headers = [
        "scenario", "n", "delta", "eps", "mode", "trials", "violations",
        "failure_rate", "ci95_lo", "ci95_hi", "bound", "flag",
    ]
    lines = ["  ".join(h.rjust(12) for h in headers)]
    for s in summary:
        row = [
            s["scenario"][:12], str(s["n"]), str(s["delta"]), str(s["eps"]), s["mode"],
            str(s["trials"]), str(s["violations"]),
            f"{s['failure_rate']:.4f}", f"{s['ci95_lo']:.4f}", f"{s['ci95_hi']:.4f}",
            f"{s['bound']:.3e}", "bound<lo" if s["bound_below_empirical"] else "",
        ]
        lines.append("  ".join(v.rjust(12) for v in row))
    return "\n".join(lines)
