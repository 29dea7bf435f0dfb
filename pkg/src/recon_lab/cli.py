"""Command-line entry points.

Exit codes: 0 success, 1 usage or config error, 2 violated event
(check-event only), 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .graph_core import EditSet, Graph, ResourceCapError, from_graph6, to_graph6
from .bounds import BoundParams, union_bound_failure
from .events import check_event, check_event_ball
from .harness import (
    ConfigError,
    ExperimentConfig,
    beta_value,
    replay,
    run_experiment,
    summarize,
    summary_table,
)
from .reconstruction import (
    Deck,
    find_hypomorphism,
    reconstruct_two_anchor,
    verify_reconstructibility_exhaustive,
)
from .sampling import SeedSpec, sample_graph, uniform_box_probabilities


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="recon-lab", description=__doc__)
    p.add_argument("--version", action="version", version=f"recon-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("experiment", help="run a Monte Carlo experiment from a TOML config")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--threads", type=int, default=1)
    q.add_argument("--timing", action="store_true",
                   help="record real per-trial wall_ms (breaks byte-determinism)")

    q = sub.add_parser("sample", help="sample one graph from the box model, write graph6")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--delta", type=int, default=0)
    q.add_argument("--beta", default="log")
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--fill", choices=["constant", "uniform"], default="constant")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--stream", type=int, default=0)
    q.add_argument("--out", default="-")
    q.add_argument("--dump-p", default=None, help="also write the probability vector (binary)")

    q = sub.add_parser("check-event", help="decide the subgraph uniqueness/asymmetry event")
    q.add_argument("--input", required=True, help="graph6 file")
    q.add_argument("--delta", type=int, required=True)
    q.add_argument("--edits", default=None, help="JSON [[u,v],...] edit set for the ball event")
    q.add_argument("--edits-mode", choices=["subset", "tuple"], default="subset")
    q.add_argument("--ordered", action="store_true", help="lexicographically least witness")

    q = sub.add_parser("deck", help="print the deck as JSON [[certificate-hex, multiplicity]]")
    q.add_argument("--input", required=True)
    q.add_argument("--out", default="-")

    q = sub.add_parser("reconstruct", help="reconstruct an isomorphism from a hypomorphism")
    q.add_argument("--g", required=True)
    q.add_argument("--h", required=True)

    q = sub.add_parser("verify-deck", help="exhaustive deck-collision scan up to max n")
    q.add_argument("--max-n", type=int, default=7)
    q.add_argument("--out", default="-")

    q = sub.add_parser("bounds", help="evaluate the union-bound terms")
    q.add_argument("--preset", choices=["lemma43", "lemma44"], default="lemma43",
                   help="lemma43 = vanishing-beta regime, lemma44 = constant-beta")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--delta", type=int, default=2)
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--rho", type=float, default=1.0)
    q.add_argument("--beta", default="log")
    q.add_argument("--c", type=float, default=0.5)
    q.add_argument("--c0", type=float, default=None)
    q.add_argument("--c1", type=float, default=None)
    q.add_argument("--c2", type=float, default=0.5)
    q.add_argument("--sweep", nargs=3, type=int, metavar=("START", "STOP", "STEP"),
                   help="emit a CSV over n instead of JSON at a single n")
    q.add_argument("--csv", default="-", help="sweep output path")

    q = sub.add_parser("summarize", help="aggregate a results CSV")
    q.add_argument("--csv", required=True)
    q.add_argument("--json", action="store_true")

    q = sub.add_parser("replay", help="re-execute one recorded trial bit-identically")
    q.add_argument("--config", required=True)
    q.add_argument("--trial", type=int, required=True)
    q.add_argument("--n", type=int, default=None)
    q.add_argument("--csv", default=None, help="verify against this results CSV")
    return p


def _read_graph(path: str) -> Graph:
    return from_graph6(Path(path).read_text())


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    report = run_experiment(cfg, threads=args.threads, out_csv=args.out, timing=args.timing)
    sys.stdout.write(summary_table(report.summary) + "\n")
    sys.stdout.write(f"wrote {args.out} ({len(report.records)} trials, "
                     f"config {cfg.config_hash()})\n")
    return 0


def _cmd_sample(args) -> int:
    nv = args.n + args.delta
    b = beta_value(args.beta, args.n)
    seed = SeedSpec(args.seed, args.stream)
    p = uniform_box_probabilities(nv, b, args.alpha, fill=args.fill, seed=seed)
    g = sample_graph(p, seed.substream(1))
    _write(args.out, to_graph6(g))
    if args.dump_p:
        Path(args.dump_p).write_bytes(p.to_binary())
    return 0


def _cmd_check_event(args) -> int:
    g = _read_graph(args.input)
    if args.edits:
        edits = EditSet.from_json(Path(args.edits).read_text(), g.n, mode=args.edits_mode)
        res = check_event_ball(g, edits, args.delta, ordered_witness=args.ordered)
    else:
        res = check_event(g, args.delta, ordered_witness=args.ordered)
    if res.holds:
        sys.stdout.write(json.dumps({"event": "holds"}) + "\n")
        return 0
    sys.stdout.write(json.dumps({"event": "violated", "witness": res.witness.to_dict()}) + "\n")
    return 2


def _cmd_deck(args) -> int:
    g = _read_graph(args.input)
    _write(args.out, Deck.of(g).to_json())
    return 0


def _cmd_reconstruct(args) -> int:
    g = _read_graph(args.g)
    h = _read_graph(args.h)
    sigma = find_hypomorphism(g, h)
    if sigma is None:
        sys.stdout.write("no-hypomorphism\n")
        return 0
    m = reconstruct_two_anchor(g, h, sigma)
    if m is None:
        sys.stdout.write("lemma-inapplicable\n")
        return 0
    sys.stdout.write(json.dumps({"isomorphism": list(m.image)}) + "\n")
    return 0


def _cmd_verify_deck(args) -> int:
    reports = [verify_reconstructibility_exhaustive(n).to_dict()
               for n in range(2, args.max_n + 1)]
    _write(args.out, json.dumps(reports, indent=2))
    return 0


def _cmd_bounds(args) -> int:
    regime = "vanishing-beta" if args.preset == "lemma43" else "constant-beta"

    def terms_at(n: int) -> dict:
        params = BoundParams(
            n=n, delta=args.delta, alpha=args.alpha, rho=args.rho,
            beta=beta_value(args.beta, n), c=args.c, c0=args.c0, c1=args.c1, c2=args.c2,
        )
        return union_bound_failure(params, regime).to_dict()

    if args.sweep:
        start, stop, step = args.sweep
        lines = ["n,term1,term2,term3,total,target"]
        for n in range(start, stop + 1, step):
            t = terms_at(n)
            lines.append(f"{n},{t['term1']!r},{t['term2']!r},{t['term3']!r},"
                         f"{t['total']!r},{t['target']!r}")
        _write(args.csv, "\n".join(lines))
        return 0
    out = terms_at(args.n)
    out["n"] = args.n
    out["regime"] = regime
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_summarize(args) -> int:
    summary = summarize(args.csv)
    if args.json:
        sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(summary_table(summary) + "\n")
    return 0


def _cmd_replay(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    rec = replay(cfg, args.trial, n=args.n)
    if args.csv:
        manifest_path = Path(args.csv + ".manifest.json")
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
            if manifest.get("config_hash") != cfg.config_hash():
                sys.stderr.write(
                    f"error: config hash {cfg.config_hash()} not found in manifest "
                    f"(has {manifest.get('config_hash')})\n"
                )
                return 1
        wanted = rec.csv_row()
        for line in Path(args.csv).read_text().splitlines()[1:]:
            if line == wanted:
                break
        else:
            sys.stderr.write("error: replayed row not present in the CSV\n")
            return 1
    out = {k: v for k, v in rec.__dict__.items() if k != "witness"}
    if rec.witness is not None:
        out["witness"] = rec.witness
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


_COMMANDS = {
    "experiment": _cmd_experiment,
    "sample": _cmd_sample,
    "check-event": _cmd_check_event,
    "deck": _cmd_deck,
    "reconstruct": _cmd_reconstruct,
    "verify-deck": _cmd_verify_deck,
    "bounds": _cmd_bounds,
    "summarize": _cmd_summarize,
    "replay": _cmd_replay,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ResourceCapError as exc:
        sys.stderr.write(f"resource cap: {exc}\n")
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
