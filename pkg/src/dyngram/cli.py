"""Command-line entry point for reproducible extraction/update/scoring runs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .baselines import (
    chung_lu_generate,
    degree_sequence,
    er_generate,
    portrait_divergence,
    spectrum_mmd,
)
from .deviation import GROUND_TRUTH, deviation_score, evaluate_series, forecast
from .generation import generate, weight_grammar
from .grammar import IntegrityError, grammar_from_text, grammar_to_text
from .graphs import (
    DynamicGraph,
    LabeledMultigraph,
    ParseError,
    Vocabulary,
    ingest_path,
    stats_csv,
    write_edge_list,
    write_snapshot_dir,
)
from .seeding import derive_seed
from .temporal import (
    extract_snapshot_grammar,
    report_from_dict,
    report_to_dict,
    update_grammar,
)
from .transitions import tally_transitions, transitions_csv, transitions_text


@dataclass
class RunConfig:
    mu: int = 4
    seed: int = 0
    trials: int = 10
    window: int | str = "unit"
    input: str | None = None
    output_dir: str = "."

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            mu=getattr(args, "mu", 4),
            seed=getattr(args, "seed", 0),
            trials=getattr(args, "trials", 10),
            window=_parse_window(getattr(args, "window", "unit")),
            input=getattr(args, "input", None),
            output_dir=getattr(args, "output_dir", "."),
        )


def _parse_window(raw) -> int | str:
    if raw in (None, "unit"):
        return "unit"
    return int(raw)


def _parse_range(raw: str) -> tuple[int, int]:
    lo, _, hi = raw.partition("..")
    return int(lo), int(hi)


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_dynamic(cfg: RunConfig) -> DynamicGraph:
    if not cfg.input:
        raise ParseError(0, "an --input edge list is required")
    return ingest_path(cfg.input, cfg.window)


def _read_graph(path: str) -> LabeledMultigraph:
    vocab = Vocabulary()
    g = LabeledMultigraph()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError(line_no, f"expected 'u v' or 'u v t', got {line!r}")
            u, v = vocab.intern(parts[0]), vocab.intern(parts[1])
            if not g.has_edge(u, v):
                g.add_edge(u, v)
    return g


def _snapshot(dyn: DynamicGraph, index: int) -> LabeledMultigraph:
    if not 0 <= index < len(dyn.snapshots):
        raise ParseError(0, f"snapshot {index} out of range 0..{len(dyn.snapshots) - 1}")
    return dyn.snapshots[index]


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_ingest(args) -> int:
    cfg = RunConfig.from_args(args)
    dyn = _load_dynamic(cfg)
    _write(os.path.join(cfg.output_dir, "stats.csv"), stats_csv(dyn))
    write_snapshot_dir(dyn, os.path.join(cfg.output_dir, "snapshots"))
    print(f"ingested {len(dyn.snapshots)} snapshots -> {cfg.output_dir}")
    return 0


def _cmd_extract(args) -> int:
    cfg = RunConfig.from_args(args)
    dyn = _load_dynamic(cfg)
    g = _snapshot(dyn, args.snapshot)
    gram = extract_snapshot_grammar(g, cfg.mu, derive_seed(cfg.seed, "extract", args.snapshot))
    path = os.path.join(cfg.output_dir, f"grammar_t{args.snapshot}.json")
    _write(path, grammar_to_text(gram, name_of=dyn.vocab.external))
    print(f"extracted {len(gram.rules)} rules -> {path}")
    return 0


def _cmd_update(args) -> int:
    cfg = RunConfig.from_args(args)
    dyn = _load_dynamic(cfg)
    g_t = _snapshot(dyn, args.from_snapshot)
    g_t1 = _snapshot(dyn, args.to_snapshot)
    with open(args.grammar, "r", encoding="utf-8") as fh:
        gram = grammar_from_text(fh.read(), node_of=dyn.vocab.intern)
    updated, report = update_grammar(
        gram, g_t, g_t1, cfg.mu, derive_seed(cfg.seed, "update", args.to_snapshot)
    )
    gpath = os.path.join(cfg.output_dir, f"grammar_t{args.to_snapshot}.json")
    rpath = os.path.join(cfg.output_dir, f"report_t{args.to_snapshot}.json")
    _write(gpath, grammar_to_text(updated, name_of=dyn.vocab.external))
    _write(
        rpath,
        json.dumps(report_to_dict(report, name_of=dyn.vocab.external), sort_keys=True, indent=1)
        + "\n",
    )
    print(f"delta={deviation_score(report):.9f} -> {gpath}")
    return 0


def _cmd_score(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        report = report_from_dict(json.loads(fh.read()), node_of=lambda s: s)
    delta = deviation_score(report)
    print(f"total_edits={report.total_edits:.9f}")
    print(f"delta={delta:.9f}")
    return 0


def _cmd_forecast(args) -> int:
    with open(args.series, "r", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    d = [float(row.split(",")[1]) for row in rows[1:]]
    print("t,d_hat")
    if len(d) >= 1:
        print(f"1,{d[0]:.9f}")
    for t in range(2, len(d) + 1):
        print(f"{t},{forecast(d, t):.9f}")
    return 0


def _cmd_generate(args) -> int:
    cfg = RunConfig.from_args(args)
    with open(args.grammar, "r", encoding="utf-8") as fh:
        gram = grammar_from_text(fh.read(), node_of=lambda s: s)
    wg = weight_grammar(gram)
    g = generate(wg, cfg.seed)
    text = write_edge_list(g)
    if args.output:
        _write(args.output, text)
        print(f"generated n={g.node_count} m={g.simple_size} -> {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_transitions(args) -> int:
    reports = []
    for path in args.reports:
        with open(path, "r", encoding="utf-8") as fh:
            reports.append(report_from_dict(json.loads(fh.read()), node_of=lambda s: s))
    tally = tally_transitions(reports)
    k = args.top if args.top else tally.total()
    if args.output:
        _write(args.output, transitions_csv(tally, k))
        print(f"{len(tally.counts)} transition types -> {args.output}")
    else:
        sys.stdout.write(transitions_text(tally, k))
    return 0


def _cmd_compare(args) -> int:
    a = _read_graph(args.graph_a)
    b = _read_graph(args.graph_b)
    rows = ["metric,t,value"]
    rows.append(f"portrait_divergence,{args.t},{portrait_divergence(a, b):.9f}")
    rows.append(f"spectrum_mmd,{args.t},{spectrum_mmd(a, b):.9f}")
    text = "\n".join(rows) + "\n"
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def _baseline_sampler(kind: str):
    if kind == "er":
        return lambda g, s: er_generate(g.node_count, g.simple_size, s, nodes=g.nodes())
    if kind == "chung-lu":
        return lambda g, s: chung_lu_generate(degree_sequence(g), s, nodes=g.nodes())
    raise ParseError(0, f"unknown baseline {kind!r}")


def _cmd_baseline(args) -> int:
    cfg = RunConfig.from_args(args)
    dyn = _load_dynamic(cfg)
    g = _snapshot(dyn, args.snapshot)
    sample = _baseline_sampler(args.baseline)(g, derive_seed(cfg.seed, "baseline", args.snapshot))
    text = write_edge_list(sample, name_of=lambda v: dyn.vocab.external(v))
    if args.output:
        _write(args.output, text)
        print(f"sampled {args.baseline} n={sample.node_count} -> {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_pipeline(args) -> int:
    cfg = RunConfig.from_args(args)
    dyn = _load_dynamic(cfg)
    lo, hi = (0, len(dyn.snapshots) - 1) if not args.snapshots else _parse_range(args.snapshots)
    snaps = dyn.snapshots[lo : hi + 1]
    if len(snaps) < 2:
        raise ParseError(0, "pipeline needs at least two snapshots")
    impostors = {kind: _baseline_sampler(kind) for kind in args.baseline}
    series = evaluate_series(snaps, impostors, mu=cfg.mu, trials=cfg.trials, seed=cfg.seed)
    _write(os.path.join(cfg.output_dir, "ranking.csv"), series.to_csv(t_offset=lo))

    # serialize one grammar chain alongside the rankings
    gdir = os.path.join(cfg.output_dir, "grammars")
    for t in range(len(snaps) - 1):
        gram = extract_snapshot_grammar(snaps[t], cfg.mu, derive_seed(cfg.seed, "chain", t))
        updated, report = update_grammar(
            gram, snaps[t], snaps[t + 1], cfg.mu, derive_seed(cfg.seed, "chain-up", t)
        )
        _write(
            os.path.join(gdir, f"grammar_t{lo + t}.json"),
            grammar_to_text(gram, name_of=dyn.vocab.external),
        )
        _write(
            os.path.join(gdir, f"grammar_t{lo + t + 1}_updated.json"),
            grammar_to_text(updated, name_of=dyn.vocab.external),
        )
        _write(
            os.path.join(gdir, f"report_t{lo + t + 1}.json"),
            json.dumps(report_to_dict(report, name_of=dyn.vocab.external), sort_keys=True, indent=1)
            + "\n",
        )
    wins = sum(
        1
        for t, rows in series.rankings.items()
        if rows and rows[0][0] == GROUND_TRUTH
    )
    print(
        f"scored {len(series.d)} transitions; ground truth ranked first in "
        f"{wins}/{len(series.rankings)} scored transitions -> {cfg.output_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# argument surface
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="temporal edge-list file (u v t)")
        p.add_argument("--window", default="unit", help="window width in timestamp units, or 'unit'")
    p.add_argument("--mu", type=int, default=4, help="max RHS size during extraction")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--trials", type=int, default=10, help="independent trials per transition")
    p.add_argument("--output-dir", default=".", help="artifact directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyngram",
        description="Learn, update, score, and sample vertex-replacement grammars on dynamic graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="aggregate interactions into snapshots")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("extract", help="extract a grammar from one snapshot")
    _add_common(p)
    p.add_argument("--snapshot", type=int, required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("update", help="update a grammar toward a later snapshot")
    _add_common(p)
    p.add_argument("--grammar", required=True)
    p.add_argument("--from-snapshot", type=int, required=True)
    p.add_argument("--to-snapshot", type=int, required=True)
    p.set_defaults(func=_cmd_update)

    p = sub.add_parser("score", help="deviation score of a serialized update report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("forecast", help="momentum forecasts from a t,d CSV series")
    p.add_argument("--series", required=True)
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("generate", help="sample a graph from a serialized grammar")
    p.add_argument("--grammar", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("transitions", help="tally rule transitions over update reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--top", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_transitions)

    p = sub.add_parser("compare", help="similarity metrics between two edge-list graphs")
    p.add_argument("--graph-a", required=True)
    p.add_argument("--graph-b", required=True)
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("baseline", help="sample a baseline graph matched to a snapshot")
    _add_common(p)
    p.add_argument("--snapshot", type=int, required=True)
    p.add_argument("--baseline", choices=["er", "chung-lu"], required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("pipeline", help="full per-transition scoring experiment")
    _add_common(p)
    p.add_argument("--baseline", choices=["er", "chung-lu"], action="append", default=[])
    p.add_argument("--snapshots", help="inclusive range A..B of snapshot indices")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
