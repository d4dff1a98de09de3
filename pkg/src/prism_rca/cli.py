"""Command-line entry point: ``prism-rca {diagnose,bench,simulate,eval}``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 empty result.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .evalharness import CaseResult, evaluate, metric_report, sensitivity_sweep
from .ingest import IngestError, case_dirs, load_case
from .model import RankEntry, Ranking
from .pipeline import RC_CHOICES, PipelineConfig, diagnose
from .pooling import PoolKind
from .scoring import ScorerKind, StepAgg
from .simulator import InvalidSpec, SimSpec, generate_corpus, validate

logger = logging.getLogger("prism_rca")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_EMPTY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ratio_list(text: str) -> list[float]:
    try:
        ratios = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not ratios or any(not 0 < r <= 1 for r in ratios):
        raise argparse.ArgumentTypeError("ratios must lie in (0, 1]")
    return ratios


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=[k.value for k in ScorerKind], default=ScorerKind.ZSCORE.value)
    p.add_argument("--step-agg", choices=[k.value for k in StepAgg], default=StepAgg.MAX.value)
    p.add_argument("--pool", choices=[k.value for k in PoolKind], default=PoolKind.MAX.value)
    p.add_argument("--rc-scorer", choices=RC_CHOICES, default="additive")
    p.add_argument("--data-ratio", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=5)


def _config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        scorer=args.scorer,
        step_agg=args.step_agg,
        pool=args.pool,
        rc_scorer=args.rc_scorer,
        data_ratio=args.data_ratio,
        top_k=args.top_k,
    )


def _entries_json(entries: Sequence[RankEntry]) -> list[dict[str, Any]]:
    return [
        {"component": e.component, "score": e.score, "s_internal": e.s_internal, "s_external": e.s_external}
        for e in entries
    ]


def _ranking_table(entries: Sequence[RankEntry]) -> str:
    width = max([len("component")] + [len(e.component) for e in entries])
    lines = [f"{'rank':>4}  {'component':<{width}}  {'M':>12}  {'S^I':>12}  {'S^E':>12}"]
    for i, e in enumerate(entries, start=1):
        lines.append(f"{i:>4}  {e.component:<{width}}  {e.score:>12.4g}  {e.s_internal:>12.4g}  {e.s_external:>12.4g}")
    return "\n".join(lines)


def cmd_diagnose(args: argparse.Namespace) -> int:
    config = _config(args)
    try:
        case = load_case(args.case)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    start = time.perf_counter()
    ranking = diagnose(case, config)
    wall_ms = (time.perf_counter() - start) * 1e3
    if len(ranking) == 0:
        print(f"error: empty ranking for {args.case}", file=sys.stderr)
        return EXIT_EMPTY
    top = ranking.entries[: config.top_k]
    if args.format == "machine":
        doc = {
            "case_id": case.case_id,
            "config": config.to_dict(),
            "ranking": _entries_json(top),
            "wall_time_ms": wall_ms,
        }
        print(json.dumps(doc, indent=2))
    else:
        print(f"case {case.case_id}  [{config.slug}]")
        print(_ranking_table(top))
    return EXIT_OK


def _summary_table(label: str, report: dict[str, Any]) -> str:
    rows = [(label, report["top"]["1"], report["top"]["3"], report["avg5"], report["n_cases"])]
    for name, stats in report["per_fault_type"].items():
        rows.append((f"  {name}", stats["top1"], stats["top3"], stats["avg5"], stats["n_cases"]))
    width = max(len(r[0]) for r in rows + [("Method",)])
    lines = [f"{'Method':<{width}}  Top-1  Top-3  Avg@5  cases"]
    lines += [f"{r[0]:<{width}}  {r[1]:5.2f}  {r[2]:5.2f}  {r[3]:5.2f}  {r[4]:>5}" for r in rows]
    return "\n".join(lines)


def _results_doc(corpus: Path, config: PipelineConfig, results: list[CaseResult], skipped: list[str]) -> dict[str, Any]:
    report = metric_report(results, skipped=len(skipped))
    return {
        "corpus": str(corpus.resolve()),
        "config": config.to_dict(),
        "report": report.to_dict(),
        "skipped_cases": skipped,
        "cases": [
            {
                "case_id": r.case_id,
                "fault_type": r.fault_type,
                "ground_truth": sorted(r.ground_truth),
                "ranking": _entries_json(r.ranking.entries),
                "wall_time_ms": r.wall_time_ms,
                "hits": [r.hit(k) for k in range(1, 6)],
            }
            for r in results
        ],
    }


def _load_corpus(root: Path) -> tuple[list, list[str]]:
    cases, skipped = [], []
    for d in case_dirs(root):
        try:
            cases.append(load_case(d))
        except IngestError as exc:
            logger.warning("skipping %s: %s", d, exc)
            skipped.append(d.name)
    return cases, skipped


def cmd_bench(args: argparse.Namespace) -> int:
    config = _config(args)
    root = Path(args.corpus)
    if not root.is_dir():
        print(f"error: {root}: not a directory", file=sys.stderr)
        return EXIT_INPUT
    cases, skipped = _load_corpus(root)
    skipped += sorted(c.case_id for c in cases if not c.ground_truth)
    results, _ = evaluate(cases, config, workers=args.workers)
    if not results:
        print(f"error: {root}: no scorable cases", file=sys.stderr)
        return EXIT_INPUT
    doc = _results_doc(root, config, results, skipped)
    out = Path(args.out) if args.out else Path(f"results-{config.slug}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(_summary_table(config.slug, doc["report"]))
    if skipped:
        print(f"skipped: {len(skipped)}")
    print(f"results: {out}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.n < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = SimSpec.from_file(args.spec)
        validate(spec)
    except (OSError, InvalidSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    manifest = generate_corpus(spec, args.n, args.seed, args.out)
    print(Path(args.out) / "manifest.json")
    print(f"manifest_hash: {manifest['manifest_hash']}")
    return EXIT_OK


def _results_from_doc(doc: dict[str, Any]) -> list[CaseResult]:
    results = []
    for c in doc["cases"]:
        entries = tuple(RankEntry(e["component"], e["score"], e["s_internal"], e["s_external"]) for e in c["ranking"])
        results.append(
            CaseResult(c["case_id"], Ranking(entries, doc["config"]["rc_scorer"]), frozenset(c["ground_truth"]),
                       c.get("wall_time_ms", 0.0), c.get("fault_type"))
        )
    return results


def cmd_eval(args: argparse.Namespace) -> int:
    path = Path(args.results)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        results = _results_from_doc(doc)
        config = PipelineConfig(**doc["config"])
        if not results:
            raise ValueError("no cases")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {path}: unreadable results ({exc})", file=sys.stderr)
        return EXIT_INPUT

    report = metric_report(results, skipped=len(doc.get("skipped_cases", [])))
    print(_summary_table(config.slug, report.to_dict()))
    if args.ratios:
        cases, _ = _load_corpus(Path(doc["corpus"]))
        labeled = [c for c in cases if c.ground_truth]
        if not labeled:
            print(f"error: {doc['corpus']}: no scorable cases for the sweep", file=sys.stderr)
            return EXIT_INPUT
        print()
        print("ratio  Top-1  Top-3  Avg@5")
        for row in sensitivity_sweep(labeled, config, args.ratios):
            print(f"{row.ratio:5.2f}  {row.top1:5.2f}  {row.top3:5.2f}  {row.avg5:5.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prism-rca", description="Graph-free root cause analysis.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings from ingestion and scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagnose", help="rank root-cause candidates for one case directory")
    p.add_argument("case")
    p.add_argument("--format", choices=["table", "machine"], default="table")
    _add_config_flags(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("bench", help="diagnose every case under a corpus root and report Top@k")
    p.add_argument("corpus")
    p.add_argument("-o", "--out", help="results file (default: results-<config>.json)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="generate a synthetic corpus from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="print metrics from a results file, optionally sweeping data length")
    p.add_argument("results")
    p.add_argument("--ratios", type=_ratio_list)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "top_k", 1) < 1 or not 0 < getattr(args, "data_ratio", 1.0) <= 1:
            parser.error("--top-k must be >= 1 and --data-ratio in (0, 1]")
        return args.func(args)
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
