"""Top@k / Avg@k over diagnosed cases, and the data-length sensitivity sweep."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import FailureCase, Ranking
from .pipeline import PipelineConfig, diagnose

logger = logging.getLogger(__name__)

REPORT_KS = (1, 2, 3, 4, 5)


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    ranking: Ranking
    ground_truth: frozenset[str]
    wall_time_ms: float = 0.0
    fault_type: str | None = None

    def __post_init__(self) -> None:
        if not self.ground_truth:
            raise ValueError(f"case {self.case_id}: empty ground truth")
        object.__setattr__(self, "ground_truth", frozenset(self.ground_truth))

    def hit(self, k: int) -> float:
        """This case's contribution to Top@k."""
        found = sum(1 for c in self.ranking.components[:k] if c in self.ground_truth)
        return found / min(k, len(self.ground_truth))


def top_at_k(results: Sequence[CaseResult], k: int) -> float:
    if k < 1:
        raise ValueError("k must be at least 1")
    if not results:
        raise EmptyCorpus("no scored cases")
    return sum(r.hit(k) for r in results) / len(results)


def avg_at_k(results: Sequence[CaseResult], k: int) -> float:
    return sum(top_at_k(results, j) for j in range(1, k + 1)) / k


@dataclass
class MetricReport:
    """Top@1..5 and Avg@5, overall and per fault type.

    Overall figures weight every case equally, so fault types contribute
    in proportion to their case counts.
    """

    top: dict[int, float]
    avg5: float
    n_cases: int
    skipped: int = 0
    per_fault_type: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "weighting": "by case count",
            "n_cases": self.n_cases,
            "skipped": self.skipped,
            "top": {str(k): v for k, v in self.top.items()},
            "avg5": self.avg5,
            "per_fault_type": self.per_fault_type,
        }


def _summary(results: Sequence[CaseResult]) -> tuple[dict[int, float], float]:
    top = {k: top_at_k(results, k) for k in REPORT_KS}
    return top, sum(top.values()) / len(top)


def metric_report(results: Sequence[CaseResult], skipped: int = 0) -> MetricReport:
    top, avg5 = _summary(results)
    by_type: dict[str, list[CaseResult]] = {}
    for r in results:
        if r.fault_type is not None:
            by_type.setdefault(r.fault_type, []).append(r)
    per_type = {}
    for name in sorted(by_type):
        t, a = _summary(by_type[name])
        per_type[name] = {"n_cases": len(by_type[name]), "top1": t[1], "top3": t[3], "avg5": a}
    return MetricReport(top, avg5, len(results), skipped, per_type)


def run_case(case: FailureCase, config: PipelineConfig) -> CaseResult:
    start = time.perf_counter()
    ranking = diagnose(case, config)
    elapsed = (time.perf_counter() - start) * 1e3
    return CaseResult(case.case_id, ranking, case.ground_truth, elapsed, case.fault_type)


def evaluate(
    cases: Iterable[FailureCase],
    config: PipelineConfig,
    workers: int = 1,
) -> tuple[list[CaseResult], int]:
    """Diagnose every labeled case; returns (results sorted by id, skipped count)."""
    labeled, skipped = [], 0
    for case in cases:
        if not case.ground_truth:
            logger.warning("case %s has no root_cause; skipped", case.case_id)
            skipped += 1
        else:
            labeled.append(case)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: run_case(c, config), labeled))
    else:
        results = [run_case(c, config) for c in labeled]
    results.sort(key=lambda r: r.case_id)
    return results, skipped


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    top1: float
    top3: float
    avg5: float


def sensitivity_sweep(
    cases: Sequence[FailureCase],
    config: PipelineConfig,
    ratios: Sequence[float],
) -> list[SweepRow]:
    """Re-diagnose using the first ``ratio`` of each post-fault window."""
    if not ratios:
        raise ValueError("ratios must be non-empty")
    rows = []
    for ratio in ratios:
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
        results, _ = evaluate(cases, config.with_(data_ratio=ratio))
        top, avg5 = _summary(results)
        rows.append(SweepRow(ratio, top[1], top[3], avg5))
    return rows
