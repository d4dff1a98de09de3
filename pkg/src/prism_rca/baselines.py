"""Structure-free reference rankers that rank by raw anomaly magnitude.

Both share the scoring and pooling machinery with the main pipeline, so
any difference in results comes from the ranking rule alone.
"""

from __future__ import annotations

import enum
from typing import TYPE_CHECKING

from .model import FailureCase, RankEntry, Ranking
from .pooling import PoolKind, pool_component
from .ranking import EmptyInput, rank_marginal
from .scoring import ScorerKind, score_case

if TYPE_CHECKING:
    from .pipeline import PipelineConfig


class BaselineKind(str, enum.Enum):
    MARGINAL_DEVIATION = "marginal-deviation"
    IT_ORDERING = "it-ordering"


def _it_variant(kind: ScorerKind) -> ScorerKind:
    return ScorerKind.IT_IQR if kind.feature is ScorerKind.IQR else ScorerKind.IT_ZSCORE


def run_baseline(case: FailureCase, kind: BaselineKind, config: PipelineConfig | None = None) -> Ranking:
    from .pipeline import PipelineConfig

    config = config or PipelineConfig()
    if kind is BaselineKind.MARGINAL_DEVIATION:
        scores = score_case(case, config.scorer.feature, config.step_agg, config.data_ratio)
        return rank_marginal(scores, scorer_name=kind.value).ranking

    scores = score_case(case, _it_variant(config.scorer), config.step_agg, config.data_ratio)
    pooled = pool_component(scores, PoolKind.MAX)
    if not pooled:
        raise EmptyInput(f"case {case.case_id} has no properties")
    rows = [
        RankEntry(cs.component, max(cs.s_internal, cs.s_external), cs.s_internal, cs.s_external)
        for cs in pooled
    ]
    return Ranking.from_scores(rows, kind.value)
