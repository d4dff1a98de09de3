"""End-to-end diagnosis: score properties, pool per component, rank."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .baselines import BaselineKind, run_baseline
from .model import FailureCase, Ranking
from .pooling import PoolKind, pool_component
from .ranking import RcScorerKind, rank_components, rank_marginal
from .scoring import ScorerKind, StepAgg, score_case

RC_CHOICES = [k.value for k in RcScorerKind] + [k.value for k in BaselineKind]


@dataclass(frozen=True)
class PipelineConfig:
    """Defaults give the standard zscore + max + additive configuration.

    ``rc_scorer`` accepts a root-cause scorer (additive, conjunctive) or an
    ablation (marginal, internal, external) or a baseline name
    (marginal-deviation, it-ordering). ``epsilon`` is the nominal
    threshold used only by verification code, never by the ranking; it
    defaults to 3 for z-score features and 1.5 for IQR features.
    """

    scorer: ScorerKind = ScorerKind.ZSCORE
    step_agg: StepAgg = StepAgg.MAX
    pool: PoolKind = PoolKind.MAX
    rc_scorer: str = RcScorerKind.ADDITIVE.value
    data_ratio: float = 1.0
    top_k: int = 5
    epsilon: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scorer", ScorerKind(self.scorer))
        object.__setattr__(self, "step_agg", StepAgg(self.step_agg))
        object.__setattr__(self, "pool", PoolKind(self.pool))
        rc = self.rc_scorer.value if hasattr(self.rc_scorer, "value") else str(self.rc_scorer)
        if rc not in RC_CHOICES:
            raise ValueError(f"unknown rc_scorer {rc!r}; choose from {', '.join(RC_CHOICES)}")
        object.__setattr__(self, "rc_scorer", rc)
        if not 0.0 < self.data_ratio <= 1.0:
            raise ValueError(f"data_ratio must lie in (0, 1], got {self.data_ratio}")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", 1.5 if self.scorer.feature is ScorerKind.IQR else 3.0)

    def with_(self, **changes) -> PipelineConfig:
        if "scorer" in changes and "epsilon" not in changes:
            changes["epsilon"] = None  # re-derive for the new feature
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("scorer", "step_agg", "pool"):
            d[key] = d[key].value
        return d

    @property
    def slug(self) -> str:
        return f"{self.scorer.value}+{self.step_agg.value}+{self.pool.value}+{self.rc_scorer}"


def diagnose(case: FailureCase, config: PipelineConfig | None = None) -> Ranking:
    config = config or PipelineConfig()
    if config.rc_scorer in (BaselineKind.MARGINAL_DEVIATION.value, BaselineKind.IT_ORDERING.value):
        return run_baseline(case, BaselineKind(config.rc_scorer), config)

    scores = score_case(case, config.scorer, config.step_agg, config.data_ratio)
    kind = RcScorerKind(config.rc_scorer)
    if kind is RcScorerKind.MARGINAL:
        return rank_marginal(scores).ranking
    return rank_components(pool_component(scores, config.pool), kind)
