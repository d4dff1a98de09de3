"""Graph-free root cause analysis.

Property anomaly scores are pooled into per-component internal and
external evidence, and components are ranked by a score that requires
both kinds of evidence, so a component downstream of the fault cannot
win on an amplified external anomaly alone.
"""

__version__ = "0.1.0"

from .model import (
    ComponentScores,
    FailureCase,
    PropertyId,
    PropertyKind,
    PropertySeries,
    RankEntry,
    Ranking,
    ReferenceStats,
    classify_property,
)
from .scoring import PropertyScore, ScorerKind, StepAgg, deviation_score, fit_reference, it_score, score_property
from .pooling import PoolKind, pool, pool_component
from .ranking import RcScorerKind, m_additive, m_conjunctive, rank_components, rank_marginal
from .pipeline import PipelineConfig, diagnose
from .baselines import BaselineKind, run_baseline

__all__ = [
    "BaselineKind",
    "ComponentScores",
    "FailureCase",
    "PipelineConfig",
    "PoolKind",
    "PropertyId",
    "PropertyKind",
    "PropertyScore",
    "PropertySeries",
    "RankEntry",
    "Ranking",
    "RcScorerKind",
    "ReferenceStats",
    "ScorerKind",
    "StepAgg",
    "classify_property",
    "deviation_score",
    "diagnose",
    "fit_reference",
    "it_score",
    "m_additive",
    "m_conjunctive",
    "pool",
    "pool_component",
    "rank_components",
    "rank_marginal",
    "run_baseline",
    "score_property",
]
