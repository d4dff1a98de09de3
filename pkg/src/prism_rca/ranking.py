"""Root-cause scores and deterministic component rankings.

A root-cause score ``M(s_internal, s_external)`` combines a component's
pooled evidence. The additive and conjunctive scores are *internally
bounded*: a component whose internal score stays nominal cannot be pushed
to the top by an amplified external anomaly alone (unconditionally for
the conjunctive score; under bounded amplification for the additive one).
The marginal, internal-only and external-only variants are ablations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .model import ComponentScores, PropertyId, PropertyKind, RankEntry, Ranking
from .scoring import PropertyScore


class RcScorerKind(str, enum.Enum):
    ADDITIVE = "additive"
    CONJUNCTIVE = "conjunctive"
    MARGINAL = "marginal"
    INTERNAL_ONLY = "internal"
    EXTERNAL_ONLY = "external"


class EmptyInput(ValueError):
    pass


def m_additive(s_i: float, s_e: float) -> float:
    """``s_i + s_e - log(1 + s_i + s_e)``; zero at the origin, never negative."""
    total = s_i + s_e
    return max(0.0, total - math.log1p(total))


def m_conjunctive(s_i: float, s_e: float) -> float:
    return min(s_i, s_e)


def m_additive_grad(s_i: float, s_e: float) -> float:
    """Partial derivative of m_additive in either argument."""
    total = s_i + s_e
    return total / (1.0 + total)


def combined_score(cs: ComponentScores, kind: RcScorerKind) -> float:
    if kind is RcScorerKind.ADDITIVE:
        return m_additive(cs.s_internal, cs.s_external)
    if kind is RcScorerKind.CONJUNCTIVE:
        return m_conjunctive(cs.s_internal, cs.s_external)
    if kind is RcScorerKind.INTERNAL_ONLY:
        return cs.s_internal
    if kind is RcScorerKind.EXTERNAL_ONLY:
        return cs.s_external
    # marginal over pooled evidence; equals the top property score under max pooling
    return max(cs.s_internal, cs.s_external)


def rank_components(scores: Sequence[ComponentScores], kind: RcScorerKind = RcScorerKind.ADDITIVE) -> Ranking:
    if not scores:
        raise EmptyInput("cannot rank an empty set of components")
    rows = [RankEntry(cs.component, combined_score(cs, kind), cs.s_internal, cs.s_external) for cs in scores]
    return Ranking.from_scores(rows, kind.value)


@dataclass(frozen=True)
class MarginalRanking:
    properties: tuple[tuple[PropertyId, float], ...]
    ranking: Ranking


def rank_marginal(property_scores: Sequence[PropertyScore], scorer_name: str = RcScorerKind.MARGINAL.value) -> MarginalRanking:
    """Rank properties by score and reduce to components by first appearance.

    Each component's entry carries the score of its highest-ranked
    property, together with its best internal and external property
    scores.
    """
    if not property_scores:
        raise EmptyInput("cannot rank an empty set of properties")
    ordered = sorted(property_scores, key=lambda p: (-p.score, p.id.component, p.id.metric))

    best: dict[str, dict[PropertyKind, float]] = {}
    for p in ordered:
        kinds = best.setdefault(p.id.component, {PropertyKind.INTERNAL: 0.0, PropertyKind.EXTERNAL: 0.0})
        kinds[p.id.kind] = max(kinds[p.id.kind], p.score)

    entries = []
    seen: set[str] = set()
    for p in ordered:
        comp = p.id.component
        if comp in seen:
            continue
        seen.add(comp)
        entries.append(RankEntry(comp, p.score, best[comp][PropertyKind.INTERNAL], best[comp][PropertyKind.EXTERNAL]))

    tied = any(a.score == b.score for a, b in zip(ordered, ordered[1:]))
    return MarginalRanking(
        tuple((p.id, p.score) for p in ordered),
        Ranking(tuple(entries), scorer_name, tied),
    )
