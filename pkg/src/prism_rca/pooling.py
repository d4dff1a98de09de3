"""Pool property scores into per-component internal and external scores."""

from __future__ import annotations

import enum
import math
from typing import Iterable, Sequence

from .model import ComponentScores, PropertyKind
from .scoring import PropertyScore


class PoolKind(str, enum.Enum):
    MAX = "max"
    SUM = "sum"
    MEAN = "mean"


def pool(scores: Sequence[float], kind: PoolKind = PoolKind.MAX) -> float:
    """Aggregate non-negative scores; an empty category pools to 0.

    All three aggregators are monotone and permutation-invariant. Max and
    sum dominate every element; mean only guarantees a positive result
    when some element is positive.
    """
    if len(scores) == 0:
        return 0.0
    if kind is PoolKind.MAX:
        return float(max(scores))
    # fsum is exact, so the result cannot depend on input order
    total = math.fsum(scores)
    if kind is PoolKind.SUM:
        return total
    return total / len(scores)


def pool_component(
    case_scores: Iterable[PropertyScore],
    pool_kind: PoolKind = PoolKind.MAX,
) -> list[ComponentScores]:
    """One ComponentScores per component, sorted by component name."""
    groups: dict[str, dict[PropertyKind, list[float]]] = {}
    for ps in case_scores:
        by_kind = groups.setdefault(ps.id.component, {PropertyKind.INTERNAL: [], PropertyKind.EXTERNAL: []})
        by_kind[ps.id.kind].append(ps.score)

    out = []
    for comp in sorted(groups):
        internal = groups[comp][PropertyKind.INTERNAL]
        external = groups[comp][PropertyKind.EXTERNAL]
        out.append(
            ComponentScores(
                component=comp,
                s_internal=pool(internal, pool_kind),
                s_external=pool(external, pool_kind),
                n_internal=len(internal),
                n_external=len(external),
            )
        )
    return out
