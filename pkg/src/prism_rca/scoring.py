"""Property-level anomaly scorers.

Deviation scorers measure ``|x - c| / s`` against a location ``c`` and
scale ``s`` fitted on the pre-fault window. The information-theoretic
(IT) scorers wrap a deviation scorer as the feature ``tau`` and report
``-log`` of the empirical tail frequency of ``tau`` under the reference
sample; they saturate once ``tau`` exceeds every reference value.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import FailureCase, PropertyId, PropertySeries, ReferenceStats

logger = logging.getLogger(__name__)

SCALE_FLOOR = 1e-9
# Laplace smoothing of a zero tail count.
IT_SMOOTH = 0.5


class ScorerKind(str, enum.Enum):
    ZSCORE = "zscore"
    IQR = "iqr"
    IT_ZSCORE = "it-zscore"
    IT_IQR = "it-iqr"

    @property
    def feature(self) -> ScorerKind:
        """Deviation scorer used directly or as the IT feature function."""
        return {
            ScorerKind.IT_ZSCORE: ScorerKind.ZSCORE,
            ScorerKind.IT_IQR: ScorerKind.IQR,
        }.get(self, self)

    @property
    def is_it(self) -> bool:
        return self in (ScorerKind.IT_ZSCORE, ScorerKind.IT_IQR)


class StepAgg(str, enum.Enum):
    MAX = "max"
    MEAN = "mean"


class DegenerateReference(ValueError):
    """Fewer than two finite pre-fault values."""


class EmptyPostWindow(ValueError):
    """No finite post-fault values to score."""


@dataclass(frozen=True)
class PropertyScore:
    id: PropertyId
    score: float
    per_step: tuple[float, ...] | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        if not (self.score >= 0 and math.isfinite(self.score)):
            raise ValueError(f"{self.id.column}: score must be finite and non-negative, got {self.score}")


def floor_scale(scale: float, center: float) -> float:
    return max(scale, SCALE_FLOOR, SCALE_FLOOR * abs(center))


def fit_reference(pre_values: Sequence[float] | np.ndarray, kind: ScorerKind = ScorerKind.ZSCORE) -> ReferenceStats:
    """Fit location and scale on reference data.

    z-score: mean and population standard deviation. IQR: median and
    Q3 - Q1 with linearly interpolated quantiles. IT kinds fit their
    underlying deviation scorer. The scale is floored at
    ``max(1e-9, 1e-9 * |center|)``.
    """
    x = np.asarray(pre_values, dtype=np.float64)
    x = x[np.isfinite(x)]
    if len(x) < 2:
        raise DegenerateReference(f"need at least 2 finite reference values, got {len(x)}")
    if kind.feature is ScorerKind.ZSCORE:
        center = float(np.mean(x))
        scale = float(np.std(x))
    else:
        q1, center, q3 = np.percentile(x, [25.0, 50.0, 75.0], method="linear")
        center = float(center)
        scale = float(q3 - q1)
    return ReferenceStats(center, floor_scale(scale, center))


def deviation_score(x: float, ref: ReferenceStats) -> float:
    return abs(x - ref.center) / ref.scale


def deviation_scores(xs: np.ndarray, ref: ReferenceStats) -> np.ndarray:
    return np.abs(np.asarray(xs, dtype=np.float64) - ref.center) / ref.scale


def it_ceiling(k: int) -> float:
    """Score of any observation beyond the reference maximum."""
    return -math.log(IT_SMOOTH / (k + IT_SMOOTH))


def it_scores(taus: np.ndarray, reference_taus: np.ndarray) -> np.ndarray:
    """Vectorised empirical IT score of feature values ``taus``."""
    ref = np.sort(np.asarray(reference_taus, dtype=np.float64))
    k = len(ref)
    if k < 1:
        raise DegenerateReference("IT score needs at least one reference value")
    taus = np.asarray(taus, dtype=np.float64)
    # reference entries with tau_i >= tau
    count = k - np.searchsorted(ref, taus, side="left")
    out = np.empty(len(taus))
    pos = count > 0
    out[pos] = -np.log(count[pos] / k)
    out[~pos] = it_ceiling(k)
    # -log(1) is -0.0
    return np.abs(out)


def it_score(x: float, reference_taus: Sequence[float], ref: ReferenceStats) -> float:
    tau = deviation_score(x, ref)
    return float(it_scores(np.array([tau]), np.asarray(reference_taus))[0])


def _keep_count(n_post: int, data_ratio: float) -> int:
    # tolerance absorbs products like 0.7 * 10 = 7.000000000000001
    return max(1, math.ceil(data_ratio * n_post - 1e-9))


def score_property(
    series: PropertySeries,
    inject_time: int,
    kind: ScorerKind = ScorerKind.ZSCORE,
    step_agg: StepAgg = StepAgg.MAX,
    data_ratio: float = 1.0,
    keep_steps: bool = False,
) -> PropertyScore:
    """Score one property's post-fault window against its pre-fault window.

    The post-fault window is truncated to its first ``ceil(data_ratio *
    n_post)`` finite entries before scoring. Degenerate references and
    empty post windows yield a zero score with a note and a logged
    warning rather than an error.
    """
    if not 0.0 < data_ratio <= 1.0:
        raise ValueError(f"data_ratio must lie in (0, 1], got {data_ratio}")
    pre, post = series.split(inject_time)
    try:
        ref = fit_reference(pre, kind)
    except DegenerateReference as exc:
        logger.warning("%s: %s; scoring 0", series.id.column, exc)
        return PropertyScore(series.id, 0.0, note="degenerate-reference")
    if len(post) == 0:
        logger.warning("%s: empty post-fault window; scoring 0", series.id.column)
        return PropertyScore(series.id, 0.0, note="empty-post-window")

    post = post[: _keep_count(len(post), data_ratio)]
    steps = deviation_scores(post, ref)
    if kind.is_it:
        steps = it_scores(steps, deviation_scores(pre, ref))
    score = float(steps.max() if step_agg is StepAgg.MAX else steps.mean())
    return PropertyScore(series.id, score, tuple(steps.tolist()) if keep_steps else None)


def score_case(
    case: FailureCase,
    kind: ScorerKind = ScorerKind.ZSCORE,
    step_agg: StepAgg = StepAgg.MAX,
    data_ratio: float = 1.0,
) -> list[PropertyScore]:
    return [score_property(s, case.inject_time, kind, step_agg, data_ratio) for s in case.series]
