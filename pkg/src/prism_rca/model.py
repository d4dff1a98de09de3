"""Domain types for the component/property decomposition of a system.

A system is a set of components. Each component exposes *internal*
properties (local state such as CPU or memory, invisible to peers) and
*external* properties (boundary observables such as latency or error
rate, visible to callers). Every observed metric is one property.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

logger = logging.getLogger(__name__)


class PropertyKind(str, enum.Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"

    @classmethod
    def parse(cls, value: str | PropertyKind) -> PropertyKind:
        if isinstance(value, PropertyKind):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown property kind {value!r}; expected 'internal' or 'external'") from None


# Quality-of-service observables seen at component boundaries.
_EXTERNAL_STEMS = ("latency", "duration", "responsetime", "errorrate", "error")
# Local resource state.
_INTERNAL_STEMS = ("cpu", "memory", "mem", "diskio", "disk", "socket", "queue")

_NORMALIZE = re.compile(r"[^a-z0-9]")


def metric_token(name: str) -> str:
    """Final underscore-separated token of a column or metric name."""
    return name.rsplit("_", 1)[-1]


def classify_property(
    metric: str,
    overrides: Mapping[str, PropertyKind | str] | None = None,
) -> PropertyKind:
    """Label a metric as internal or external.

    Overrides are looked up first, by exact metric name and then
    case-insensitively. Otherwise the final underscore-separated token is
    matched (case-insensitive, ignoring punctuation, so ``latency-50`` and
    ``Latency`` both match) against the external vocabulary, then the
    internal one. Names matching neither are labeled internal and logged.
    """
    if not metric:
        raise ValueError("metric name must be non-empty")
    if overrides:
        if metric in overrides:
            return PropertyKind.parse(overrides[metric])
        lowered = {k.lower(): v for k, v in overrides.items()}
        if metric.lower() in lowered:
            return PropertyKind.parse(lowered[metric.lower()])

    kind = vocabulary_kind(metric)
    if kind is None:
        logger.warning("unclassified metric %r; treating it as internal", metric)
        return PropertyKind.INTERNAL
    return kind


def vocabulary_kind(metric: str) -> PropertyKind | None:
    """Kind implied by the metric vocabulary alone, or None if unmatched."""
    token = _NORMALIZE.sub("", metric_token(metric).lower())
    if token.startswith(_EXTERNAL_STEMS):
        return PropertyKind.EXTERNAL
    if token.startswith(_INTERNAL_STEMS):
        return PropertyKind.INTERNAL
    return None


@dataclass(frozen=True, order=True)
class PropertyId:
    component: str
    metric: str
    kind: PropertyKind = field(compare=False)

    def __post_init__(self) -> None:
        if not self.component or not self.metric:
            raise ValueError(f"component and metric must be non-empty, got {self.component!r}/{self.metric!r}")

    @property
    def column(self) -> str:
        return f"{self.component}_{self.metric}"


@dataclass(frozen=True, eq=False)
class PropertySeries:
    """Timestamped values of one property. Missing entries are NaN."""

    id: PropertyId
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        ts = np.array(self.timestamps, dtype=np.int64)
        vs = np.array(self.values, dtype=np.float64)
        if ts.ndim != 1 or vs.ndim != 1 or len(ts) != len(vs):
            raise ValueError(f"{self.id.column}: timestamps and values must be 1-D and of equal length")
        if len(ts) > 1 and np.any(np.diff(ts) < 0):
            raise ValueError(f"{self.id.column}: timestamps must be non-decreasing")
        ts.setflags(write=False)
        vs.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return len(self.timestamps)

    def split(self, inject_time: int) -> tuple[np.ndarray, np.ndarray]:
        """Cleaned (pre-fault, post-fault) values; missing entries dropped."""
        ok = np.isfinite(self.values)
        pre = self.timestamps < inject_time
        return self.values[ok & pre], self.values[ok & ~pre]

    def is_degenerate(self, inject_time: int) -> bool:
        pre, post = self.split(inject_time)
        return len(pre) == 0 or len(post) == 0


@dataclass(frozen=True, eq=False)
class FailureCase:
    case_id: str
    series: tuple[PropertySeries, ...]
    inject_time: int
    ground_truth: frozenset[str] | None = None
    fault_type: str | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "series", tuple(self.series))
        if self.ground_truth is not None:
            object.__setattr__(self, "ground_truth", frozenset(self.ground_truth))
        seen: set[tuple[str, str]] = set()
        for s in self.series:
            key = (s.id.component, s.id.metric)
            if key in seen:
                raise ValueError(f"case {self.case_id}: duplicate property {s.id.column}")
            seen.add(key)

    @property
    def components(self) -> list[str]:
        return sorted({s.id.component for s in self.series})

    def missing_categories(self) -> dict[str, list[PropertyKind]]:
        """Components lacking an internal or external property."""
        kinds: dict[str, set[PropertyKind]] = {}
        for s in self.series:
            kinds.setdefault(s.id.component, set()).add(s.id.kind)
        return {
            comp: [k for k in PropertyKind if k not in present]
            for comp, present in sorted(kinds.items())
            if len(present) < len(PropertyKind)
        }

    def check_sufficiency(self) -> bool:
        """Warn about components that cannot show both kinds of evidence."""
        missing = self.missing_categories()
        for comp, kinds in missing.items():
            logger.warning(
                "case %s: component %s has no %s properties",
                self.case_id, comp, "/".join(k.value for k in kinds),
            )
        kinds_present = {s.id.kind for s in self.series}
        return len(kinds_present) == len(PropertyKind)


@dataclass(frozen=True)
class ReferenceStats:
    center: float
    scale: float

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class ComponentScores:
    component: str
    s_internal: float
    s_external: float
    n_internal: int = 1
    n_external: int = 1

    def __post_init__(self) -> None:
        if not (self.s_internal >= 0 and self.s_external >= 0):
            raise ValueError(f"{self.component}: pooled scores must be non-negative")

    @property
    def missing_internal(self) -> bool:
        return self.n_internal == 0

    @property
    def missing_external(self) -> bool:
        return self.n_external == 0


@dataclass(frozen=True)
class RankEntry:
    component: str
    score: float
    s_internal: float
    s_external: float


@dataclass(frozen=True)
class Ranking:
    entries: tuple[RankEntry, ...]
    scorer_name: str
    tie_break_applied: bool = False

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def components(self) -> list[str]:
        return [e.component for e in self.entries]

    @classmethod
    def from_scores(cls, rows: Iterable[RankEntry], scorer_name: str) -> Ranking:
        """Sort rows by descending score, ties by component name."""
        ordered = sorted(rows, key=lambda e: (-e.score, e.component))
        tied = any(a.score == b.score for a, b in zip(ordered, ordered[1:]))
        return cls(tuple(ordered), scorer_name, tied)
