"""Synthetic failure cases with known root causes.

Each component has independent internal metrics (Gaussian noise around a
per-metric baseline) and one external ``latency`` metric. Latencies
compose over an acyclic call graph: a caller's expected latency is its own
base latency plus ``k`` times the expected latency of every callee it
invokes ``k`` times per request. Only the root's internal metric and its
own latency are touched by the fault; every other component sees the
fault solely through callee latencies, so no non-root internal metric
depends on the fault.

Randomness comes from numpy's PCG64 generator. Per-case seeds are derived
from (root seed, case index) with ``numpy.random.SeedSequence``.
"""

from __future__ import annotations

import enum
import graphlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .ingest import canonical_hash, write_case, write_manifest
from .model import FailureCase, PropertyId, PropertyKind, PropertySeries

logger = logging.getLogger(__name__)

INTERNAL_METRICS = ("cpu", "mem", "diskio", "socket", "queue")
LATENCY_METRIC = "latency"
# internal metric noise, as a fraction of its baseline
INTERNAL_CV = 0.05
# internal shift multiplier for the weak-manifestation mode
WEAK_FACTOR = 0.2


class InvalidSpec(ValueError):
    pass


class Manifestation(str, enum.Enum):
    BOTH = "both"
    INTERNAL_WEAK = "internal-weak"
    EXTERNAL_ONLY = "external-only"


@dataclass(frozen=True)
class FaultSpec:
    root_component: str
    delta_internal: float = 8.0
    delta_latency: float = 0.04
    manifestation: Manifestation = Manifestation.BOTH

    def __post_init__(self) -> None:
        object.__setattr__(self, "manifestation", Manifestation(self.manifestation))


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one simulated case.

    ``call_edges`` holds ``(caller, callee, k)`` triples by component name.
    ``ramp_steps > 0`` makes propagated latency excess grow linearly over
    that many post-fault steps instead of appearing at once, per hop.
    ``exact_reference`` rescales each pre-fault noise window to exactly
    zero mean and unit population variance, so reference statistics equal
    the nominal baseline and noise level.
    """

    n_components: int
    fault: FaultSpec
    call_edges: tuple[tuple[str, str, int], ...] = ()
    internal_metrics_per_component: int = 2
    pre_steps: int = 120
    post_steps: int = 60
    base_latency: float = 0.05
    noise_sigma: float = 0.005
    seed: int = 0
    ramp_steps: int = 0
    exact_reference: bool = False
    names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if isinstance(self.fault, dict):
            object.__setattr__(self, "fault", FaultSpec(**self.fault))
        object.__setattr__(self, "call_edges", tuple((str(a), str(b), int(k)) for a, b, k in self.call_edges))
        if not self.names:
            object.__setattr__(self, "names", tuple(component_names(self.n_components)))
        else:
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def components(self) -> tuple[str, ...]:
        return self.names

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["fault"]["manifestation"] = self.fault.manifestation.value
        d["call_edges"] = [list(e) for e in self.call_edges]
        d["names"] = list(self.names)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SimSpec:
        d = dict(d)
        d["fault"] = FaultSpec(**d["fault"])
        d["call_edges"] = tuple(tuple(e) for e in d.get("call_edges", ()))
        d["names"] = tuple(d.get("names", ()))
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> SimSpec:
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (TypeError, KeyError, ValueError) as exc:
            raise InvalidSpec(f"{path}: {exc}") from exc


def component_names(n: int) -> list[str]:
    width = max(2, len(str(n - 1)))
    return [f"svc{i:0{width}d}" for i in range(n)]


def internal_metric_names(m: int) -> list[str]:
    """``cpu, mem, diskio, socket, queue``, then ``cpu2, mem2, ...``."""
    base = len(INTERNAL_METRICS)
    return [INTERNAL_METRICS[j % base] + (str(j // base + 1) if j >= base else "") for j in range(m)]


def callee_first_order(spec: SimSpec) -> list[str]:
    """Components ordered so that every callee precedes its callers."""
    graph: dict[str, set[str]] = {c: set() for c in spec.components}
    for caller, callee, _ in spec.call_edges:
        graph[caller].add(callee)
    try:
        return list(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        raise InvalidSpec(f"call graph has a cycle: {exc.args[1]}") from exc


def validate(spec: SimSpec) -> None:
    names = set(spec.components)
    if spec.n_components < 1 or len(spec.components) != spec.n_components or len(names) != spec.n_components:
        raise InvalidSpec("n_components must be positive and match the distinct component names")
    for caller, callee, k in spec.call_edges:
        if caller not in names or callee not in names:
            raise InvalidSpec(f"edge {caller}->{callee} references an unknown component")
        if caller == callee:
            raise InvalidSpec(f"self-call on {caller}")
        if k < 1:
            raise InvalidSpec(f"edge {caller}->{callee}: fan-in must be >= 1, got {k}")
    if spec.fault.root_component not in names:
        raise InvalidSpec(f"unknown root component {spec.fault.root_component!r}")
    if spec.internal_metrics_per_component < 1:
        raise InvalidSpec("internal_metrics_per_component must be positive")
    if spec.pre_steps < 2 or spec.post_steps < 1:
        raise InvalidSpec("need pre_steps >= 2 and post_steps >= 1")
    if not (spec.base_latency > 0 and spec.noise_sigma > 0):
        raise InvalidSpec("base_latency and noise_sigma must be positive")
    if spec.fault.delta_internal < 0 or spec.fault.delta_latency < 0:
        raise InvalidSpec("fault deltas must be non-negative")
    if spec.ramp_steps < 0:
        raise InvalidSpec("ramp_steps must be non-negative")
    if not 0 <= spec.seed < 2**64:
        raise InvalidSpec("seed must be a 64-bit unsigned integer")
    callee_first_order(spec)


def latency_gain(spec: SimSpec) -> dict[str, float]:
    """Steady-state latency excess of every component per unit root delay."""
    gain = {c: 0.0 for c in spec.components}
    callees: dict[str, list[tuple[str, int]]] = {c: [] for c in spec.components}
    for caller, callee, k in spec.call_edges:
        callees[caller].append((callee, k))
    for comp in callee_first_order(spec):
        own = 1.0 if comp == spec.fault.root_component else 0.0
        gain[comp] = own + sum(k * gain[j] for j, k in callees[comp])
    return gain


def max_downstream_gain(spec: SimSpec) -> float:
    """Largest latency amplification seen by any non-root component."""
    gain = latency_gain(spec)
    others = [g for c, g in gain.items() if c != spec.fault.root_component]
    return max(others, default=0.0)


def with_bounded_amplification(spec: SimSpec, ratio: float = 2.0, margin: float = 20.0) -> SimSpec:
    """Raise the root's internal shift above every amplified downstream excess.

    The new shift (noise units) is at least ``ratio`` times the largest
    downstream latency excess plus ``margin``, never below the current
    value. This keeps external amplification bounded relative to the
    root's internal evidence, which the additive score needs in order to
    rank the root first. The multiplicative ratio absorbs errors in the
    fitted reference scale.
    """
    excess = max_downstream_gain(spec) * spec.fault.delta_latency / spec.noise_sigma
    shift = max(spec.fault.delta_internal, ratio * excess + margin)
    return replace(spec, fault=replace(spec.fault, delta_internal=shift))


def _noise(rng: np.random.Generator, n: int, pre: int, exact: bool) -> np.ndarray:
    z = rng.standard_normal(n)
    if exact:
        head = z[:pre]
        z[:pre] = (head - head.mean()) / head.std()
    return z


def simulate_case(spec: SimSpec, case_id: str | None = None) -> FailureCase:
    validate(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    pre, n = spec.pre_steps, spec.pre_steps + spec.post_steps
    t = np.arange(n, dtype=np.int64)
    post = (t >= pre).astype(np.float64)
    root = spec.fault.root_component
    shift = {
        Manifestation.BOTH: spec.fault.delta_internal,
        Manifestation.INTERNAL_WEAK: spec.fault.delta_internal * WEAK_FACTOR,
        Manifestation.EXTERNAL_ONLY: 0.0,
    }[spec.fault.manifestation]
    metrics = internal_metric_names(spec.internal_metrics_per_component)

    series: list[PropertySeries] = []
    latency_noise: dict[str, np.ndarray] = {}
    for comp in spec.components:
        for j, metric in enumerate(metrics):
            baseline = rng.uniform(20.0, 80.0)
            sigma = INTERNAL_CV * baseline
            values = baseline + sigma * _noise(rng, n, pre, spec.exact_reference)
            if comp == root and j == 0:
                values = values + shift * sigma * post
            series.append(PropertySeries(PropertyId(comp, metric, PropertyKind.INTERNAL), t, values))
        latency_noise[comp] = _noise(rng, n, pre, spec.exact_reference)

    if spec.ramp_steps > 0:
        growth = np.clip((t - pre + 1) / spec.ramp_steps, 0.0, 1.0)
    else:
        growth = post
    callees: dict[str, list[tuple[str, int]]] = {c: [] for c in spec.components}
    for caller, callee, k in spec.call_edges:
        callees[caller].append((callee, k))

    nominal: dict[str, float] = {}
    expected: dict[str, np.ndarray] = {}
    for comp in callee_first_order(spec):
        base = spec.base_latency + sum(k * nominal[j] for j, k in callees[comp])
        mu = np.full(n, base)
        if comp == root:
            mu += spec.fault.delta_latency * post
        for j, k in callees[comp]:
            mu += k * growth * (expected[j] - nominal[j])
        nominal[comp], expected[comp] = base, mu

    for comp in spec.components:
        values = expected[comp] + spec.noise_sigma * latency_noise[comp]
        series.append(PropertySeries(PropertyId(comp, LATENCY_METRIC, PropertyKind.EXTERNAL), t, values))

    series.sort(key=lambda s: (s.id.component, s.id.metric))
    return FailureCase(
        case_id=case_id or f"sim-{spec.seed}",
        series=tuple(series),
        inject_time=pre,
        ground_truth=frozenset([root]),
        fault_type=spec.fault.manifestation.value,
    )


def counterexample_spec(
    k: int,
    delta: float,
    seed: int,
    *,
    noise_sigma: float = 0.005,
    base_latency: float = 0.05,
    pre_steps: int = 200,
    post_steps: int = 50,
    ramp_steps: int = 0,
    internal_fraction: float = 0.5,
) -> SimSpec:
    """Fan-in pair: ``caller`` invokes the faulty ``callee`` ``k`` times.

    The callee's internal shift is ``(k - 1 + internal_fraction) * delta``
    in noise units, between the caller's amplified latency excess
    ``k * delta`` and ``(k - 1) * delta``. The caller therefore carries
    the single largest deviation, yet the callee's combined internal plus
    external evidence is larger. Reference windows are moment-matched so
    the gap does not depend on estimation noise; the separation is
    comfortable for ``delta >= 8 * noise_sigma`` and the default fraction.
    """
    if k < 2:
        raise ValueError(f"fan-in counterexample needs k >= 2, got {k}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < internal_fraction < 1:
        raise ValueError("internal_fraction must lie in (0, 1)")
    return SimSpec(
        n_components=2,
        names=("callee", "caller"),
        call_edges=(("caller", "callee", k),),
        fault=FaultSpec("callee", (k - 1 + internal_fraction) * delta / noise_sigma, delta),
        internal_metrics_per_component=2,
        pre_steps=pre_steps,
        post_steps=post_steps,
        base_latency=base_latency,
        noise_sigma=noise_sigma,
        seed=seed,
        ramp_steps=ramp_steps,
        exact_reference=True,
    )


def counterexample_case(k: int, delta: float, seed: int, **kwargs) -> FailureCase:
    return simulate_case(counterexample_spec(k, delta, seed, **kwargs), case_id=f"fanin-k{k}-s{seed}")


def derive_seed(root_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([root_seed, index]).generate_state(1, np.uint64)[0])


def random_dag_spec(
    n_components: int,
    seed: int,
    *,
    max_fan_in: int = 5,
    layers: int = 4,
    extra_edge_prob: float = 0.15,
    delta_internal: float = 8.0,
    delta_latency_sigmas: float = 8.0,
    manifestation: Manifestation = Manifestation.BOTH,
    **overrides,
) -> SimSpec:
    """Random layered call graph with a random root.

    Components are spread over ``layers`` tiers; every component below the
    top tier gets one caller from the tier above, plus occasional extra
    edges to any deeper tier. Fan-in is uniform on ``1..max_fan_in``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    names = component_names(n_components)
    tier = np.sort(rng.integers(0, min(layers, n_components), size=n_components))
    tier[0] = 0
    edges: dict[tuple[str, str], int] = {}
    for i in range(n_components):
        if tier[i] == 0:
            continue
        callers = [j for j in range(n_components) if tier[j] == tier[i] - 1]
        if not callers:
            callers = [j for j in range(n_components) if tier[j] < tier[i]]
        caller = callers[rng.integers(len(callers))]
        edges[(names[caller], names[i])] = int(rng.integers(1, max_fan_in + 1))
    for i in range(n_components):
        for j in range(n_components):
            if tier[j] > tier[i] and (names[i], names[j]) not in edges and rng.random() < extra_edge_prob:
                edges[(names[i], names[j])] = int(rng.integers(1, max_fan_in + 1))
    root = names[rng.integers(n_components)]
    noise_sigma = overrides.pop("noise_sigma", 0.005)
    return SimSpec(
        n_components=n_components,
        names=tuple(names),
        call_edges=tuple((a, b, k) for (a, b), k in sorted(edges.items())),
        fault=FaultSpec(root, delta_internal, delta_latency_sigmas * noise_sigma, manifestation),
        noise_sigma=noise_sigma,
        seed=seed,
        **overrides,
    )


def generate_corpus(
    spec_template: SimSpec,
    n_cases: int,
    seed: int,
    out: str | Path,
    manifestations: Sequence[Manifestation] | None = None,
) -> dict[str, Any]:
    """Write ``n_cases`` case directories plus ``manifest.json`` under ``out``.

    Roots rotate round-robin over the components; ``manifestations``, when
    given, rotates the same way. The manifest records each case's root,
    seed and manifestation, the template hash, and its own content hash.
    """
    if n_cases < 1:
        raise ValueError("n_cases must be at least 1")
    validate(spec_template)
    out = Path(out)
    comps = spec_template.components
    entries = []
    for i in range(n_cases):
        root = comps[i % len(comps)]
        manifestation = (
            Manifestation(manifestations[i % len(manifestations)]) if manifestations else spec_template.fault.manifestation
        )
        spec = replace(
            spec_template,
            seed=derive_seed(seed, i),
            fault=replace(spec_template.fault, root_component=root, manifestation=manifestation),
        )
        case_id = f"case{i:04d}"
        write_case(simulate_case(spec, case_id=case_id), out / case_id)
        entries.append(
            {
                "case_id": case_id,
                "root_cause": [root],
                "seed": spec.seed,
                "manifestation": manifestation.value,
                "fault_type": manifestation.value,
            }
        )
    manifest: dict[str, Any] = {
        "spec_hash": canonical_hash(spec_template.to_dict()),
        "root_seed": seed,
        "n_cases": n_cases,
        "cases": entries,
    }
    manifest["manifest_hash"] = canonical_hash(manifest)
    write_manifest(out, manifest)
    return manifest
