import math

import numpy as np
import pytest

from prism_rca.baselines import BaselineKind, run_baseline
from prism_rca.evalharness import evaluate, top_at_k
from prism_rca.model import FailureCase, PropertyKind
from prism_rca.pipeline import PipelineConfig, diagnose
from prism_rca.scoring import ScorerKind
from prism_rca.simulator import counterexample_case

from conftest import make_series


def saturation_case(m, seed, pre=360, post=20):
    """m components whose latency jumps far beyond its reference range."""
    rng = np.random.default_rng(seed)
    root = int(rng.integers(m))
    series = []
    for j in range(m):
        name = f"svc{j}"
        base = rng.normal(size=pre + post)
        base[pre:] += rng.uniform(50, 500)
        series.append(make_series(name, "latency", PropertyKind.EXTERNAL, base))
        series.append(make_series(name, "cpu", PropertyKind.INTERNAL, rng.normal(size=pre + post)))
    return FailureCase(f"sat{seed}", tuple(series), pre, frozenset({f"svc{root}"}))


@pytest.mark.parametrize("kind", list(BaselineKind))
def test_single_component_first(kind):
    s = make_series("solo", "latency", PropertyKind.EXTERNAL, [1.0, 2.0, 1.0, 2.0, 9.0])
    case = FailureCase("one", (s,), 4, frozenset({"solo"}))
    assert run_baseline(case, kind).components == ["solo"]


def test_saturated_components_share_the_ceiling():
    case = saturation_case(4, 0)
    ranking = run_baseline(case, BaselineKind.IT_ORDERING)
    assert len({e.score for e in ranking.entries}) == 1
    assert ranking.entries[0].score == pytest.approx(math.log(721), abs=1e-12)
    assert ranking.components == sorted(ranking.components)
    assert ranking.tie_break_applied


def test_saturation_accuracy_is_tie_break_base_rate():
    m = 4
    cases = [saturation_case(m, s) for s in range(200)]
    results, _ = evaluate(cases, PipelineConfig(rc_scorer="it-ordering"))
    top1 = top_at_k(results, 1)
    # only the lexicographically first component can win; its root share is binomial(200, 1/m)
    assert abs(top1 - 1 / m) < 4 * math.sqrt((1 / m) * (1 - 1 / m) / 200)


@pytest.mark.parametrize("k", range(2, 9))
def test_counterexample_separates_marginal_from_pipeline(k):
    case = counterexample_case(k, 0.05, seed=k)
    assert run_baseline(case, BaselineKind.MARGINAL_DEVIATION).components[0] == "caller"
    assert diagnose(case, PipelineConfig()).components[0] == "callee"
    assert diagnose(case, PipelineConfig(rc_scorer="conjunctive")).components[0] == "callee"
    assert diagnose(case, PipelineConfig(rc_scorer="marginal")).components[0] == "caller"


def test_marginal_ablation_equals_marginal_baseline():
    for k in range(2, 6):
        case = counterexample_case(k, 0.05, seed=100 + k)
        a = diagnose(case, PipelineConfig(rc_scorer="marginal"))
        b = diagnose(case, PipelineConfig(rc_scorer="marginal-deviation"))
        assert a.entries == b.entries


def test_it_ordering_uses_it_variant_of_feature():
    case = saturation_case(3, 1)
    iqr = run_baseline(case, BaselineKind.IT_ORDERING, PipelineConfig(scorer=ScorerKind.IQR))
    assert all(e.score == pytest.approx(math.log(721)) for e in iqr.entries)
