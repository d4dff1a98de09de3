import json
import math

import numpy as np
import pytest

from prism_rca.ingest import read_manifest
from prism_rca.model import PropertyKind
from prism_rca.pipeline import PipelineConfig, diagnose
from prism_rca.pooling import pool_component
from prism_rca.scoring import StepAgg, score_case
from prism_rca.simulator import (
    FaultSpec,
    InvalidSpec,
    Manifestation,
    SimSpec,
    counterexample_case,
    counterexample_spec,
    derive_seed,
    generate_corpus,
    latency_gain,
    random_dag_spec,
    simulate_case,
    validate,
    with_bounded_amplification,
)

EPS = 3.0
SIGMA = 0.005


def component_scores(case, step_agg=StepAgg.MAX):
    return {cs.component: cs for cs in pool_component(score_case(case, step_agg=step_agg))}


def latency(case, comp):
    return next(s for s in case.series if s.id.component == comp and s.id.kind is PropertyKind.EXTERNAL)


class TestSimulateCase:
    def test_single_component_both_scores_exceed_eps(self):
        spec = SimSpec(1, FaultSpec("svc00", 5.0, 5 * SIGMA), seed=3)
        cs = component_scores(simulate_case(spec))["svc00"]
        assert cs.s_internal > EPS and cs.s_external > EPS

    def test_deterministic(self):
        spec = random_dag_spec(8, seed=42)
        a, b = simulate_case(spec), simulate_case(spec)
        assert [s.id for s in a.series] == [s.id for s in b.series]
        assert all(x.values.tobytes() == y.values.tobytes() for x, y in zip(a.series, b.series))

    def test_layout(self):
        spec = SimSpec(3, FaultSpec("svc01"), internal_metrics_per_component=7, pre_steps=30, post_steps=10)
        case = simulate_case(spec)
        assert case.inject_time == 30
        assert case.ground_truth == {"svc01"}
        assert len(case.series) == 3 * 8
        metrics = sorted({s.id.metric for s in case.series})
        assert metrics == sorted(["cpu", "mem", "diskio", "socket", "queue", "cpu2", "mem2", "latency"])

    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_amplification_law(self, k):
        delta = 10 * SIGMA
        spec = SimSpec(
            2,
            FaultSpec("callee", 8.0, delta),
            names=("callee", "caller"),
            call_edges=(("caller", "callee", k),),
            pre_steps=200,
            post_steps=100,
            seed=k,
        )
        case = simulate_case(spec)
        pre, post = latency(case, "caller").split(case.inject_time)
        excess = post.mean() - pre.mean()
        assert abs(excess - k * delta) <= 4 * SIGMA / math.sqrt(spec.post_steps)

    def test_manifestations(self):
        for m, expect_internal in [
            (Manifestation.BOTH, True),
            (Manifestation.INTERNAL_WEAK, False),
            (Manifestation.EXTERNAL_ONLY, False),
        ]:
            spec = SimSpec(1, FaultSpec("svc00", 8.0, 8 * SIGMA, m), pre_steps=200, post_steps=50, exact_reference=True)
            case = simulate_case(spec)
            cpu = next(s for s in case.series if s.id.metric == "cpu")
            pre, post = cpu.split(case.inject_time)
            shift = (post.mean() - pre.mean()) / pre.std()
            target = {Manifestation.BOTH: 8.0, Manifestation.INTERNAL_WEAK: 1.6, Manifestation.EXTERNAL_ONLY: 0.0}[m]
            assert abs(shift - target) < 0.6
            assert (component_scores(case, StepAgg.MEAN)["svc00"].s_internal > EPS) == expect_internal

    def test_exact_reference_moments(self):
        spec = SimSpec(2, FaultSpec("svc00"), exact_reference=True, noise_sigma=0.01)
        case = simulate_case(spec)
        for s in case.series:
            pre, _ = s.split(case.inject_time)
            if s.id.kind is PropertyKind.EXTERNAL:
                assert pre.std() == pytest.approx(0.01, rel=1e-9)

    def test_ramp_grows_linearly(self):
        spec = counterexample_spec(4, 10 * SIGMA, 0, ramp_steps=50, post_steps=50)
        spec = SimSpec.from_dict({**spec.to_dict(), "noise_sigma": 1e-12})
        case = simulate_case(spec)
        caller = latency(case, "caller").values[case.inject_time:] - 4 * spec.base_latency - spec.base_latency
        callee_delta = 10 * SIGMA
        ramp = np.clip(np.arange(1, 51) / 50, 0, 1)
        np.testing.assert_allclose(caller, 4 * callee_delta * ramp, atol=1e-9)


class TestValidation:
    def test_rejects_cycle(self):
        spec = SimSpec(2, FaultSpec("svc00"), call_edges=(("svc00", "svc01", 1), ("svc01", "svc00", 1)))
        with pytest.raises(InvalidSpec):
            validate(spec)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_components=2, fault=FaultSpec("nope")),
            dict(n_components=2, fault=FaultSpec("svc00"), call_edges=(("svc00", "svc01", 0),)),
            dict(n_components=2, fault=FaultSpec("svc00"), call_edges=(("svc00", "ghost", 1),)),
            dict(n_components=2, fault=FaultSpec("svc00"), noise_sigma=0.0),
            dict(n_components=2, fault=FaultSpec("svc00", delta_internal=-1)),
            dict(n_components=2, fault=FaultSpec("svc00"), pre_steps=1),
            dict(n_components=2, fault=FaultSpec("svc00"), post_steps=0),
            dict(n_components=2, fault=FaultSpec("svc00"), internal_metrics_per_component=0),
        ],
    )
    def test_rejects_bad_specs(self, kwargs):
        with pytest.raises(InvalidSpec):
            simulate_case(SimSpec(**kwargs))

    def test_from_file_errors(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text("{not json")
        with pytest.raises(InvalidSpec):
            SimSpec.from_file(p)
        p.write_text(json.dumps({"n_components": 2}))
        with pytest.raises(InvalidSpec):
            SimSpec.from_file(p)

    def test_dict_round_trip(self):
        spec = random_dag_spec(9, seed=5, manifestation=Manifestation.INTERNAL_WEAK)
        assert SimSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


class TestCounterexample:
    @pytest.mark.parametrize("k", range(2, 9))
    def test_evidence_pattern(self, k):
        case = counterexample_case(k, 10 * SIGMA, seed=k)
        cs = component_scores(case)
        assert cs["caller"].s_external > cs["callee"].s_external
        assert cs["callee"].s_internal > EPS
        # per-step maxima of pure noise cross 3 sigma often; the window mean does not
        mean = component_scores(case, StepAgg.MEAN)
        assert mean["caller"].s_internal <= EPS < mean["callee"].s_internal

    def test_k5_rankings(self):
        case = counterexample_case(5, 10 * SIGMA, seed=1)
        assert case.ground_truth == {"callee"}
        assert diagnose(case, PipelineConfig(rc_scorer="marginal")).components[0] == "caller"
        assert diagnose(case, PipelineConfig(rc_scorer="conjunctive")).components[0] == "callee"

    def test_no_amplification_at_k1(self):
        spec = SimSpec(
            2, FaultSpec("callee", 8.0, 10 * SIGMA), names=("callee", "caller"), call_edges=(("caller", "callee", 1),),
            pre_steps=200, post_steps=50, exact_reference=True, seed=2,
        )
        cs = component_scores(simulate_case(spec), StepAgg.MEAN)
        assert cs["caller"].s_external == pytest.approx(cs["callee"].s_external, rel=0.1)

    def test_reproducible(self):
        a, b = counterexample_case(3, 0.05, 9), counterexample_case(3, 0.05, 9)
        assert all(x.values.tobytes() == y.values.tobytes() for x, y in zip(a.series, b.series))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            counterexample_spec(1, 0.05, 0)
        with pytest.raises(ValueError):
            counterexample_spec(3, 0.0, 0)
        with pytest.raises(ValueError):
            counterexample_spec(3, 0.05, 0, internal_fraction=1.0)


class TestCorpusProperties:
    def test_fault_does_not_leak_into_other_internals(self):
        corrs = []
        for s in range(20):
            spec = random_dag_spec(6, seed=derive_seed(7, s), pre_steps=150, post_steps=100)
            case = simulate_case(spec)
            indicator = (case.series[0].timestamps >= case.inject_time).astype(float)
            root = spec.fault.root_component
            for series in case.series:
                if series.id.kind is PropertyKind.INTERNAL and series.id.component != root:
                    corrs.append(np.corrcoef(indicator, series.values)[0, 1])
        assert abs(np.mean(corrs)) < 0.2

    def test_internal_separation_with_mean_aggregation(self):
        ok = 0
        n = 200
        for i in range(n):
            seed = derive_seed(2000, i)
            nc = int(np.random.default_rng(seed).integers(5, 21))
            case = simulate_case(random_dag_spec(nc, seed))
            root = next(iter(case.ground_truth))
            cs = component_scores(case, StepAgg.MEAN)
            if cs[root].s_internal > EPS and all(v.s_internal <= EPS for c, v in cs.items() if c != root):
                ok += 1
        assert ok / n >= 0.95

    def test_gain_matches_path_products(self):
        spec = SimSpec(
            4, FaultSpec("svc03"),
            call_edges=(("svc00", "svc01", 2), ("svc00", "svc02", 1), ("svc01", "svc03", 3), ("svc02", "svc03", 4)),
        )
        assert latency_gain(spec) == {"svc00": 10.0, "svc01": 3.0, "svc02": 4.0, "svc03": 1.0}

    def test_bounded_amplification_only_raises(self):
        spec = random_dag_spec(10, seed=3)
        raised = with_bounded_amplification(spec)
        assert raised.fault.delta_internal >= spec.fault.delta_internal
        excess = max(g for c, g in latency_gain(spec).items() if c != spec.fault.root_component) * 8.0
        assert raised.fault.delta_internal >= 2 * excess + 20 - 1e-9


class TestGenerateCorpus:
    def test_round_robin_and_hash(self, tmp_path):
        template = random_dag_spec(5, seed=1, pre_steps=40, post_steps=10)
        m1 = generate_corpus(template, 10, 99, tmp_path / "a")
        m2 = generate_corpus(template, 10, 99, tmp_path / "b")
        assert m1["manifest_hash"] == m2["manifest_hash"]
        assert read_manifest(tmp_path / "a") == m1
        roots = [c["root_cause"][0] for c in m1["cases"]]
        assert set(roots) == set(template.components)
        assert len({c["seed"] for c in m1["cases"]}) == 10

    def test_manifestations_flagged(self, tmp_path):
        template = random_dag_spec(4, seed=2, pre_steps=40, post_steps=10)
        m = generate_corpus(template, 6, 0, tmp_path, manifestations=[Manifestation.BOTH, Manifestation.INTERNAL_WEAK])
        assert [c["manifestation"] for c in m["cases"]] == ["both", "internal-weak"] * 3

    def test_rejects_zero_cases(self, tmp_path):
        with pytest.raises(ValueError):
            generate_corpus(random_dag_spec(3, seed=0), 0, 0, tmp_path)
