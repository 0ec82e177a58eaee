import math

import numpy as np
import pytest

from nicperf.accel_model import AccelModelParams
from nicperf.catalog import SimulatorRunner, get_nf
from nicperf.core import (
    DEFAULT_TRAFFIC,
    CounterSnapshot,
    ExecutionPattern,
    InvalidInputError,
    ResourceKind,
    TrafficProfile,
)
from nicperf.predictor import (
    ContentionDescriptor,
    ExtrapolationError,
    NfPredictor,
)

REGEX_BENCH = AccelModelParams(queue_count=1, t0=10e-6, a=0.0,
                               resource=ResourceKind.REGEX_ACCEL)


def no_contention(bundle):
    return ContentionDescriptor(accel={k: () for k in bundle.accel_models})


def test_build_flowmonitor_shape(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    assert p.pattern is ExecutionPattern.PIPELINE
    assert set(p.resources) == {ResourceKind.MEMORY, ResourceKind.REGEX_ACCEL}
    params = p.accel_models[ResourceKind.REGEX_ACCEL]
    assert params.queue_count == 1
    assert params.t0 == pytest.approx(1.0e-6, rel=0.01)
    assert params.a == pytest.approx(0.003e-6, rel=0.01)
    assert p.metadata["dataset"]["samples_used"] <= 200


def test_build_detects_rtc_pattern(bundle_cache):
    assert bundle_cache("nids", 200).pattern is ExecutionPattern.RUN_TO_COMPLETION
    assert bundle_cache("ipcomp", 200).pattern is ExecutionPattern.RUN_TO_COMPLETION


def test_solo_prediction_matches_simulator(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    runner = SimulatorRunner(get_nf("flowmonitor"), seed=0)
    rng = np.random.default_rng(7)
    for _ in range(8):
        traffic = TrafficProfile(
            flow_count=int(rng.integers(1, 500_001)),
            packet_size=int(rng.integers(64, 1501)),
            mtbr=float(rng.uniform(0, 1100)),
        )
        truth = runner.solo_throughput(traffic)
        assert p.t_solo(traffic) == pytest.approx(truth, rel=0.01)


def test_zero_contention_predicts_solo(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    res = p.predict(DEFAULT_TRAFFIC, no_contention(p))
    assert res.throughput == pytest.approx(res.t_solo, rel=0.02)
    assert not res.saturated
    assert all(d >= 0.0 for d in res.drops.values())


def test_missing_accelerator_descriptor_rejected(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    with pytest.raises(InvalidInputError, match="regex_accel"):
        p.predict(DEFAULT_TRAFFIC, ContentionDescriptor())


def test_out_of_domain_traffic_rejected(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    with pytest.raises(ExtrapolationError):
        p.t_solo(TrafficProfile(flow_count=600_000))
    with pytest.raises(ExtrapolationError):
        p.predict(TrafficProfile(mtbr=2000.0), no_contention(p))


def test_prediction_bounded_by_solo(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    heavy = ContentionDescriptor(
        counters=CounterSnapshot(l2crd=200e6, l2cwr=130e6, memrd=80e6,
                                 memwr=40e6, wss=12 * 2**20),
        accel={ResourceKind.REGEX_ACCEL: ((REGEX_BENCH, 600.0, math.inf),)},
    )
    res = p.predict(DEFAULT_TRAFFIC, heavy)
    assert 0.0 <= res.throughput <= res.t_solo
    assert res.stage_rates[ResourceKind.MEMORY] < p.t_solo(DEFAULT_TRAFFIC)


def test_bundle_roundtrip_byte_identical(bundle_cache):
    p = bundle_cache("flowmonitor", 200)
    text = p.to_json()
    again = NfPredictor.from_json(text)
    assert again.to_json() == text
    res_a = p.predict(DEFAULT_TRAFFIC, no_contention(p))
    res_b = again.predict(DEFAULT_TRAFFIC, no_contention(again))
    assert res_a.throughput == res_b.throughput


def test_descriptor_roundtrip_with_saturating_rate():
    desc = ContentionDescriptor(
        counters=CounterSnapshot(l2crd=1e6, wss=3e6),
        accel={ResourceKind.REGEX_ACCEL: ((REGEX_BENCH, 600.0, math.inf),
                                          (REGEX_BENCH, 100.0, 5e4))},
    )
    again = ContentionDescriptor.from_dict(desc.to_dict())
    assert again == desc
    assert math.isinf(again.accel[ResourceKind.REGEX_ACCEL][0][2])


def test_memory_only_bundle_has_no_accel_models(bundle_cache):
    p = bundle_cache("iptunnel", 200)
    assert p.accel_models == {}
    assert p.resources == (ResourceKind.MEMORY,)
    res = p.predict(DEFAULT_TRAFFIC, ContentionDescriptor())
    assert res.throughput == pytest.approx(res.t_solo, rel=0.02)


def test_contended_memory_prediction_tracks_oracle(bundle_cache):
    p = bundle_cache("iptunnel", 200)
    runner = SimulatorRunner(get_nf("iptunnel"), seed=0)
    rng = np.random.default_rng(3)
    for i in range(6):
        traffic = TrafficProfile(flow_count=int(rng.integers(1, 500_001)))
        levels = {ResourceKind.MEMORY: (float(rng.uniform()),
                                        float(rng.uniform()))}
        row = runner.sample(f"t-{i}", traffic, levels)
        desc = ContentionDescriptor(counters=row.competitor_counters)
        pred = p.predict(traffic, desc).throughput
        assert pred == pytest.approx(row.observed_throughput, rel=0.10)
