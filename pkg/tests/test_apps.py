import pytest

from nicperf.apps import (
    NF_SLOTS,
    Fleet,
    NfInstance,
    PlacementStrategy,
    SlaSpec,
    TrivialDiagnosisNotice,
    diagnose,
    evaluate_placement,
    nic_lower_bound,
    optimal_nic_count,
    place,
    place_sequence,
    predict_group,
)
from nicperf.core import (
    DEFAULT_TRAFFIC,
    InvalidInputError,
    ResourceKind,
    TrafficProfile,
)
from nicperf.predictor import ContentionDescriptor


def light_instance(bundle_cache, i, name="iptunnel", max_drop=0.5):
    # Small flow count keeps the working set tiny: easy to co-locate.
    return NfInstance(
        instance_id=f"{name}-{i}",
        predictor=bundle_cache(name),
        traffic=TrafficProfile(flow_count=100),
        sla=SlaSpec(max_drop),
    )


def test_sla_spec_validation_and_floor():
    with pytest.raises(InvalidInputError):
        SlaSpec(0.0)
    with pytest.raises(InvalidInputError):
        SlaSpec(1.5)
    assert SlaSpec(0.2).floor(1000.0) == pytest.approx(800.0)


def test_monopolization_provisions_per_arrival(bundle_cache):
    arrivals = [light_instance(bundle_cache, i) for i in range(3)]
    fleet = place_sequence(arrivals, PlacementStrategy.MONOPOLIZATION)
    assert len(fleet.nics) == 3
    assert all(len(nic.residents) == 1 for nic in fleet.nics)


def test_greedy_prefers_most_free_slots(bundle_cache):
    fleet = Fleet()
    a, b, c = (light_instance(bundle_cache, i) for i in range(3))
    assert place(fleet, a, PlacementStrategy.GREEDY) == 0
    assert place(fleet, b, PlacementStrategy.GREEDY) == 0
    # Force an emptier NIC into the fleet; greedy must pick it.
    fleet.provision()
    assert place(fleet, c, PlacementStrategy.GREEDY) == 1


def test_greedy_provisions_when_full(bundle_cache):
    arrivals = [light_instance(bundle_cache, i) for i in range(NF_SLOTS + 1)]
    fleet = place_sequence(arrivals, PlacementStrategy.GREEDY)
    assert len(fleet.nics) == 2
    assert len(fleet.nics[0].residents) == NF_SLOTS


def test_contention_aware_packs_compatible_instances(bundle_cache):
    arrivals = [light_instance(bundle_cache, i) for i in range(4)]
    fleet = place_sequence(arrivals, PlacementStrategy.CONTENTION_AWARE)
    assert len(fleet.nics) == 1
    assert not evaluate_placement(fleet).violating_instances


def test_contention_aware_separates_tight_slas(bundle_cache):
    # Flow tables sitting just below the LLC push each other past it once
    # co-located; a 1% tolerated drop cannot absorb that.
    arrivals = [
        NfInstance(f"fs-{i}", bundle_cache("flowstats"),
                   TrafficProfile(flow_count=8_000), SlaSpec(0.01))
        for i in range(3)
    ]
    fleet = place_sequence(arrivals, PlacementStrategy.CONTENTION_AWARE)
    assert len(fleet.nics) == 3


def test_predict_group_consistency(bundle_cache):
    insts = [light_instance(bundle_cache, i) for i in range(3)]
    results = predict_group(insts)
    assert set(results) == {i.instance_id for i in insts}
    solo = insts[0].predictor.t_solo(insts[0].traffic)
    for res in results.values():
        assert 0.0 < res.throughput <= res.t_solo
    # More competitors means no more throughput.
    two = predict_group(insts[:2])[insts[0].instance_id].throughput
    three = results[insts[0].instance_id].throughput
    assert three <= two + 1e-6 * solo
    with pytest.raises(InvalidInputError):
        predict_group([insts[0], insts[0]])
    assert predict_group([]) == {}


def test_monopolized_fleet_has_no_violations(bundle_cache):
    arrivals = [light_instance(bundle_cache, i, max_drop=0.05)
                for i in range(2)]
    fleet = place_sequence(arrivals, PlacementStrategy.MONOPOLIZATION)
    report = evaluate_placement(fleet)
    assert report.violating_instances == ()
    assert report.violation_pct == 0.0
    assert report.nic_count == 2


def test_overpacked_fleet_violates(bundle_cache):
    # Greedy stacks four near-LLC flow tables with near-zero drop budgets.
    arrivals = [
        NfInstance(f"fs-{i}", bundle_cache("flowstats"),
                   TrafficProfile(flow_count=8_000), SlaSpec(0.02))
        for i in range(4)
    ]
    fleet = place_sequence(arrivals, PlacementStrategy.GREEDY)
    assert len(fleet.nics) == 1
    assert len(evaluate_placement(fleet).violating_instances) > 0


def test_optimal_nic_count_and_wastage(bundle_cache):
    arrivals = [light_instance(bundle_cache, i, max_drop=0.5)
                for i in range(4)]
    opt = optimal_nic_count(arrivals)
    assert opt == 1
    fleet = place_sequence(arrivals, PlacementStrategy.CONTENTION_AWARE)
    report = evaluate_placement(fleet)
    assert report.wastage_pct(opt) == 0.0
    with pytest.raises(InvalidInputError):
        optimal_nic_count(arrivals * 4)  # 16 > the exhaustive cap
    assert optimal_nic_count([]) == 0


def test_nic_lower_bound():
    assert nic_lower_bound(0) == 0
    assert nic_lower_bound(1) == 1
    assert nic_lower_bound(4) == 1
    assert nic_lower_bound(5) == 2


def test_fleet_roundtrip(bundle_cache):
    arrivals = [light_instance(bundle_cache, i) for i in range(2)]
    fleet = place_sequence(arrivals, PlacementStrategy.GREEDY)
    again = Fleet.from_dict(fleet.to_dict())
    assert [n.nic_id for n in again.nics] == [n.nic_id for n in fleet.nics]
    assert [i.instance_id for i in again.instances] == \
        [i.instance_id for i in fleet.instances]
    assert again.instances[0].predictor.to_json() == \
        fleet.instances[0].predictor.to_json()


def test_diagnose_single_resource_is_trivial(bundle_cache):
    p = bundle_cache("iptunnel")
    with pytest.warns(TrivialDiagnosisNotice):
        kind = diagnose(p, DEFAULT_TRAFFIC, ContentionDescriptor())
    assert kind is ResourceKind.MEMORY


def test_diagnose_follows_the_slow_stage(bundle_cache):
    p = bundle_cache("flowmonitor")
    desc = ContentionDescriptor(accel={ResourceKind.REGEX_ACCEL: ()})
    # At the MTBR ceiling the regex stage is solo-bound and slowest.
    assert diagnose(p, DEFAULT_TRAFFIC.replace(mtbr=1100.0), desc) is \
        ResourceKind.REGEX_ACCEL
    assert diagnose(p, DEFAULT_TRAFFIC.replace(mtbr=0.0), desc) is \
        ResourceKind.MEMORY
