"""Operator-facing applications: SLA-aware placement and bottleneck diagnosis.

Placement is online: arrivals are placed one at a time onto a fleet of
SmartNICs with four NF slots each (8 cores, 2 per NF).  The
contention-aware strategy only uses prediction bundles, never the
oracle; the oracle comes back in evaluate_placement to score the
resulting fleet, and in the branch-and-bound search for the smallest
feasible fleet that placement quality is measured against.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings

from .catalog import get_nf
from .core import (
    ExecutionPattern,
    InvalidInputError,
    ResourceKind,
    TrafficProfile,
    ZERO_COUNTERS,
)
from .predictor import (
    ACCEL_ATTRIBUTE,
    ContentionDescriptor,
    NfPredictor,
    PredictionResult,
)
from .simulator import ContentionScenario, MemParams, run_scenario

__all__ = [
    "NF_SLOTS",
    "SlaSpec",
    "NfInstance",
    "Nic",
    "Fleet",
    "PlacementStrategy",
    "TrivialDiagnosisNotice",
    "predict_group",
    "place",
    "place_sequence",
    "OracleConfig",
    "PlacementReport",
    "evaluate_placement",
    "optimal_nic_count",
    "nic_lower_bound",
    "diagnose",
]

#: NF slots per SmartNIC: 8 cores, 2 dedicated cores per NF.
NF_SLOTS = 4

_GROUP_DAMPING = 0.5
_GROUP_TOL = 1e-3
_GROUP_MAX_ITER = 50


@dataclasses.dataclass(frozen=True)
class SlaSpec:
    """Maximum allowed throughput drop relative to the solo baseline."""

    max_drop_ratio: float

    def __post_init__(self) -> None:
        if not 0.0 < self.max_drop_ratio <= 1.0:
            raise InvalidInputError(
                f"max_drop_ratio must be in (0, 1], got {self.max_drop_ratio}"
            )

    def floor(self, solo: float) -> float:
        """Lowest acceptable throughput given a solo baseline."""
        return (1.0 - self.max_drop_ratio) * solo


@dataclasses.dataclass(frozen=True)
class NfInstance:
    """One arriving NF: its prediction bundle, traffic, and SLA."""

    instance_id: str
    predictor: NfPredictor
    traffic: TrafficProfile
    sla: SlaSpec

    def to_dict(self) -> dict:
        import json

        return {
            "instance_id": self.instance_id,
            "bundle": json.loads(self.predictor.to_json()),
            "traffic": self.traffic.to_dict(),
            "max_drop_ratio": self.sla.max_drop_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NfInstance":
        import json

        return cls(
            instance_id=d["instance_id"],
            predictor=NfPredictor.from_json(json.dumps(d["bundle"])),
            traffic=TrafficProfile.from_dict(d["traffic"]),
            sla=SlaSpec(d["max_drop_ratio"]),
        )


@dataclasses.dataclass
class Nic:
    nic_id: int
    residents: list[NfInstance] = dataclasses.field(default_factory=list)

    @property
    def free_slots(self) -> int:
        return NF_SLOTS - len(self.residents)


@dataclasses.dataclass
class Fleet:
    nics: list[Nic] = dataclasses.field(default_factory=list)

    def provision(self) -> Nic:
        nic = Nic(nic_id=len(self.nics))
        self.nics.append(nic)
        return nic

    @property
    def instances(self) -> list[NfInstance]:
        return [inst for nic in self.nics for inst in nic.residents]

    def to_dict(self) -> dict:
        return {
            "nics": [
                {
                    "nic_id": nic.nic_id,
                    "residents": [inst.to_dict() for inst in nic.residents],
                }
                for nic in self.nics
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Fleet":
        fleet = cls()
        for nd in d["nics"]:
            nic = Nic(nic_id=nd["nic_id"])
            nic.residents = [NfInstance.from_dict(r) for r in nd["residents"]]
            fleet.nics.append(nic)
        return fleet


class PlacementStrategy(str, enum.Enum):
    MONOPOLIZATION = "monopolization"
    GREEDY = "greedy"
    CONTENTION_AWARE = "contention-aware"


# --------------------------------------------------------------------------
# Group prediction
# --------------------------------------------------------------------------

def _group_descriptor(
    target: NfInstance, others: list[NfInstance], throughputs: dict,
    feeds: dict,
) -> ContentionDescriptor:
    # The miss fraction every NF sees depends on the combined working set
    # of the whole NIC, target included.
    total_wss = sum(
        inst.predictor.footprint.wss(inst.traffic) for inst in [target] + others
    )
    counters = ZERO_COUNTERS
    for other in others:
        counters = counters + other.predictor.footprint.counters(
            other.traffic, throughputs[other.instance_id], total_wss=total_wss
        )
    accel = {}
    for kind in target.predictor.accel_models:
        comps = []
        for other in others:
            params = other.predictor.accel_models.get(kind)
            if params is None:
                continue
            attr = other.traffic.attribute(ACCEL_ATTRIBUTE[kind])
            comps.append((params, attr, feeds[other.instance_id]))
        accel[kind] = tuple(comps)
    return ContentionDescriptor(counters=counters, accel=accel)


def predict_group(instances: list[NfInstance]) -> dict:
    """Predicted throughput per instance when co-located on one NIC.

    Self-consistent fixed point: each instance's competitors emit
    counters proportional to their own predicted throughput and offer
    accelerator load at their predicted memory-stage rate (an NF's
    accelerator feed is capped by its other stages, not by its end-to-end
    rate).  Returns instance_id -> PredictionResult.
    """
    if not instances:
        return {}
    ids = [inst.instance_id for inst in instances]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("instance ids must be unique within a group")
    thr = {
        inst.instance_id: inst.predictor.t_solo(inst.traffic)
        for inst in instances
    }
    feeds = dict(thr)
    results: dict[str, PredictionResult] = {}
    for _ in range(_GROUP_MAX_ITER):
        worst = 0.0
        for inst in instances:
            others = [o for o in instances if o.instance_id != inst.instance_id]
            desc = _group_descriptor(inst, others, thr, feeds)
            res = inst.predictor.predict(inst.traffic, desc)
            results[inst.instance_id] = res
            old = thr[inst.instance_id]
            new = (1 - _GROUP_DAMPING) * old + _GROUP_DAMPING * res.throughput
            thr[inst.instance_id] = new
            feeds[inst.instance_id] = res.stage_rates.get(
                ResourceKind.MEMORY, new
            )
            if old > 0:
                worst = max(worst, abs(new - old) / old)
        if worst < _GROUP_TOL:
            break
    return results


def _group_meets_slas(instances: list[NfInstance]) -> bool:
    results = predict_group(instances)
    for inst in instances:
        res = results[inst.instance_id]
        if res.saturated:
            return False
        if res.throughput < inst.sla.floor(res.t_solo):
            return False
    return True


# --------------------------------------------------------------------------
# Placement
# --------------------------------------------------------------------------

def place(fleet: Fleet, arrival: NfInstance, strategy: PlacementStrategy) -> int:
    """Place one arrival, provisioning a new NIC when needed.

    Returns the chosen NIC id.  Deterministic: ties break toward the
    lowest NIC id.
    """
    strategy = PlacementStrategy(strategy)
    if strategy is PlacementStrategy.MONOPOLIZATION:
        nic = fleet.provision()
    elif strategy is PlacementStrategy.GREEDY:
        open_nics = [n for n in fleet.nics if n.free_slots > 0]
        if open_nics:
            nic = max(open_nics, key=lambda n: (n.free_slots, -n.nic_id))
        else:
            nic = fleet.provision()
    else:
        nic = None
        for cand in fleet.nics:
            if cand.free_slots <= 0:
                continue
            if _group_meets_slas(cand.residents + [arrival]):
                nic = cand
                break
        if nic is None:
            nic = fleet.provision()
    nic.residents.append(arrival)
    return nic.nic_id


def place_sequence(
    arrivals: list[NfInstance], strategy: PlacementStrategy
) -> Fleet:
    fleet = Fleet()
    for arrival in arrivals:
        place(fleet, arrival, strategy)
    return fleet


# --------------------------------------------------------------------------
# Oracle evaluation
# --------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class OracleConfig:
    seed: int = 0
    llc_bytes: float = 6 * 2**20
    mem_params: MemParams = dataclasses.field(default_factory=MemParams)
    sim_cycles: int = 2500


class _Oracle:
    """Memoized ground-truth throughputs for instance groups."""

    def __init__(self, config: OracleConfig):
        self.config = config
        self._group_memo: dict = {}
        self._solo_memo: dict = {}

    def _key(self, instances) -> tuple:
        return tuple(sorted(
            (i.predictor.nf_name, i.traffic.flow_count, i.traffic.packet_size,
             i.traffic.mtbr, i.instance_id)
            for i in instances
        ))

    def group_throughputs(self, instances: list[NfInstance]) -> dict:
        key = self._key(instances)
        hit = self._group_memo.get(key)
        if hit is not None:
            return hit
        # Instance ids keep co-located copies of the same NF distinct.
        nfs = tuple(
            (dataclasses.replace(get_nf(i.predictor.nf_name), name=i.instance_id),
             i.traffic)
            for i in instances
        )
        result = run_scenario(ContentionScenario(
            nfs=nfs,
            seed=self.config.seed,
            llc_bytes=self.config.llc_bytes,
            mem_params=self.config.mem_params,
            sim_cycles=self.config.sim_cycles,
        ))
        out = dict(result.per_nf_throughput)
        self._group_memo[key] = out
        return out

    def solo_throughput(self, inst: NfInstance) -> float:
        key = (inst.predictor.nf_name, inst.traffic)
        hit = self._solo_memo.get(key)
        if hit is None:
            nfs = ((dataclasses.replace(get_nf(inst.predictor.nf_name),
                                        name="solo"), inst.traffic),)
            result = run_scenario(ContentionScenario(
                nfs=nfs,
                seed=self.config.seed,
                llc_bytes=self.config.llc_bytes,
                mem_params=self.config.mem_params,
                sim_cycles=self.config.sim_cycles,
            ))
            hit = result.per_nf_throughput["solo"]
            self._solo_memo[key] = hit
        return hit

    def violations(self, instances: list[NfInstance]) -> list[str]:
        if len(instances) <= 1:
            return []
        thr = self.group_throughputs(instances)
        out = []
        for inst in instances:
            solo = self.solo_throughput(inst)
            if thr[inst.instance_id] < inst.sla.floor(solo):
                out.append(inst.instance_id)
        return out


@dataclasses.dataclass(frozen=True)
class PlacementReport:
    nic_count: int
    nf_count: int
    violating_instances: tuple[str, ...]

    @property
    def violation_pct(self) -> float:
        if self.nf_count == 0:
            return 0.0
        return 100.0 * len(self.violating_instances) / self.nf_count

    def wastage_pct(self, optimum_nics: int) -> float:
        if optimum_nics <= 0:
            raise InvalidInputError("optimum NIC count must be positive")
        return 100.0 * (self.nic_count - optimum_nics) / optimum_nics

    def to_dict(self) -> dict:
        return {
            "nic_count": self.nic_count,
            "nf_count": self.nf_count,
            "violating_instances": list(self.violating_instances),
            "violation_pct": self.violation_pct,
        }


def evaluate_placement(
    fleet: Fleet, oracle_config: OracleConfig = OracleConfig()
) -> PlacementReport:
    """Score a fully placed fleet against the ground-truth simulator."""
    oracle = _Oracle(oracle_config)
    violating: list[str] = []
    for nic in fleet.nics:
        violating.extend(oracle.violations(nic.residents))
    return PlacementReport(
        nic_count=len(fleet.nics),
        nf_count=len(fleet.instances),
        violating_instances=tuple(violating),
    )


def nic_lower_bound(nf_count: int) -> int:
    """Slot-capacity lower bound on the NIC count."""
    return math.ceil(nf_count / NF_SLOTS)


def optimal_nic_count(
    instances: list[NfInstance],
    oracle_config: OracleConfig = OracleConfig(),
    max_instances: int = 12,
) -> int:
    """Smallest violation-free fleet size, by branch and bound.

    Feasibility of a candidate NIC load is checked with the ground-truth
    simulator and memoized per instance subset.  Exponential in the
    instance count; capped at ``max_instances``.
    """
    if len(instances) > max_instances:
        raise InvalidInputError(
            f"exhaustive search is capped at {max_instances} instances; "
            f"got {len(instances)} (use nic_lower_bound instead)"
        )
    if not instances:
        return 0
    oracle = _Oracle(oracle_config)
    feas_memo: dict[frozenset, bool] = {}

    def feasible(idx: frozenset) -> bool:
        hit = feas_memo.get(idx)
        if hit is None:
            hit = not oracle.violations([instances[i] for i in sorted(idx)])
            feas_memo[idx] = hit
        return hit

    best = len(instances)  # monopolization always works

    def search(next_i: int, bins: list[set]) -> None:
        nonlocal best
        remaining = len(instances) - next_i
        free = sum(NF_SLOTS - len(b) for b in bins)
        overflow_bins = math.ceil(max(0, remaining - free) / NF_SLOTS)
        if len(bins) + overflow_bins >= best:
            return
        if next_i == len(instances):
            best = len(bins)
            return
        for b in bins:
            if len(b) < NF_SLOTS and feasible(frozenset(b | {next_i})):
                b.add(next_i)
                search(next_i + 1, bins)
                b.remove(next_i)
        bins.append({next_i})
        search(next_i + 1, bins)
        bins.pop()

    search(0, [])
    return best


# --------------------------------------------------------------------------
# Diagnosis
# --------------------------------------------------------------------------

class TrivialDiagnosisNotice(UserWarning):
    """The bundle models a single resource; diagnosis is immediate."""


def diagnose(
    p: NfPredictor,
    traffic: TrafficProfile,
    contention: ContentionDescriptor,
) -> ResourceKind:
    """Predicted bottleneck resource at a (traffic, contention) point.

    The bottleneck is the resource whose contended stage rate is lowest:
    the binding stage of a pipeline, and the largest sojourn-time share
    under run-to-completion.  This also covers bottlenecks that bind at
    zero contention (a slow accelerator stage under heavy traffic),
    which a largest-throughput-drop rule would miss.
    """
    resources = p.resources
    if len(resources) < 2:
        warnings.warn(
            f"single-resource bundle: bottleneck is {resources[0].value} "
            "by construction",
            TrivialDiagnosisNotice,
        )
        return resources[0]
    rates = p.stage_rates(traffic, contention)
    return min(rates, key=lambda k: (rates[k], k.value))
