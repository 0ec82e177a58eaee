"""End-to-end training and prediction pipeline.

build() turns an opaque NF handle (a profiling runner) into a serialized
predictor bundle: per-resource models, the execution pattern, a solo
throughput table, and a counter footprint for placement decisions.
predict() evaluates the bundle at a (traffic, contention) point by
computing per-resource throughput drops and composing them according to
the NF's execution pattern.

The black-box memory model is trained on the memory-path rate rather
than raw end-to-end throughput: each profiled row's accelerator-stage
sojourn (known analytically once accelerator parameters are inferred) is
stripped out first, so the learned surface does not depend on
accelerator-bound traffic attributes.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from . import mem_model
from .accel_model import AccelModelParams, infer_params, predict_at_offered_load
from .composer import PerResourceDrops, compose_pipeline, compose_rtc, detect_pattern
from .core import (
    DEFAULT_TRAFFIC,
    CounterSnapshot,
    ExecutionPattern,
    InvalidInputError,
    ResourceKind,
    ThroughputSample,
    TrafficProfile,
    ZERO_COUNTERS,
)
from .mem_model import GbrHyperParams, GbrModel
from .profiler import ProfilingConfig, adaptive_profile, _make_traffic

__all__ = [
    "ACCEL_ATTRIBUTE",
    "ContentionDescriptor",
    "ExtrapolationError",
    "PredictionResult",
    "NfPredictor",
    "build",
]

BUNDLE_SCHEMA = "nf-predictor"
BUNDLE_VERSION = 1

#: Traffic attribute that modulates each accelerator's per-request time.
ACCEL_ATTRIBUTE = {
    ResourceKind.REGEX_ACCEL: "mtbr",
    ResourceKind.COMPRESSION_ACCEL: "packet_size",
}

#: Benchmark settings (queue count, per-request time) for queue-count
#: inference; known competitor costs spanning a wide range.
_INFER_BENCH = ((1, 5e-6), (2, 8e-6), (1, 20e-6))

#: Attribute grids for the per-request-time regression.
_INFER_ATTR_GRID = {
    "mtbr": (0.0, 200.0, 400.0, 700.0, 1100.0),
    "packet_size": (64.0, 400.0, 800.0, 1200.0, 1500.0),
}

#: Solo-sweep resolution per attribute axis.
_AXIS_POINTS = {"flow_count": 129}
_AXIS_POINTS_DEFAULT = 65


class ExtrapolationError(RuntimeError):
    """Requested traffic lies outside the profiled attribute box."""


@dataclasses.dataclass(frozen=True)
class ContentionDescriptor:
    """Competitor contention as seen by one target NF.

    counters aggregates (sums) the competitors' memory-side counters.
    accel maps each accelerator kind to the competitors using it, as
    (params, traffic attribute value, offered rate) triples; offered
    rate may be infinite for an always-backlogged competitor.
    """

    counters: CounterSnapshot = ZERO_COUNTERS
    accel: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        norm = {}
        for kind, comps in self.accel.items():
            kind = ResourceKind(kind)
            norm[kind] = tuple(
                (p, float(attr), float(rate)) for p, attr, rate in comps
            )
        object.__setattr__(self, "accel", norm)

    def to_dict(self) -> dict:
        return {
            "counters": self.counters.to_dict(),
            "accel": {
                kind.value: [
                    {
                        "params": p.to_dict(),
                        "attr_value": attr,
                        "offered_rate": "saturating" if math.isinf(rate) else rate,
                    }
                    for p, attr, rate in comps
                ]
                for kind, comps in self.accel.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContentionDescriptor":
        accel = {}
        for key, comps in d.get("accel", {}).items():
            entries = []
            for c in comps:
                rate = c.get("offered_rate", "saturating")
                rate = math.inf if rate == "saturating" else float(rate)
                entries.append(
                    (AccelModelParams.from_dict(c["params"]), float(c["attr_value"]), rate)
                )
            accel[ResourceKind(key)] = tuple(entries)
        counters = d.get("counters")
        return cls(
            counters=CounterSnapshot.from_dict(counters) if counters else ZERO_COUNTERS,
            accel=accel,
        )


@dataclasses.dataclass(frozen=True)
class PredictionResult:
    throughput: float
    t_solo: float
    drops: dict
    stage_rates: dict
    saturated: bool = False

    def to_dict(self) -> dict:
        return {
            "throughput": self.throughput,
            "t_solo": self.t_solo,
            "drops": {k.value: v for k, v in self.drops.items()},
            "stage_rates": {k.value: v for k, v in self.stage_rates.items()},
            "saturated": self.saturated,
        }


class _SoloTable:
    """Memory-path solo rate as a multiplicative per-axis interpolation.

    Each axis holds the rate measured while sweeping one attribute with
    the others at their defaults; the joint rate is the base rate scaled
    by each axis's relative effect.  Exact when the attribute effects are
    multiplicatively separable, which piece-wise-linear cache behavior is.
    """

    def __init__(self, base_rate: float, axes: dict[str, tuple[list, list]],
                 bounds: dict[str, tuple[float, float]]):
        self.base_rate = float(base_rate)
        self.axes = {k: (list(map(float, xs)), list(map(float, ys)))
                     for k, (xs, ys) in axes.items()}
        self.bounds = {k: (float(lo), float(hi)) for k, (lo, hi) in bounds.items()}

    def check_bounds(self, traffic: TrafficProfile) -> None:
        for name, (lo, hi) in self.bounds.items():
            v = traffic.attribute(name)
            if not lo <= v <= hi:
                raise ExtrapolationError(
                    f"{name}={v} outside the profiled range [{lo}, {hi}]"
                )

    def rate(self, traffic: TrafficProfile) -> float:
        out = self.base_rate
        for name, (xs, ys) in self.axes.items():
            v = traffic.attribute(name)
            out *= float(np.interp(v, xs, ys)) / self.base_rate
        return out

    def to_dict(self) -> dict:
        return {
            "base_rate": self.base_rate,
            "axes": {k: {"x": xs, "y": ys} for k, (xs, ys) in self.axes.items()},
            "bounds": {k: list(v) for k, v in self.bounds.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_SoloTable":
        return cls(
            base_rate=d["base_rate"],
            axes={k: (v["x"], v["y"]) for k, v in d["axes"].items()},
            bounds={k: (v[0], v[1]) for k, v in d["bounds"].items()},
        )


class _Footprint:
    """The NF's own observable counter emission, for placement checks.

    Rates scale with achieved throughput; the working set follows the
    flow count (interpolated from solo sweeps).  Main-memory traffic per
    cache reference grows with the combined working set of the NIC; the
    curve is recovered from the profiled co-run rows, falling back to the
    solo miss fraction when the total working set is unknown.
    """

    def __init__(self, car_per_pkt: float, irt_per_pkt: float,
                 mem_frac: float, wss_axis: tuple[list, list],
                 miss_curve: tuple[list, list] | None = None):
        self.car_per_pkt = float(car_per_pkt)
        self.irt_per_pkt = float(irt_per_pkt)
        self.mem_frac = float(mem_frac)
        self.wss_axis = (list(map(float, wss_axis[0])), list(map(float, wss_axis[1])))
        self.miss_curve = None if miss_curve is None else (
            list(map(float, miss_curve[0])), list(map(float, miss_curve[1])))

    def wss(self, traffic: TrafficProfile) -> float:
        xs, ys = self.wss_axis
        return float(np.interp(traffic.flow_count, xs, ys))

    def counters(self, traffic: TrafficProfile, throughput: float,
                 total_wss: float | None = None) -> CounterSnapshot:
        car = self.car_per_pkt * throughput
        irt = self.irt_per_pkt * throughput
        if total_wss is not None and self.miss_curve is not None:
            frac = float(np.interp(total_wss, *self.miss_curve))
        else:
            frac = self.mem_frac
        mem = car * frac
        return CounterSnapshot(
            ipc=irt / 5e9,
            irt=irt,
            l2crd=car * 0.6,
            l2cwr=car * 0.4,
            memrd=mem * 0.7,
            memwr=mem * 0.3,
            wss=self.wss(traffic),
        )

    def to_dict(self) -> dict:
        return {
            "car_per_pkt": self.car_per_pkt,
            "irt_per_pkt": self.irt_per_pkt,
            "mem_frac": self.mem_frac,
            "wss_axis": {"x": self.wss_axis[0], "y": self.wss_axis[1]},
            "miss_curve": None if self.miss_curve is None
            else {"x": self.miss_curve[0], "y": self.miss_curve[1]},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_Footprint":
        mc = d.get("miss_curve")
        return cls(d["car_per_pkt"], d["irt_per_pkt"], d["mem_frac"],
                   (d["wss_axis"]["x"], d["wss_axis"]["y"]),
                   None if mc is None else (mc["x"], mc["y"]))


@dataclasses.dataclass
class NfPredictor:
    """Serializable prediction bundle for one NF."""

    nf_name: str
    pattern: ExecutionPattern
    solo_table: _SoloTable
    mem_model: GbrModel | None
    accel_models: dict
    footprint: _Footprint
    metadata: dict

    @property
    def resource_models(self) -> dict:
        out = dict(self.accel_models)
        if self.mem_model is not None:
            out[ResourceKind.MEMORY] = self.mem_model
        return out

    @property
    def resources(self) -> tuple[ResourceKind, ...]:
        return tuple(sorted(self.resource_models, key=lambda k: k.value))

    def t_solo(self, traffic: TrafficProfile) -> float:
        """Predicted uncontended end-to-end throughput."""
        self.solo_table.check_bounds(traffic)
        rates = [self.solo_table.rate(traffic)]
        for kind, params in self.accel_models.items():
            rates.append(params.solo_rate(traffic.attribute(ACCEL_ATTRIBUTE[kind])))
        return _compose_rates(self.pattern, rates)

    # -- prediction ----------------------------------------------------------

    def stage_rates(
        self, traffic: TrafficProfile, contention: ContentionDescriptor
    ) -> dict:
        """Predicted per-resource contended rates at the given point."""
        self.solo_table.check_bounds(traffic)
        rates: dict[ResourceKind, float] = {}
        if self.mem_model is not None:
            # The wss feature is the combined working set: competitors'
            # plus the target's own (cache pressure is shared).
            counters = dataclasses.replace(
                contention.counters,
                wss=contention.counters.wss + self.footprint.wss(traffic),
            )
            feats = mem_model.feature_vector(counters, traffic)
            rates[ResourceKind.MEMORY] = max(
                1e-9,
                min(mem_model.predict(self.mem_model, feats),
                    self.solo_table.rate(traffic)),
            )
        for kind, params in self.accel_models.items():
            if kind not in contention.accel:
                raise InvalidInputError(
                    f"missing contention descriptor for {kind.value}"
                )
            attr = traffic.attribute(ACCEL_ATTRIBUTE[kind])
            rates[kind] = predict_at_offered_load(
                params, attr, contention.accel[kind]
            )
        return rates

    def predict(
        self, traffic: TrafficProfile, contention: ContentionDescriptor
    ) -> PredictionResult:
        t_solo = self.t_solo(traffic)
        rates = self.stage_rates(traffic, contention)

        # Per-resource drop: solo end-to-end minus the end-to-end rate with
        # only that resource contended.
        drops: dict[ResourceKind, float] = {}
        saturated = False
        for kind, r_cont in rates.items():
            alone = list(rates_with(self, traffic, kind, r_cont))
            t_alone = _compose_rates(self.pattern, alone)
            drop = max(0.0, t_solo - t_alone)
            if drop >= t_solo:
                drop = 0.99 * t_solo
                saturated = True
            drops[kind] = drop

        if len(drops) == 1:
            ((kind, drop),) = drops.items()
            throughput = t_solo - drop
        else:
            d = PerResourceDrops(t_solo, drops)
            if self.pattern is ExecutionPattern.PIPELINE:
                throughput = compose_pipeline(d)
            else:
                throughput = compose_rtc(d)
        throughput = min(throughput, t_solo)
        return PredictionResult(
            throughput=max(throughput, 0.0),
            t_solo=t_solo,
            drops=drops,
            stage_rates=rates,
            saturated=saturated,
        )

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema": BUNDLE_SCHEMA,
            "schema_version": BUNDLE_VERSION,
            "nf": self.nf_name,
            "pattern": self.pattern.value,
            "solo_table": self.solo_table.to_dict(),
            "mem_model": None if self.mem_model is None
            else json.loads(self.mem_model.to_json()),
            "accel_models": {
                kind.value: p.to_dict() for kind, p in self.accel_models.items()
            },
            "footprint": self.footprint.to_dict(),
            "metadata": self.metadata,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "NfPredictor":
        doc = json.loads(text)
        if doc.get("schema") != BUNDLE_SCHEMA:
            raise InvalidInputError("not a predictor bundle file")
        mem = doc.get("mem_model")
        return cls(
            nf_name=doc["nf"],
            pattern=ExecutionPattern(doc["pattern"]),
            solo_table=_SoloTable.from_dict(doc["solo_table"]),
            mem_model=None if mem is None else GbrModel.from_json(json.dumps(mem)),
            accel_models={
                ResourceKind(k): AccelModelParams.from_dict(v)
                for k, v in doc.get("accel_models", {}).items()
            },
            footprint=_Footprint.from_dict(doc["footprint"]),
            metadata=doc.get("metadata", {}),
        )


def _compose_rates(pattern: ExecutionPattern, rates: list[float]) -> float:
    if pattern is ExecutionPattern.PIPELINE:
        return min(rates)
    return 1.0 / sum(1.0 / r for r in rates)


def rates_with(p: NfPredictor, traffic: TrafficProfile,
               contended: ResourceKind, rate: float):
    """Per-resource rates with only one resource contended (rest solo)."""
    if p.mem_model is not None:
        yield rate if contended is ResourceKind.MEMORY else p.solo_table.rate(traffic)
    for kind, params in p.accel_models.items():
        if kind is contended:
            yield rate
        else:
            yield params.solo_rate(traffic.attribute(ACCEL_ATTRIBUTE[kind]))


# --------------------------------------------------------------------------
# Bundle construction
# --------------------------------------------------------------------------

def _touched_resources(runner, eps0: float) -> list[ResourceKind]:
    base = runner.solo_throughput(DEFAULT_TRAFFIC)
    touched = []
    for kind in (ResourceKind.MEMORY, ResourceKind.REGEX_ACCEL,
                 ResourceKind.COMPRESSION_ACCEL):
        contended = runner.throughput(DEFAULT_TRAFFIC, {kind: 1.0})
        if base - contended > eps0:
            touched.append(kind)
    return touched


def _infer_accel(runner, kind: ResourceKind) -> AccelModelParams:
    attr = ACCEL_ATTRIBUTE[kind]

    def corun(n_bench: int, t_bench: float) -> float:
        return runner.accel_corun(kind, n_bench, t_bench)

    def solo(value: float) -> float:
        return runner.accel_stage_solo(kind, _make_traffic({attr: value}))

    return infer_params(corun, solo, _INFER_BENCH, _INFER_ATTR_GRID[attr], kind)


def _mem_path_rate(e2e: float, pattern: ExecutionPattern,
                   accel_solo: list[float]) -> float | None:
    """Strip known accelerator-stage sojourn from an end-to-end rate.

    Returns None when the memory path is censored (a pipeline point where
    an accelerator stage is the binding one).
    """
    if not accel_solo:
        return e2e
    if pattern is ExecutionPattern.PIPELINE:
        if e2e >= 0.98 * min(accel_solo):
            return None
        return e2e
    inv = 1.0 / e2e - sum(1.0 / r for r in accel_solo)
    if inv <= 0:
        return None
    return 1.0 / inv


def build(
    nf_name: str,
    config: ProfilingConfig,
    runner,
    *,
    hyper: GbrHyperParams = GbrHyperParams(),
    dataset=None,
) -> NfPredictor:
    """Profile, train, and assemble the prediction bundle for one NF.

    Deterministic given the config seed.  Stages: resource touch
    detection, accelerator parameter inference, execution-pattern
    detection, adaptive memory-contention profiling plus model training,
    solo-throughput sweeps, and counter-footprint calibration.  Passing a
    previously collected ProfilingDataset skips the profiling stage.
    """
    t_solo_default = runner.solo_throughput(DEFAULT_TRAFFIC)
    eps0 = config.eps0 if config.eps0 is not None else 0.05 * t_solo_default
    touched = _touched_resources(runner, eps0)
    if not touched:
        raise InvalidInputError(
            f"{nf_name} shows no contention sensitivity; nothing to model"
        )

    accel_models = {
        kind: _infer_accel(runner, kind) for kind in touched if kind.is_accelerator
    }

    if len(touched) == 1:
        pattern = ExecutionPattern.RUN_TO_COMPLETION
        pattern_report = None
    else:
        report = detect_pattern(runner.probe, touched)
        pattern = report.pattern
        pattern_report = {"pipeline_mape": report.pipeline_mape,
                          "rtc_mape": report.rtc_mape}

    # Attribute bounds from the profiling config.
    bounds = {name: (lo, hi) for name, lo, hi in config.attributes}
    accel_bound = {ACCEL_ATTRIBUTE[k] for k in accel_models}

    # Pin accelerator-bound attributes low while sweeping the others, so
    # accelerator stages are as fast as possible and the memory path is
    # observable; strip their (analytically known) sojourn afterwards.
    pins = {a: bounds[a][0] for a in accel_bound if a in bounds}

    def accel_solos(traffic: TrafficProfile) -> list[float]:
        return [p.solo_rate(traffic.attribute(ACCEL_ATTRIBUTE[k]))
                for k, p in accel_models.items()]

    def mem_rate_at(values: dict[str, float]) -> tuple[TrafficProfile, float]:
        traffic = _make_traffic({**pins, **values})
        e2e = runner.solo_throughput(traffic)
        rate = _mem_path_rate(e2e, pattern, accel_solos(traffic))
        if rate is None:
            # Accelerator-censored pipeline point; fall back to the bound.
            rate = e2e
        return traffic, rate

    base_traffic, base_rate = mem_rate_at({})
    axes: dict[str, tuple[list, list]] = {}
    wss_axis: tuple[list, list] | None = None
    for name, lo, hi in config.attributes:
        if name in accel_bound:
            continue
        n_pts = _AXIS_POINTS.get(name, _AXIS_POINTS_DEFAULT)
        xs = list(np.linspace(lo, hi, n_pts))
        ys = []
        wss_ys = []
        for x in xs:
            traffic, rate = mem_rate_at({name: x})
            ys.append(rate)
            if name == "flow_count":
                wss_ys.append(runner.own_counters(traffic).wss)
        axes[name] = (xs, ys)
        if name == "flow_count":
            wss_axis = (xs, wss_ys)
    solo_table = _SoloTable(base_rate, axes, bounds)

    # Black-box memory model from adaptive profiling, retargeted to the
    # memory-path rate.
    gbr = None
    dataset_info: dict = {}
    if ResourceKind.MEMORY in touched:
        if dataset is None:
            dataset = adaptive_profile(nf_name, config, runner)
        base_own = runner.own_counters(DEFAULT_TRAFFIC).wss

        def own_wss(traffic: TrafficProfile) -> float:
            if wss_axis is None:
                return base_own
            return float(np.interp(traffic.flow_count, *wss_axis))

        rows = []
        for row in dataset.rows:
            rate = _mem_path_rate(row.observed_throughput, pattern,
                                  accel_solos(row.traffic))
            if rate is None:
                continue
            # Same combined-working-set convention as at predict time.
            counters = dataclasses.replace(
                row.competitor_counters,
                wss=row.competitor_counters.wss + own_wss(row.traffic),
            )
            rows.append(dataclasses.replace(
                row, observed_throughput=rate, competitor_counters=counters,
            ))
        gbr = mem_model.train(rows, hyper)
        dataset_info = {
            "strategy": dataset.strategy.value,
            "samples_used": dataset.samples_used,
            "rows_trained": len(rows),
            "pruned_attributes": list(dataset.pruned_attributes),
        }

    solo_counters = runner.own_counters(DEFAULT_TRAFFIC)
    car_pp = solo_counters.car / t_solo_default
    irt_pp = solo_counters.irt / t_solo_default
    mem_frac = ((solo_counters.memrd + solo_counters.memwr) / solo_counters.car
                if solo_counters.car > 0 else 0.0)
    if wss_axis is None:
        wss_axis = ([1.0], [solo_counters.wss])

    # Miss fraction as a function of the NIC's combined working set,
    # recovered from the profiled co-run rows (competitor wss plus the
    # target's own at the row's traffic).
    miss_curve = None
    if dataset is not None:
        pts = []
        for row in dataset.rows:
            c = row.competitor_counters
            if c.car <= 0:
                continue
            own = float(np.interp(row.traffic.flow_count, *wss_axis))
            pts.append((c.wss + own, (c.memrd + c.memwr) / c.car))
        if len(pts) >= 2:
            pts.sort()
            miss_curve = ([x for x, _ in pts], [y for _, y in pts])
    footprint = _Footprint(car_pp, irt_pp, mem_frac, wss_axis, miss_curve)

    metadata = {
        "version": BUNDLE_VERSION,
        "config": config.to_dict(),
        "hyper": hyper.to_dict(),
        "eps0": eps0,
        "touched": [k.value for k in touched],
        "pattern_report": pattern_report,
        "dataset": dataset_info,
        "t_solo_default": t_solo_default,
    }
    return NfPredictor(
        nf_name=nf_name,
        pattern=pattern,
        solo_table=solo_table,
        mem_model=gbr,
        accel_models=accel_models,
        footprint=footprint,
        metadata=metadata,
    )
