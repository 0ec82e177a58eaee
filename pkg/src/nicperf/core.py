"""Shared domain types and accuracy metrics.

Everything here is an immutable value type, safe to share between
concurrent simulation or profiling tasks.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

__all__ = [
    "ResourceKind",
    "ExecutionPattern",
    "TrafficProfile",
    "DEFAULT_TRAFFIC",
    "CounterSnapshot",
    "ZERO_COUNTERS",
    "ThroughputSample",
    "InvalidInputError",
    "mape",
    "band_accuracy",
]


class InvalidInputError(ValueError):
    """Raised when an operation's preconditions are violated."""


class ResourceKind(str, Enum):
    """On-NIC resources an NF stage can occupy."""

    MEMORY = "memory"
    REGEX_ACCEL = "regex_accel"
    COMPRESSION_ACCEL = "compression_accel"

    @property
    def is_accelerator(self) -> bool:
        return self is not ResourceKind.MEMORY


class ExecutionPattern(str, Enum):
    PIPELINE = "pipeline"
    RUN_TO_COMPLETION = "run_to_completion"


@dataclass(frozen=True)
class TrafficProfile:
    """Input-traffic attributes of one NF.

    flow_count: concurrent flows
    packet_size: bytes per packet, 64..1500
    mtbr: regex matches per MB of payload (match-to-byte ratio)
    """

    flow_count: int = 16000
    packet_size: int = 1500
    mtbr: float = 600.0

    def __post_init__(self) -> None:
        if self.flow_count < 1:
            raise InvalidInputError(f"flow_count must be >= 1, got {self.flow_count}")
        if not 64 <= self.packet_size <= 1500:
            raise InvalidInputError(
                f"packet_size must be in [64, 1500], got {self.packet_size}"
            )
        if self.mtbr < 0:
            raise InvalidInputError(f"mtbr must be >= 0, got {self.mtbr}")

    def attribute(self, name: str) -> float:
        return float(getattr(self, name))

    def replace(self, **kw) -> "TrafficProfile":
        d = asdict(self)
        d.update(kw)
        return TrafficProfile(**d)

    def to_dict(self) -> dict:
        return {
            "flow_count": self.flow_count,
            "packet_size": self.packet_size,
            "mtbr": self.mtbr,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrafficProfile":
        return cls(int(d["flow_count"]), int(d["packet_size"]), float(d["mtbr"]))


#: The default traffic profile: 16K flows, 1500B packets, 600 matches/MB.
DEFAULT_TRAFFIC = TrafficProfile()

#: Attribute names in canonical order (also the feature-vector tail order).
TRAFFIC_ATTRIBUTES = ("flow_count", "packet_size", "mtbr")


@dataclass(frozen=True)
class CounterSnapshot:
    """The 7 memory-subsystem performance counters observed during a co-run.

    ipc: instructions per cycle
    irt: instructions retired per second
    l2crd / l2cwr: L2 data cache read / write references per second
    memrd / memwr: main-memory read / write references per second
    wss: working set size in bytes
    """

    ipc: float = 0.0
    irt: float = 0.0
    l2crd: float = 0.0
    l2cwr: float = 0.0
    memrd: float = 0.0
    memwr: float = 0.0
    wss: float = 0.0

    def __post_init__(self) -> None:
        for name in ("ipc", "irt", "l2crd", "l2cwr", "memrd", "memwr", "wss"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"counter {name} must be non-negative")

    @property
    def car(self) -> float:
        """Cache access rate: sum of L2 read and write rates."""
        return self.l2crd + self.l2cwr

    def __add__(self, other: "CounterSnapshot") -> "CounterSnapshot":
        # Elementwise sum; competitor aggregation over multiple co-located
        # NFs (WSS included).
        return CounterSnapshot(
            ipc=self.ipc + other.ipc,
            irt=self.irt + other.irt,
            l2crd=self.l2crd + other.l2crd,
            l2cwr=self.l2cwr + other.l2cwr,
            memrd=self.memrd + other.memrd,
            memwr=self.memwr + other.memwr,
            wss=self.wss + other.wss,
        )

    def to_dict(self) -> dict:
        return {
            "ipc": self.ipc,
            "irt": self.irt,
            "l2crd": self.l2crd,
            "l2cwr": self.l2cwr,
            "memrd": self.memrd,
            "memwr": self.memwr,
            "wss": self.wss,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CounterSnapshot":
        return cls(**{k: float(d[k]) for k in
                      ("ipc", "irt", "l2crd", "l2cwr", "memrd", "memwr", "wss")})


ZERO_COUNTERS = CounterSnapshot()


@dataclass(frozen=True)
class ThroughputSample:
    """One profiling observation: the row format of all datasets.

    competitor_counters aggregates (sums) the counters of every co-located
    competitor; competitor_match_rate is their total accelerator match rate
    in matches/s.
    """

    scenario_id: str
    target_nf: str
    traffic: TrafficProfile
    competitor_counters: CounterSnapshot
    competitor_match_rate: float
    observed_throughput: float

    def __post_init__(self) -> None:
        if self.observed_throughput <= 0:
            raise InvalidInputError("observed_throughput must be positive")

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "target_nf": self.target_nf,
            "traffic": self.traffic.to_dict(),
            "competitor_counters": self.competitor_counters.to_dict(),
            "competitor_match_rate": self.competitor_match_rate,
            "observed_throughput": self.observed_throughput,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThroughputSample":
        return cls(
            scenario_id=str(d["scenario_id"]),
            target_nf=str(d["target_nf"]),
            traffic=TrafficProfile.from_dict(d["traffic"]),
            competitor_counters=CounterSnapshot.from_dict(d["competitor_counters"]),
            competitor_match_rate=float(d["competitor_match_rate"]),
            observed_throughput=float(d["observed_throughput"]),
        )


def _check_vectors(predicted: Sequence[float], actual: Sequence[float]) -> None:
    if len(predicted) == 0 or len(predicted) != len(actual):
        raise InvalidInputError(
            f"need equal non-zero lengths, got {len(predicted)} and {len(actual)}"
        )
    if any(a <= 0 for a in actual):
        raise InvalidInputError("all actual values must be positive")


def mape(predicted: Sequence[float], actual: Sequence[float]) -> float:
    """Mean absolute percentage error, in percent."""
    _check_vectors(predicted, actual)
    total = sum(abs(p - a) / a for p, a in zip(predicted, actual))
    return 100.0 * total / len(actual)


def band_accuracy(
    predicted: Sequence[float], actual: Sequence[float], band: float
) -> float:
    """Percentage of samples whose error relative to actual is within
    ``band`` percent."""
    _check_vectors(predicted, actual)
    if band <= 0:
        raise InvalidInputError(f"band must be positive, got {band}")
    hits = sum(
        1 for p, a in zip(predicted, actual) if 100.0 * abs(p - a) / a <= band
    )
    return 100.0 * hits / len(actual)
