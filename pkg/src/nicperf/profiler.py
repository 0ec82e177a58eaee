"""Offline data collection over the traffic-attribute space.

Three strategies produce training datasets from co-run measurements:

  * full      -- the complete Cartesian traffic grid, one or more random
                 contention draws per cell; expensive, used as the
                 reference for efficiency comparisons.
  * random    -- quota-many uniform-random (traffic, contention) draws.
  * adaptive  -- prune traffic attributes the NF is insensitive to, then
                 binary-split sampling along the joint attribute diagonal,
                 concentrating samples where solo throughput changes.

All strategies are seeded and deterministic, memoize repeated
configurations, and never exceed the sample quota.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
from enum import Enum
from pathlib import Path

import numpy as np

from .core import (
    DEFAULT_TRAFFIC,
    InvalidInputError,
    ResourceKind,
    ThroughputSample,
    TrafficProfile,
)

__all__ = [
    "ProfilingConfig",
    "ProfilingDataset",
    "Strategy",
    "QuotaExhaustedError",
    "adaptive_profile",
    "random_profile",
    "full_profile",
    "save_dataset",
    "load_dataset",
]

#: Attributes stored as integers in TrafficProfile.
_INT_ATTRS = ("flow_count", "packet_size")

#: Hard cap on full-profiling dataset size.
FULL_PROFILE_CAP = 20_000


class Strategy(str, Enum):
    FULL = "full"
    RANDOM = "random"
    ADAPTIVE = "adaptive"


class QuotaExhaustedError(RuntimeError):
    """The sample quota cannot cover the mandatory pruning probes."""


def _make_traffic(values: dict[str, float]) -> TrafficProfile:
    kw = {}
    for name, v in values.items():
        kw[name] = int(round(v)) if name in _INT_ATTRS else float(v)
    return DEFAULT_TRAFFIC.replace(**kw)


@dataclasses.dataclass(frozen=True)
class ProfilingConfig:
    """Hyperparameters of one profiling run.

    eps0 (attribute pruning) and eps1 (recursion stop) default to 5% of
    the NF's solo throughput at default traffic, resolved when profiling
    starts.  min_box_frac floors the recursion box width per attribute.
    """

    attributes: tuple[tuple[str, float, float], ...]
    quota: int = 200
    eps0: float | None = None
    eps1: float | None = None
    m: int = 10
    seed: int = 0
    min_box_frac: float = 1.0 / 512.0
    contention_resources: tuple[ResourceKind, ...] = (ResourceKind.MEMORY,)

    def __post_init__(self) -> None:
        if not self.attributes:
            raise InvalidInputError("need at least one traffic attribute")
        for name, lo, hi in self.attributes:
            if not lo < hi:
                raise InvalidInputError(f"attribute {name}: need min < max")
        if self.m < 1:
            raise InvalidInputError("m must be >= 1")
        if self.quota < self.m:
            raise InvalidInputError("quota must cover at least m samples")
        for eps in (self.eps0, self.eps1):
            if eps is not None and eps <= 0:
                raise InvalidInputError("thresholds must be positive")
        if not 0 < self.min_box_frac < 1:
            raise InvalidInputError("min_box_frac must be in (0, 1)")
        object.__setattr__(self, "attributes",
                           tuple((str(n), float(a), float(b))
                                 for n, a, b in self.attributes))
        object.__setattr__(self, "contention_resources",
                           tuple(ResourceKind(r) for r in self.contention_resources))

    def to_dict(self) -> dict:
        return {
            "attributes": [list(a) for a in self.attributes],
            "quota": self.quota,
            "eps0": self.eps0,
            "eps1": self.eps1,
            "m": self.m,
            "seed": self.seed,
            "min_box_frac": self.min_box_frac,
            "contention_resources": [r.value for r in self.contention_resources],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProfilingConfig":
        return cls(
            attributes=tuple((a[0], a[1], a[2]) for a in d["attributes"]),
            quota=int(d["quota"]),
            eps0=None if d.get("eps0") is None else float(d["eps0"]),
            eps1=None if d.get("eps1") is None else float(d["eps1"]),
            m=int(d.get("m", 10)),
            seed=int(d.get("seed", 0)),
            min_box_frac=float(d.get("min_box_frac", 1.0 / 512.0)),
            contention_resources=tuple(
                ResourceKind(r) for r in d.get("contention_resources", ["memory"])
            ),
        )


@dataclasses.dataclass
class ProfilingDataset:
    nf_name: str
    strategy: Strategy
    rows: list[ThroughputSample]
    pruned_attributes: tuple[str, ...]
    samples_used: int
    config: dict

    def __iter__(self):
        return iter(self.rows)


class _Book:
    """Mutable sample accounting: memoization, quota, and row collection."""

    def __init__(self, nf_name: str, strategy: Strategy, quota: int | None):
        self.nf_name = nf_name
        self.strategy = strategy
        self.quota = quota
        self.rows: list[ThroughputSample] = []
        self.used = 0
        self._memo: dict = {}

    def full(self) -> bool:
        return self.quota is not None and self.used >= self.quota


def _draw_levels(rng, resources) -> dict:
    """Random contention draw; the memory bench gets two independent
    knobs (access rate, working set) so their effects stay identifiable."""
    out = {}
    for r in resources:
        if r is ResourceKind.MEMORY:
            out[r] = (float(rng.uniform()), float(rng.uniform()))
        else:
            out[r] = float(rng.uniform())
    return out


def _level_key(v):
    return tuple(v) if isinstance(v, tuple) else float(v)


def _level_on(v) -> bool:
    return max(v) > 0 if isinstance(v, tuple) else v > 0


def profile_one(book: _Book, traffic: TrafficProfile, levels, runner) -> float:
    """One (possibly memoized) co-run; counts only unseen configurations."""
    key = (traffic, tuple(sorted((k.value, _level_key(v))
                                 for k, v in levels.items() if _level_on(v))))
    hit = book._memo.get(key)
    if hit is not None:
        return hit
    sid = f"{book.nf_name}-{book.strategy.value}-{book.used:05d}"
    row = runner.sample(sid, traffic, levels)
    book._memo[key] = row.observed_throughput
    book.rows.append(row)
    book.used += 1
    return row.observed_throughput


def _resolve_eps(config: ProfilingConfig, runner) -> tuple[float, float]:
    if config.eps0 is not None and config.eps1 is not None:
        return config.eps0, config.eps1
    base = runner.solo_throughput(DEFAULT_TRAFFIC)
    dflt = 0.05 * base
    return config.eps0 or dflt, config.eps1 or dflt


def adaptive_profile(nf_name: str, config: ProfilingConfig, runner) -> ProfilingDataset:
    """Two-phase adaptive profiling under a hard sample quota.

    Phase 1 probes solo throughput at each attribute's bounds (others at
    default) and prunes attributes whose swing stays under eps0.  Phase 2
    recursively splits the joint box of the remaining attributes: when
    the solo-throughput gap between the box corners reaches eps1, it
    collects m samples at the box midpoint under random contention and
    recurses into both halves, upper half first.
    """
    eps0, eps1 = _resolve_eps(config, runner)
    rng = np.random.default_rng(config.seed)
    book = _Book(nf_name, Strategy.ADAPTIVE, config.quota)

    if config.quota < 2 * len(config.attributes):
        raise QuotaExhaustedError(
            f"quota {config.quota} cannot cover {2 * len(config.attributes)} "
            "pruning probes"
        )

    kept: list[tuple[str, float, float]] = []
    pruned: list[str] = []
    for name, lo, hi in config.attributes:
        t_lo = profile_one(book, _make_traffic({name: lo}), {}, runner)
        t_hi = profile_one(book, _make_traffic({name: hi}), {}, runner)
        if abs(t_hi - t_lo) < eps0:
            pruned.append(name)
        else:
            kept.append((name, lo, hi))

    def draw_levels() -> dict:
        return _draw_levels(rng, config.contention_resources)

    names = [a[0] for a in kept]
    ranges = np.array([[a[1], a[2]] for a in kept], dtype=float)

    def recurse(lo: np.ndarray, hi: np.ndarray) -> None:
        if book.full():
            return
        t_lo = profile_one(book, _make_traffic(dict(zip(names, lo))), {}, runner)
        if book.full():
            return
        t_hi = profile_one(book, _make_traffic(dict(zip(names, hi))), {}, runner)
        if abs(t_hi - t_lo) < eps1:
            return
        widths = hi - lo
        floors = config.min_box_frac * (ranges[:, 1] - ranges[:, 0])
        if np.all(widths <= floors):
            return
        mid = (lo + hi) / 2.0
        mid_traffic = _make_traffic(dict(zip(names, mid)))
        for _ in range(config.m):
            if book.full():
                return
            profile_one(book, mid_traffic, draw_levels(), runner)
        recurse(mid, hi)
        recurse(lo, mid)

    if kept:
        recurse(ranges[:, 0].copy(), ranges[:, 1].copy())

    return ProfilingDataset(
        nf_name=nf_name,
        strategy=Strategy.ADAPTIVE,
        rows=book.rows,
        pruned_attributes=tuple(pruned),
        samples_used=book.used,
        config={**config.to_dict(), "eps0": eps0, "eps1": eps1},
    )


def random_profile(nf_name: str, config: ProfilingConfig, runner) -> ProfilingDataset:
    """Quota-many uniform-random (traffic, contention) samples, seeded."""
    rng = np.random.default_rng(config.seed)
    book = _Book(nf_name, Strategy.RANDOM, config.quota)
    attempts = 0
    while not book.full() and attempts < 20 * config.quota:
        attempts += 1
        values = {name: float(rng.uniform(lo, hi))
                  for name, lo, hi in config.attributes}
        levels = _draw_levels(rng, config.contention_resources)
        profile_one(book, _make_traffic(values), levels, runner)
    return ProfilingDataset(
        nf_name=nf_name,
        strategy=Strategy.RANDOM,
        rows=book.rows,
        pruned_attributes=(),
        samples_used=book.used,
        config=config.to_dict(),
    )


def full_profile(
    nf_name: str,
    grid: dict[str, list[float]],
    runner,
    *,
    contention_resources: tuple[ResourceKind, ...] = (ResourceKind.MEMORY,),
    draws_per_cell: int = 1,
    seed: int = 0,
    hard_cap: int = FULL_PROFILE_CAP,
) -> ProfilingDataset:
    """The complete Cartesian traffic grid with random contention draws."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise InvalidInputError("grid must list values for every attribute")
    size = draws_per_cell
    for v in grid.values():
        size *= len(v)
    if size > hard_cap:
        raise InvalidInputError(
            f"full grid would need {size} samples, above the cap of {hard_cap}"
        )
    rng = np.random.default_rng(seed)
    book = _Book(nf_name, Strategy.FULL, None)
    names = sorted(grid)
    for combo in itertools.product(*(grid[n] for n in names)):
        traffic = _make_traffic(dict(zip(names, combo)))
        for _ in range(draws_per_cell):
            profile_one(book, traffic, _draw_levels(rng, contention_resources), runner)
    return ProfilingDataset(
        nf_name=nf_name,
        strategy=Strategy.FULL,
        rows=book.rows,
        pruned_attributes=(),
        samples_used=book.used,
        config={"grid": {n: list(map(float, grid[n])) for n in names},
                "draws_per_cell": draws_per_cell, "seed": seed,
                "contention_resources": [r.value for r in contention_resources]},
    )


# --------------------------------------------------------------------------
# Persistence: JSONL rows plus a sidecar manifest.
# --------------------------------------------------------------------------

def _manifest_path(jsonl_path: Path) -> Path:
    return jsonl_path.with_suffix(".manifest.json")


def save_dataset(dataset: ProfilingDataset, path: str | Path) -> Path:
    """Writes rows as JSONL and the run manifest beside it; returns the
    manifest path."""
    path = Path(path)
    with path.open("w") as f:
        for row in dataset.rows:
            f.write(json.dumps(row.to_dict(), sort_keys=True,
                               separators=(",", ":")) + "\n")
    manifest = {
        "schema": "profiling-dataset",
        "nf": dataset.nf_name,
        "strategy": dataset.strategy.value,
        "samples_used": dataset.samples_used,
        "rows": len(dataset.rows),
        "pruned_attributes": list(dataset.pruned_attributes),
        "config": dataset.config,
    }
    mpath = _manifest_path(path)
    mpath.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return mpath


def load_dataset(path: str | Path) -> ProfilingDataset:
    path = Path(path)
    rows = [ThroughputSample.from_dict(json.loads(line))
            for line in path.read_text().splitlines() if line.strip()]
    mpath = _manifest_path(path)
    if mpath.exists():
        m = json.loads(mpath.read_text())
        return ProfilingDataset(
            nf_name=m["nf"],
            strategy=Strategy(m["strategy"]),
            rows=rows,
            pruned_attributes=tuple(m.get("pruned_attributes", [])),
            samples_used=int(m.get("samples_used", len(rows))),
            config=m.get("config", {}),
        )
    name = rows[0].target_nf if rows else "unknown"
    return ProfilingDataset(name, Strategy.RANDOM, rows, (), len(rows), {})
