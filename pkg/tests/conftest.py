import json
from pathlib import Path

import pytest

from nicperf.catalog import ATTRIBUTE_RANGES, CATALOG, SimulatorRunner, get_nf
from nicperf.predictor import NfPredictor, build
from nicperf.profiler import ProfilingConfig


def default_config(**overrides) -> ProfilingConfig:
    kwargs = dict(
        attributes=tuple((n, lo, hi) for n, (lo, hi) in ATTRIBUTE_RANGES.items()),
        quota=200,
        seed=0,
    )
    kwargs.update(overrides)
    return ProfilingConfig(**kwargs)


@pytest.fixture(scope="session")
def bundle_cache(tmp_path_factory):
    """Builds prediction bundles once per session, on demand."""
    cache_dir = tmp_path_factory.mktemp("bundles")
    loaded: dict[str, NfPredictor] = {}

    def get(name: str, quota: int = 800) -> NfPredictor:
        key = f"{name}-{quota}"
        if key not in loaded:
            path = cache_dir / f"{key}.json"
            if path.exists():
                loaded[key] = NfPredictor.from_json(path.read_text())
            else:
                runner = SimulatorRunner(get_nf(name), seed=0)
                p = build(name, default_config(quota=quota), runner)
                path.write_text(p.to_json())
                loaded[key] = p
        return loaded[key]

    return get
