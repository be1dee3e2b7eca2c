import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fsorf.fso_link import (
    DetectionMode,
    FsoLinkConfig,
    PointingParams,
    TurbulenceParams,
    accumulate_rounds,
    single_round_series,
)

AT_TRIPLES = {
    "strong": (2.064, 1.342),
    "moderate": (2.296, 1.822),
    "weak": (2.902, 2.51),
}

XI2 = 1.44  # xi = 1.2 throughout the reference setup


def make_fso(at: str, r: int, rounds: int = 1, snr_db: float = 30.0) -> FsoLinkConfig:
    a, b = AT_TRIPLES[at]
    return FsoLinkConfig(
        turb=TurbulenceParams(a, b),
        point=PointingParams(XI2),
        detection=DetectionMode(r),
        mean_snr_db=snr_db,
        rounds_n1=rounds,
    )


@pytest.fixture(scope="session")
def series_cache():
    """Accumulated series keyed by (at, r, rounds); mean SNR fixed at 30 dB
    (rescale with .with_scale for other means)."""
    cache = {}

    def get(at: str, r: int, rounds: int):
        key = (at, r, rounds)
        if key not in cache:
            base_key = (at, r, 1)
            if base_key not in cache:
                cache[base_key] = single_round_series(make_fso(at, r))
            cache[key] = accumulate_rounds(cache[base_key], rounds)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def oracle_cache():
    """Convolution oracles keyed by (at, r)."""
    from oracles import FsoConvolutionOracle

    cache = {}

    def get(at: str, r: int, **kw):
        key = (at, r)
        if key not in cache:
            a, b = AT_TRIPLES[at]
            cache[key] = FsoConvolutionOracle(a, b, XI2, r, zeta_max=8.0, **kw)
        return cache[key]

    return get
