"""Shared fixtures: reference codes and hypothesis settings."""

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cvrecon import ldpc
from cvrecon.channel import LinkParams

settings.register_profile(
    "suite", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

FIXTURES = Path(__file__).parent / "fixtures"


def ring_base(rows: int) -> np.ndarray:
    """Repeat-accumulate ring protograph base: one degree-(rows) repetition
    column followed by a closed chain of degree-2 parity columns."""
    base = np.zeros((rows, rows + 1), dtype=np.int64)
    base[:, 0] = 1
    for k in range(rows):
        base[k, 1 + k] = 1
        base[(k + 1) % rows, 1 + k] = 1
    return base


def reference_link(distance_km: float, modulation_variance: float) -> LinkParams:
    """Trusted-detector link used throughout the rate tests."""
    return LinkParams(
        distance_km=distance_km,
        attenuation_db_per_km=0.2,
        quantum_efficiency=0.6,
        electronic_noise=0.01,
        excess_noise_bob=0.001,
        modulation_variance=modulation_variance,
    )


@pytest.fixture(scope="session")
def code_low_rate():
    """Rate-0.1, N=260 accumulator-ring code (the short stage-1 code)."""
    code = ldpc.build_protograph(ring_base(9), 26, seed=1)
    assert code.N == 260 and code.girth_at_least_6
    return code


@pytest.fixture(scope="session")
def code_small():
    """Rate-1/2, N=32 code for fast unit tests."""
    return ldpc.build_protograph(np.ones((2, 4), dtype=np.int64), 8, seed=0)


@pytest.fixture(scope="session")
def code_tiny():
    """N=24 column-degree-3 code, small enough for exhaustive ML decoding."""
    code = ldpc.build_protograph(np.ones((3, 4), dtype=np.int64), 6, seed=3)
    assert code.N == 24
    return code


@pytest.fixture(scope="session")
def code_high_rate():
    """Rate-0.8, N=2000 syndrome-correction code (the long stage-2 code)."""
    code = ldpc.load_alist(FIXTURES / "rate08_n2000.alist")
    assert code.N == 2000 and code.M_rows == 400
    return code
