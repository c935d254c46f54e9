import numpy as np
import pytest

from cvrecon.channel import (
    LinkParams,
    SymbolBlock,
    effective_snr,
    frame_rng,
    link_noise_variance,
    transmit,
)
from tests.conftest import reference_link


def test_transmittance_follows_attenuation():
    p = reference_link(50.0, 5.0)
    assert p.transmittance == pytest.approx(10.0 ** (-0.2 * 50.0 / 10.0), rel=1e-15)
    assert reference_link(0.0, 5.0).transmittance == 1.0


@pytest.mark.parametrize("field,value", [
    ("distance_km", -1.0),
    ("quantum_efficiency", 0.0),
    ("quantum_efficiency", 1.5),
    ("electronic_noise", -0.1),
    ("excess_noise_bob", -0.1),
    ("modulation_variance", 0.0),
])
def test_link_params_validation(field, value):
    kwargs = dict(distance_km=10.0, attenuation_db_per_km=0.2,
                  quantum_efficiency=0.6, electronic_noise=0.01,
                  excess_noise_bob=0.001, modulation_variance=5.0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        LinkParams(**kwargs)


def test_effective_snr_recomputed_independently():
    p = reference_link(25.0, 4.0)
    t = 10.0 ** (-0.2 * 25.0 / 10.0)
    expected = (0.6 * t * 4.0) / (1.0 + 0.01 + 0.6 * t * 0.001)
    assert effective_snr(p) == pytest.approx(expected, rel=1e-14)


def test_link_noise_variance_realises_the_snr():
    p = reference_link(30.0, 6.0)
    sigma_z2 = link_noise_variance(p)
    assert p.modulation_variance / sigma_z2 == pytest.approx(
        effective_snr(p), rel=1e-14)


def test_frame_rng_reproducible():
    a = frame_rng(42, 7, stream=3).normal(size=16)
    b = frame_rng(42, 7, stream=3).normal(size=16)
    assert np.array_equal(a, b)


def test_frame_rng_substreams_differ():
    base = frame_rng(42, 0, stream=0).normal(size=16)
    assert not np.array_equal(base, frame_rng(42, 1, stream=0).normal(size=16))
    assert not np.array_equal(base, frame_rng(42, 0, stream=1).normal(size=16))
    assert not np.array_equal(base, frame_rng(43, 0, stream=0).normal(size=16))


def test_transmit_deterministic_per_frame():
    x = np.linspace(-1, 1, 64)
    a = transmit(x, 0.5, seed=9, frame_index=4)
    b = transmit(x, 0.5, seed=9, frame_index=4)
    assert np.array_equal(a.y, b.y)
    c = transmit(x, 0.5, seed=9, frame_index=5)
    assert not np.array_equal(a.y, c.y)


def test_transmit_noise_statistics():
    x = np.zeros(200_000)
    blk = transmit(x, 0.8, seed=1)
    z = blk.y - x
    assert abs(z.mean()) < 0.01
    # per-quadrature variance is sigma_z2 / 2
    assert z.var() == pytest.approx(0.4, rel=0.02)


def test_transmit_noiseless_copies_input():
    x = np.linspace(-2, 2, 32)
    blk = transmit(x, 0.0, seed=0)
    assert np.array_equal(blk.y, x)
    assert blk.y is not x


def test_transmit_rejects_negative_variance():
    with pytest.raises(ValueError):
        transmit(np.zeros(8), -1.0, seed=0)


def test_symbol_block_requires_even_interleaved_length():
    with pytest.raises(ValueError):
        SymbolBlock(x=np.zeros(5), y=np.zeros(5), noise_variance=0.1, rng_seed=0)
    with pytest.raises(ValueError):
        SymbolBlock(x=np.zeros(4), y=np.zeros(6), noise_variance=0.1, rng_seed=0)
