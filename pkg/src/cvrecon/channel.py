"""Gaussian-modulated AWGN quantum channel model.

The physical link is summarised by :class:`LinkParams`; the effective SNR
uses a shot-noise-normalised homodyne model,

    SNR = (eta * T * V_A) / (1 + v_el + eta * T * xi_Bob),

which is the minimal model consistent with the usual parameter set
(transmittance T, quantum efficiency eta, electronic noise v_el, excess
noise xi_Bob, modulation variance V_A, all in shot-noise units). V_A is
the total per-symbol modulation variance (both quadratures).

Randomness is drawn from Philox counter-based generators. Per-frame
substreams are derived from (master_seed, frame_index) so that frames are
statistically independent and results do not depend on scheduling order.
Gaussians come from numpy's Generator.normal (ziggurat transform of
uniform draws), which is deterministic for a fixed stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LinkParams", "SymbolBlock", "frame_rng", "transmit", "effective_snr",
           "link_noise_variance"]


@dataclass(frozen=True)
class LinkParams:
    """Physical description of the fibre link and receiver."""

    distance_km: float
    attenuation_db_per_km: float
    quantum_efficiency: float
    electronic_noise: float
    excess_noise_bob: float
    modulation_variance: float

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError("distance_km must be >= 0")
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must be in (0, 1]")
        if self.electronic_noise < 0 or self.excess_noise_bob < 0:
            raise ValueError("noise terms must be non-negative")
        if self.modulation_variance <= 0:
            raise ValueError("modulation_variance must be > 0")

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.attenuation_db_per_km * self.distance_km / 10.0)


@dataclass(frozen=True)
class SymbolBlock:
    """Paired transmitted/received quadrature sequences of one frame."""

    x: np.ndarray
    y: np.ndarray
    noise_variance: float   # sigma_z^2, total over both quadratures
    rng_seed: int

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        if len(self.x) % 2 != 0:
            raise ValueError("blocklength must be even (interleaved I/Q)")


def frame_rng(master_seed: int, frame_index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent Philox substream for one frame (and purpose) of a campaign."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(frame_index, stream))
    return np.random.Generator(np.random.Philox(ss))


def transmit(x, sigma_z2: float, seed: int, frame_index: int = 0) -> SymbolBlock:
    """Add i.i.d. zero-mean Gaussian noise with per-quadrature variance sigma_z2/2."""
    if sigma_z2 < 0:
        raise ValueError("sigma_z2 must be non-negative")
    x = np.asarray(x, dtype=float)
    rng = frame_rng(seed, frame_index)
    if sigma_z2 == 0:
        y = x.copy()
    else:
        y = x + rng.normal(0.0, np.sqrt(sigma_z2 / 2.0), size=x.shape)
    return SymbolBlock(x=x, y=y, noise_variance=float(sigma_z2), rng_seed=seed)


def effective_snr(params: LinkParams) -> float:
    """Shot-noise-normalised homodyne SNR of the link."""
    eta_t = params.quantum_efficiency * params.transmittance
    signal = eta_t * params.modulation_variance
    noise = 1.0 + params.electronic_noise + eta_t * params.excess_noise_bob
    return signal / noise


def link_noise_variance(params: LinkParams) -> float:
    """Equivalent AWGN noise variance sigma_z^2 such that a modulation
    with per-symbol variance V_A sees the link's effective SNR."""
    return params.modulation_variance / effective_snr(params)
