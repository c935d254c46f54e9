"""Multi-dimensional reconciliation: the mapping M(u, y), its inverse, and
virtual-channel LLRs.

Blocks of d in {1, 2, 4, 8} consecutive samples are treated as elements of
the Cayley-Dickson division algebra of dimension d (reals, complex numbers,
quaternions, octonions). Bob computes m = u~ * inv(y~) per block, where
y~ = y/||y|| and u~ = u/sqrt(d) is the unit-norm BPSK block; Alice inverts
with her own samples, r = sqrt(d) * (m * x~). Because the algebras are
alternative, (u~ * inv(y~)) * y~ == u~ holds exactly, so r == u when y == x.

Evaluation order is fixed as (u * inv(y~)) first, then (m * x~); octonion
multiplication is non-associative, so this order is part of the contract
for bit-exact cross-checking of test vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MappedBlock", "VirtualChannelOutput", "cd_multiply", "cd_conjugate",
           "map_sequence", "demap_sequence", "compute_llr", "ALLOWED_DIMENSIONS"]

ALLOWED_DIMENSIONS = (1, 2, 4, 8)


class DegenerateBlockError(ValueError):
    """A d-dimensional sub-block of y (or x) has zero norm."""


@dataclass(frozen=True)
class MappedBlock:
    """Bob's classical message: mapped values plus per-block receiver norms."""

    m: np.ndarray             # length N
    block_norms: np.ndarray   # length N/d, ||y|| per block
    dimension: int

    def __post_init__(self):
        if self.dimension not in ALLOWED_DIMENSIONS:
            raise ValueError(f"dimension must be one of {ALLOWED_DIMENSIONS}")
        if len(self.m) % self.dimension != 0:
            raise ValueError("sequence length must be divisible by dimension")
        if np.any(self.block_norms <= 0):
            raise DegenerateBlockError("block norms must be strictly positive")


@dataclass(frozen=True)
class VirtualChannelOutput:
    """Alice's demapped sequence and (optionally) its LLRs."""

    r: np.ndarray
    llr: np.ndarray | None = None

    def __post_init__(self):
        if self.llr is not None and len(self.r) != len(self.llr):
            raise ValueError("r and llr must have equal length")


def cd_conjugate(a: np.ndarray) -> np.ndarray:
    """Cayley-Dickson conjugate along the last axis."""
    out = -a.copy()
    out[..., 0] = a[..., 0]
    return out


def cd_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cayley-Dickson product along the last axis (d in {1, 2, 4, 8}).

    Doubling rule: (a1, a2)(b1, b2) = (a1 b1 - b2* a2, b2 a1 + a2 b1*).
    """
    d = a.shape[-1]
    if d == 1:
        return a * b
    h = d // 2
    a1, a2 = a[..., :h], a[..., h:]
    b1, b2 = b[..., :h], b[..., h:]
    c1 = cd_multiply(a1, b1) - cd_multiply(cd_conjugate(b2), a2)
    c2 = cd_multiply(b2, a1) + cd_multiply(a2, cd_conjugate(b1))
    return np.concatenate([c1, c2], axis=-1)


def _as_blocks(seq, d: int) -> np.ndarray:
    seq = np.asarray(seq, dtype=float)
    if seq.size % d != 0:
        raise ValueError("sequence length must be divisible by dimension")
    return seq.reshape(-1, d)


def _unit_blocks(seq, d: int):
    blocks = _as_blocks(seq, d)
    norms = np.linalg.norm(blocks, axis=1)
    if np.any(norms == 0):
        raise DegenerateBlockError("zero-norm block in reference sequence")
    return blocks / norms[:, None], norms


def map_sequence(u, y, d: int) -> MappedBlock:
    """Bob's mapping: per block m = (u/sqrt(d)) * inv(y/||y||)."""
    if d not in ALLOWED_DIMENSIONS:
        raise ValueError(f"dimension must be one of {ALLOWED_DIMENSIONS}")
    u = np.asarray(u, dtype=float)
    if not np.all(np.abs(u) == 1):
        raise ValueError("u must be a BPSK sequence of +/-1")
    if u.size != np.asarray(y).size:
        raise ValueError("u and y must have equal length")
    y_unit, norms = _unit_blocks(y, d)
    u_blocks = _as_blocks(u, d) / np.sqrt(d)
    # inverse of a unit-norm element is its conjugate
    m = cd_multiply(u_blocks, cd_conjugate(y_unit))
    return MappedBlock(m=m.reshape(-1), block_norms=norms, dimension=d)


def demap_sequence(mapped: MappedBlock, x) -> VirtualChannelOutput:
    """Alice's inverse map: r = sqrt(d) * (m * x/||x||), so r == u when y == x."""
    d = mapped.dimension
    x_unit, _ = _unit_blocks(x, d)
    m_blocks = _as_blocks(mapped.m, d)
    r = np.sqrt(d) * cd_multiply(m_blocks, x_unit)
    return VirtualChannelOutput(r=r.reshape(-1))


def compute_llr(r, sigma_v2, d: int = 1) -> np.ndarray:
    """BIAWGN-approximation LLRs l = 2*sqrt(d)*r/sigma_v2.

    Positive LLR favours bit 0 (u = +1). ``sigma_v2`` is either a scalar or
    one value per d-dimensional block (e.g. sigma_z^2/||y||^2 from the
    transmitted block norms).
    """
    r = np.asarray(r, dtype=float)
    sigma_v2 = np.asarray(sigma_v2, dtype=float)
    if np.any(sigma_v2 <= 0):
        raise ValueError("sigma_v2 must be positive")
    if sigma_v2.ndim == 0:
        scale = 2.0 * np.sqrt(d) / sigma_v2
        return scale * r
    per_block = _as_blocks(r, d)
    if sigma_v2.shape != (per_block.shape[0],):
        raise ValueError("sigma_v2 must be scalar or one value per block")
    llr = 2.0 * np.sqrt(d) * per_block / sigma_v2[:, None]
    return llr.reshape(-1)
