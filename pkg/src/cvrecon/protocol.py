"""Two-step reconciliation protocol orchestration.

Stage 1: per-frame multidimensional reconciliation with a short
blocklength low-rate code, decoder-confidence metric q = sum|l_out|, and
acceptance of the highest-q fraction (the AFR).

Stage 2: the accepted information bits are concatenated (Alice: her
estimates s_hat, Bob: his true s), Alice transmits the one-time-padded
syndrome of her string under the high-rate code, and Bob recovers the
residual error pattern by BSC syndrome decoding.

All per-frame randomness comes from substreams derived from
(master_seed, frame_index, stream), so frames are independent and any
processing order yields identical results.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import ldpc, multidim
from .channel import LinkParams, frame_rng, link_noise_variance, effective_snr

__all__ = [
    "VirtualChannel",
    "SelectionPolicy",
    "FrameRecord",
    "Stage1Batch",
    "Stage2State",
    "HashTag",
    "OneTimePad",
    "InsufficientKeyError",
    "PadReuseError",
    "SessionConfig",
    "SessionReport",
    "DecoderConfig",
    "bob_stage1",
    "alice_stage1",
    "select_frames",
    "simulate_stage1",
    "calibrate",
    "CalibrationResult",
    "alice_stage2",
    "bob_stage2",
    "run_session",
    "hash_tag",
    "hash_verify",
    "beta_to_snr",
]

# RNG stream ids (spawn_key component) per purpose
STREAM_CHANNEL = 0   # quantum-channel noise z
STREAM_QRNG = 1      # Bob's information bits s
STREAM_XSRC = 2      # Alice's modulation symbols x
STREAM_OTP = 3       # pre-shared one-time-pad material
STREAM_HASH = 4      # universal-hash key


@dataclass(frozen=True)
class VirtualChannel:
    """Direct BIAWGN virtual channel at a given SNR (skips the quadrature
    simulation; noise variance 1/snr, exact LLRs 2*r*snr)."""

    snr: float

    def __post_init__(self):
        if self.snr <= 0:
            raise ValueError("snr must be positive")


@dataclass(frozen=True)
class SelectionPolicy:
    mode: str = "by_afr"        # "by_afr" | "by_cutoff"
    target_afr: float = 1.0
    q_c: float = 0.0
    # drop frames whose decode did not satisfy the syndrome before ranking;
    # a non-converged frame can still carry a large q (confidently wrong),
    # so small accepted fractions benefit from this pre-filter
    require_syndrome_ok: bool = False

    def __post_init__(self):
        if self.mode not in ("by_afr", "by_cutoff"):
            raise ValueError("mode must be 'by_afr' or 'by_cutoff'")
        if self.mode == "by_afr" and not 0.0 < self.target_afr <= 1.0:
            raise ValueError("target_afr must be in (0, 1]")


@dataclass(frozen=True)
class DecoderConfig:
    dimension: int = 8
    sigma_z2: float | None = None      # channel noise variance (physical mode)
    snr: float | None = None           # fallback when block norms are withheld
    use_block_norms: bool = True
    max_iterations: int = 200
    min_sum: bool = False


@dataclass
class FrameRecord:
    """Per-frame protocol state on Alice's side after stage-1 decoding."""

    index: int
    s: np.ndarray | None = None        # Bob-side only (simulation ground truth)
    c: np.ndarray | None = None
    u: np.ndarray | None = None
    m: multidim.MappedBlock | None = None
    r: np.ndarray | None = None
    l: np.ndarray | None = None
    decode: ldpc.DecodeResult | None = None
    q: float = math.nan
    error: str | None = None


@dataclass(frozen=True)
class BobFrame:
    """Bob's stage-1 output for one frame."""

    index: int
    s: np.ndarray
    c: np.ndarray
    u: np.ndarray
    m: multidim.MappedBlock


@dataclass
class Stage1Batch:
    """Compact per-frame summary of a stage-1 simulation campaign."""

    q: np.ndarray              # (K,)
    syndrome_ok: np.ndarray    # (K,) bool
    info_errors: np.ndarray    # (K,) int, s_hat vs s mismatches
    s: np.ndarray              # (K, K_info) uint8, Bob's truth
    s_hat: np.ndarray          # (K, K_info) uint8, Alice's estimates
    iterations: np.ndarray     # (K,)

    @property
    def num_frames(self) -> int:
        return len(self.q)


@dataclass
class Stage2State:
    """Bookkeeping of the stage-2 syndrome exchange."""

    c_h: np.ndarray | None = None
    c_prime_h: np.ndarray | None = None
    p_a: np.ndarray | None = None
    p_b: np.ndarray | None = None
    otp_consumed: int = 0
    e_hat: np.ndarray | None = None
    c_hat_h: np.ndarray | None = None


@dataclass(frozen=True)
class HashTag:
    algorithm: str
    bits: bytes
    tag_bits: int


class InsufficientKeyError(RuntimeError):
    """Not enough one-time-pad material to encrypt the syndrome."""


class PadReuseError(RuntimeError):
    """The same pad object was offered to a second session."""


class OneTimePad:
    """Sequentially consumable pre-shared key bits, bound to one session."""

    def __init__(self, bits):
        self._bits = np.asarray(bits, dtype=np.uint8)
        self._pos = 0
        self._session = None

    @classmethod
    def from_seed(cls, seed: int, length: int) -> "OneTimePad":
        rng = frame_rng(seed, 0, stream=STREAM_OTP)
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))

    @property
    def remaining(self) -> int:
        return len(self._bits) - self._pos

    def bind(self, session_id: int) -> None:
        if self._session is not None and self._session != session_id:
            raise PadReuseError(
                f"pad already bound to session {self._session}, refusing session {session_id}")
        self._session = session_id

    def take(self, n: int) -> np.ndarray:
        if n > self.remaining:
            raise InsufficientKeyError(
                f"need {n} pad bits, only {self.remaining} remain")
        out = self._bits[self._pos:self._pos + n]
        self._pos += n
        return out


# ---------------------------------------------------------------------------
# stage 1
# ---------------------------------------------------------------------------

def frame_information_bits(code_l: ldpc.LdpcCode, seed: int, frame_index: int) -> np.ndarray:
    """Bob's QRNG draw for one frame (its own independent substream)."""
    rng = frame_rng(seed, frame_index, stream=STREAM_QRNG)
    return rng.integers(0, 2, size=code_l.K_info, dtype=np.uint8)


def bob_stage1(y_blocks, code_l: ldpc.LdpcCode, seed: int, *, dimension: int = 8) -> list[BobFrame]:
    """Encode fresh random bits per frame and map them onto the received blocks."""
    y_blocks = np.atleast_2d(np.asarray(y_blocks, dtype=float))
    if y_blocks.shape[1] != code_l.N:
        raise ValueError(f"block length {y_blocks.shape[1]} != code blocklength {code_l.N}")
    frames = []
    for i, y in enumerate(y_blocks):
        s = frame_information_bits(code_l, seed, i)
        c = ldpc.encode(code_l, s)
        u = 1.0 - 2.0 * c.astype(float)
        m = multidim.map_sequence(u, y, dimension)
        frames.append(BobFrame(index=i, s=s, c=c, u=u, m=m))
    return frames


def alice_stage1(x_blocks, received_m, code_l: ldpc.LdpcCode,
                 decoder_config: DecoderConfig) -> list[FrameRecord]:
    """Demap, compute LLRs, decode and score every frame; no selection yet.

    Degenerate frames (zero-norm blocks and the like) are recorded with an
    ``error`` string instead of aborting the batch.
    """
    x_blocks = np.atleast_2d(np.asarray(x_blocks, dtype=float))
    records = []
    for i, (x, m) in enumerate(zip(x_blocks, received_m)):
        rec = FrameRecord(index=i, m=m)
        try:
            out = multidim.demap_sequence(m, x)
            sigma_v2 = _sigma_v2(m, decoder_config)
            llr = multidim.compute_llr(out.r, sigma_v2, m.dimension)
            dec = ldpc.decode_bp(code_l, llr, decoder_config.max_iterations,
                                 min_sum=decoder_config.min_sum)
            rec.r, rec.l, rec.decode = out.r, llr, dec
            rec.q = ldpc.q_metric(dec)
        except (multidim.DegenerateBlockError, ValueError) as exc:
            rec.error = str(exc)
        records.append(rec)
    return records


def _sigma_v2(m: multidim.MappedBlock, cfg: DecoderConfig):
    if cfg.use_block_norms:
        if cfg.sigma_z2 is None:
            raise ValueError("sigma_z2 required when using block norms")
        return cfg.sigma_z2 / m.block_norms ** 2
    if cfg.snr is None:
        raise ValueError("snr fallback required when block norms are withheld")
    return 1.0 / cfg.snr


def select_frames(records, policy: SelectionPolicy) -> np.ndarray:
    """Accepted frame indices, sorted ascending.

    by_afr keeps exactly ceil(K*AFR) highest-q frames (ties broken toward
    the lower index); by_cutoff keeps every frame with q >= q_c. With
    ``require_syndrome_ok`` only syndrome-satisfying frames are eligible,
    so by_afr may return fewer than ceil(K*AFR) indices.
    """
    if isinstance(records, Stage1Batch):
        q = np.asarray(records.q, dtype=float)
        ok = np.asarray(records.syndrome_ok, dtype=bool)
    else:
        q = np.asarray([r.q for r in records], dtype=float)
        def _frame_ok(r):
            if hasattr(r, "decode"):
                return r.decode is not None and bool(r.decode.syndrome_ok)
            return bool(getattr(r, "syndrome_ok", True))
        ok = np.asarray([_frame_ok(r) for r in records], dtype=bool)
    if q.size == 0:
        raise ValueError("no frames to select from")
    idx = np.arange(q.size)
    eligible = ok if policy.require_syndrome_ok else np.ones(q.size, dtype=bool)
    if policy.mode == "by_afr":
        n = math.ceil(q.size * policy.target_afr)
        order = np.lexsort((idx, -q))
        order = order[eligible[order]]
        return np.sort(order[:n])
    return idx[(q >= policy.q_c) & eligible]


# -- vectorised campaign path ----------------------------------------------

def simulate_stage1(code_l: ldpc.LdpcCode, channel_spec, num_frames: int, seed: int,
                    *, dimension: int = 8, max_iterations: int = 200,
                    min_sum: bool = False, use_block_norms: bool = True,
                    chunk_size: int = 4096, frame_offset: int = 0) -> Stage1Batch:
    """Monte-Carlo stage-1 campaign (both parties simulated, ground truth kept).

    ``channel_spec`` is either :class:`LinkParams` (full quadrature and
    mapping pipeline) or :class:`VirtualChannel` (direct BIAWGN at a given
    SNR, which realises an exact reconciliation efficiency beta_l =
    R / I_AB(snr)).
    """
    K = int(num_frames)
    n_info = code_l.K_info
    q = np.empty(K)
    ok = np.empty(K, dtype=bool)
    errors = np.empty(K, dtype=np.int64)
    iters = np.empty(K, dtype=np.int64)
    s_all = np.empty((K, n_info), dtype=np.uint8)
    shat_all = np.empty((K, n_info), dtype=np.uint8)

    N = code_l.N
    for lo in range(0, K, chunk_size):
        hi = min(lo + chunk_size, K)
        b = hi - lo
        s = np.empty((b, n_info), dtype=np.uint8)
        for k in range(b):
            s[k] = frame_information_bits(code_l, seed, frame_offset + lo + k)
        c = ldpc.encode_batch(code_l, s)
        u = 1.0 - 2.0 * c.astype(float)

        if isinstance(channel_spec, VirtualChannel):
            sigma2 = 1.0 / channel_spec.snr
            noise = np.empty((b, N))
            for k in range(b):
                rng = frame_rng(seed, frame_offset + lo + k, stream=STREAM_CHANNEL)
                noise[k] = rng.normal(0.0, math.sqrt(sigma2), size=N)
            r = u + noise
            llr = (2.0 / sigma2) * r
        elif isinstance(channel_spec, LinkParams):
            va = channel_spec.modulation_variance
            sigma_z2 = link_noise_variance(channel_spec)
            x = np.empty((b, N))
            z = np.empty((b, N))
            for k in range(b):
                rx = frame_rng(seed, frame_offset + lo + k, stream=STREAM_XSRC)
                rz = frame_rng(seed, frame_offset + lo + k, stream=STREAM_CHANNEL)
                x[k] = rx.normal(0.0, math.sqrt(va / 2.0), size=N)
                z[k] = rz.normal(0.0, math.sqrt(sigma_z2 / 2.0), size=N)
            y = x + z
            mapped = multidim.map_sequence(u.reshape(-1), y.reshape(-1), dimension)
            out = multidim.demap_sequence(mapped, x.reshape(-1))
            if use_block_norms:
                sigma_v2 = sigma_z2 / mapped.block_norms ** 2
            else:
                sigma_v2 = 1.0 / effective_snr(channel_spec)
            llr = multidim.compute_llr(out.r, sigma_v2, dimension).reshape(b, N)
        else:
            raise TypeError(f"unsupported channel spec {channel_spec!r}")

        c_hat, post, it, good = ldpc.decode_bp_batch(
            code_l, llr, max_iterations, min_sum=min_sum)
        s_hat = c_hat[:, code_l.info_positions]
        sl = slice(lo, hi)
        q[sl] = np.sum(np.abs(post), axis=1)
        ok[sl] = good
        iters[sl] = it
        errors[sl] = np.sum(s_hat != s, axis=1)
        s_all[sl] = s
        shat_all[sl] = s_hat

    return Stage1Batch(q=q, syndrome_ok=ok, info_errors=errors,
                       s=s_all, s_hat=shat_all, iterations=iters)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass
class CalibrationResult:
    q_c: float
    ber_af_estimate: float
    table: list              # rows of (afr, q_c, ber_af, accepted, capacity_bsc)
    warning: str | None
    batch: Stage1Batch = field(repr=False, default=None)

    TABLE_COLUMNS = ("afr", "q_c", "ber_af", "accepted_frames", "capacity_bsc")


def _ranked_cumulative_ber(batch: Stage1Batch):
    """Frames ranked by q descending (ties toward lower index); cumulative
    info-bit error rate over the top-n prefix for every n."""
    idx = np.arange(batch.num_frames)
    order = np.lexsort((idx, -batch.q))
    cum_err = np.cumsum(batch.info_errors[order])
    n_info = batch.s.shape[1]
    prefix = np.arange(1, batch.num_frames + 1) * n_info
    return order, cum_err / prefix


def calibrate(code_l: ldpc.LdpcCode, channel_spec, target_afr: float,
              num_frames: int, seed: int, *, afr_grid=None,
              batch: Stage1Batch | None = None, **sim_kwargs) -> CalibrationResult:
    """Empirical q cutoff and accepted-fraction BER for a given channel/code.

    q_c is the empirical (1-AFR) quantile of q; BER_AF is the mean
    information-bit error rate over the accepted fraction. A precomputed
    ``batch`` can be reused to evaluate several AFR values.
    """
    if not 0.0 < target_afr <= 1.0:
        raise ValueError("target_afr must be in (0, 1]")
    if batch is None:
        batch = simulate_stage1(code_l, channel_spec, num_frames, seed, **sim_kwargs)
    K = batch.num_frames
    order, cum_ber = _ranked_cumulative_ber(batch)
    q_sorted = batch.q[order]

    if afr_grid is None:
        afr_grid = np.linspace(0.01, 1.0, 100)
    table = []
    for afr in np.atleast_1d(afr_grid):
        n = max(1, math.ceil(K * afr))
        n = min(n, K)
        table.append((float(afr), float(q_sorted[n - 1]), float(cum_ber[n - 1]),
                      n, 1.0 - _h2(cum_ber[n - 1])))

    n_t = max(1, min(math.ceil(K * target_afr), K))
    warning = None
    if n_t < 100:
        warning = (f"only {n_t} accepted frames at AFR={target_afr}; "
                   "estimates are statistically weak (want >= 100)")
    return CalibrationResult(
        q_c=float(q_sorted[n_t - 1]),
        ber_af_estimate=float(cum_ber[n_t - 1]),
        table=table,
        warning=warning,
        batch=batch,
    )


def _h2(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def beta_to_snr(code_rate: float, beta_l: float) -> float:
    """SNR at which a rate-R code has reconciliation efficiency beta_l
    (I_AB = R/beta_l per quadrature)."""
    i_ab = code_rate / beta_l
    return 2.0 ** (2.0 * i_ab) - 1.0


# ---------------------------------------------------------------------------
# stage 2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage2Message:
    p_a_padded: np.ndarray
    key_consumed: int
    data_length: int          # unpadded length of c_h


def alice_stage2(accepted_info_bits, code_h: ldpc.LdpcCode, otp: OneTimePad,
                 *, session_id: int = 0) -> Stage2Message:
    """Syndrome of the concatenated accepted bits, one-time padded."""
    c_h = np.concatenate([np.asarray(b, dtype=np.uint8).reshape(-1)
                          for b in accepted_info_bits]) \
        if isinstance(accepted_info_bits, (list, tuple)) \
        else np.asarray(accepted_info_bits, dtype=np.uint8).reshape(-1)
    if len(c_h) > code_h.N:
        raise ValueError(
            f"{len(c_h)} accepted bits exceed high-rate blocklength {code_h.N}")
    padded = np.zeros(code_h.N, dtype=np.uint8)
    padded[:len(c_h)] = c_h
    p_a = ldpc.syndrome(code_h, padded)
    otp.bind(session_id)
    pad = otp.take(len(p_a))
    return Stage2Message(p_a_padded=p_a ^ pad, key_consumed=len(p_a),
                         data_length=len(c_h))


def bob_stage2(own_info_bits, idx, p_a_padded, otp: OneTimePad,
               code_h: ldpc.LdpcCode, crossover_p: float, *,
               max_iterations: int = 200, session_id: int = 0,
               data_length: int | None = None):
    """Recover Alice's concatenated string from the padded syndrome.

    Returns (c_hat_h, converged). ``own_info_bits`` is indexable by frame;
    the frames named in ``idx`` are concatenated in ascending index order.
    """
    own = np.asarray(own_info_bits, dtype=np.uint8)
    idx = np.asarray(idx, dtype=np.int64)
    c_prime = own[idx].reshape(-1)
    if data_length is None:
        data_length = len(c_prime)
    padded = np.zeros(code_h.N, dtype=np.uint8)
    padded[:len(c_prime)] = c_prime
    otp.bind(session_id)
    pad = otp.take(len(p_a_padded))
    p_a = np.asarray(p_a_padded, dtype=np.uint8) ^ pad
    p_b = ldpc.syndrome(code_h, padded)
    res = ldpc.decode_syndrome_bsc(code_h, p_a ^ p_b, crossover_p,
                                   max_iterations=max_iterations)
    c_hat = (padded ^ res.e_hat)[:data_length]
    return c_hat, res.converged


# ---------------------------------------------------------------------------
# hashing
# ---------------------------------------------------------------------------

def _hash_key(seed: int) -> bytes:
    rng = frame_rng(seed, 0, stream=STREAM_HASH)
    return rng.integers(0, 256, size=32, dtype=np.uint8).tobytes()


def hash_tag(bits, tag_bits: int, key_seed: int = 0) -> HashTag:
    """Keyed BLAKE2b tag over a bit string, truncated to tag_bits.

    For distinct inputs the tags collide with probability <= 2**-tag_bits
    under the usual random-oracle model of the keyed hash.
    """
    if tag_bits < 1:
        raise ValueError("tag_bits must be >= 1")
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    payload = len(bits).to_bytes(8, "little") + np.packbits(bits).tobytes()
    digest = hashlib.blake2b(payload, key=_hash_key(key_seed),
                             digest_size=max(1, (tag_bits + 7) // 8)).digest()
    # mask trailing bits beyond tag_bits
    arr = np.frombuffer(digest, dtype=np.uint8).copy()
    extra = len(arr) * 8 - tag_bits
    if extra:
        arr[-1] &= 0xFF << extra & 0xFF
    return HashTag(algorithm="blake2b", bits=arr.tobytes(), tag_bits=tag_bits)


def hash_verify(s_a, s_b, tag_bits: int, key_seed: int = 0) -> bool:
    """Compare universal-hash tags of two bit strings."""
    return hash_tag(s_a, tag_bits, key_seed) == hash_tag(s_b, tag_bits, key_seed)


# ---------------------------------------------------------------------------
# end-to-end session
# ---------------------------------------------------------------------------

@dataclass
class SessionConfig:
    code_low: ldpc.LdpcCode
    code_high: ldpc.LdpcCode
    channel: object                       # LinkParams | VirtualChannel
    num_frames: int
    seed: int
    policy: SelectionPolicy
    crossover_p: float = 0.01
    dimension: int = 8
    max_iterations_low: int = 200
    max_iterations_high: int = 200
    min_sum: bool = False
    use_block_norms: bool = True
    hash_tag_bits: int = 32
    chunk_size: int = 4096
    session_id: int = 1


@dataclass
class SessionReport:
    accepted_count: int
    afr_realized: float
    ber_af_realized: float
    stage2_converged: bool
    hash_ok: bool
    delivered_equal: bool
    key_consumed: int
    bits_delivered: int
    transcript_bytes: dict
    failure_stage: str | None = None

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["transcript_bytes"] = dict(self.transcript_bytes)
        return d


def run_session(config: SessionConfig) -> SessionReport:
    """In-process end-to-end execution of the two-step protocol."""
    code_l, code_h = config.code_low, config.code_high
    batch = simulate_stage1(
        code_l, config.channel, config.num_frames, config.seed,
        dimension=config.dimension, max_iterations=config.max_iterations_low,
        min_sum=config.min_sum, use_block_norms=config.use_block_norms,
        chunk_size=config.chunk_size)

    transcript = {
        "map_blocks": config.num_frames * (code_l.N * 8 + (code_l.N // config.dimension) * 8),
    }

    try:
        idx = select_frames(batch, config.policy)
    except ValueError:
        return SessionReport(0, 0.0, 0.0, False, False, False, 0, 0,
                             transcript, failure_stage="selection")
    if idx.size == 0:
        return SessionReport(0, 0.0, 0.0, False, False, False, 0, 0,
                             transcript, failure_stage="selection-empty")
    transcript["idx_list"] = 4 * idx.size

    n_info = code_l.K_info
    accepted = idx.size
    ber_af = float(np.sum(batch.info_errors[idx]) / (accepted * n_info))

    pad_bits_needed = code_h.M_rows
    otp_alice = OneTimePad.from_seed(config.seed, pad_bits_needed)
    otp_bob = OneTimePad.from_seed(config.seed, pad_bits_needed)

    c_h = batch.s_hat[idx].reshape(-1)        # Alice's concatenated estimates
    try:
        msg = alice_stage2(c_h, code_h, otp_alice, session_id=config.session_id)
    except (ValueError, InsufficientKeyError) as exc:
        return SessionReport(accepted, accepted / config.num_frames, ber_af,
                             False, False, False, 0, 0, transcript,
                             failure_stage=f"stage2-alice: {exc}")
    transcript["padded_syndrome"] = (msg.key_consumed + 7) // 8

    c_hat_h, converged = bob_stage2(
        batch.s, idx, msg.p_a_padded, otp_bob, code_h, config.crossover_p,
        max_iterations=config.max_iterations_high, session_id=config.session_id,
        data_length=msg.data_length)

    tag_bob = hash_tag(c_hat_h, config.hash_tag_bits, key_seed=config.seed)
    tag_alice = hash_tag(c_h, config.hash_tag_bits, key_seed=config.seed)
    hash_ok = tag_bob == tag_alice
    transcript["hash_tag"] = (config.hash_tag_bits + 7) // 8
    transcript["accept_reject"] = 1

    equal = bool(np.array_equal(c_hat_h, c_h))
    delivered = msg.data_length if (converged and hash_ok) else 0
    return SessionReport(
        accepted_count=accepted,
        afr_realized=accepted / config.num_frames,
        ber_af_realized=ber_af,
        stage2_converged=bool(converged),
        hash_ok=hash_ok,
        delivered_equal=equal,
        key_consumed=msg.key_consumed,
        bits_delivered=delivered,
        transcript_bytes=transcript,
        failure_stage=None if (converged and hash_ok) else "stage2-verify",
    )
