"""Two-party wire mode: length-prefixed binary messages over a reliable
byte stream, plus Alice/Bob endpoint state machines.

Every message is {u8 type, u32 session-id, u32 payload-length, payload},
all integers little-endian. The classical channel is assumed error-free,
so there is no retransmission or integrity layer here.

Both endpoints derive the quantum-phase data (Bob's received samples,
Alice's modulation symbols) from the shared master seed; only classical
reconciliation messages cross the wire. The connecting side plays Alice
(the decoder, reverse reconciliation), the listening side plays Bob.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass, field

import numpy as np

from . import ldpc, multidim, protocol
from .channel import LinkParams, effective_snr, frame_rng, link_noise_variance
from .protocol import (
    STREAM_CHANNEL,
    STREAM_XSRC,
    OneTimePad,
    SessionConfig,
    VirtualChannel,
    frame_information_bits,
    hash_tag,
    select_frames,
)

__all__ = [
    "MSG_MAP_BLOCKS",
    "MSG_IDX_LIST",
    "MSG_PADDED_SYNDROME",
    "MSG_HASH_TAG",
    "MSG_ACCEPT",
    "MSG_REJECT",
    "Message",
    "WireProtocolError",
    "pack_message",
    "StreamDecoder",
    "send_message",
    "recv_message",
    "AliceEndpoint",
    "BobEndpoint",
    "pump",
    "run_listener",
    "run_connector",
]

MSG_MAP_BLOCKS = 1
MSG_IDX_LIST = 2
MSG_PADDED_SYNDROME = 3
MSG_HASH_TAG = 4
MSG_ACCEPT = 5
MSG_REJECT = 6

_VALID_TYPES = frozenset(
    (MSG_MAP_BLOCKS, MSG_IDX_LIST, MSG_PADDED_SYNDROME, MSG_HASH_TAG,
     MSG_ACCEPT, MSG_REJECT))

_HEADER = struct.Struct("<BII")
MAX_PAYLOAD = 1 << 31


class WireProtocolError(RuntimeError):
    """Malformed frame, unexpected message type, or session-id mismatch."""


@dataclass(frozen=True)
class Message:
    msg_type: int
    session_id: int
    payload: bytes = b""


def pack_message(msg: Message) -> bytes:
    if msg.msg_type not in _VALID_TYPES:
        raise WireProtocolError(f"unknown message type {msg.msg_type}")
    if len(msg.payload) >= MAX_PAYLOAD:
        raise WireProtocolError("payload too large")
    return _HEADER.pack(msg.msg_type, msg.session_id, len(msg.payload)) + msg.payload


class StreamDecoder:
    """Incremental frame decoder; feed arbitrary byte chunks, pop messages."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < _HEADER.size:
                return out
            mtype, sid, plen = _HEADER.unpack_from(self._buf)
            if mtype not in _VALID_TYPES:
                raise WireProtocolError(f"unknown message type {mtype}")
            if len(self._buf) < _HEADER.size + plen:
                return out
            payload = bytes(self._buf[_HEADER.size:_HEADER.size + plen])
            del self._buf[:_HEADER.size + plen]
            out.append(Message(mtype, sid, payload))

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


def send_message(sock: socket.socket, msg: Message) -> None:
    sock.sendall(pack_message(msg))


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    while n:
        chunk = sock.recv(min(n, 1 << 20))
        if not chunk:
            raise WireProtocolError("connection closed mid-message")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def recv_message(sock: socket.socket) -> Message:
    header = _recv_exact(sock, _HEADER.size)
    mtype, sid, plen = _HEADER.unpack(header)
    if mtype not in _VALID_TYPES:
        raise WireProtocolError(f"unknown message type {mtype}")
    payload = _recv_exact(sock, plen) if plen else b""
    return Message(mtype, sid, payload)


# ---------------------------------------------------------------------------
# payload codecs
# ---------------------------------------------------------------------------

def encode_map_blocks(m_values: np.ndarray, block_norms: np.ndarray) -> bytes:
    return (np.asarray(m_values, dtype="<f8").tobytes()
            + np.asarray(block_norms, dtype="<f8").tobytes())


def decode_map_blocks(payload: bytes, num_values: int, num_norms: int):
    expected = 8 * (num_values + num_norms)
    if len(payload) != expected:
        raise WireProtocolError(
            f"MAP_BLOCKS payload is {len(payload)} bytes, expected {expected}")
    flat = np.frombuffer(payload, dtype="<f8")
    return flat[:num_values], flat[num_values:]


def encode_idx_list(idx: np.ndarray) -> bytes:
    return np.asarray(idx, dtype="<u4").tobytes()


def decode_idx_list(payload: bytes) -> np.ndarray:
    if len(payload) % 4:
        raise WireProtocolError("IDX_LIST payload not a multiple of 4 bytes")
    return np.frombuffer(payload, dtype="<u4").astype(np.int64)


def encode_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def decode_bits(payload: bytes, num_bits: int) -> np.ndarray:
    if len(payload) != (num_bits + 7) // 8:
        raise WireProtocolError(
            f"bit payload is {len(payload)} bytes, expected {(num_bits + 7) // 8}")
    return np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:num_bits]


# ---------------------------------------------------------------------------
# shared quantum-phase simulation
# ---------------------------------------------------------------------------

def _bob_samples(config: SessionConfig, frame_index: int) -> np.ndarray:
    """Bob's received samples for one frame (his local view of the channel)."""
    ch = config.channel
    N = config.code_low.N
    if isinstance(ch, VirtualChannel):
        rng = frame_rng(config.seed, frame_index, stream=STREAM_CHANNEL)
        return rng.normal(0.0, np.sqrt(1.0 / ch.snr), size=N)   # noise only
    if isinstance(ch, LinkParams):
        rx = frame_rng(config.seed, frame_index, stream=STREAM_XSRC)
        rz = frame_rng(config.seed, frame_index, stream=STREAM_CHANNEL)
        x = rx.normal(0.0, np.sqrt(ch.modulation_variance / 2.0), size=N)
        z = rz.normal(0.0, np.sqrt(link_noise_variance(ch) / 2.0), size=N)
        return x + z
    raise TypeError(f"unsupported channel spec {ch!r}")


def _alice_samples(config: SessionConfig, frame_index: int) -> np.ndarray | None:
    """Alice's modulation symbols; None for the direct virtual channel."""
    ch = config.channel
    if isinstance(ch, VirtualChannel):
        return None
    rx = frame_rng(config.seed, frame_index, stream=STREAM_XSRC)
    return rx.normal(0.0, np.sqrt(ch.modulation_variance / 2.0),
                     size=config.code_low.N)


# ---------------------------------------------------------------------------
# endpoint state machines
# ---------------------------------------------------------------------------

@dataclass
class EndpointReport:
    role: str
    accepted_count: int = 0
    stage2_converged: bool = False
    hash_ok: bool = False
    key_consumed: int = 0
    bits_delivered: int = 0
    verdict: str | None = None
    delivered_bits: np.ndarray | None = field(repr=False, default=None)

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "delivered_bits"}
        return d


class BobEndpoint:
    """Listening side: maps fresh random codewords onto its received samples,
    then corrects its concatenated string against Alice's padded syndrome."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.report = EndpointReport(role="bob")
        self._s = None
        self._idx = None
        self._c_hat = None
        self.done = False

    def start(self) -> list[Message]:
        cfg = self.config
        code_l = cfg.code_low
        K = cfg.num_frames
        d = 1 if isinstance(cfg.channel, VirtualChannel) else cfg.dimension
        self._s = np.empty((K, code_l.K_info), dtype=np.uint8)
        m_all = np.empty((K, code_l.N))
        norms_all = np.empty((K, code_l.N // d))
        for i in range(K):
            s = frame_information_bits(code_l, cfg.seed, i)
            self._s[i] = s
            c = ldpc.encode(code_l, s)
            u = 1.0 - 2.0 * c.astype(float)
            recv = _bob_samples(cfg, i)
            if isinstance(cfg.channel, VirtualChannel):
                m_all[i] = u + recv                      # r = u + n directly
                norms_all[i] = 1.0
            else:
                mapped = multidim.map_sequence(u, recv, d)
                m_all[i] = mapped.m
                norms_all[i] = mapped.block_norms
        payload = encode_map_blocks(m_all.reshape(-1), norms_all.reshape(-1))
        return [Message(MSG_MAP_BLOCKS, cfg.session_id, payload)]

    def handle(self, msg: Message) -> list[Message]:
        cfg = self.config
        if msg.session_id != cfg.session_id:
            raise WireProtocolError(
                f"session id {msg.session_id} != expected {cfg.session_id}")
        if msg.msg_type == MSG_IDX_LIST:
            if self._idx is not None:
                raise WireProtocolError("duplicate IDX_LIST")
            self._idx = decode_idx_list(msg.payload)
            if self._idx.size and (self._idx.max() >= cfg.num_frames
                                   or self._idx.min() < 0):
                raise WireProtocolError("frame index out of range")
            self.report.accepted_count = int(self._idx.size)
            return []
        if msg.msg_type == MSG_PADDED_SYNDROME:
            if self._idx is None:
                raise WireProtocolError("PADDED_SYNDROME before IDX_LIST")
            code_h = cfg.code_high
            p_a_padded = decode_bits(msg.payload, code_h.M_rows)
            otp = OneTimePad.from_seed(cfg.seed, code_h.M_rows)
            c_hat, converged = protocol.bob_stage2(
                self._s, self._idx, p_a_padded, otp, code_h, cfg.crossover_p,
                max_iterations=cfg.max_iterations_high,
                session_id=cfg.session_id,
                data_length=self._idx.size * cfg.code_low.K_info)
            self._c_hat = c_hat
            self.report.stage2_converged = bool(converged)
            self.report.key_consumed = code_h.M_rows
            return []
        if msg.msg_type == MSG_HASH_TAG:
            if self._c_hat is None:
                raise WireProtocolError("HASH_TAG before PADDED_SYNDROME")
            own = hash_tag(self._c_hat, cfg.hash_tag_bits, key_seed=cfg.seed)
            ok = own.bits == msg.payload and self.report.stage2_converged
            self.report.hash_ok = own.bits == msg.payload
            self.report.verdict = "accept" if ok else "reject"
            self.done = True
            if ok:
                self.report.bits_delivered = int(self._c_hat.size)
                self.report.delivered_bits = self._c_hat
            return [Message(MSG_ACCEPT if ok else MSG_REJECT, cfg.session_id)]
        raise WireProtocolError(f"unexpected message type {msg.msg_type} for bob")


class AliceEndpoint:
    """Connecting side: decodes the virtual channel, selects frames, and
    reveals the one-time-padded syndrome plus a verification tag."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.report = EndpointReport(role="alice")
        self.done = False
        self._got_map = False

    def handle(self, msg: Message) -> list[Message]:
        cfg = self.config
        if msg.session_id != cfg.session_id:
            raise WireProtocolError(
                f"session id {msg.session_id} != expected {cfg.session_id}")
        if msg.msg_type == MSG_MAP_BLOCKS:
            if self._got_map:
                raise WireProtocolError("duplicate MAP_BLOCKS")
            self._got_map = True
            return self._stage1_and_2(msg)
        if msg.msg_type in (MSG_ACCEPT, MSG_REJECT):
            self.report.verdict = "accept" if msg.msg_type == MSG_ACCEPT else "reject"
            if msg.msg_type == MSG_REJECT:
                self.report.bits_delivered = 0
                self.report.delivered_bits = None
            self.done = True
            return []
        raise WireProtocolError(f"unexpected message type {msg.msg_type} for alice")

    def _stage1_and_2(self, msg: Message) -> list[Message]:
        cfg = self.config
        code_l = cfg.code_low
        K, N = cfg.num_frames, code_l.N
        virtual = isinstance(cfg.channel, VirtualChannel)
        d = 1 if virtual else cfg.dimension
        m_flat, norms_flat = decode_map_blocks(msg.payload, K * N, K * (N // d))
        m_all = m_flat.reshape(K, N)

        if virtual:
            llr = 2.0 * cfg.channel.snr * m_all
        else:
            norms = norms_flat.reshape(K, N // d)
            sigma_z2 = link_noise_variance(cfg.channel)
            x = np.empty((K, N))
            for i in range(K):
                x[i] = _alice_samples(cfg, i)
            mapped = multidim.MappedBlock(
                m=m_all.reshape(-1), block_norms=norms.reshape(-1), dimension=d)
            out = multidim.demap_sequence(mapped, x.reshape(-1))
            if cfg.use_block_norms:
                sigma_v2 = sigma_z2 / norms.reshape(-1) ** 2
            else:
                sigma_v2 = 1.0 / effective_snr(cfg.channel)
            llr = multidim.compute_llr(out.r, sigma_v2, d).reshape(K, N)

        c_hat, post, _, ok = ldpc.decode_bp_batch(
            code_l, llr, cfg.max_iterations_low, min_sum=cfg.min_sum)
        s_hat = c_hat[:, code_l.info_positions]
        q = np.sum(np.abs(post), axis=1)

        class _Q:  # select_frames needs .q and .syndrome_ok per frame
            def __init__(self, qv, okv):
                self.q = qv
                self.syndrome_ok = okv
        idx = select_frames([_Q(v, o) for v, o in zip(q, ok)], cfg.policy)
        self.report.accepted_count = int(idx.size)

        code_h = cfg.code_high
        otp = OneTimePad.from_seed(cfg.seed, code_h.M_rows)
        c_h = s_hat[idx].reshape(-1)
        stage2 = protocol.alice_stage2(c_h, code_h, otp, session_id=cfg.session_id)
        self.report.key_consumed = stage2.key_consumed
        self.report.stage2_converged = True
        tag = hash_tag(c_h, cfg.hash_tag_bits, key_seed=cfg.seed)
        self.report.hash_ok = True
        self.report.bits_delivered = int(c_h.size)
        self.report.delivered_bits = c_h
        return [
            Message(MSG_IDX_LIST, cfg.session_id, encode_idx_list(idx)),
            Message(MSG_PADDED_SYNDROME, cfg.session_id,
                    encode_bits(stage2.p_a_padded)),
            Message(MSG_HASH_TAG, cfg.session_id, tag.bits),
        ]


# ---------------------------------------------------------------------------
# transports
# ---------------------------------------------------------------------------

def pump(alice: AliceEndpoint, bob: BobEndpoint, max_steps: int = 64):
    """Run both endpoints to completion in-process (no sockets)."""
    queue = bob.start()
    for _ in range(max_steps):
        if not queue and alice.done and bob.done:
            break
        next_queue = []
        for msg in queue:
            if msg.msg_type in (MSG_MAP_BLOCKS, MSG_ACCEPT, MSG_REJECT):
                next_queue.extend(alice.handle(msg))
            else:
                next_queue.extend(bob.handle(msg))
        queue = next_queue
    else:
        raise WireProtocolError("session did not terminate")
    return alice.report, bob.report


def run_listener(config: SessionConfig, host: str, port: int,
                 timeout: float = 120.0) -> EndpointReport:
    """Serve one session as Bob; returns once the verdict is sent."""
    bob = BobEndpoint(config)
    with socket.create_server((host, port)) as srv:
        srv.settimeout(timeout)
        conn, _ = srv.accept()
        with conn:
            conn.settimeout(timeout)
            for msg in bob.start():
                send_message(conn, msg)
            while not bob.done:
                for reply in bob.handle(recv_message(conn)):
                    send_message(conn, reply)
    return bob.report


def run_connector(config: SessionConfig, host: str, port: int,
                  timeout: float = 120.0) -> EndpointReport:
    """Run one session as Alice against a listening Bob."""
    alice = AliceEndpoint(config)
    with socket.create_connection((host, port), timeout=timeout) as conn:
        conn.settimeout(timeout)
        while not alice.done:
            for reply in alice.handle(recv_message(conn)):
                send_message(conn, reply)
    return alice.report
