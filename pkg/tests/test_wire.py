import socket
import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvrecon import wire
from cvrecon.protocol import SelectionPolicy, SessionConfig, VirtualChannel, run_session
from cvrecon.wire import (
    MSG_ACCEPT,
    MSG_HASH_TAG,
    MSG_IDX_LIST,
    MSG_MAP_BLOCKS,
    AliceEndpoint,
    BobEndpoint,
    Message,
    StreamDecoder,
    WireProtocolError,
    decode_bits,
    decode_idx_list,
    decode_map_blocks,
    encode_bits,
    encode_idx_list,
    encode_map_blocks,
    pack_message,
    pump,
    run_connector,
    run_listener,
)


# ---------------------------------------------------------------------------
# framing
# ---------------------------------------------------------------------------

@given(mtype=st.sampled_from(sorted(wire._VALID_TYPES)),
       sid=st.integers(0, 2**32 - 1),
       payload=st.binary(max_size=200),
       chunk=st.integers(1, 17))
def test_framing_roundtrip_with_fragmentation(mtype, sid, payload, chunk):
    raw = pack_message(Message(mtype, sid, payload))
    dec = StreamDecoder()
    got = []
    for i in range(0, len(raw), chunk):
        got.extend(dec.feed(raw[i:i + chunk]))
    assert got == [Message(mtype, sid, payload)]
    assert dec.pending_bytes == 0


def test_multiple_messages_in_one_chunk():
    raw = pack_message(Message(MSG_IDX_LIST, 1, b"abcd")) \
        + pack_message(Message(MSG_ACCEPT, 1))
    got = StreamDecoder().feed(raw)
    assert [m.msg_type for m in got] == [MSG_IDX_LIST, MSG_ACCEPT]


def test_unknown_type_rejected():
    with pytest.raises(WireProtocolError):
        pack_message(Message(99, 0, b""))
    bad = bytes([99]) + b"\x00" * 8
    with pytest.raises(WireProtocolError):
        StreamDecoder().feed(bad)


# ---------------------------------------------------------------------------
# payload codecs
# ---------------------------------------------------------------------------

@given(st.lists(st.integers(0, 1), min_size=1, max_size=300))
def test_bits_codec_roundtrip(bits):
    arr = np.array(bits, dtype=np.uint8)
    assert np.array_equal(decode_bits(encode_bits(arr), arr.size), arr)


def test_bits_codec_length_check():
    with pytest.raises(WireProtocolError):
        decode_bits(b"\x00", 9)


@given(st.lists(st.integers(0, 2**31), max_size=50))
def test_idx_codec_roundtrip(idx):
    arr = np.array(idx, dtype=np.int64)
    assert np.array_equal(decode_idx_list(encode_idx_list(arr)), arr)


def test_idx_codec_length_check():
    with pytest.raises(WireProtocolError):
        decode_idx_list(b"\x00\x01\x02")


def test_map_blocks_codec_roundtrip():
    rng = np.random.default_rng(0)
    m = rng.normal(size=40)
    norms = rng.uniform(1, 2, size=5)
    got_m, got_n = decode_map_blocks(encode_map_blocks(m, norms), 40, 5)
    assert np.array_equal(got_m, m) and np.array_equal(got_n, norms)
    with pytest.raises(WireProtocolError):
        decode_map_blocks(b"\x00" * 16, 40, 5)


# ---------------------------------------------------------------------------
# endpoint state machines
# ---------------------------------------------------------------------------

def _config(code_l, code_h, frames=40, afr=1.0, snr=100.0, **kw):
    return SessionConfig(
        code_low=code_l, code_high=code_h, channel=VirtualChannel(snr=snr),
        num_frames=frames, seed=23,
        policy=SelectionPolicy(mode="by_afr", target_afr=afr),
        max_iterations_low=50, session_id=9, **kw)


def test_pump_matches_in_process_session(code_low_rate, code_high_rate):
    cfg = _config(code_low_rate, code_high_rate)
    alice, bob = pump(AliceEndpoint(cfg), BobEndpoint(cfg))
    ref = run_session(cfg)
    assert alice.verdict == bob.verdict == "accept"
    assert alice.accepted_count == bob.accepted_count == ref.accepted_count
    assert alice.key_consumed == bob.key_consumed == ref.key_consumed
    assert alice.bits_delivered == bob.bits_delivered == ref.bits_delivered
    assert bob.hash_ok and bob.stage2_converged
    assert np.array_equal(alice.delivered_bits, bob.delivered_bits)
    d = alice.as_dict()
    assert "delivered_bits" not in d and d["role"] == "alice"


def test_pump_with_selection_filter(code_low_rate, code_high_rate):
    cfg = _config(code_low_rate, code_high_rate, frames=40, afr=0.5,
                  snr=100.0)
    cfg.policy = SelectionPolicy(mode="by_afr", target_afr=0.5,
                                 require_syndrome_ok=True)
    alice, bob = pump(AliceEndpoint(cfg), BobEndpoint(cfg))
    ref = run_session(cfg)
    assert alice.accepted_count == ref.accepted_count == 20
    assert alice.verdict == "accept"
    assert np.array_equal(alice.delivered_bits, bob.delivered_bits)


def test_session_id_mismatch_rejected(code_low_rate, code_high_rate):
    cfg = _config(code_low_rate, code_high_rate, frames=2)
    bob = BobEndpoint(cfg)
    bob.start()
    with pytest.raises(WireProtocolError):
        bob.handle(Message(MSG_IDX_LIST, cfg.session_id + 1, b""))


def test_out_of_order_and_duplicate_messages_rejected(code_low_rate, code_high_rate):
    cfg = _config(code_low_rate, code_high_rate, frames=2)
    bob = BobEndpoint(cfg)
    bob.start()
    with pytest.raises(WireProtocolError):
        bob.handle(Message(MSG_HASH_TAG, cfg.session_id, b"\x00" * 4))
    alice = AliceEndpoint(cfg)
    msgs = BobEndpoint(cfg).start()
    alice.handle(msgs[0])
    with pytest.raises(WireProtocolError):
        alice.handle(msgs[0])


def test_frame_index_out_of_range_rejected(code_low_rate, code_high_rate):
    cfg = _config(code_low_rate, code_high_rate, frames=2)
    bob = BobEndpoint(cfg)
    bob.start()
    with pytest.raises(WireProtocolError):
        bob.handle(Message(MSG_IDX_LIST, cfg.session_id,
                           encode_idx_list(np.array([5]))))


# ---------------------------------------------------------------------------
# socket transport
# ---------------------------------------------------------------------------

def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_socket_session_end_to_end(code_low_rate, code_high_rate):
    cfg = _config(code_low_rate, code_high_rate, frames=20)
    port = _free_port()
    result = {}

    def serve():
        result["bob"] = run_listener(cfg, "127.0.0.1", port, timeout=30.0)

    t = threading.Thread(target=serve)
    t.start()
    alice = None
    for _ in range(50):
        try:
            alice = run_connector(cfg, "127.0.0.1", port, timeout=30.0)
            break
        except ConnectionRefusedError:
            import time
            time.sleep(0.1)
    t.join(timeout=60.0)
    assert alice is not None and not t.is_alive()
    bob = result["bob"]
    assert alice.verdict == bob.verdict == "accept"
    assert alice.bits_delivered == bob.bits_delivered == 20 * code_low_rate.K_info
    assert np.array_equal(alice.delivered_bits, bob.delivered_bits)
