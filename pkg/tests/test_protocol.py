"""Wire framing, configs, share generation, and full loopback sessions."""

import random
import secrets
import struct
import threading

import numpy as np
import pytest
from scipy.stats import chisquare

from mpsi.oracle import intersect_oracle
from mpsi.protocol import (CHUNK_BYTES, MAX_PAYLOAD, Channel, ConfigError,
                           InputError, ProtocolError, SessionAbort,
                           SessionConfig, _make_shares, auto_sigma,
                           bits_to_elements, elements_to_bits, make_listener,
                           parse_config, run_party, validate_padded_set)
from mpsi.app import run_local_session
from helpers import chan_pair, run_pair


def test_frame_roundtrip_fuzz():
    rng = random.Random(0xF4)
    ca, cb = chan_pair()
    try:
        names = ["hello", "shares", "gc_chunk", "garbler_labels", "base_ot",
                 "ext_ot", "decode_table", "result"]
        for _ in range(60):
            name = rng.choice(names)
            payload = secrets.token_bytes(rng.randrange(0, 1200))
            ca.send(name, payload)
            assert cb.recv() == (name, payload)
    finally:
        ca.close()
        cb.close()


def test_empty_hello_is_five_bytes_on_the_wire():
    ca, cb = chan_pair()
    try:
        ca.send("hello")
        assert ca.sent_bytes == 5  # 4-byte length + 1-byte type
        assert cb.recv() == ("hello", b"")
    finally:
        ca.close()
        cb.close()


def test_oversize_payload_rejected():
    ca, cb = chan_pair()
    try:
        with pytest.raises(ProtocolError):
            ca.send("gc_chunk", bytes((1 << 24) + 1))
        assert ca.sent_bytes == 0
    finally:
        ca.close()
        cb.close()


def test_unknown_frame_type_rejected():
    ca, cb = chan_pair()
    try:
        ca.sock.sendall(struct.pack(">IB", 0, 200))
        with pytest.raises(ProtocolError):
            cb.recv()
    finally:
        ca.close()
        cb.close()


def test_abort_frame_raises_on_receipt():
    ca, cb = chan_pair()
    try:
        ca.abort("synthetic failure")
        with pytest.raises(SessionAbort, match="synthetic failure"):
            cb.recv()
    finally:
        ca.close()
        cb.close()


def test_peer_close_raises_session_abort():
    ca, cb = chan_pair()
    ca.close()
    with pytest.raises(SessionAbort):
        cb.recv()
    cb.close()


def test_send_big_chunks_and_reassembles():
    blob = secrets.token_bytes(CHUNK_BYTES * 2 + 12345)
    ca, cb = chan_pair()
    out = []
    try:
        run_pair(lambda: ca.send_big("gc_chunk", blob),
                 lambda: out.append(cb.recv_big("gc_chunk", len(blob))))
    finally:
        ca.close()
        cb.close()
    assert out[0] == blob
    assert ca.sent_by_type["gc_chunk"] == len(blob)  # payload-only counter


def test_recv_big_rejects_overshoot():
    ca, cb = chan_pair()
    try:
        ca.send("gc_chunk", b"xxxx")
        with pytest.raises(ProtocolError):
            cb.recv_big("gc_chunk", 2)
    finally:
        ca.close()
        cb.close()


def test_share_reconstruction():
    rng = random.Random(0x51)
    for _ in range(50):
        bits = np.array([rng.randrange(2) for _ in range(64)], np.uint8)
        r, rp = _make_shares(bits)
        assert np.array_equal(r ^ rp, bits)


def test_share_marginals_are_uniform():
    # fixed value 5, sigma=8: each share alone must look uniform
    bits = elements_to_bits([5], 1, 8)
    counts = [0] * 256
    for _ in range(10_000):
        r, rp = _make_shares(bits)
        v = int(np.packbits(r, bitorder="little")[0])
        counts[v] += 1
        assert np.array_equal(r ^ rp, bits)
    _, p = chisquare(counts)
    assert p > 0.001


def test_element_bit_packing_roundtrip():
    n, sigma = 8, 11
    vals = [1, 5, 9, 100, 501, 1024, 2046, 2047]
    bits = elements_to_bits(vals, n, sigma)
    assert len(bits) == n * sigma
    assert bits_to_elements(bits, n, sigma) == vals
    # LSB-first inside each element
    assert list(bits[:sigma]) == [1] + [0] * (sigma - 1)


def test_validate_padded_set():
    assert validate_padded_set([4, 2, 3, 1], 4, 4) == [1, 2, 3, 4]
    with pytest.raises(InputError):
        validate_padded_set([1, 2, 3], 4, 4)       # wrong size
    with pytest.raises(InputError):
        validate_padded_set([0, 1, 2, 3], 4, 4)    # zero is the dummy
    with pytest.raises(InputError):
        validate_padded_set([1, 1, 2, 3], 4, 4)    # duplicate
    with pytest.raises(InputError):
        validate_padded_set([1, 2, 3, 16], 4, 4)   # overflows sigma


def test_auto_sigma():
    assert auto_sigma(2 ** 12) == 63
    assert auto_sigma(16) == 47
    with pytest.raises(ConfigError):
        auto_sigma(2 ** 13)  # would need 65-bit elements
    with pytest.raises(ConfigError):
        auto_sigma(12)


def test_session_config_validation():
    cfg = SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=3)
    assert cfg.role == "contributor"
    assert SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=1).role == "garbler"
    assert SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=2).role == "evaluator"
    with pytest.raises(ConfigError):
        SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=4)
    with pytest.raises(ConfigError):
        SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=1,
                      ot_backend="carrier-pigeon")
    with pytest.raises(ValueError):
        SessionConfig(m=3, n=9, sigma=16, mode="both", party_id=1)


def test_config_hash_pins_shared_fields_only():
    base = SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=1)
    same = SessionConfig(m=3, n=8, sigma=16, mode="both", party_id=2,
                         timeout=5.0)
    assert base.config_hash() == same.config_hash()
    for kw in ({"mode": "cardinality"}, {"n": 16}, {"sigma": 20},
               {"ot_backend": "dealer"}, {"session_tag": "x"}):
        assert base.replace(**kw).config_hash() != base.config_hash()


def test_parse_config_file(tmp_path):
    path = tmp_path / "session.ini"
    path.write_text("""
[session]
m = 3
n = 16
sigma = auto
mode = cardinality
ot = dealer
p1 = 10.0.0.1:4000
p2 = 10.0.0.2:4001
tag = nightly

[addresses]
3 = 10.0.0.3:4002
""")
    cfg = parse_config(str(path), party_id=3)
    assert (cfg.m, cfg.n, cfg.sigma) == (3, 16, 47)
    assert cfg.mode == "cardinality"
    assert cfg.ot_backend == "dealer"
    assert cfg.p1_addr == ("10.0.0.1", 4000)
    assert cfg.addrs[3] == ("10.0.0.3", 4002)
    assert cfg.session_tag == "nightly"
    # explicit overrides win over file values
    cfg2 = parse_config(str(path), party_id=1, mode="both", sigma=20)
    assert (cfg2.mode, cfg2.sigma) == ("both", 20)


def test_parse_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(str(tmp_path / "missing.ini"), party_id=1)
    bad = tmp_path / "bad.ini"
    bad.write_text("[other]\nx = 1\n")
    with pytest.raises(ConfigError):
        parse_config(str(bad), party_id=1)
    bad.write_text("[session]\nm = 3\nn = 16\np1 = nope\n")
    with pytest.raises(ConfigError):
        parse_config(str(bad), party_id=1)


def test_loopback_three_party_example():
    sets = [[1, 3, 5, 7], [3, 4, 5, 8], [3, 5, 9, 10]]
    results = run_local_session(3, 4, 8, "both", sets, ot_backend="dealer")
    want = intersect_oracle(sets)
    for res in results:
        assert res.intersection == want == (3, 5)
        assert res.cardinality == 2
    # contributor traffic: hello + one share message to each of P1, P2
    contrib = results[2]
    share_payload = 1 + (4 * 8) // 8  # party byte + n*sigma bits
    assert contrib.sent_by_type[1] == {"hello": 37, "shares": share_payload}
    assert contrib.sent_by_type[2] == {"hello": 37, "shares": share_payload}
    # and the only thing it ever receives is hello + broadcast result
    assert contrib.net_recv[1] == 5 + 37
    assert contrib.net_recv[2] > 5 + 37


def test_loopback_two_party_degenerate():
    sets = [[2, 4, 6, 8], [4, 8, 12, 14]]
    results = run_local_session(2, 4, 8, "intersection", sets,
                                ot_backend="dealer")
    assert all(r.intersection == (4, 8) for r in results)
    assert all(r.cardinality is None for r in results)


def test_loopback_disjoint_sets():
    sets = [[1, 2], [3, 4], [5, 6]]
    results = run_local_session(3, 2, 8, "both", sets, ot_backend="dealer")
    assert all(r.intersection == () and r.cardinality == 0 for r in results)


def test_loopback_cardinality_only():
    sets = [[1, 2, 3, 9], [2, 3, 9, 12]]
    results = run_local_session(2, 4, 8, "cardinality", sets,
                                ot_backend="dealer")
    assert all(r.intersection is None for r in results)
    assert all(r.cardinality == 3 for r in results)


def test_loopback_declared_sizes_flow():
    sets = [[1, 2, 3, 4], [2, 3, 4, 5]]
    results = run_local_session(2, 4, 8, "both", sets, ot_backend="dealer",
                                true_sizes=[3, 2])
    assert results[0].declared_sizes[2] == 2
    assert results[1].declared_sizes[1] == 3


def test_config_hash_mismatch_aborts():
    lst = make_listener(("127.0.0.1", 0))
    addr = ("127.0.0.1", lst.getsockname()[1])

    def party(pid, mode):
        cfg = SessionConfig(m=2, n=4, sigma=8, mode=mode, party_id=pid,
                            ot_backend="dealer", p1_addr=addr,
                            timeout=10.0)
        return run_party(cfg, [1, 2, 3, 4],
                         listener=lst if pid == 1 else None)

    errs = []

    def run(pid, mode):
        try:
            party(pid, mode)
        except Exception as exc:  # noqa: BLE001
            errs.append(exc)

    t1 = threading.Thread(target=run, args=(1, "both"), daemon=True)
    t2 = threading.Thread(target=run, args=(2, "intersection"), daemon=True)
    t1.start(); t2.start()
    t1.join(30); t2.join(30)
    lst.close()
    assert len(errs) == 2
    assert all(isinstance(e, SessionAbort) for e in errs)
