"""Oblivious transfer of 128-bit wire labels.

Three interchangeable backends move the evaluator's input labels:

- dealer: the receiver sends its choice bits in the clear and gets the
  chosen labels back. No privacy at all; exists so tests and local runs
  can isolate circuit/garbling behaviour. Never use it across trust
  boundaries.
- base: semi-honest Diffie-Hellman OT in the 2048-bit MODP group from
  RFC 3526 (generator 2), one instance per label, short 252-bit
  exponents. The receiver blinds its key with the sender's point for
  choice 1, so the sender cannot tell the two cases apart.
- extension: IKNP. kappa seed OTs run through the base protocol with the
  roles reversed, then AES-CTR expansion and a bit-matrix transpose turn
  them into one OT per label, with fixed-key AES mask hashing.

All backends produce identical outputs for identical inputs; only cost
and trust assumptions differ.
"""

from __future__ import annotations

import hashlib
import secrets

import numpy as np

from .primitives import (KAPPA, LABEL_BYTES, OT_TWEAK_BASE, labels_from_bytes,
                         labels_to_bytes, mmo_hash, pack_bits, prg_stream,
                         unpack_bits)

try:
    from gmpy2 import powmod as _powmod
except ImportError:  # pragma: no cover
    _powmod = pow

BACKENDS = ("dealer", "base", "extension")

# RFC 3526 group 14 (2048-bit MODP), generator 2.
GROUP_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16)
GROUP_G = 2
GROUP_BYTES = 256
_EXP_BITS = 252


class OtError(Exception):
    pass


def _rand_exp() -> int:
    return secrets.randbits(_EXP_BITS) | (1 << (_EXP_BITS - 1))


def _elem_bytes(x: int) -> bytes:
    return x.to_bytes(GROUP_BYTES, "big")


def _elem_from(data: bytes) -> int:
    x = int.from_bytes(data, "big")
    if not 1 < x < GROUP_P - 1:
        raise OtError("malformed group element")
    return x


def _kdf(shared: int, i: int) -> bytes:
    return hashlib.sha256(_elem_bytes(shared) + i.to_bytes(4, "big")).digest()[:LABEL_BYTES]


def _xor16(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(16, "big")


def base_ot_send(channel, m0: list, m1: list) -> None:
    """DH OT sender for n pairs of 16-byte messages."""
    n = len(m0)
    a = _rand_exp()
    big_a = _powmod(GROUP_G, a, GROUP_P)
    channel.send_big("base_ot", _elem_bytes(big_a))
    data = channel.recv_big("base_ot", n * GROUP_BYTES)
    a_to_a = _powmod(big_a, a, GROUP_P)
    a_to_a_inv = _powmod(a_to_a, GROUP_P - 2, GROUP_P)
    enc = bytearray()
    for i in range(n):
        b = _elem_from(data[i * GROUP_BYTES:(i + 1) * GROUP_BYTES])
        s0 = _powmod(b, a, GROUP_P)
        s1 = (s0 * a_to_a_inv) % GROUP_P
        enc += _xor16(m0[i], _kdf(s0, i))
        enc += _xor16(m1[i], _kdf(s1, i))
    channel.send_big("base_ot", bytes(enc))


def base_ot_recv(channel, choices) -> list:
    """DH OT receiver; choices is a 0/1 sequence."""
    n = len(choices)
    big_a = _elem_from(channel.recv_big("base_ot", GROUP_BYTES))
    blinds = []
    out = bytearray()
    for i in range(n):
        b = _rand_exp()
        pk = _powmod(GROUP_G, b, GROUP_P)
        if choices[i]:
            pk = (pk * big_a) % GROUP_P
        blinds.append(b)
        out += _elem_bytes(pk)
    channel.send_big("base_ot", bytes(out))
    enc = channel.recv_big("base_ot", n * 2 * LABEL_BYTES)
    got = []
    for i in range(n):
        k = _kdf(_powmod(big_a, blinds[i], GROUP_P), i)
        off = (2 * i + (1 if choices[i] else 0)) * LABEL_BYTES
        got.append(_xor16(enc[off:off + LABEL_BYTES], k))
    return got


def _dealer_send(channel, m0: np.ndarray, m1: np.ndarray) -> None:
    n = len(m0)
    raw = channel.recv_big("ext_ot", (n + 7) // 8)
    choices = unpack_bits(raw, n)
    picked = np.where(choices[:, None].astype(bool), m1, m0)
    channel.send_big("ext_ot", labels_to_bytes(picked))


def _dealer_recv(channel, choices: np.ndarray) -> np.ndarray:
    channel.send_big("ext_ot", pack_bits(choices))
    data = channel.recv_big("ext_ot", len(choices) * LABEL_BYTES)
    return labels_from_bytes(data)


def _ext_mask(q: np.ndarray) -> np.ndarray:
    tweaks = np.arange(len(q), dtype=np.uint64) | np.uint64(OT_TWEAK_BASE)
    return mmo_hash(q, tweaks)


def _ext_send(channel, m0: np.ndarray, m1: np.ndarray) -> None:
    n = len(m0)
    np8 = max((n + 7) // 8 * 8, 8)
    s = np.frombuffer(secrets.token_bytes(KAPPA), dtype=np.uint8) & 1
    seeds = base_ot_recv(channel, s.tolist())
    u_rows = channel.recv_big("ext_ot", KAPPA * (np8 // 8))
    u = np.unpackbits(np.frombuffer(u_rows, dtype=np.uint8).reshape(KAPPA, -1),
                      axis=1, bitorder="little")
    q = np.empty((KAPPA, np8), dtype=np.uint8)
    for i in range(KAPPA):
        row = np.unpackbits(np.frombuffer(prg_stream(seeds[i], np8 // 8),
                                          dtype=np.uint8), bitorder="little")
        q[i] = row ^ (u[i] & s[i])
    qt = np.packbits(q.T, axis=1, bitorder="little")
    q_lab = np.frombuffer(qt.tobytes(), dtype=np.uint64).reshape(np8, 2)[:n]
    s_lab = np.frombuffer(np.packbits(s, bitorder="little").tobytes(),
                          dtype=np.uint64)
    y0 = m0 ^ _ext_mask(q_lab)
    y1 = m1 ^ _ext_mask(q_lab ^ s_lab)
    channel.send_big("ext_ot", labels_to_bytes(y0))
    channel.send_big("ext_ot", labels_to_bytes(y1))


def _ext_recv(channel, choices: np.ndarray) -> np.ndarray:
    n = len(choices)
    np8 = max((n + 7) // 8 * 8, 8)
    r = np.zeros(np8, dtype=np.uint8)
    r[:n] = choices
    pairs0 = [secrets.token_bytes(LABEL_BYTES) for _ in range(KAPPA)]
    pairs1 = [secrets.token_bytes(LABEL_BYTES) for _ in range(KAPPA)]
    base_ot_send(channel, pairs0, pairs1)
    t = np.empty((KAPPA, np8), dtype=np.uint8)
    u_rows = bytearray()
    for i in range(KAPPA):
        t[i] = np.unpackbits(np.frombuffer(prg_stream(pairs0[i], np8 // 8),
                                           dtype=np.uint8), bitorder="little")
        other = np.unpackbits(np.frombuffer(prg_stream(pairs1[i], np8 // 8),
                                            dtype=np.uint8), bitorder="little")
        u_rows += np.packbits(t[i] ^ other ^ r, bitorder="little").tobytes()
    channel.send_big("ext_ot", bytes(u_rows))
    tt = np.packbits(t.T, axis=1, bitorder="little")
    t_lab = np.frombuffer(tt.tobytes(), dtype=np.uint64).reshape(np8, 2)[:n]
    y0 = labels_from_bytes(channel.recv_big("ext_ot", n * LABEL_BYTES))
    y1 = labels_from_bytes(channel.recv_big("ext_ot", n * LABEL_BYTES))
    mask = _ext_mask(t_lab)
    return np.where(choices[:, None].astype(bool), y1, y0) ^ mask


def ot_send(channel, backend: str, m0: np.ndarray, m1: np.ndarray) -> None:
    """Send one pair of labels per instance; receiver learns one of each."""
    if len(m0) != len(m1):
        raise OtError("mismatched message arrays")
    if len(m0) == 0:
        return
    if backend == "dealer":
        _dealer_send(channel, m0, m1)
    elif backend == "base":
        row0 = labels_to_bytes(m0)
        row1 = labels_to_bytes(m1)
        base_ot_send(channel,
                     [row0[i:i + 16] for i in range(0, len(row0), 16)],
                     [row1[i:i + 16] for i in range(0, len(row1), 16)])
    elif backend == "extension":
        _ext_send(channel, m0, m1)
    else:
        raise OtError(f"unknown OT backend {backend!r}")


def ot_recv(channel, backend: str, choices) -> np.ndarray:
    choices = np.asarray(choices, dtype=np.uint8)
    if len(choices) == 0:
        return np.empty((0, 2), dtype=np.uint64)
    if backend == "dealer":
        return _dealer_recv(channel, choices)
    if backend == "base":
        got = base_ot_recv(channel, choices.tolist())
        return labels_from_bytes(b"".join(got))
    if backend == "extension":
        return _ext_recv(channel, choices)
    raise OtError(f"unknown OT backend {backend!r}")
