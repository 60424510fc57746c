"""Symmetric primitives shared by the garbling scheme and the OT extension.

128-bit values cross module boundaries either as 16-byte strings or as numpy
arrays of shape [k, 2] with dtype uint64 (little-endian lo/hi halves), so that
whole batches can be hashed with a single AES call.
"""

from __future__ import annotations

import threading

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

KAPPA = 128
STAT_SEC = 80
LABEL_BYTES = KAPPA // 8

# Fixed public AES key for the MMO-style hash; secrecy lives in the inputs.
_HASH_KEY = bytes.fromhex("6d707369206669786564206b65792e21")

# Tweak domains: garbling uses tweaks in [0, 2*num_gates); OT mask hashing
# sets the top bit so the two uses can never collide on inputs.
OT_TWEAK_BASE = 1 << 63

_local = threading.local()


def _ecb():
    # EVP contexts are not thread-safe; keep one encryptor per thread.
    enc = getattr(_local, "ecb", None)
    if enc is None:
        enc = Cipher(algorithms.AES(_HASH_KEY), modes.ECB()).encryptor()
        _local.ecb = enc
    return enc


def aes_ecb_many(blocks: np.ndarray) -> np.ndarray:
    """Encrypt [k, 2] uint64 blocks under the fixed key, one batched call."""
    out = _ecb().update(np.ascontiguousarray(blocks).tobytes())
    return np.frombuffer(out, dtype=np.uint64).reshape(-1, 2)


def mmo_hash(blocks: np.ndarray, tweaks: np.ndarray) -> np.ndarray:
    """H(x, t) = E(x ^ t~) ^ x ^ t~ with t~ the tweak in the low half.

    blocks: [k, 2] uint64, tweaks: [k] uint64. Returns [k, 2] uint64.
    """
    x = np.array(blocks, dtype=np.uint64, copy=True).reshape(-1, 2)
    x[:, 0] ^= tweaks
    return aes_ecb_many(x) ^ x


def prg_stream(seed: bytes, nbytes: int) -> bytes:
    """Deterministic expansion of a 16-byte seed via AES-128-CTR."""
    if len(seed) != LABEL_BYTES:
        raise ValueError("seed must be 16 bytes")
    enc = Cipher(algorithms.AES(seed), modes.CTR(b"\x00" * 16)).encryptor()
    return enc.update(b"\x00" * nbytes)


def prg_labels(seed: bytes, count: int) -> np.ndarray:
    """count pseudorandom 128-bit labels as a [count, 2] uint64 array."""
    raw = prg_stream(seed, count * LABEL_BYTES)
    return np.frombuffer(raw, dtype=np.uint64).reshape(count, 2).copy()


def labels_to_bytes(labels: np.ndarray) -> bytes:
    return np.ascontiguousarray(labels, dtype=np.uint64).tobytes()


def labels_from_bytes(data: bytes) -> np.ndarray:
    if len(data) % LABEL_BYTES:
        raise ValueError("label buffer not a multiple of 16 bytes")
    return np.frombuffer(data, dtype=np.uint64).reshape(-1, 2).copy()


def pack_bits(bits) -> bytes:
    """Pack a 0/1 sequence into bytes, LSB-first within each byte."""
    arr = np.asarray(bits, dtype=np.uint8)
    return np.packbits(arr, bitorder="little").tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if len(bits) < count:
        raise ValueError("bit buffer too short")
    return bits[:count]
