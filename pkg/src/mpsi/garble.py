"""Garbling scheme: free XOR plus two-ciphertext half-gate AND gates.

Labels are 128-bit, kept as [k, 2] uint64 numpy arrays. The global offset
delta has its low bit forced to 1 so the low bit of a label is its
point-and-permute select bit. INV gates are free (the garbler XORs delta
into the zero label; the evaluator passes the label through), constants
cost nothing but a label transfer.

Gates are executed level by level: one fused gather/xor/scatter covers all
free gates of a level (INV reads a virtual wire holding delta on the
garbler side and zero on the evaluator side), and one batched fixed-key
AES call hashes every AND gate of the level. The per-circuit schedule is
computed once and cached on the circuit.
"""

from __future__ import annotations

import secrets
from array import array
from dataclasses import dataclass

import numpy as np

from .circuit import AND, CONST0, INV, XOR, Circuit
from .primitives import labels_from_bytes, mmo_hash, prg_labels

TABLE_ROW_BYTES = 32  # two 128-bit ciphertexts per AND gate


@dataclass
class _Schedule:
    const_out: np.ndarray    # int64 output wires of const gates
    const_val: np.ndarray    # uint8 constant values
    segments: list           # (is_and, a, b, out, gidx, slot) index arrays
    and_count: int


def _levelize(circuit: Circuit) -> _Schedule:
    sch = circuit._schedule
    if sch is not None:
        return sch
    ni = circuit.num_inputs
    nw = circuit.num_wires
    lvl = array("i", bytes(4 * max(nw, 1)))
    pos = ni
    for kind, a, b in zip(circuit.kinds, circuit.in_a, circuit.in_b):
        if kind <= AND:
            da = lvl[a]
            db = lvl[b]
            d = (da if da >= db else db) + 1
        elif kind == INV:
            d = lvl[a] + 1
        else:
            d = 0
        lvl[pos] = d
        pos += 1

    kinds = np.frombuffer(bytes(circuit.kinds), dtype=np.uint8)
    in_a = (np.frombuffer(circuit.in_a, dtype=np.int32).astype(np.int64)
            if circuit.num_gates else np.empty(0, np.int64))
    in_b = (np.frombuffer(circuit.in_b, dtype=np.int32).astype(np.int64)
            if circuit.num_gates else np.empty(0, np.int64))
    glvl = np.frombuffer(lvl, dtype=np.int32)[ni:].astype(np.int64)
    out_w = np.arange(ni, nw, dtype=np.int64)

    const_idx = np.nonzero(kinds >= CONST0)[0]
    const_out = out_w[const_idx]
    const_val = (kinds[const_idx] - CONST0).astype(np.uint8)

    and_mask = kinds == AND
    slot_of = np.cumsum(and_mask, dtype=np.int64) - 1

    gate_idx = np.nonzero(kinds < CONST0)[0]
    key = glvl[gate_idx] * 2 + and_mask[gate_idx]
    order = gate_idx[np.argsort(key, kind="stable")]
    skey = glvl[order] * 2 + and_mask[order]
    bounds = np.searchsorted(skey, np.unique(skey), side="left")
    bounds = np.append(bounds, len(order))

    segments = []
    for s, t in zip(bounds[:-1], bounds[1:]):
        sel = order[s:t]
        is_and = bool(and_mask[sel[0]])
        a = in_a[sel]
        if is_and:
            segments.append((True, a, in_b[sel], out_w[sel],
                             sel.astype(np.uint64), slot_of[sel]))
        else:
            # INV reads the virtual delta wire at index num_wires.
            b = np.where(kinds[sel] == INV, np.int64(nw), in_b[sel])
            segments.append((False, a, b, out_w[sel], None, None))

    sch = _Schedule(const_out, const_val, segments, int(and_mask.sum()))
    circuit._schedule = sch
    return sch


@dataclass
class GarbledCircuit:
    """Garbler-side product of one garbling run."""

    delta: np.ndarray          # [2] uint64, secret
    input_zero: np.ndarray     # [num_inputs, 2] zero labels
    const_active: np.ndarray   # [num_consts, 2] active labels for constants
    tables: np.ndarray         # [and_count, 4] uint64, two rows per gate
    decode_bits: np.ndarray    # [num_outputs] uint8

    @property
    def table_bytes(self) -> bytes:
        return self.tables.tobytes()

    def encode(self, wires: slice, bits) -> np.ndarray:
        return encode_inputs(self.input_zero[wires], self.delta, bits)


def garble(circuit: Circuit, seed: bytes | None = None) -> GarbledCircuit:
    if seed is None:
        seed = secrets.token_bytes(16)
    sch = _levelize(circuit)
    ni = circuit.num_inputs
    nw = circuit.num_wires

    rnd = prg_labels(seed, 1 + ni + len(sch.const_out))
    delta = rnd[0].copy()
    delta[0] |= np.uint64(1)

    lab = np.zeros((nw + 1, 2), dtype=np.uint64)
    lab[nw] = delta
    if ni:
        lab[:ni] = rnd[1: 1 + ni]
    if len(sch.const_out):
        lab[sch.const_out] = rnd[1 + ni:]

    tables = np.empty((sch.and_count, 4), dtype=np.uint64)
    for is_and, a, b, out, gidx, slot in sch.segments:
        if not is_and:
            lab[out] = lab[a] ^ lab[b]
            continue
        a0 = lab[a]
        b0 = lab[b]
        pa = (a0[:, 0] & 1).astype(bool)
        pb = (b0[:, 0] & 1).astype(bool)
        t0 = gidx << np.uint64(1)
        t1 = t0 | np.uint64(1)
        blocks = np.concatenate([a0, a0 ^ delta, b0, b0 ^ delta])
        tweaks = np.concatenate([t0, t0, t1, t1])
        h = mmo_hash(blocks, tweaks)
        k = len(a)
        ha0, ha1, hb0, hb1 = h[:k], h[k:2 * k], h[2 * k:3 * k], h[3 * k:]
        tg = ha0 ^ ha1
        tg[pb] ^= delta
        wg = ha0.copy()
        wg[pa] ^= tg[pa]
        te = hb0 ^ hb1 ^ a0
        we = hb0.copy()
        we[pb] ^= (te ^ a0)[pb]
        lab[out] = wg ^ we
        tables[slot, :2] = tg
        tables[slot, 2:] = te

    out_idx = np.asarray(circuit.outputs, dtype=np.int64)
    decode = (lab[out_idx, 0] & 1).astype(np.uint8) if len(out_idx) else \
        np.empty(0, np.uint8)
    const_active = lab[sch.const_out].copy() if len(sch.const_out) else \
        np.empty((0, 2), np.uint64)
    if len(sch.const_out):
        const_active[sch.const_val == 1] ^= delta
    return GarbledCircuit(delta=delta, input_zero=lab[:ni].copy(),
                          const_active=const_active, tables=tables,
                          decode_bits=decode)


def evaluate(circuit: Circuit, tables, active_inputs: np.ndarray,
             const_active: np.ndarray) -> np.ndarray:
    """Evaluate garbled tables on active labels; returns output labels."""
    sch = _levelize(circuit)
    ni = circuit.num_inputs
    nw = circuit.num_wires
    if isinstance(tables, (bytes, bytearray, memoryview)):
        tables = labels_from_bytes(bytes(tables)).reshape(-1, 4)
    if tables.shape != (sch.and_count, 4):
        raise ValueError("garbled table size mismatch")
    if active_inputs.shape != (ni, 2):
        raise ValueError("wrong number of input labels")
    if const_active.shape != (len(sch.const_out), 2):
        raise ValueError("wrong number of constant labels")

    lab = np.zeros((nw + 1, 2), dtype=np.uint64)
    if ni:
        lab[:ni] = active_inputs
    if len(sch.const_out):
        lab[sch.const_out] = const_active

    for is_and, a, b, out, gidx, slot in sch.segments:
        if not is_and:
            lab[out] = lab[a] ^ lab[b]
            continue
        av = lab[a]
        bv = lab[b]
        sa = (av[:, 0] & 1).astype(bool)
        sb = (bv[:, 0] & 1).astype(bool)
        t0 = gidx << np.uint64(1)
        k = len(a)
        h = mmo_hash(np.concatenate([av, bv]),
                     np.concatenate([t0, t0 | np.uint64(1)]))
        tg = tables[slot, :2]
        te = tables[slot, 2:]
        wg = h[:k]
        wg[sa] ^= tg[sa]
        we = h[k:]
        we[sb] ^= (te ^ av)[sb]
        lab[out] = wg ^ we

    out_idx = np.asarray(circuit.outputs, dtype=np.int64)
    return lab[out_idx].copy() if len(out_idx) else np.empty((0, 2), np.uint64)


def encode_inputs(zero_labels: np.ndarray, delta: np.ndarray, bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if len(bits) != len(zero_labels):
        raise ValueError("bit count does not match label count")
    active = np.array(zero_labels, dtype=np.uint64, copy=True)
    active[bits == 1] ^= delta
    return active


def decode_outputs(decode_bits: np.ndarray, output_labels: np.ndarray) -> np.ndarray:
    if len(decode_bits) != len(output_labels):
        raise ValueError("decode table size mismatch")
    if len(output_labels) == 0:
        return np.empty(0, np.uint8)
    return (output_labels[:, 0] & 1).astype(np.uint8) ^ decode_bits


def garble_and_evaluate(circuit: Circuit, garbler_bits, evaluator_bits,
                        seed: bytes | None = None) -> np.ndarray:
    """Local round trip: garble, encode, evaluate, decode."""
    gc = garble(circuit, seed)
    g = np.asarray(garbler_bits, dtype=np.uint8)
    e = np.asarray(evaluator_bits, dtype=np.uint8)
    bits = np.concatenate([g, e])
    active = encode_inputs(gc.input_zero, gc.delta, bits)
    out = evaluate(circuit, gc.tables, active, gc.const_active)
    return decode_outputs(gc.decode_bits, out)
