"""Garbled evaluation vs plaintext truth, table sizes, determinism."""

import random

import numpy as np
import pytest

from mpsi.circuit import CircuitBuilder, eval_plaintext, stats
from mpsi.garble import (decode_outputs, encode_inputs, evaluate, garble,
                         garble_and_evaluate)
from helpers import bits_of, random_circuit, val_of


def roundtrip(circ, g, e, seed=None):
    got = list(garble_and_evaluate(circ, g, e, seed=seed))
    want = eval_plaintext(circ, g, e)
    assert got == want
    return got


def test_single_and_gate_all_inputs():
    cb = CircuitBuilder()
    a, b = cb.garbler_input(), cb.evaluator_input()
    cb.add_output(cb.and_(a, b))
    circ = cb.build()
    gc = garble(circ, seed=b"\x07" * 16)
    assert len(gc.table_bytes) == 32  # two kappa-bit rows per AND
    for x in (0, 1):
        for y in (0, 1):
            assert roundtrip(circ, [x], [y]) == [x & y]


def test_xor_only_circuit_has_no_tables():
    cb = CircuitBuilder()
    a, b = cb.garbler_input(), cb.evaluator_input()
    cb.add_output(cb.xor(cb.xor(a, b), a))
    circ = cb.build()
    assert len(garble(circ).table_bytes) == 0
    for x in (0, 1):
        for y in (0, 1):
            assert roundtrip(circ, [x], [y]) == [y]


def test_inv_and_const_gates():
    cb = CircuitBuilder()
    a = cb.garbler_input()
    cb.add_outputs([cb.inv(a), cb.inv(cb.const0()), cb.const0(), cb.const1(),
                    cb.and_(cb.inv(a), cb.const1())])
    circ = cb.build()
    for x in (0, 1):
        assert roundtrip(circ, [x], []) == [1 - x, 1, 0, 1, 1 - x]


def test_all_const_circuit_decodes_fixed_bits():
    cb = CircuitBuilder()
    cb.garbler_input()
    cb.add_outputs([cb.const0(), cb.const1(), cb.inv(cb.const1())])
    circ = cb.build()
    assert roundtrip(circ, [0], []) == [0, 1, 0]


def test_xor_share_reconstruction_in_circuit():
    # garbler holds r, evaluator holds r', wire value is r ^ r' = 5
    cb = CircuitBuilder()
    g = cb.garbler_inputs(3)
    e = cb.evaluator_inputs(3)
    cb.add_outputs([cb.xor(a, b) for a, b in zip(g, e)])
    circ = cb.build()
    out = roundtrip(circ, bits_of(3, 3), bits_of(6, 3))
    assert val_of(out) == 5
    assert val_of(roundtrip(circ, bits_of(6, 3), bits_of(6, 3))) == 0


def test_table_size_matches_and_count():
    rng = random.Random(0xBEEF)
    for _ in range(30):
        circ, g, e = random_circuit(rng, rng.randrange(1, 300))
        gc = garble(circ)
        assert len(gc.table_bytes) == 32 * stats(circ).and_count
        roundtrip(circ, g, e)


def test_deterministic_given_seed():
    rng = random.Random(0xD5)
    circ, g, e = random_circuit(rng, 120)
    g1 = garble(circ, seed=b"\x42" * 16)
    g2 = garble(circ, seed=b"\x42" * 16)
    assert g1.tables.tobytes() == g2.tables.tobytes()
    assert np.array_equal(g1.decode_bits, g2.decode_bits)
    assert np.array_equal(g1.delta, g2.delta)
    g3 = garble(circ, seed=b"\x43" * 16)
    assert g3.tables.tobytes() != g1.tables.tobytes()


def test_free_xor_leaves_tables_unchanged():
    def build(extra_xors):
        cb = CircuitBuilder()
        a, b = cb.garbler_input(), cb.evaluator_input()
        w = cb.and_(a, b)
        for _ in range(extra_xors):
            w = cb.xor(w, a)
        cb.add_output(w)
        return cb.build()

    assert len(garble(build(0)).table_bytes) == len(garble(build(7)).table_bytes) == 32


def test_delta_color_bit_is_set():
    cb = CircuitBuilder()
    a = cb.garbler_input()
    cb.add_output(cb.inv(a))
    gc = garble(cb.build())
    assert int(gc.delta[0]) & 1 == 1


def test_evaluate_rejects_malformed_material():
    cb = CircuitBuilder()
    a, b = cb.garbler_input(), cb.evaluator_input()
    cb.add_output(cb.and_(a, b))
    circ = cb.build()
    gc = garble(circ)
    active = encode_inputs(gc.input_zero, gc.delta, [1, 1])
    with pytest.raises(ValueError):
        evaluate(circ, gc.tables[:0], active, gc.const_active)
    with pytest.raises(ValueError):
        evaluate(circ, gc.tables, active[:1], gc.const_active)


def test_tampered_table_changes_some_output():
    # each table row is only read when the matching color bit is 1, so a
    # flipped row must corrupt the inputs that select it (half the combos)
    cb = CircuitBuilder()
    a, b = cb.garbler_input(), cb.evaluator_input()
    cb.add_output(cb.and_(a, b))
    circ = cb.build()
    gc = garble(circ, seed=b"\x11" * 16)
    bad = gc.tables.copy()
    bad[0, 0] ^= np.uint64(1)
    diffs = 0
    for x in (0, 1):
        for y in (0, 1):
            active = encode_inputs(gc.input_zero, gc.delta, [x, y])
            honest = evaluate(circ, gc.tables, active, gc.const_active)
            out = evaluate(circ, bad, active, gc.const_active)
            diffs += int(not np.array_equal(out, honest))
    assert diffs == 2


def test_encode_decode_shapes():
    cb = CircuitBuilder()
    g = cb.garbler_inputs(4)
    e = cb.evaluator_inputs(4)
    cb.add_outputs([cb.xor(a, b) for a, b in zip(g, e)])
    circ = cb.build()
    gc = garble(circ)
    bits = [1, 0, 1, 1, 0, 0, 1, 0]
    active = encode_inputs(gc.input_zero, gc.delta, bits)
    assert active.shape == (8, 2)
    out_labels = evaluate(circ, gc.tables, active, gc.const_active)
    got = decode_outputs(gc.decode_bits, out_labels)
    assert list(got) == [1, 0, 0, 1]


def test_many_random_circuits():
    rng = random.Random(0xF00D)
    for _ in range(100):
        circ, g, e = random_circuit(rng, rng.randrange(1, 600))
        roundtrip(circ, g, e)
