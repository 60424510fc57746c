"""Flat Boolean circuits over XOR/AND/INV/CONST gates.

Wire numbering is dense: garbler input wires first, then evaluator input
wires, then one output wire per gate in emission order, so every gate's
inputs precede its output and the list is already topologically sorted.
AND is the only gate kind that costs garbled ciphertexts.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import Iterable, Sequence

XOR, AND, INV, CONST0, CONST1 = range(5)
KIND_NAMES = ("XOR", "AND", "INV", "CONST0", "CONST1")
ARITY = (2, 2, 1, 0, 0)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitStats:
    and_count: int
    and_depth: int
    total_gates: int
    num_wires: int


class Circuit:
    """Immutable gate list plus input/output declarations."""

    __slots__ = ("n_garbler", "n_evaluator", "kinds", "in_a", "in_b",
                 "outputs", "_schedule")

    def __init__(self, n_garbler: int, n_evaluator: int, kinds: bytearray,
                 in_a: array, in_b: array, outputs: Sequence[int]):
        self.n_garbler = n_garbler
        self.n_evaluator = n_evaluator
        self.kinds = bytes(kinds)
        self.in_a = in_a
        self.in_b = in_b
        self.outputs = tuple(outputs)
        self._schedule = None

    @property
    def num_gates(self) -> int:
        return len(self.kinds)

    @property
    def num_inputs(self) -> int:
        return self.n_garbler + self.n_evaluator

    @property
    def num_wires(self) -> int:
        return self.num_inputs + self.num_gates

    @property
    def garbler_inputs(self) -> range:
        return range(self.n_garbler)

    @property
    def evaluator_inputs(self) -> range:
        return range(self.n_garbler, self.num_inputs)

    def gate_output(self, k: int) -> int:
        return self.num_inputs + k


def build_circuit(n_garbler: int, n_evaluator: int,
                  gates: Iterable[tuple], outputs: Sequence[int]) -> Circuit:
    """Validate a raw gate stream of (kind, inputs, out_wire) triples."""
    if n_garbler < 0 or n_evaluator < 0:
        raise CircuitError("negative input count")
    kinds = bytearray()
    in_a = array("i")
    in_b = array("i")
    nxt = n_garbler + n_evaluator
    for kind, ins, out in gates:
        if not 0 <= kind <= CONST1:
            raise CircuitError(f"unknown gate kind {kind}")
        if len(ins) != ARITY[kind]:
            raise CircuitError(
                f"{KIND_NAMES[kind]} gate takes {ARITY[kind]} inputs, got {len(ins)}")
        if out < nxt:
            raise CircuitError(f"duplicate assignment to wire {out}")
        if out > nxt:
            raise CircuitError(f"gate output skips wire ids ({nxt} expected, got {out})")
        for w in ins:
            if not 0 <= w < out:
                raise CircuitError(f"gate reads undefined wire {w}")
        kinds.append(kind)
        in_a.append(ins[0] if len(ins) > 0 else -1)
        in_b.append(ins[1] if len(ins) > 1 else -1)
        nxt += 1
    for w in outputs:
        if not 0 <= w < nxt:
            raise CircuitError(f"declared output {w} is not a wire")
    return Circuit(n_garbler, n_evaluator, kinds, in_a, in_b, outputs)


def validate(circuit: Circuit) -> None:
    """Re-run the gate-stream checks on an already built circuit."""
    build_circuit(circuit.n_garbler, circuit.n_evaluator,
                  iter_gates(circuit), circuit.outputs)


def iter_gates(circuit: Circuit):
    base = circuit.num_inputs
    for k, (kind, a, b) in enumerate(zip(circuit.kinds, circuit.in_a, circuit.in_b)):
        ar = ARITY[kind]
        ins = () if ar == 0 else (a,) if ar == 1 else (a, b)
        yield kind, ins, base + k


class CircuitBuilder:
    """Incremental builder; wires are valid by construction.

    All input wires must be declared before the first gate so that the
    dense numbering (garbler, evaluator, gate outputs) holds.
    """

    def __init__(self):
        self._n_garbler = 0
        self._n_evaluator = 0
        self._kinds = bytearray()
        self._in_a = array("i")
        self._in_b = array("i")
        self._outputs: list[int] = []
        self._next = 0
        self._gates_started = False
        self._const_cache = [None, None]

    def garbler_input(self) -> int:
        if self._gates_started:
            raise CircuitError("inputs must precede gates")
        if self._n_evaluator:
            raise CircuitError("garbler inputs must precede evaluator inputs")
        self._n_garbler += 1
        self._next += 1
        return self._next - 1

    def evaluator_input(self) -> int:
        if self._gates_started:
            raise CircuitError("inputs must precede gates")
        self._n_evaluator += 1
        self._next += 1
        return self._next - 1

    def garbler_inputs(self, k: int) -> list[int]:
        return [self.garbler_input() for _ in range(k)]

    def evaluator_inputs(self, k: int) -> list[int]:
        return [self.evaluator_input() for _ in range(k)]

    def _emit(self, kind: int, a: int, b: int) -> int:
        self._gates_started = True
        self._kinds.append(kind)
        self._in_a.append(a)
        self._in_b.append(b)
        self._next += 1
        return self._next - 1

    def xor(self, a: int, b: int) -> int:
        if not (0 <= a < self._next and 0 <= b < self._next):
            raise CircuitError("gate reads undefined wire")
        return self._emit(XOR, a, b)

    def and_(self, a: int, b: int) -> int:
        if not (0 <= a < self._next and 0 <= b < self._next):
            raise CircuitError("gate reads undefined wire")
        return self._emit(AND, a, b)

    def inv(self, a: int) -> int:
        if not 0 <= a < self._next:
            raise CircuitError("gate reads undefined wire")
        return self._emit(INV, a, -1)

    def const(self, value: int) -> int:
        # One shared wire per constant is enough; constants fan out freely.
        w = self._const_cache[value]
        if w is None:
            w = self._emit(CONST0 if value == 0 else CONST1, -1, -1)
            self._const_cache[value] = w
        return w

    def const0(self) -> int:
        return self.const(0)

    def const1(self) -> int:
        return self.const(1)

    def add_output(self, w: int) -> None:
        if not 0 <= w < self._next:
            raise CircuitError(f"declared output {w} is not a wire")
        self._outputs.append(w)

    def add_outputs(self, ws: Iterable[int]) -> None:
        for w in ws:
            self.add_output(w)

    @property
    def num_wires(self) -> int:
        return self._next

    def build(self) -> Circuit:
        return Circuit(self._n_garbler, self._n_evaluator, self._kinds,
                       self._in_a, self._in_b, self._outputs)


@dataclass
class GateCounts:
    and_count: int = 0
    xor_count: int = 0
    inv_count: int = 0
    const_count: int = 0
    num_outputs: int = 0
    n_garbler: int = 0
    n_evaluator: int = 0

    @property
    def total_gates(self) -> int:
        return self.and_count + self.xor_count + self.inv_count + self.const_count

    @property
    def num_wires(self) -> int:
        return self.n_garbler + self.n_evaluator + self.total_gates


class CountingBuilder:
    """Builder-compatible sink that only tallies gates.

    Lets the exact composer code path size circuits far too large to
    store; equality with real builds is pinned by tests on small
    circuits. The hot methods stay as lean as Python allows because
    bench runs push billions of emissions through them.
    """

    __slots__ = ("and_count", "xor_count", "inv_count", "const_count",
                 "num_outputs", "n_garbler", "n_evaluator", "_next",
                 "_const_cache")

    def __init__(self):
        self.and_count = 0
        self.xor_count = 0
        self.inv_count = 0
        self.const_count = 0
        self.num_outputs = 0
        self.n_garbler = 0
        self.n_evaluator = 0
        self._next = 0
        self._const_cache = [None, None]

    def garbler_input(self) -> int:
        self.n_garbler += 1
        n = self._next
        self._next = n + 1
        return n

    def evaluator_input(self) -> int:
        self.n_evaluator += 1
        n = self._next
        self._next = n + 1
        return n

    def garbler_inputs(self, k: int) -> list[int]:
        return [self.garbler_input() for _ in range(k)]

    def evaluator_inputs(self, k: int) -> list[int]:
        return [self.evaluator_input() for _ in range(k)]

    def xor(self, a: int, b: int) -> int:
        self.xor_count += 1
        n = self._next
        self._next = n + 1
        return n

    def and_(self, a: int, b: int) -> int:
        self.and_count += 1
        n = self._next
        self._next = n + 1
        return n

    def inv(self, a: int) -> int:
        self.inv_count += 1
        n = self._next
        self._next = n + 1
        return n

    def const(self, value: int) -> int:
        w = self._const_cache[value]
        if w is None:
            self.const_count += 1
            w = self._next
            self._next = w + 1
            self._const_cache[value] = w
        return w

    def const0(self) -> int:
        return self.const(0)

    def const1(self) -> int:
        return self.const(1)

    def add_output(self, w: int) -> None:
        self.num_outputs += 1

    def add_outputs(self, ws: Iterable[int]) -> None:
        for _ in ws:
            self.num_outputs += 1

    @property
    def num_wires(self) -> int:
        return self._next

    def build(self) -> GateCounts:
        return GateCounts(and_count=self.and_count, xor_count=self.xor_count,
                          inv_count=self.inv_count,
                          const_count=self.const_count,
                          num_outputs=self.num_outputs,
                          n_garbler=self.n_garbler,
                          n_evaluator=self.n_evaluator)


def eval_wires(circuit: Circuit, garbler_bits, evaluator_bits) -> bytearray:
    """Plaintext evaluation; returns the value of every wire."""
    if len(garbler_bits) != circuit.n_garbler:
        raise CircuitError("wrong garbler input length")
    if len(evaluator_bits) != circuit.n_evaluator:
        raise CircuitError("wrong evaluator input length")
    vals = bytearray(circuit.num_wires)
    i = 0
    for bit in garbler_bits:
        vals[i] = bit & 1
        i += 1
    for bit in evaluator_bits:
        vals[i] = bit & 1
        i += 1
    for kind, a, b in zip(circuit.kinds, circuit.in_a, circuit.in_b):
        if kind == XOR:
            v = vals[a] ^ vals[b]
        elif kind == AND:
            v = vals[a] & vals[b]
        elif kind == INV:
            v = vals[a] ^ 1
        elif kind == CONST0:
            v = 0
        else:
            v = 1
        vals[i] = v
        i += 1
    return vals


def eval_plaintext(circuit: Circuit, garbler_bits, evaluator_bits) -> list[int]:
    vals = eval_wires(circuit, garbler_bits, evaluator_bits)
    return [vals[w] for w in circuit.outputs]


def stats(circuit: Circuit) -> CircuitStats:
    """AND count and AND depth (max ANDs on any path to a declared output)."""
    depth = array("i", bytes(4 * max(circuit.num_wires, 1)))
    i = circuit.num_inputs
    for kind, a, b in zip(circuit.kinds, circuit.in_a, circuit.in_b):
        if kind == XOR:
            da, db = depth[a], depth[b]
            d = da if da >= db else db
        elif kind == AND:
            da, db = depth[a], depth[b]
            d = (da if da >= db else db) + 1
        elif kind == INV:
            d = depth[a]
        else:
            d = 0
        depth[i] = d
        i += 1
    and_depth = max((depth[w] for w in circuit.outputs), default=0)
    return CircuitStats(and_count=circuit.kinds.count(AND),
                        and_depth=and_depth,
                        total_gates=circuit.num_gates,
                        num_wires=circuit.num_wires)


def dump_netlist(circuit: Circuit) -> str:
    """Readable netlist; one line per gate plus header/output lines."""
    lines = [f"inputs garbler={circuit.n_garbler} evaluator={circuit.n_evaluator}"]
    for kind, ins, out in iter_gates(circuit):
        args = " ".join(str(w) for w in ins)
        sep = " " if args else ""
        lines.append(f"{KIND_NAMES[kind]}{sep}{args} -> {out}")
    lines.append("outputs " + " ".join(str(w) for w in circuit.outputs))
    return "\n".join(lines) + "\n"
