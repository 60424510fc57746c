"""Composition of the full multi-party intersection circuit.

m parties are folded into a two-party circuit: P1 (garbler) and P2
(evaluator) feed their own padded sets directly; every other party's set
arrives XOR-shared across the two input spaces and is reconstructed with
free gates. The body is m-1 rounds of merge + duplicate selection, with
compaction between rounds and, in the final round, either a two-sided
shuffle (intersection output), a population count (cardinality output),
or both.

Layout contract: every set/share vector encodes n elements of sigma bits,
LSB-first, elements in ascending order; elements are nonzero and distinct
within a party's padded set. Control bits drive the Waksman switches in
canonical order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

from .circuit import CircuitBuilder, CountingBuilder, GateCounts
from .blocks import (build_bitonic_merger, build_compaction, build_counter,
                     build_nonzero, build_waksman, build_3dupselection,
                     constant_bus)
from .waksman import switch_count

MODES = ("intersection", "cardinality", "both")
MAX_SIGMA = 63


@dataclass(frozen=True)
class BitRange:
    start: int
    count: int

    @property
    def stop(self) -> int:
        return self.start + self.count


@dataclass(frozen=True)
class InputLayout:
    """Bit offsets inside each party's packed input vector.

    Offsets are per space: garbler bit j maps to wire j, evaluator bit j
    to wire garbler_bits + j. Share ranges are listed for parties 3..m in
    ascending party order.
    """

    m: int
    n: int
    sigma: int
    mode: str
    g_set: BitRange
    g_shares: tuple
    g_controls: BitRange
    e_set: BitRange
    e_shares: tuple
    e_controls: BitRange

    @property
    def garbler_bits(self) -> int:
        return self.g_controls.stop

    @property
    def evaluator_bits(self) -> int:
        return self.e_controls.stop

    @property
    def counter_width(self) -> int:
        return self.n.bit_length()


def validate_params(m: int, n: int, sigma: int, mode: str) -> None:
    if m < 2:
        raise ValueError("need at least two parties")
    if n < 2 or n & (n - 1):
        raise ValueError("set size must be a power of two >= 2")
    if not 2 <= sigma <= MAX_SIGMA:
        raise ValueError(f"element width must be in [2, {MAX_SIGMA}]")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def derive_layout(m: int, n: int, sigma: int, mode: str) -> InputLayout:
    validate_params(m, n, sigma, mode)
    ns = n * sigma
    ctrl = switch_count(n) if mode != "cardinality" else 0

    def space():
        shares = tuple(BitRange(ns + t * ns, ns) for t in range(m - 2))
        return BitRange(0, ns), shares, BitRange(ns * (m - 1), ctrl)

    g_set, g_shares, g_controls = space()
    e_set, e_shares, e_controls = space()
    return InputLayout(m, n, sigma, mode, g_set, g_shares, g_controls,
                       e_set, e_shares, e_controls)


def _buses(wires, rng: BitRange, n: int, sigma: int) -> list:
    return [wires[rng.start + j * sigma: rng.start + (j + 1) * sigma]
            for j in range(n)]


def _compose(cb, layout: InputLayout):
    n, sigma = layout.n, layout.sigma
    g = cb.garbler_inputs(layout.garbler_bits)
    e = cb.evaluator_inputs(layout.evaluator_bits)

    p1 = _buses(g, layout.g_set, n, sigma)
    p2 = _buses(e, layout.e_set, n, sigma)
    rest = []
    for gr, er in zip(layout.g_shares, layout.e_shares):
        gb = _buses(g, gr, n, sigma)
        eb = _buses(e, er, n, sigma)
        rest.append([[cb.xor(a, b) for a, b in zip(x, y)]
                     for x, y in zip(gb, eb)])

    dummy = constant_bus(cb, sigma)
    cur = p1
    rounds = [p2] + rest
    for it, other in enumerate(rounds):
        merged = build_bitonic_merger(cb, cur, other)
        outs = []
        # Middles sit at odd positions; a sorted sequence keeps duplicate
        # pairs adjacent and exactly one member of each pair is odd, so
        # every common element is emitted exactly once.
        for i in range(n):
            mid = 2 * i + 1
            right = merged[mid + 1] if mid + 1 < 2 * n else dummy
            ob, _ = build_3dupselection(cb, merged[mid - 1], merged[mid], right)
            outs.append(ob)
        if it + 1 < len(rounds):
            cur = build_compaction(cb, outs)

    inter = None
    card = None
    if layout.mode != "cardinality":
        g_ctrl = g[layout.g_controls.start: layout.g_controls.stop]
        e_ctrl = e[layout.e_controls.start: layout.e_controls.stop]
        inter = build_waksman(cb, outs, g_ctrl)
        inter = build_waksman(cb, inter, e_ctrl)
    if layout.mode != "intersection":
        live = [build_nonzero(cb, ob) for ob in outs]
        card = build_counter(cb, live, width=layout.counter_width)

    if inter is not None:
        for bus in inter:
            cb.add_outputs(bus)
    if card is not None:
        cb.add_outputs(card)
    return inter, card


@dataclass(frozen=True)
class PsiOutputs:
    slots: tuple          # raw sigma-bit value per (shuffled) output slot
    intersection: tuple | None   # sorted nonzero slot values
    cardinality: int | None


@dataclass
class PsiCircuit:
    circuit: object
    layout: InputLayout

    @property
    def mode(self) -> str:
        return self.layout.mode

    def parse_outputs(self, bits) -> PsiOutputs:
        n, sigma = self.layout.n, self.layout.sigma
        pos = 0
        slots: tuple = ()
        inter = None
        card = None
        if self.mode != "cardinality":
            vals = []
            for _ in range(n):
                v = 0
                for k in range(sigma):
                    v |= int(bits[pos]) << k
                    pos += 1
                vals.append(v)
            slots = tuple(vals)
            inter = tuple(sorted(v for v in vals if v))
        if self.mode != "intersection":
            c = 0
            for k in range(self.layout.counter_width):
                c |= int(bits[pos]) << k
                pos += 1
            card = c
        if pos != len(bits):
            raise ValueError("output length mismatch")
        return PsiOutputs(slots, inter, card)


def build_psi_circuit(m: int, n: int, sigma: int, mode: str) -> PsiCircuit:
    layout = derive_layout(m, n, sigma, mode)
    cb = CircuitBuilder()
    _compose(cb, layout)
    return PsiCircuit(cb.build(), layout)


def count_psi_gates(m: int, n: int, sigma: int, mode: str) -> GateCounts:
    """Gate tallies from the identical composer, without storing gates."""
    layout = derive_layout(m, n, sigma, mode)
    cb = CountingBuilder()
    _compose(cb, layout)
    return cb.build()


_cache_lock = threading.Lock()


@lru_cache(maxsize=4)
def _cached_circuit(m: int, n: int, sigma: int, mode: str) -> PsiCircuit:
    return build_psi_circuit(m, n, sigma, mode)


def psi_circuit_for(m: int, n: int, sigma: int, mode: str) -> PsiCircuit:
    """Small cache so concurrent sessions share one built circuit."""
    with _cache_lock:
        return _cached_circuit(m, n, sigma, mode)
