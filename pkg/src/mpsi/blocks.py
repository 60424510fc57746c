"""Circuit building blocks for sort-compare-shuffle set intersection.

A Bus is a list of sigma wire ids, least significant bit first. All blocks
append gates to a builder and return fresh buses/wires; AND counts per block
are pinned by tests (GT: s, EQ: s-1, MUX/CondSwap: s, 2-sorter: 2s,
3-way duplicate selection: 3s-1).
"""

from __future__ import annotations

from .waksman import waksman_switch_pairs

Bus = list


def constant_bus(cb, width: int, value: int = 0) -> Bus:
    # The builder caches one wire per constant, so buses just repeat it.
    bits = [(value >> i) & 1 for i in range(width)]
    return [cb.const(b) for b in bits]


def build_gt(cb, x: Bus, y: Bus) -> int:
    """1 iff x > y (unsigned). Ripple from the LSB: higher bits override."""
    if len(x) != len(y):
        raise ValueError("bus width mismatch")
    c = cb.const0()
    for xi, yi in zip(x, y):
        c = cb.xor(xi, cb.and_(cb.xor(xi, c), cb.xor(yi, c)))
    return c


def build_eq(cb, x: Bus, y: Bus) -> int:
    """1 iff x == y: XNOR per bit, then a balanced AND tree."""
    if len(x) != len(y):
        raise ValueError("bus width mismatch")
    same = [cb.inv(cb.xor(xi, yi)) for xi, yi in zip(x, y)]
    return build_and_tree(cb, same)


def build_and_tree(cb, bits: list) -> int:
    while len(bits) > 1:
        nxt = [cb.and_(bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
        if len(bits) % 2:
            nxt.append(bits[-1])
        bits = nxt
    return bits[0]


def build_or(cb, a: int, b: int) -> int:
    return cb.inv(cb.and_(cb.inv(a), cb.inv(b)))


def build_nonzero(cb, x: Bus) -> int:
    """1 iff any bit of x is set (OR tree, len(x)-1 ANDs)."""
    return cb.inv(build_and_tree(cb, [cb.inv(b) for b in x]))


def build_mux(cb, s: int, x: Bus, y: Bus) -> Bus:
    """x if s else y, one AND per bit: y ^ (s & (x ^ y))."""
    return [cb.xor(yi, cb.and_(s, cb.xor(xi, yi))) for xi, yi in zip(x, y)]


def build_cond_swap(cb, s: int, x: Bus, y: Bus) -> tuple[Bus, Bus]:
    """(y, x) if s else (x, y); shares one AND per bit across both outputs."""
    lo, hi = [], []
    for xi, yi in zip(x, y):
        t = cb.and_(s, cb.xor(xi, yi))
        lo.append(cb.xor(xi, t))
        hi.append(cb.xor(yi, t))
    return lo, hi


def build_2sorter(cb, x: Bus, y: Bus) -> tuple[Bus, Bus]:
    """(min, max) of two buses: compare then conditionally swap."""
    return build_cond_swap(cb, build_gt(cb, x, y), x, y)


def _comparator(cb, seq: list, i: int, j: int, ascending: bool) -> None:
    lo, hi = build_2sorter(cb, seq[i], seq[j])
    if ascending:
        seq[i], seq[j] = lo, hi
    else:
        seq[i], seq[j] = hi, lo


def _bitonic_merge(cb, seq: list, lo: int, size: int, ascending: bool) -> None:
    if size <= 1:
        return
    half = size // 2
    for i in range(lo, lo + half):
        _comparator(cb, seq, i, i + half, ascending)
    _bitonic_merge(cb, seq, lo, half, ascending)
    _bitonic_merge(cb, seq, lo + half, half, ascending)


def build_bitonic_merger(cb, xs: list, ys: list) -> list:
    """Merge two ascending runs of equal power-of-two length.

    Reverses ys to form a bitonic sequence, then applies the merging
    network: n*log2(2n) comparators for inputs of length n each.
    """
    if len(xs) != len(ys) or len(xs) & (len(xs) - 1):
        raise ValueError("runs must have equal power-of-two length")
    seq = list(xs) + list(ys)[::-1]
    _bitonic_merge(cb, seq, 0, len(seq), True)
    return seq


def _bitonic_sort(cb, seq: list, lo: int, size: int, ascending: bool) -> None:
    if size <= 1:
        return
    half = size // 2
    _bitonic_sort(cb, seq, lo, half, True)
    _bitonic_sort(cb, seq, lo + half, half, False)
    _bitonic_merge(cb, seq, lo, size, ascending)


def build_bitonic_sorter(cb, vs: list) -> list:
    """Full ascending bitonic sort; (n/4)*log2(n)*(log2(n)+1) comparators."""
    if len(vs) & (len(vs) - 1):
        raise ValueError("length must be a power of two")
    seq = list(vs)
    _bitonic_sort(cb, seq, 0, len(seq), True)
    return seq


def build_compaction(cb, vs: list) -> list:
    """Push all-zero dummies to the front, survivors ascending behind them.

    Realized as a full sort on the element value; the all-zero dummy
    encoding sorts before every live element.
    """
    return build_bitonic_sorter(cb, vs)


def build_3dupselection(cb, a: Bus, b: Bus, c: Bus) -> tuple[Bus, int]:
    """Keep b iff it matches either neighbor; else emit the zero dummy.

    match = (a == b) | (b == c) costs one AND beyond the two equalities;
    the output is b masked by match. Total 3*sigma - 1 ANDs.
    """
    m = build_or(cb, build_eq(cb, a, b), build_eq(cb, b, c))
    return [cb.and_(m, bi) for bi in b], m


def _ripple_add(cb, a: Bus, b: Bus) -> Bus:
    """Unsigned add of arbitrary-width buses; result is max width + 1.

    One AND per position: full adder c' = ((x^c)&(y^c))^c, half adder at
    the LSB, bare carry propagation once the shorter operand runs out.
    """
    if len(a) < len(b):
        a, b = b, a
    out = []
    c = None
    for i, x in enumerate(a):
        if i < len(b):
            y = b[i]
            if c is None:
                out.append(cb.xor(x, y))
                c = cb.and_(x, y)
            else:
                out.append(cb.xor(cb.xor(x, y), c))
                c = cb.xor(cb.and_(cb.xor(x, c), cb.xor(y, c)), c)
        else:
            if c is None:
                out.append(x)
            else:
                out.append(cb.xor(x, c))
                c = cb.and_(x, c)
    if c is not None:
        out.append(c)
    return out


def build_counter(cb, bits: list, width: int | None = None) -> Bus:
    """Population count of the given wires via a balanced adder tree."""
    if not bits:
        raise ValueError("counter needs at least one input")
    nums = [[b] for b in bits]
    while len(nums) > 1:
        nxt = [_ripple_add(cb, nums[i], nums[i + 1])
               for i in range(0, len(nums) - 1, 2)]
        if len(nums) % 2:
            nxt.append(nums[-1])
        nums = nxt
    out = nums[0]
    if width is not None:
        while len(out) < width:
            out.append(cb.const0())
        out = out[:width]
    return out


def build_waksman(cb, buses: list, controls: list) -> list:
    """Apply a Waksman permutation network driven by control wires.

    Control wires are consumed in the canonical order of
    waksman_switch_pairs; each switch is one conditional bus swap.
    """
    pairs = waksman_switch_pairs(len(buses))
    if len(controls) != len(pairs):
        raise ValueError(f"need {len(pairs)} control wires, got {len(controls)}")
    vs = list(buses)
    for (i, j), s in zip(pairs, controls):
        vs[i], vs[j] = build_cond_swap(cb, s, vs[i], vs[j])
    return vs


def merger_comparator_count(n: int) -> int:
    """Comparators in build_bitonic_merger for two runs of length n."""
    return n * ((n * 2).bit_length() - 1)  # n * log2(2n)


def sorter_comparator_count(n: int) -> int:
    """Comparators in build_bitonic_sorter for n inputs: n*log(log+1)/4."""
    if n <= 1:
        return 0
    log = n.bit_length() - 1
    return n * log * (log + 1) // 4
