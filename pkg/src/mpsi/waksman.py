"""Waksman permutation networks for power-of-two sizes.

The network is expressed as a flat list of conditional position swaps in a
canonical order (input switches, top subnetwork, bottom subnetwork, output
switches with the last one fixed straight). Applying the swaps sequentially
in that order realizes the network, which keeps the circuit builder, the
plaintext applier and the router in lockstep by construction.

Semantics: controls = route_waksman(perm) makes apply_waksman(controls, v)
place v[s] at position perm[s], for every source position s.
"""

from __future__ import annotations

import random
from functools import lru_cache


def _check_size(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise ValueError("network size must be a power of two")


def switch_count(n: int) -> int:
    """n*log2(n) - n + 1 switches for n >= 2; 0 for n == 1."""
    _check_size(n)
    if n == 1:
        return 0
    return n * (n.bit_length() - 1) - n + 1


def _pairs_rec(idx: list, out: list) -> None:
    n = len(idx)
    if n == 1:
        return
    if n == 2:
        out.append((idx[0], idx[1]))
        return
    half = n // 2
    for k in range(half):
        out.append((idx[2 * k], idx[2 * k + 1]))
    _pairs_rec(idx[0::2], out)
    _pairs_rec(idx[1::2], out)
    for k in range(half - 1):
        out.append((idx[2 * k], idx[2 * k + 1]))


@lru_cache(maxsize=32)
def waksman_switch_pairs(n: int) -> tuple:
    """Canonical switch list as (i, j) position pairs."""
    _check_size(n)
    out: list = []
    _pairs_rec(list(range(n)), out)
    assert len(out) == switch_count(n)
    return tuple(out)


def _route_rec(perm: list, out: list) -> None:
    n = len(perm)
    if n == 1:
        return
    if n == 2:
        out.append(1 if perm[0] == 1 else 0)
        return
    half = n // 2
    inv = [0] * n
    for s, d in enumerate(perm):
        inv[d] = s
    # subnet[s]: 0 routes source s through the top half, 1 through the bottom.
    subnet: list = [None] * n
    in_ctrl = [0] * half
    out_ctrl = [0] * half
    # The last output switch is fixed straight: destination n-2 arrives via
    # the top subnetwork, n-1 via the bottom. Constraints alternate through
    # input-switch partners (adjacent sources) and output-switch partners
    # (adjacent destinations), so each cycle is forced once seeded.
    stack = [(inv[n - 2], 0), (inv[n - 1], 1)]
    scan = 0
    while True:
        while stack:
            s, x = stack.pop()
            if subnet[s] is not None:
                assert subnet[s] == x, "inconsistent routing constraints"
                continue
            subnet[s] = x
            in_ctrl[s >> 1] = (s & 1) ^ x
            d = perm[s]
            out_ctrl[d >> 1] = (d & 1) ^ x
            stack.append((s ^ 1, x ^ 1))
            stack.append((inv[d ^ 1], x ^ 1))
        while scan < n and subnet[scan] is not None:
            scan += 1
        if scan == n:
            break
        stack.append((scan, 0))
    assert out_ctrl[half - 1] == 0
    top = [0] * half
    bot = [0] * half
    for s in range(n):
        d = perm[s]
        if subnet[s] == 0:
            top[s >> 1] = d >> 1
        else:
            bot[s >> 1] = d >> 1
    out.extend(in_ctrl)
    _route_rec(top, out)
    _route_rec(bot, out)
    out.extend(out_ctrl[: half - 1])


def route_waksman(perm) -> list:
    """Control bits (canonical order) realizing v[s] -> position perm[s]."""
    perm = list(perm)
    n = len(perm)
    _check_size(n)
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation")
    out: list = []
    _route_rec(perm, out)
    assert len(out) == switch_count(n)
    return out


def apply_waksman(controls, items) -> list:
    """Plaintext application of the switch list to a vector."""
    items = list(items)
    pairs = waksman_switch_pairs(len(items))
    if len(controls) != len(pairs):
        raise ValueError(f"need {len(pairs)} controls, got {len(controls)}")
    for (i, j), c in zip(pairs, controls):
        if c:
            items[i], items[j] = items[j], items[i]
    return items


def apply_permutation(perm, items) -> list:
    """Reference semantics: out[perm[s]] = items[s]."""
    out = [None] * len(items)
    for s, d in enumerate(perm):
        out[d] = items[s]
    return out


def sample_permutation(n: int, rng=None) -> list:
    """Uniform permutation; defaults to the OS CSPRNG."""
    if rng is None:
        rng = random.SystemRandom()
    perm = list(range(n))
    rng.shuffle(perm)
    return perm
