"""Reference results computed outside the circuit/protocol stack.

Everything here goes out of its way to NOT share code with the protocol:
intersections are computed twice through structurally different routes,
similarity uses exact rationals, and the shuffle check feeds observed
permutation draws to a chi-square test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from scipy.stats import chisquare


def intersect_sets(sets) -> tuple:
    """Hash-set route: fold set.intersection over all inputs."""
    it = iter(sets)
    acc = set(next(it))
    for s in it:
        acc &= set(s)
    return tuple(sorted(acc))


def intersect_merge(sets) -> tuple:
    """Independent route: k-way scan over sorted copies, no set type."""
    lists = [sorted(s) for s in sets]
    idx = [0] * len(lists)
    out = []
    while all(i < len(l) for i, l in zip(idx, lists)):
        vals = [l[i] for i, l in zip(idx, lists)]
        hi = max(vals)
        if all(v == hi for v in vals):
            out.append(hi)
            idx = [i + 1 for i in idx]
        else:
            idx = [i + (1 if v < hi else 0) for i, v in zip(idx, vals)]
    return tuple(out)


def intersect_oracle(sets) -> tuple:
    """Both routes must agree; their common answer is the oracle value."""
    a = intersect_sets(sets)
    b = intersect_merge(sets)
    if a != b:
        raise AssertionError(f"oracle routes disagree: {a} vs {b}")
    return a


def jaccard_oracle(size_a: int, size_b: int, inter: int) -> Fraction:
    """|A n B| / |A u B| from set sizes and intersection cardinality."""
    union = size_a + size_b - inter
    if union == 0:
        raise ValueError("Jaccard is undefined when both sets are empty")
    return Fraction(inter, union)


@dataclass(frozen=True)
class UniformityResult:
    statistic: float
    p_value: float
    n_cells: int
    passed: bool


def uniformity_check(draws, n: int, alpha: float = 0.001) -> UniformityResult:
    """Chi-square uniformity test over all n! permutations of range(n)."""
    draws = list(draws)
    cells = {p: 0 for p in permutations(range(n))}
    if len(draws) < 10 * len(cells):
        raise ValueError(f"need at least {10 * len(cells)} draws for n={n}")
    for d in draws:
        key = tuple(d)
        if key not in cells:
            raise ValueError(f"draw {key} is not a permutation of range({n})")
        cells[key] += 1
    counts = list(cells.values())
    stat, p = chisquare(counts)
    return UniformityResult(statistic=float(stat), p_value=float(p),
                            n_cells=len(counts), passed=bool(p >= alpha))
