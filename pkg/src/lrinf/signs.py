"""Sign and combinatorial bookkeeping for graded symmetric calculus.

Permutations are given in one-line notation with 1-based images,
``sigma = (sigma(1), ..., sigma(n))``.  The Koszul sign ``alpha(sigma, v)``
is defined by ``v_{sigma(1)} ... v_{sigma(n)} = alpha * v_1 ... v_n`` in a
graded symmetric algebra.
"""
from __future__ import annotations

from itertools import combinations
from typing import Iterator, Sequence


def _check_perm(sigma: Sequence[int]) -> None:
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise ValueError(f"not a permutation of 1..{len(sigma)}: {tuple(sigma)}")


def koszul_alpha(sigma: Sequence[int], degs: Sequence[int]) -> int:
    """Koszul sign of reordering ``v_1..v_n`` into ``v_{sigma(1)}..v_{sigma(n)}``."""
    if len(sigma) != len(degs):
        raise ValueError("permutation and degree sequence differ in length")
    _check_perm(sigma)
    odd = [degs[s - 1] & 1 for s in sigma]
    e = 0
    for i in range(len(odd)):
        if odd[i]:
            for j in range(i + 1, len(odd)):
                if odd[j] and sigma[i] > sigma[j]:
                    e ^= 1
    return -1 if e else 1


def parity(sigma: Sequence[int]) -> int:
    """Sign of a permutation."""
    _check_perm(sigma)
    return koszul_alpha(sigma, [1] * len(sigma))


def unshuffles(l: int, m: int) -> list[tuple[int, ...]]:
    """All (l, m)-unshuffles, ordered lexicographically on the first block."""
    if l < 0 or m < 0:
        raise ValueError("block sizes must be non-negative")
    n = l + m
    out = []
    for first in combinations(range(1, n + 1), l):
        fs = set(first)
        out.append(first + tuple(i for i in range(1, n + 1) if i not in fs))
    return out


def decalage_sign(degs: Sequence[int]) -> int:
    """(-1) to the power (k-1)v_1 + (k-2)v_2 + ... + v_{k-1}."""
    k = len(degs)
    e = sum((k - 1 - i) * d for i, d in enumerate(degs))
    return -1 if e & 1 else 1


# 0-based helpers used by the rest of the package


def sort_sign(keys: Sequence, degs: Sequence[int], skew: bool = False) -> tuple[int, tuple]:
    """Sign and result of stably sorting ``keys`` as graded symmetric factors.

    Returns sign 0 if two equal keys of odd degree meet.  With ``skew`` the
    factors are graded skew-symmetric: the sign also carries the permutation
    parity and equal keys of even degree give 0.
    """
    n = len(keys)
    order = sorted(range(n), key=lambda i: keys[i])
    s = 1
    for a in range(n):
        if degs[order[a]] & 1:
            for b in range(a + 1, n):
                if degs[order[b]] & 1 and order[a] > order[b]:
                    s = -s
    if skew:
        for a in range(n):
            for b in range(a + 1, n):
                if order[a] > order[b]:
                    s = -s
    out = tuple(keys[i] for i in order)
    for a in range(n - 1):
        if out[a] == out[a + 1] and (degs[order[a]] + skew) & 1:
            return 0, out
    return s, out


def splits(degs: Sequence[int], l: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], int]]:
    """Yield ``(first, rest, alpha)`` over (l, n-l)-unshuffles, 0-based positions."""
    n = len(degs)
    if l < 0 or l > n:
        return
    for first in combinations(range(n), l):
        fs = set(first)
        rest = tuple(i for i in range(n) if i not in fs)
        # alpha: moving the first block to the front
        e = 0
        for i in first:
            if degs[i] & 1:
                for j in rest:
                    if j < i and degs[j] & 1:
                        e ^= 1
        yield first, rest, (-1 if e else 1)


def sgn(e: int) -> int:
    return -1 if e & 1 else 1
