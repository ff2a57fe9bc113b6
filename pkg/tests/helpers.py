"""Random generators and independent oracles shared by the test modules."""
from __future__ import annotations

import random
from fractions import Fraction
from itertools import permutations
from math import factorial

import sympy

from lrinf.conn import derform_from_generators, symbol_report
from lrinf.galgebra import FreeModule, GradedAlgebra
from lrinf.glinear import GradedSpace, SymMultiMap, canonical_keys, normalize, vadd
from lrinf.mder import FormalMultiderivation, ModMultiderivation, derivation_basis, op_add

NONZERO = (-2, -1, 1, 2)


def rvec(rng: random.Random, basis, p: float = 0.5) -> dict:
    return {b: rng.choice(NONZERO) for b in basis if rng.random() < p}


# small module shapes with K-dimension at most 6


def shapes() -> list[FreeModule]:
    A1 = GradedAlgebra.exterior([("x", 1)])
    A2 = GradedAlgebra.exterior([("x", 1), ("y", -1)])
    A3 = GradedAlgebra.truncated_polynomial("w", 0, 3)
    return [
        FreeModule(A1, (("e", 0), ("f", 1))),
        FreeModule(A1, (("e", 0), ("f", -1), ("g", 2))),
        FreeModule(A2, (("e", 0),)),
        FreeModule(A3, (("e", 0), ("f", 1))),
    ]


def random_component(rng: random.Random, L: FreeModule, k: int, d: int, p: float = 0.5) -> ModMultiderivation:
    A = L.A
    c = ModMultiderivation(L, k, d)
    for key in canonical_keys(L.gdegs, k):
        want = d + sum(L.gdegs[g] for g in key)
        c.set_X(key, rvec(rng, [b for b in L.kbasis if L.deg(b) == want], p))
    for key in canonical_keys(L.gdegs, k - 1):
        dd = d + sum(L.gdegs[g] for g in key)
        M: dict = {}
        for B in derivation_basis(A, dd):
            if rng.random() < p:
                M = op_add(M, B, rng.choice(NONZERO))
        c.set_sigma(key, M)
    return c


def random_fm(rng: random.Random, L: FreeModule, d: int, arities, cap: int = 6) -> FormalMultiderivation:
    return FormalMultiderivation(L, d, {k: random_component(rng, L, k, d) for k in arities}, cap=cap)


def random_pair(rng: random.Random, L: FreeModule, P: FreeModule, side: str, d: int, arities):
    """A random multiderivation together with a subordinate derivation-valued form."""
    X = random_fm(rng, L, d, arities)
    vals: dict = {}
    for k in arities:
        for key in canonical_keys(L.gdegs, k - 1):
            dd = d + sum(L.gdegs[g] for g in key)
            vals.setdefault(k - 1, {})[key] = {
                g: rvec(rng, [b for b in P.kbasis if P.deg(b) == P.gdegs[g] + dd]) for g in range(P.rank)}
    F = derform_from_generators(L, P, side, X, vals, d)
    assert symbol_report(F, X).ok
    return X, F


def random_symmap(rng: random.Random, V: GradedSpace, k: int, d: int, p: float = 0.6) -> SymMultiMap:
    m = SymMultiMap(V, V, k, d)
    for key in V.keys(k):
        want = d + sum(V.deg(i) for i in key)
        m.set(key, {j: rng.choice(NONZERO) for j in range(V.dim) if V.deg(j) == want and rng.random() < p})
    return m


# oracles


def koszul_by_swaps(sigma, degs) -> int:
    """Sign of bringing v_1..v_n into the order v_sigma(1)..v_sigma(n) by adjacent swaps."""
    cur = list(range(1, len(sigma) + 1))
    target = list(sigma)
    s = 1
    for pos in range(len(target)):
        j = cur.index(target[pos], pos)
        while j > pos:
            a, b = cur[j - 1], cur[j]
            if degs[a - 1] % 2 and degs[b - 1] % 2:
                s = -s
            cur[j - 1], cur[j] = b, a
            j -= 1
    return s


def gcirc_by_permutations(H: SymMultiMap, G: SymMultiMap, key: tuple) -> dict:
    """(H o G)(v) as the full permutation sum divided by l!(n-l)!."""
    n, l = len(key), G.arity
    degs = [H.domain.deg(i) for i in key]
    out: dict = {}
    for perm in permutations(range(1, n + 1)):
        a = koszul_by_swaps(perm, degs)
        g = G.on_basis(tuple(key[perm[i] - 1] for i in range(l)))
        rest = tuple(key[perm[i] - 1] for i in range(l, n))
        for j, c in g.items():
            vadd(out, H.on_basis((j,) + rest), Fraction(a * c, factorial(l) * factorial(n - l)))
    return normalize(out)


def dense_rank(rows) -> int:
    if not rows or not rows[0]:
        return 0
    return sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in r] for r in rows]).rank()
