"""Graded vector spaces over Q, sparse elements and graded symmetric multilinear maps.

Vectors are plain dicts ``{basis key: coefficient}`` with no stored zeros.
Coefficients are ``int`` or ``fractions.Fraction``; both compare exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Callable, Iterable, Sequence

from .signs import sort_sign, splits, sgn

Vec = dict


# sparse vector helpers


def vadd(acc: dict, v: dict, c=1) -> dict:
    """acc += c * v, in place; returns acc."""
    if not c:
        return acc
    for k, x in v.items():
        y = acc.get(k, 0) + c * x
        if y:
            acc[k] = y
        else:
            acc.pop(k, None)
    return acc


def vadd1(acc: dict, k, c) -> dict:
    if c:
        y = acc.get(k, 0) + c
        if y:
            acc[k] = y
        else:
            acc.pop(k, None)
    return acc


def vscale(v: dict, c) -> dict:
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def vsum(vs: Iterable[dict]) -> dict:
    acc: dict = {}
    for v in vs:
        vadd(acc, v)
    return acc


def vsub(a: dict, b: dict) -> dict:
    return vadd(dict(a), b, -1)


def normalize(v: dict) -> dict:
    """Drop zeros and turn integral Fractions into ints (canonical form)."""
    out = {}
    for k, x in v.items():
        if x:
            if isinstance(x, Fraction) and x.denominator == 1:
                x = x.numerator
            out[k] = x
    return out


def split_by_degree(v: dict, deg: Callable) -> dict[int, dict]:
    out: dict[int, dict] = {}
    for k, x in v.items():
        out.setdefault(deg(k), {})[k] = x
    return out


def to_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


# graded spaces


@dataclass(frozen=True)
class GradedSpace:
    """Finite ordered basis of named, integer-graded symbols."""

    basis: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple((str(n), int(d)) for n, d in self.basis))
        names = [n for n, _ in self.basis]
        if len(set(names)) != len(names):
            raise ValueError("basis names must be unique")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def degs(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.basis)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.basis)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def deg(self, i: int) -> int:
        return self.basis[i][1]

    def element(self, coeffs: dict) -> "Element":
        return Element(self, coeffs)

    def degree_of(self, v: dict) -> int | None:
        ds = {self.basis[i][1] for i in v}
        if len(ds) > 1:
            raise ValueError("element is not homogeneous")
        return ds.pop() if ds else None

    def keys(self, k: int) -> list[tuple[int, ...]]:
        """Canonical sorted k-tuples with no repeated odd basis element."""
        return canonical_keys(self.degs, k)


def canonical_keys(degs: Sequence[int], k: int) -> list[tuple[int, ...]]:
    out = []
    for key in combinations_with_replacement(range(len(degs)), k):
        if any(key[i] == key[i + 1] and degs[key[i]] & 1 for i in range(k - 1)):
            continue
        out.append(key)
    return out


class Element(dict):
    """A vector of a GradedSpace, stored sparsely."""

    def __init__(self, space: GradedSpace, coeffs: dict | None = None):
        super().__init__()
        self.space = space
        for k, x in (coeffs or {}).items():
            if not 0 <= k < space.dim:
                raise IndexError(f"basis index {k} out of range")
            x = Fraction(x) if isinstance(x, str) else x
            if x:
                self[k] = x

    @property
    def degree(self) -> int | None:
        return self.space.degree_of(self)

    def __add__(self, other):
        return Element(self.space, vadd(dict(self), other))

    def __sub__(self, other):
        return Element(self.space, vadd(dict(self), other, -1))

    def __rmul__(self, c):
        return Element(self.space, vscale(self, c))

    def __neg__(self):
        return Element(self.space, vscale(self, -1))


# graded symmetric multilinear maps


class SymMultiMap:
    """k-ary graded symmetric map stored on canonically sorted basis tuples.

    With ``skew=True`` the map is graded skew-symmetric instead (the sort
    sign also carries the permutation parity).
    """

    def __init__(self, domain: GradedSpace, codomain: GradedSpace, arity: int,
                 degree: int, table: dict | None = None, skew: bool = False):
        self.domain = domain
        self.codomain = codomain
        self.arity = arity
        self.degree = degree
        self.skew = skew
        self.table: dict[tuple[int, ...], dict] = {}
        for key, val in (table or {}).items():
            self.set(tuple(key), val)

    def _sort(self, key):
        return sort_sign(key, [self.domain.deg(i) for i in key], self.skew)

    def set(self, key: tuple[int, ...], val: dict) -> None:
        """Store ``f(key) = val``; the sorting sign is applied here."""
        if len(key) != self.arity:
            raise ValueError("key length differs from arity")
        s, skey = self._sort(key)
        val = normalize(val)
        if s == 0:
            if val:
                raise ValueError(f"nonzero value on key {key} with a repeated odd entry")
            return
        want = self.degree + sum(self.domain.deg(i) for i in key)
        for j in val:
            if self.codomain.deg(j) != want:
                raise ValueError(f"value on {key} has wrong degree")
        cur = self.table.get(skey, {})
        new = vadd(dict(cur), val, s)
        if new:
            self.table[skey] = new
        else:
            self.table.pop(skey, None)

    def on_basis(self, key: tuple[int, ...]) -> dict:
        s, skey = self._sort(key)
        if s == 0:
            return {}
        v = self.table.get(skey)
        if not v:
            return {}
        return v if s == 1 else vscale(v, -1)

    def __call__(self, *args: dict) -> dict:
        return eval_map(self, tuple(args))

    def __eq__(self, other):
        if not isinstance(other, SymMultiMap):
            return NotImplemented
        return (self.domain == other.domain and self.codomain == other.codomain
                and self.arity == other.arity and self.skew == other.skew
                and (self.degree == other.degree or not self.table and not other.table)
                and normalize_table(self.table) == normalize_table(other.table))

    def is_zero(self) -> bool:
        return not self.table

    def __repr__(self):
        return f"SymMultiMap(arity={self.arity}, degree={self.degree}, entries={len(self.table)})"


def normalize_table(t: dict) -> dict:
    return {k: normalize(v) for k, v in t.items() if normalize(v)}


def eval_map(f: SymMultiMap, args: tuple) -> dict:
    """Multilinear evaluation with Koszul sorting signs."""
    if len(args) != f.arity:
        raise ValueError(f"expected {f.arity} arguments, got {len(args)}")
    if isinstance_space_mismatch(f.domain, args):
        raise ValueError("argument lives in a different space")
    out: dict = {}
    items = [list(a.items()) for a in args]
    for combo in product(*items):
        c = 1
        key = []
        for k, x in combo:
            c *= x
            key.append(k)
        vadd(out, f.on_basis(tuple(key)), c)
    return out


def isinstance_space_mismatch(space, args) -> bool:
    return any(isinstance(a, Element) and a.space != space for a in args)


def _circ_value(H: SymMultiMap, G: SymMultiMap, key: tuple[int, ...]) -> dict:
    degs = [H.domain.deg(i) for i in key]
    l = G.arity
    out: dict = {}
    for first, rest, a in splits(degs, l):
        g = G.on_basis(tuple(key[i] for i in first))
        if not g:
            continue
        rk = tuple(key[i] for i in rest)
        for j, x in g.items():
            vadd(out, H.on_basis((j,) + rk), a * x)
    return out


def gcirc(H: SymMultiMap, G: SymMultiMap) -> SymMultiMap:
    """Gerstenhaber-type composition: insert G into the first slot of H, symmetrized."""
    if G.codomain != H.domain or G.domain != H.domain or H.skew or G.skew:
        raise ValueError("gcirc needs symmetric maps on one space")
    if H.arity < 1:
        raise ValueError("H must take at least one argument")
    n = H.arity + G.arity - 1
    R = SymMultiMap(H.domain, H.codomain, n, H.degree + G.degree)
    if H.is_zero() or G.is_zero():
        return R
    for key in H.domain.keys(n):
        v = _circ_value(H, G, key)
        if v:
            R.table[key] = v
    return R


def mapsum(maps: Sequence[SymMultiMap], coeffs: Sequence) -> SymMultiMap:
    """Linear combination of maps of equal arity."""
    m0 = maps[0]
    deg = next((m.degree for m in maps if m.table), m0.degree)
    R = SymMultiMap(m0.domain, m0.codomain, m0.arity, deg)
    for m, c in zip(maps, coeffs):
        if m.arity != m0.arity or (m.table and m.degree != deg):
            raise ValueError("arity or degree mismatch")
        for key, v in m.table.items():
            new = vadd(dict(R.table.get(key, {})), v, c)
            if new:
                R.table[key] = new
            else:
                R.table.pop(key, None)
    return R


def gbracket(H: SymMultiMap, G: SymMultiMap) -> SymMultiMap:
    """[H, G] = H o G - (-1)^{HG} G o H."""
    return mapsum([gcirc(H, G), gcirc(G, H)], [1, -sgn(H.degree * G.degree)])


def graded_commutator(f_deg: int, f, g_deg: int, g) -> Callable[[dict], dict]:
    """[f, g] = fg - (-1)^{fg} gf for linear maps given as callables on vectors."""
    s = sgn(f_deg * g_deg)

    def h(v):
        return vadd(f(g(v)), g(f(v)), -s)
    return h
