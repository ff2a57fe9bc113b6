"""Graded commutative algebras, free modules, symmetric forms and tensors.

Conventions
-----------
* A module K-basis element is a pair ``(a, g)``: algebra basis index and
  generator index, standing for ``a * g``.
* A form is a dict ``{(key, (a, g)): c}`` where ``key`` is a canonically
  sorted tuple of L-generator indices.  The entry means: on the generator
  tuple ``key`` the form takes the value ``c * a * g``.  Values on other
  arguments follow from graded symmetry and A-multilinearity.
* A tensor is a dict ``{(a, m, q): c}`` for ``c * a * m (x) q`` with ``m`` a
  sorted generator multiset and ``q`` a generator of the coefficient module.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Callable, Sequence

from .glinear import (GradedSpace, SymMultiMap, canonical_keys, normalize, vadd,
                      vadd1, vscale, split_by_degree)
from .signs import sort_sign, splits, sgn


class GradedAlgebra:
    """Finite-dimensional graded commutative algebra by structure constants.

    The unit must be a single basis element.
    """

    def __init__(self, space: GradedSpace, product: SymMultiMap | dict, unit: int = 0):
        self.space = space
        if not isinstance(product, SymMultiMap):
            product = SymMultiMap(space, space, 2, 0, product)
        self.product = product
        self.unit = unit
        n = space.dim
        self.degs = space.degs
        self._m = [[product.on_basis((i, j)) for j in range(n)] for i in range(n)]

    @property
    def dim(self) -> int:
        return self.space.dim

    def deg(self, i: int) -> int:
        return self.degs[i]

    def one(self) -> dict:
        return {self.unit: 1}

    def mul_basis(self, i: int, j: int) -> dict:
        return self._m[i][j]

    def mul(self, x: dict, y: dict) -> dict:
        out: dict = {}
        for i, a in x.items():
            row = self._m[i]
            for j, b in y.items():
                vadd(out, row[j], a * b)
        return out

    def __eq__(self, other):
        return (isinstance(other, GradedAlgebra) and self.space == other.space
                and self.product == other.product and self.unit == other.unit)

    def __repr__(self):
        return f"GradedAlgebra(dim={self.dim})"

    @classmethod
    def ground_field(cls) -> "GradedAlgebra":
        sp = GradedSpace((("1", 0),))
        return cls(sp, {(0, 0): {0: 1}}, 0)

    @classmethod
    def truncated_polynomial(cls, name: str, degree: int, order: int) -> "GradedAlgebra":
        """K[z]/(z^order) on an even generator z."""
        if degree % 2:
            raise ValueError("polynomial generator must have even degree")
        sp = GradedSpace(tuple((f"{name}^{i}" if i > 1 else (name if i else "1"), i * degree)
                               for i in range(order)))
        table = {(i, j): {i + j: 1} for i in range(order) for j in range(i, order) if i + j < order}
        alg = cls(sp, table, 0)
        alg.factors = tuple((1,) * i for i in range(order))
        return alg

    @classmethod
    def exterior(cls, gens: Sequence[tuple[str, int]]) -> "GradedAlgebra":
        """Free graded commutative algebra on odd generators."""
        if any(d % 2 == 0 for _, d in gens):
            raise ValueError("exterior generators must have odd degree")
        n = len(gens)
        subsets = sorted(range(1 << n), key=lambda s: (bin(s).count("1"), [i for i in range(n) if s >> i & 1]))
        name = lambda s: "*".join(gens[i][0] for i in range(n) if s >> i & 1) or "1"
        dg = lambda s: sum(gens[i][1] for i in range(n) if s >> i & 1)
        pos = {s: p for p, s in enumerate(subsets)}
        sp = GradedSpace(tuple((name(s), dg(s)) for s in subsets))
        table = {}
        for s in subsets:
            for t in subsets:
                if pos[s] > pos[t] or s & t:
                    continue
                word = [i for i in range(n) if s >> i & 1] + [i for i in range(n) if t >> i & 1]
                sign, _ = sort_sign(word, [1] * len(word))
                table[(pos[s], pos[t])] = {pos[s | t]: sign}
        alg = cls(sp, table, 0)
        alg.factors = tuple(tuple(pos[1 << i] for i in range(n) if s >> i & 1) for s in subsets)
        return alg


def extend_multiderivation(A: GradedAlgebra, arity: int, degree: int, values: dict,
                           skew: bool = False) -> SymMultiMap:
    """Extend values on tuples of algebra generators to a multiderivation of A.

    Needs ``A.factors`` (basis element -> generator basis positions), as set
    by ``GradedAlgebra.exterior``.  Values on tuples containing the unit vanish.
    """
    factors = A.factors
    H = SymMultiMap(A.space, A.space, arity, degree, skew=skew)
    memo: dict = {}

    def ev(key):
        if key in memo:
            return memo[key]
        degs = [A.deg(i) for i in key]
        sizes = [len(factors[i]) for i in key]
        if any(s == 0 for s in sizes):
            r = {}
        elif all(s == 1 for s in sizes):
            s, sk = sort_sign(key, degs, skew)
            v = values.get(sk, {}) if s else {}
            r = vscale(v, s)
        else:
            j = max(range(len(key)), key=lambda i: (sizes[i], i))
            s0 = sgn(degs[j] * sum(degs[j + 1:]))
            if skew:
                s0 *= sgn(len(key) - 1 - j)
            rest = key[:j] + key[j + 1:]
            g = factors[key[j]][0]
            h = [b for b in range(A.dim) if factors[b] == factors[key[j]][1:]][0]
            # the basis element equals c * g * h with c = +-1
            gh = A.mul_basis(g, h)
            c = gh[key[j]]
            r = {}
            vadd(r, A.mul(ev(rest + (g,)), {h: 1}), s0 * c)
            vadd(r, A.mul({g: 1}, ev(rest + (h,))), (s0 * c) * sgn((degree + sum(A.deg(i) for i in rest)) * A.deg(g)))
        memo[key] = r
        return r

    for key in canonical_keys(A.degs, arity) if not skew else canonical_keys([d + 1 for d in A.degs], arity):
        v = ev(key)
        if v:
            H.set(key, v)
    return H


@dataclass
class Report:
    """Outcome of a validation: ``ok`` plus a list of failure descriptions."""

    name: str
    ok: bool = True
    failures: list = field(default_factory=list)
    skipped: bool = False

    def fail(self, what) -> None:
        self.ok = False
        self.failures.append(what)

    def __bool__(self):
        return self.ok

    def as_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "skipped": self.skipped,
                "failures": [str(f) for f in self.failures]}


def validate_algebra(A: GradedAlgebra) -> Report:
    """Check unit and associativity on all basis triples."""
    r = Report("algebra")
    n = A.dim
    for i in range(n):
        if A.mul_basis(A.unit, i) != {i: 1}:
            r.fail(("unit", i))
    for i in range(n):
        for j in range(n):
            ij = A.mul_basis(i, j)
            for k in range(n):
                lhs = A.mul(ij, {k: 1})
                rhs = A.mul({i: 1}, A.mul_basis(j, k))
                if normalize(lhs) != normalize(rhs):
                    r.fail(("associativity", i, j, k))
    return r


class FreeModule:
    """Free module over a GradedAlgebra on graded generators."""

    def __init__(self, over: GradedAlgebra, generators: Sequence[tuple[str, int]]):
        self.A = over
        self.generators = tuple((str(n), int(d)) for n, d in generators)
        self.gdegs = tuple(d for _, d in self.generators)

    @property
    def rank(self) -> int:
        return len(self.generators)

    def gdeg(self, g: int) -> int:
        return self.gdegs[g]

    def deg(self, b) -> int:
        return self.A.degs[b[0]] + self.gdegs[b[1]]

    @cached_property
    def kbasis(self) -> tuple:
        return tuple((a, g) for a in range(self.A.dim) for g in range(self.rank))

    @cached_property
    def space(self) -> GradedSpace:
        an = self.A.space.names
        return GradedSpace(tuple((f"{an[a]}*{self.generators[g][0]}", self.deg((a, g)))
                                 for a, g in self.kbasis))

    def gen(self, g: int) -> dict:
        return {(self.A.unit, g): 1}

    def act(self, x: dict, m: dict) -> dict:
        """Left action of an algebra element."""
        out: dict = {}
        A = self.A
        for i, c in x.items():
            for (a, g), d in m.items():
                for b, e in A.mul_basis(i, a).items():
                    vadd1(out, (b, g), c * d * e)
        return out

    def coefficients(self, m: dict) -> dict[int, dict]:
        """Split ``m = sum_g c_g g`` into its algebra coefficients."""
        out: dict = {}
        for (a, g), c in m.items():
            out.setdefault(g, {})[a] = c
        return out

    def __eq__(self, other):
        return isinstance(other, FreeModule) and self.A == other.A and self.generators == other.generators

    def __repr__(self):
        return f"FreeModule(rank={self.rank})"


def trivial_module(A: GradedAlgebra) -> FreeModule:
    """A as a rank-one module on a degree-0 generator."""
    return FreeModule(A, (("1", 0),))


def mul_seq(A: GradedAlgebra, idxs: Sequence[int]) -> dict:
    out = {A.unit: 1}
    for i in idxs:
        out = A.mul(out, {i: 1})
    return out


# forms


class FormSpace:
    """Symmetric A-multilinear forms on a free module L with values in P."""

    def __init__(self, L: FreeModule, P: FreeModule):
        if L.A is not P.A and L.A != P.A:
            raise ValueError("L and P must live over the same algebra")
        self.L, self.P, self.A = L, P, L.A

    def keys(self, k: int) -> list[tuple[int, ...]]:
        return canonical_keys(self.L.gdegs, k)

    def basis(self, k: int) -> list:
        return [(key, p) for key in self.keys(k) for p in self.P.kbasis]

    def kdeg(self, key) -> int:
        return sum(self.L.gdegs[g] for g in key)

    def deg(self, b) -> int:
        key, p = b
        return self.P.deg(p) - self.kdeg(key)

    def sort_key(self, gens: Sequence[int]) -> tuple[int, tuple]:
        return sort_sign(tuple(gens), [self.L.gdegs[g] for g in gens])

    def nest(self, form: dict) -> dict:
        out: dict = {}
        for (key, p), c in form.items():
            out.setdefault(key, {})[p] = c
        return out

    def value(self, form: dict, gens: Sequence[int]) -> dict:
        """Value on a tuple of generators (any order)."""
        s, key = self.sort_key(gens)
        if not s:
            return {}
        out = {}
        for (k2, p), c in form.items():
            if k2 == key:
                out[p] = s * c
        return out

    def from_values(self, k: int, f: Callable[[tuple], dict]) -> dict:
        """Build the k-form whose value on each canonical key is ``f(key)``."""
        out = {}
        for key in self.keys(k):
            for p, c in f(key).items():
                if c:
                    out[(key, p)] = c
        return out

    def evaluate(self, form: dict, args: Sequence[dict]) -> dict:
        """Value on arbitrary L-elements, extended A-multilinearly."""
        L, A, P = self.L, self.A, self.P
        k = len(args)
        out: dict = {}
        bydeg = split_by_degree({b: c for b, c in form.items() if len(b[0]) == k}, self.deg)
        nested = {d: self.nest(f) for d, f in bydeg.items()}
        for combo in product(*[list(a.items()) for a in args]):
            coef = 1
            gens, avals = [], []
            for (a, g), c in combo:
                coef *= c
                gens.append(g)
                avals.append(a)
            s, key = self.sort_key(gens)
            if not s:
                continue
            prod_a = mul_seq(A, avals)
            for d, nf in nested.items():
                v = nf.get(key)
                if not v:
                    continue
                e, acc = 0, d
                for a, g in zip(avals, gens):
                    e += A.degs[a] * acc
                    acc += L.gdegs[g]
                vadd(out, P.act(prod_a, v), coef * s * sgn(e))
        return out

    def act(self, x: dict, form: dict) -> dict:
        """(x . form)(xi) = x * form(xi)."""
        out: dict = {}
        for (key, p), c in form.items():
            for q, d in self.P.act(x, {p: c}).items():
                vadd1(out, (key, q), d)
        return out


def form_product(FA: FormSpace, FP: FormSpace, w: dict, W: dict,
                 value_mul: Callable[[dict, dict], dict] | None = None) -> dict:
    """Product of an A-valued form with a P-valued form.

    Also serves as the module action of A-valued forms on P-valued forms.
    ``value_mul`` multiplies an FA value by an FP value (default: the action).
    """
    if FA.L != FP.L:
        raise ValueError("forms on different modules")
    P = FP.P
    if value_mul is None:
        if FA.P.rank != 1:
            raise ValueError("value_mul is required for module-valued first factors")
        value_mul = lambda a, p: P.act({x[0]: c for x, c in a.items()}, p)
    mulv = value_mul
    ldeg = FA.L.gdegs
    wn = _nest_by_deg(FA, w)
    Wn = _nest_by_deg(FP, W)
    out: dict = {}
    targets = set()
    for (k1, _), _c in w.items():
        for (k2, _), _d in W.items():
            targets.add(tuple(sorted(k1 + k2)))
    for key in sorted(targets):
        degs = [ldeg[g] for g in key]
        if any(key[i] == key[i + 1] and degs[i] & 1 for i in range(len(key) - 1)):
            continue
        val: dict = {}
        for (kw, dw), vw in wn.items():
            l = len(kw)
            for (kW, dW), vW in Wn.items():
                if l + len(kW) != len(key):
                    continue
                for first, rest, a in splits(degs, l):
                    f = tuple(key[i] for i in first)
                    if f != kw:
                        continue
                    r = tuple(key[i] for i in rest)
                    if r != kW:
                        continue
                    e = dW * sum(degs[i] for i in first)
                    vadd(val, mulv(vw, vW), a * sgn(e))
        for p, c in val.items():
            out[(key, p)] = c
    return out


def _nest_by_deg(F: FormSpace, form: dict) -> dict:
    out: dict = {}
    for (key, p), c in form.items():
        out.setdefault((key, F.deg((key, p))), {})[p] = c
    return out


# tensors


class TensorSpace:
    """S_A(L) tensored over A with a free module Q."""

    def __init__(self, L: FreeModule, Q: FreeModule | None = None):
        self.L = L
        self.A = L.A
        self.Q = Q if Q is not None else trivial_module(L.A)

    def deg(self, b) -> int:
        a, m, q = b
        return self.A.degs[a] + sum(self.L.gdegs[g] for g in m) + self.Q.gdegs[q]

    def mdeg(self, m) -> int:
        return sum(self.L.gdegs[g] for g in m)

    def monomials(self, k: int) -> list[tuple[int, ...]]:
        return canonical_keys(self.L.gdegs, k)

    def basis(self, max_degree: int, min_degree: int = 0) -> list:
        return [(a, m, q) for k in range(min_degree, max_degree + 1) for m in self.monomials(k)
                for a in range(self.A.dim) for q in range(self.Q.rank)]

    def from_module(self, x: dict) -> dict:
        """Embed an L-element as a degree-one tensor (trivial Q only)."""
        return {(a, (g,), 0): c for (a, g), c in x.items()}

    def from_algebra(self, x: dict, q: int = 0) -> dict:
        return {(a, (), q): c for a, c in x.items()}

    def with_coefficient(self, m: Sequence[int], qv: dict) -> dict:
        """``m (x) qv`` for a sorted monomial m and a Q-element qv."""
        md = self.mdeg(m)
        out: dict = {}
        for (b, q), c in qv.items():
            vadd1(out, (b, tuple(m), q), c * sgn(md * self.A.degs[b]))
        return out

    def split_coefficient(self, b) -> tuple[int, tuple, dict]:
        """Write basis tensor ``a m (x) q`` as ``sign * m (x) (a q)``."""
        a, m, q = b
        return sgn(self.A.degs[a] * self.mdeg(m)), m, {(a, q): 1}

    def scalar_act(self, x: dict, U: dict) -> dict:
        out: dict = {}
        for i, c in x.items():
            for (a, m, q), d in U.items():
                for b, e in self.A.mul_basis(i, a).items():
                    vadd1(out, (b, m, q), c * d * e)
        return out


def monomial_mul(L: FreeModule, m: tuple, n: tuple) -> tuple[int, tuple]:
    key = m + n
    return sort_sign(key, [L.gdegs[g] for g in key])


def tensor_mul(T: TensorSpace, u: dict, U: dict) -> dict:
    """mu_u U: product by a symmetric tensor u (trivial-Q tensor)."""
    A, L = T.A, T.L
    out: dict = {}
    for (a, m, _q0), c in u.items():
        md = T.mdeg(m)
        for (b, n, q), d in U.items():
            s, mn = monomial_mul(L, m, n)
            if not s:
                continue
            s *= sgn(md * A.degs[b])
            for e, x in A.mul_basis(a, b).items():
                vadd1(out, (e, mn, q), s * c * d * x)
    return out


def tensor_mu(FA: FormSpace, T: TensorSpace, w: dict, U: dict) -> dict:
    """i_w U: contraction of an A-valued form into a tensor.

    The form eats ``arity(w)`` factors; too short tensors give zero.
    """
    A, L = T.A, T.L
    ldeg = L.gdegs
    out: dict = {}
    for (kw, wv), c in w.items():
        wdeg = FA.deg((kw, wv))
        b = wv[0]
        k = len(kw)
        for (a, m, q), d in U.items():
            if len(m) < k:
                continue
            degs = [ldeg[g] for g in m]
            s0 = sgn(A.degs[a] * wdeg)
            for kept, fed, al in splits(degs, len(m) - k):
                sf, fk = sort_sign(tuple(m[i] for i in fed), [degs[i] for i in fed])
                if not sf or fk != kw:
                    continue
                mk = tuple(m[i] for i in kept)
                kd = sum(degs[i] for i in kept)
                s = s0 * al * sf * sgn(wdeg * kd) * sgn(A.degs[b] * kd)
                for e, x in A.mul_basis(a, b).items():
                    vadd1(out, (e, mk, q), s * c * d * x)
    return out


def insert(T: TensorSpace, F: FormSpace, u: dict, W: dict) -> dict:
    """i_u W: feed the factors of a symmetric tensor u into the form W first."""
    out: dict = {}
    for (a, m, _q0), c in u.items():
        md = T.mdeg(m)
        for (key, p), d in W.items():
            rest = _multiset_minus(key, m)
            if rest is None:
                continue
            Wd = F.deg((key, p))
            s, sk = F.sort_key(m + rest)
            if not s or sk != key:
                continue
            s *= sgn(md * Wd)
            for q, x in F.P.act({a: 1}, {p: 1}).items():
                vadd1(out, (rest, q), s * c * d * x)
    return out


def _multiset_minus(key: tuple, m: tuple):
    rest = list(key)
    for g in m:
        try:
            rest.remove(g)
        except ValueError:
            return None
    return tuple(rest)
