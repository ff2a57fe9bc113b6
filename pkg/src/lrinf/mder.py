"""Multiderivations of algebras and modules, their brackets, and the maps eta, nu.

A linear operator on a finite space is stored as a column dict
``{basis key: image vector}``.  A module multiderivation of L is the pair
``(X, sigma)``: X on generator k-tuples with values in L, and the symbol
sigma on generator (k-1)-tuples with values in derivations of A.
"""
from __future__ import annotations

from itertools import product
from typing import Callable, Iterable, Sequence

from .galgebra import (FormSpace, FreeModule, GradedAlgebra, Report, TensorSpace,
                       mul_seq, tensor_mul, trivial_module)
from .glinear import SymMultiMap, normalize, vadd, vadd1, vscale, canonical_keys
from .linalg import nullspace
from .signs import sort_sign, splits, sgn

DEFAULT_CAP = 4


# operators as column dicts


def op_apply(M: dict, v: dict) -> dict:
    out: dict = {}
    for k, c in v.items():
        col = M.get(k)
        if col:
            vadd(out, col, c)
    return out


def op_compose(M: dict, N: dict) -> dict:
    """M o N."""
    out = {}
    for k, col in N.items():
        img = op_apply(M, col)
        if img:
            out[k] = img
    return out


def op_add(M: dict, N: dict, c=1) -> dict:
    out = {k: dict(v) for k, v in M.items()}
    for k, col in N.items():
        new = vadd(out.get(k, {}), col, c)
        if new:
            out[k] = new
        else:
            out.pop(k, None)
    return out


def op_scale(M: dict, c) -> dict:
    if not c:
        return {}
    return {k: vscale(v, c) for k, v in M.items()}


def op_commutator(M: dict, dm: int, N: dict, dn: int) -> dict:
    return op_add(op_compose(M, N), op_compose(N, M), -sgn(dm * dn))


def op_normalize(M: dict) -> dict:
    out = {}
    for k, v in M.items():
        v = normalize(v)
        if v:
            out[k] = v
    return out


def op_from_callable(f: Callable[[dict], dict], basis: Iterable) -> dict:
    out = {}
    for b in basis:
        img = f({b: 1})
        if img:
            out[b] = img
    return out


def alg_left_mul(A: GradedAlgebra, x: dict, M: dict) -> dict:
    """(x . M)(v) = x * M(v) for an operator on A."""
    return {k: A.mul(x, col) for k, col in M.items() if A.mul(x, col)}


# derivations of A


class AlgDerivation:
    """Degree-d derivation of A stored as a full matrix."""

    def __init__(self, A: GradedAlgebra, degree: int, matrix: dict | None = None):
        self.A = A
        self.degree = degree
        self.matrix = op_normalize(matrix or {})

    def __call__(self, x: dict) -> dict:
        return op_apply(self.matrix, x)

    def check(self) -> Report:
        return check_derivation(self.A, self.degree, self.matrix)

    def __eq__(self, other):
        return (isinstance(other, AlgDerivation) and self.A == other.A
                and self.matrix == other.matrix
                and (self.degree == other.degree or not self.matrix))

    def __repr__(self):
        return f"AlgDerivation(degree={self.degree}, entries={len(self.matrix)})"


def check_derivation(A: GradedAlgebra, degree: int, M: dict) -> Report:
    r = Report("leibniz")
    for i, col in M.items():
        for j in col:
            if A.deg(j) != A.deg(i) + degree:
                r.fail(("degree", i))
    for i in range(A.dim):
        for j in range(A.dim):
            lhs = op_apply(M, A.mul_basis(i, j))
            rhs = vadd(A.mul(op_apply(M, {i: 1}), {j: 1}),
                       A.mul({i: 1}, op_apply(M, {j: 1})), sgn(degree * A.deg(i)))
            if normalize(lhs) != normalize(rhs):
                r.fail((i, j))
    return r


def derivation_basis(A: GradedAlgebra, degree: int) -> list[dict]:
    """Basis of the space of degree-d derivations of A (as matrices)."""
    n = A.dim
    cols = [(i, j) for i in range(n) for j in range(n) if A.deg(j) == A.deg(i) + degree]
    rows = []
    for i in range(n):
        for j in range(n):
            # D(e_i e_j) - D(e_i) e_j - s e_i D(e_j) = 0, coefficientwise
            eq: dict = {}
            for m, c in A.mul_basis(i, j).items():
                for (a, b) in cols:
                    if a == m:
                        vadd1(eq, ((a, b), b), c)
            s = sgn(degree * A.deg(i))
            for (a, b) in cols:
                if a == i:
                    for t, c in A.mul_basis(b, j).items():
                        vadd1(eq, ((a, b), t), -c)
                if a == j:
                    for t, c in A.mul_basis(i, b).items():
                        vadd1(eq, ((a, b), t), -s * c)
            by_t: dict = {}
            for (col, t), c in eq.items():
                by_t.setdefault(t, {})[col] = c
            rows.extend(v for v in by_t.values() if v)
    out = []
    for v in nullspace(rows, cols):
        M: dict = {}
        for (i, j), c in v.items():
            M.setdefault(i, {})[j] = c
        out.append(op_normalize(M))
    return out


class AlgMultiderivation:
    """k-ary graded symmetric map on A that is a derivation in each slot."""

    def __init__(self, A: GradedAlgebra, smap: SymMultiMap):
        self.A = A
        self.map = smap

    @property
    def arity(self):
        return self.map.arity

    @property
    def degree(self):
        return self.map.degree

    def __call__(self, *args):
        return self.map(*args)

    def check(self) -> Report:
        A, H = self.A, self.map
        r = Report("multiderivation")
        k = H.arity
        for key in canonical_keys(A.degs, k - 1) if k > 1 else [()]:
            kd = sum(A.deg(i) for i in key)
            for a in range(A.dim):
                for b in range(A.dim):
                    lhs = eval_alg_map(H, key + (None,), A.mul_basis(a, b))
                    rhs = vadd(A.mul(H.on_basis(key + (a,)), {b: 1}),
                               A.mul({a: 1}, H.on_basis(key + (b,))),
                               sgn((H.degree + kd) * A.deg(a)))
                    if normalize(lhs) != normalize(rhs):
                        r.fail((key, a, b))
        return r


def eval_alg_map(H: SymMultiMap, key: tuple, last: dict) -> dict:
    out: dict = {}
    for j, c in last.items():
        vadd(out, H.on_basis(key[:-1] + (j,)), c)
    return out


# module multiderivations


class ModMultiderivation:
    """One component (X_k, sigma_k) of a multiderivation of a free module L."""

    def __init__(self, L: FreeModule, arity: int, degree: int,
                 X: dict | None = None, sigma: dict | None = None):
        if arity < 1:
            raise ValueError("arity must be at least 1")
        self.L, self.A = L, L.A
        self.arity, self.degree = arity, degree
        self.X: dict = {}
        self.sigma: dict = {}
        for key, v in (X or {}).items():
            self.set_X(tuple(key), v)
        for key, M in (sigma or {}).items():
            self.set_sigma(tuple(key), M.matrix if isinstance(M, AlgDerivation) else M)
        self._memo: dict = {}

    def _sort(self, gens):
        return sort_sign(tuple(gens), [self.L.gdegs[g] for g in gens])

    def set_X(self, key, val: dict) -> None:
        if len(key) != self.arity:
            raise ValueError("X key length differs from arity")
        s, sk = self._sort(key)
        val = normalize(val)
        if not s:
            if val:
                raise ValueError(f"nonzero X on {key} with repeated odd generator")
            return
        want = self.degree + sum(self.L.gdegs[g] for g in key)
        if any(self.L.deg(b) != want for b in val):
            raise ValueError(f"X value on {key} has wrong degree")
        new = vadd(dict(self.X.get(sk, {})), val, s)
        if new:
            self.X[sk] = new
        else:
            self.X.pop(sk, None)
        self._memo = {}

    def set_sigma(self, key, M: dict) -> None:
        if len(key) != self.arity - 1:
            raise ValueError("sigma key length must be arity - 1")
        s, sk = self._sort(key)
        M = op_normalize(M)
        if not s:
            if M:
                raise ValueError(f"nonzero sigma on {key} with repeated odd generator")
            return
        d = self.degree + sum(self.L.gdegs[g] for g in key)
        for i, col in M.items():
            if any(self.A.deg(j) != self.A.deg(i) + d for j in col):
                raise ValueError(f"sigma value on {key} has wrong degree")
        new = op_add(self.sigma.get(sk, {}), M, s)
        if new:
            self.sigma[sk] = new
        else:
            self.sigma.pop(sk, None)
        self._memo = {}

    def X_on(self, gens) -> dict:
        s, sk = self._sort(gens)
        v = self.X.get(sk) if s else None
        if not v:
            return {}
        return v if s == 1 else vscale(v, -1)

    def sigma_on(self, gens) -> dict:
        s, sk = self._sort(gens)
        M = self.sigma.get(sk) if s else None
        if not M:
            return {}
        return M if s == 1 else op_scale(M, -1)

    def sigma_derivation(self, gens) -> AlgDerivation:
        return AlgDerivation(self.A, self.degree + sum(self.L.gdegs[g] for g in gens), self.sigma_on(gens))

    def sigma_matrix(self, args: tuple) -> dict:
        """sigma on module basis elements ``(a, g)``, extended A-multilinearly."""
        A, L = self.A, self.L
        e, acc = 0, self.degree
        avals, gens = [], []
        for a, g in args:
            e += A.degs[a] * acc
            acc += L.gdegs[g]
            avals.append(a)
            gens.append(g)
        M = self.sigma_on(gens)
        if not M:
            return {}
        B = mul_seq(A, avals)
        return op_scale(alg_left_mul(A, B, M), sgn(e))

    def sigma_apply(self, args: tuple, x: dict) -> dict:
        return op_apply(self.sigma_matrix(args), x)

    def eval_basis(self, args: tuple) -> dict:
        """X on module basis elements, extended by the Leibniz rule."""
        r = self._memo.get(args)
        if r is not None:
            return r
        A, L = self.A, self.L
        unit = A.unit
        j = None
        for i in range(len(args) - 1, -1, -1):
            if args[i][0] != unit:
                j = i
                break
        if j is None:
            r = self.X_on([g for _, g in args])
        else:
            degs = [L.deg(b) for b in args]
            s0 = sgn(degs[j] * sum(degs[j + 1:]))
            rest = args[:j] + args[j + 1:]
            a, g = args[j]
            r = {}
            for c, x in self.sigma_apply(rest, {a: 1}).items():
                vadd1(r, (c, g), s0 * x)
            inner = self.eval_basis(rest + ((unit, g),))
            if inner:
                s1 = s0 * sgn((self.degree + sum(degs[:j] + degs[j + 1:])) * A.degs[a])
                vadd(r, L.act({a: 1}, inner), s1)
        self._memo[args] = r
        return r

    def __call__(self, *args: dict) -> dict:
        return mder_eval(self, args)

    def is_zero(self) -> bool:
        return not self.X and not self.sigma

    def __eq__(self, other):
        return (isinstance(other, ModMultiderivation) and self.L == other.L
                and self.arity == other.arity
                and (self.degree == other.degree or self.is_zero() and other.is_zero())
                and self.X == other.X and self.sigma == other.sigma)

    def check(self) -> Report:
        r = Report("leibniz")
        for key, M in self.sigma.items():
            sub = check_derivation(self.A, self.degree + sum(self.L.gdegs[g] for g in key), M)
            for f in sub.failures:
                r.fail((key, f))
        return r

    def __repr__(self):
        return f"ModMultiderivation(arity={self.arity}, degree={self.degree})"


def mder_eval(Xc: ModMultiderivation, args: Sequence[dict]) -> dict:
    """Evaluate X on arbitrary L-elements."""
    if len(args) != Xc.arity:
        raise ValueError(f"expected {Xc.arity} arguments")
    out: dict = {}
    for combo in product(*[list(a.items()) for a in args]):
        c = 1
        for _, x in combo:
            c *= x
        vadd(out, Xc.eval_basis(tuple(b for b, _ in combo)), c)
    return out


class FormalMultiderivation:
    """Finite sum of module multiderivation components of one total degree."""

    def __init__(self, L: FreeModule, degree: int, components: dict | None = None,
                 cap: int = DEFAULT_CAP, truncated: bool = False):
        self.L, self.A = L, L.A
        self.degree = degree
        self.cap = cap
        self.truncated = truncated
        self.components: dict[int, ModMultiderivation] = {}
        for k, c in (components or {}).items():
            if k > cap:
                raise ValueError(f"component arity {k} above cap {cap}")
            if c.degree != degree and not c.is_zero():
                raise ValueError("components must share the total degree")
            if not c.is_zero():
                self.components[k] = c

    def get(self, k: int) -> ModMultiderivation:
        c = self.components.get(k)
        return c if c is not None else ModMultiderivation(self.L, k, self.degree)

    @property
    def arities(self) -> list[int]:
        return sorted(self.components)

    def is_zero(self) -> bool:
        return not self.components

    def __eq__(self, other):
        return (isinstance(other, FormalMultiderivation) and self.L == other.L
                and (self.degree == other.degree or self.is_zero() and other.is_zero())
                and self.components == other.components)

    def __repr__(self):
        return f"FormalMultiderivation(degree={self.degree}, arities={self.arities}, cap={self.cap})"


def _gens_basis(A, gens):
    return tuple((A.unit, g) for g in gens)


def _X_insert(Xc: ModMultiderivation, val: dict, rest_gens: tuple) -> dict:
    """X(val, rest) with val an L-element and rest generators."""
    A = Xc.A
    out: dict = {}
    tail = _gens_basis(A, rest_gens)
    for b, c in val.items():
        vadd(out, Xc.eval_basis((b,) + tail), c)
    return out


def _sigma_insert(Xc: ModMultiderivation, val: dict, rest_gens: tuple) -> dict:
    A = Xc.A
    out: dict = {}
    tail = _gens_basis(A, rest_gens)
    for b, c in val.items():
        out = op_add(out, Xc.sigma_matrix((b,) + tail), c)
    return out


def _bracket_component(X: ModMultiderivation, Y: ModMultiderivation) -> tuple[dict, dict]:
    """X and sigma tables of [X, Y] for single components."""
    L = X.L
    gd = L.gdegs
    k, l = X.arity, Y.arity
    n = k + l - 1
    s = sgn(X.degree * Y.degree)
    Xt, St = {}, {}
    for key in canonical_keys(gd, n):
        degs = [gd[g] for g in key]
        v: dict = {}
        for first, rest, a in splits(degs, l):
            y = Y.X_on([key[i] for i in first])
            if y:
                vadd(v, _X_insert(X, y, tuple(key[i] for i in rest)), a)
        for first, rest, a in splits(degs, k):
            x = X.X_on([key[i] for i in first])
            if x:
                vadd(v, _X_insert(Y, x, tuple(key[i] for i in rest)), -s * a)
        v = normalize(v)
        if v:
            Xt[key] = v
    for key in canonical_keys(gd, n - 1):
        degs = [gd[g] for g in key]
        M: dict = {}
        if k >= 2:
            for first, rest, a in splits(degs, l):
                y = Y.X_on([key[i] for i in first])
                if y:
                    M = op_add(M, _sigma_insert(X, y, tuple(key[i] for i in rest)), a)
        if l >= 2:
            for first, rest, a in splits(degs, k):
                x = X.X_on([key[i] for i in first])
                if x:
                    M = op_add(M, _sigma_insert(Y, x, tuple(key[i] for i in rest)), -s * a)
        for first, rest, a in splits(degs, k - 1):
            f = tuple(key[i] for i in first)
            r = tuple(key[i] for i in rest)
            Sx, Sy = X.sigma_on(f), Y.sigma_on(r)
            if Sx and Sy:
                df = sum(degs[i] for i in first)
                dr = sum(degs[i] for i in rest)
                C = op_commutator(Sx, X.degree + df, Sy, Y.degree + dr)
                M = op_add(M, C, a * sgn(Y.degree * df))
        M = op_normalize(M)
        if M:
            St[key] = M
    return Xt, St


def mder_bracket(Xa: FormalMultiderivation, Xb: FormalMultiderivation,
                 cap: int | None = None) -> FormalMultiderivation:
    """Graded Lie bracket of formal multiderivations, truncated at the cap."""
    if Xa.L != Xb.L:
        raise ValueError("multiderivations of different modules")
    cap = min(Xa.cap, Xb.cap) if cap is None else cap
    L = Xa.L
    deg = Xa.degree + Xb.degree
    acc: dict[int, ModMultiderivation] = {}
    truncated = Xa.truncated or Xb.truncated
    for k, X in Xa.components.items():
        for l, Y in Xb.components.items():
            n = k + l - 1
            if n > cap:
                truncated = True
                continue
            Xt, St = _bracket_component(X, Y)
            c = acc.setdefault(n, ModMultiderivation(L, n, deg))
            for key, v in Xt.items():
                c.set_X(key, v)
            for key, M in St.items():
                c.set_sigma(key, M)
    return FormalMultiderivation(L, deg, {n: c for n, c in acc.items() if not c.is_zero()},
                                 cap=cap, truncated=truncated)


def fm_add(Xa: FormalMultiderivation, Xb: FormalMultiderivation, c=1) -> FormalMultiderivation:
    deg = Xa.degree if not Xa.is_zero() else Xb.degree
    acc: dict = {}
    for F, f in ((Xa, 1), (Xb, c)):
        for k, comp in F.components.items():
            t = acc.setdefault(k, ModMultiderivation(F.L, k, deg))
            for key, v in comp.X.items():
                t.set_X(key, vscale(v, f))
            for key, M in comp.sigma.items():
                t.set_sigma(key, op_scale(M, f))
    return FormalMultiderivation(Xa.L, deg, {k: v for k, v in acc.items() if not v.is_zero()},
                                 cap=max(Xa.cap, Xb.cap), truncated=Xa.truncated or Xb.truncated)


def fm_scale(Xa: FormalMultiderivation, c) -> FormalMultiderivation:
    return fm_add(FormalMultiderivation(Xa.L, Xa.degree, cap=Xa.cap), Xa, c)


# CE-type operators on forms


def ce_component(F: FormSpace, form: dict, k: int, dX: int,
                 X_on: Callable[[tuple], dict], op_on: Callable[[tuple], Callable[[dict], dict] | None],
                 X_insert_form: bool = True) -> dict:
    """Component k of  w  |->  op o w - (-1)^{dX w} w o X  on P-valued forms.

    ``op_on(gens)`` returns the operator (on P-vectors) attached to a
    generator (k-1)-tuple, or None when it vanishes.
    """
    L, A, P = F.L, F.A, F.P
    gd = L.gdegs
    out: dict = {}
    groups: dict = {}
    for (key, p), c in form.items():
        d = F.deg((key, p))
        groups.setdefault((len(key), d), {}).setdefault(key, {})[p] = c
    for (l, wd), nested in groups.items():
        n = l + k - 1
        for key in canonical_keys(gd, n):
            degs = [gd[g] for g in key]
            val: dict = {}
            for first, rest, a in splits(degs, k - 1):
                op = op_on(tuple(key[i] for i in first))
                if op is None:
                    continue
                s, rk = sort_sign(tuple(key[i] for i in rest), [degs[i] for i in rest])
                w = nested.get(rk) if s else None
                if not w:
                    continue
                e = wd * sum(degs[i] for i in first)
                vadd(val, op(w), a * s * sgn(e))
            if l >= 1:
                sX = -sgn(dX * wd)
                for first, rest, a in splits(degs, k):
                    x = X_on(tuple(key[i] for i in first))
                    if not x:
                        continue
                    rg = tuple(key[i] for i in rest)
                    for (b, h), c in x.items():
                        s, rk = sort_sign((h,) + rg, [gd[h]] + [degs[i] for i in rest])
                        w = nested.get(rk) if s else None
                        if not w:
                            continue
                        vadd(val, P.act({b: 1}, w), sX * a * s * c * sgn(A.degs[b] * wd))
            for p, c in val.items():
                if c:
                    out[(key, p)] = out.get((key, p), 0) + c
    return {b: c for b, c in out.items() if c}


class FormDerivation:
    """Arity-indexed family of K-linear operators D_k on forms (D_k raises arity by k-1)."""

    def __init__(self, F: FormSpace, degree: int, components: dict):
        self.F = F
        self.degree = degree
        self.components = components

    def apply(self, form: dict, k: int | None = None) -> dict:
        if k is not None:
            f = self.components.get(k)
            return f(form) if f else {}
        out: dict = {}
        for f in self.components.values():
            vadd(out, f(form))
        return out

    __call__ = apply


def forms_A(L: FreeModule) -> FormSpace:
    return FormSpace(L, trivial_module(L.A))


def _sigma_op(Xc: ModMultiderivation):
    def op_on(gens):
        M = Xc.sigma_on(gens)
        if not M:
            return None
        return lambda w: {(j, 0): c for j, c in op_apply(M, {a: x for (a, _), x in w.items()}).items()}
    return op_on


def eta(Xf: FormalMultiderivation) -> FormDerivation:
    """The derivation of the algebra of A-valued forms attached to a multiderivation."""
    F = forms_A(Xf.L)
    comps = {}
    for k, Xc in Xf.components.items():
        comps[k] = (lambda Xc, k: lambda w: ce_component(F, w, k, Xf.degree, Xc.X_on, _sigma_op(Xc)))(Xc, k)
    return FormDerivation(F, Xf.degree, comps)


def basis_forms(F: FormSpace, max_arity: int) -> list[dict]:
    return [{b: 1} for k in range(max_arity + 1) for b in F.basis(k)]


def check_form_derivation(D: FormDerivation) -> Report:
    """Leibniz rule of D on pairs of algebra generators (0-forms and dual 1-forms)."""
    from .galgebra import form_product
    F = D.F
    A, L = F.A, F.L
    gens = [{((), (a, 0)): 1} for a in range(A.dim)]
    gens += [{((g,), (A.unit, 0)): 1} for g in range(L.rank)]
    r = Report("leibniz")
    deg = lambda w: F.deg(next(iter(w)))
    for w in gens:
        for v in gens:
            lhs = D.apply(form_product(F, F, w, v))
            rhs = vadd(form_product(F, F, D.apply(w), v),
                       form_product(F, F, w, D.apply(v)), sgn(D.degree * deg(w)))
            if normalize(lhs) != normalize(rhs):
                r.fail((next(iter(w)), next(iter(v))))
    return r


def eta_inverse(D: FormDerivation, cap: int = DEFAULT_CAP) -> FormalMultiderivation:
    """Recover the multiderivation from a derivation family of the algebra of forms."""
    rep = check_form_derivation(D)
    if not rep.ok:
        raise ValueError(f"input is not a derivation: {rep.failures[:3]}")
    F = D.F
    A, L = F.A, F.L
    gd = L.gdegs
    comps = {}
    for k in D.components:
        c = ModMultiderivation(L, k, D.degree)
        for key in canonical_keys(gd, k - 1):
            kd = sum(gd[g] for g in key)
            M = {}
            for a in range(A.dim):
                img = F.value(D.apply({((), (a, 0)): 1}, k), key)
                col = {j: x * sgn(kd * A.degs[a]) for (j, _), x in img.items()}
                if col:
                    M[a] = col
            c.set_sigma(key, M)
        # dual 1-forms take constant values on generators, so only the
        # D(eps) term survives in the recovery of X_D
        for key in canonical_keys(gd, k):
            val: dict = {}
            for j in range(L.rank):
                ed = -gd[j]
                img = F.value(D.apply({((j,), (A.unit, 0)): 1}, k), key)
                for (a, _), x in img.items():
                    vadd1(val, (a, j), -x * sgn(ed * D.degree) * sgn(A.degs[a] * ed))
            c.set_X(key, val)
        if not c.is_zero():
            comps[k] = c
    return FormalMultiderivation(L, D.degree, comps, cap=max([cap] + list(comps)))


# multiderivations of the symmetric algebra S_A(L)


class SMultider:
    """A k-entry multiderivation of S_A(L), evaluated functionally on tensors."""

    def __init__(self, T: TensorSpace, arity: int, degree: int):
        self.T = T
        self.arity = arity
        self.degree = degree
        self._memo: dict = {}

    def eval_basis(self, keys: tuple) -> dict:
        raise NotImplementedError

    def __call__(self, *args: dict) -> dict:
        if len(args) != self.arity:
            raise ValueError(f"expected {self.arity} arguments")
        out: dict = {}
        for combo in product(*[list(a.items()) for a in args]):
            c = 1
            for _, x in combo:
                c *= x
            vadd(out, self.eval_basis(tuple(b for b, _ in combo)), c)
        return out


class LeibnizSMultider(SMultider):
    """Multiderivation of S_A(L) fixed by its values on atoms (algebra basis, generators)."""

    def __init__(self, T: TensorSpace, arity: int, degree: int, atom_value: Callable[[tuple], dict]):
        super().__init__(T, arity, degree)
        self.atom_value = atom_value

    def eval_basis(self, keys: tuple) -> dict:
        r = self._memo.get(keys)
        if r is not None:
            return r
        T, A = self.T, self.T.A
        sizes = [len(m) + (a != A.unit) for a, m, _ in keys]
        j = max(range(len(keys)), key=lambda i: (sizes[i], i)) if keys else None
        if j is None or sizes[j] <= 1:
            r = self.atom_value(keys)
        else:
            degs = [T.deg(b) for b in keys]
            s0 = sgn(degs[j] * sum(degs[j + 1:]))
            rest = keys[:j] + keys[j + 1:]
            a, m, q = keys[j]
            if a != A.unit:
                f, v = (a, (), q), (A.unit, m, q)
            else:
                f, v = (A.unit, m[:1], q), (A.unit, m[1:], q)
            fd = T.deg(f)
            rd = sum(degs[:j] + degs[j + 1:])
            r = {}
            hv = self.eval_basis(rest + (v,))
            if hv:
                vadd(r, tensor_mul(T, {f: 1}, hv), s0 * sgn((self.degree + rd) * fd))
            hf = self.eval_basis(rest + (f,))
            if hf:
                vadd(r, tensor_mul(T, hf, {v: 1}), s0)
        self._memo[keys] = r
        return r


def nu_component(T: TensorSpace, Xc: ModMultiderivation) -> LeibnizSMultider:
    def atoms(keys):
        alg = [i for i, (a, m, _) in enumerate(keys) if not m]
        if len(alg) >= 2:
            return {}
        if not alg:
            return T.from_module(Xc.X_on([m[0] for _, m, _ in keys]))
        j = alg[0]
        degs = [T.deg(b) for b in keys]
        s = sgn(degs[j] * sum(degs[j + 1:]))
        gens = [m[0] for i, (_, m, _) in enumerate(keys) if i != j]
        a = keys[j][0]
        return T.from_algebra(vscale(op_apply(Xc.sigma_on(gens), {a: 1}), s))

    return LeibnizSMultider(T, Xc.arity, Xc.degree, atoms)


def nu(Xf: FormalMultiderivation, T: TensorSpace | None = None) -> dict[int, SMultider]:
    """Extension of each component to a multiderivation of S_A(L)."""
    T = T or TensorSpace(Xf.L)
    return {k: nu_component(T, c) for k, c in Xf.components.items()}


class CircSMultider(SMultider):
    """Gerstenhaber composition H o G of multiderivations of S_A(L)."""

    def __init__(self, H: SMultider, G: SMultider):
        super().__init__(H.T, H.arity + G.arity - 1, H.degree + G.degree)
        self.H, self.G = H, G

    def eval_basis(self, keys: tuple) -> dict:
        r = self._memo.get(keys)
        if r is not None:
            return r
        T = self.T
        degs = [T.deg(b) for b in keys]
        r = {}
        for first, rest, a in splits(degs, self.G.arity):
            g = self.G.eval_basis(tuple(keys[i] for i in first))
            if not g:
                continue
            tail = tuple(keys[i] for i in rest)
            for b, c in g.items():
                vadd(r, self.H.eval_basis((b,) + tail), a * c)
        self._memo[keys] = r
        return r


class SumSMultider(SMultider):
    def __init__(self, terms: list[tuple[object, SMultider]]):
        t0 = terms[0][1]
        super().__init__(t0.T, t0.arity, t0.degree)
        self.terms = terms

    def eval_basis(self, keys: tuple) -> dict:
        r = self._memo.get(keys)
        if r is None:
            r = {}
            for c, H in self.terms:
                vadd(r, H.eval_basis(keys), c)
            self._memo[keys] = r
        return r


def sbracket(H: SMultider, G: SMultider) -> SMultider:
    return SumSMultider([(1, CircSMultider(H, G)), (-sgn(H.degree * G.degree), CircSMultider(G, H))])
