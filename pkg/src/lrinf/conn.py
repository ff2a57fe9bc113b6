"""Left and right connections along SH LR algebras.

A connection is a family of derivation-valued forms: for every sorted tuple
of L-generators it stores a K-linear operator on the K-basis of the module.
Left connections use the first A-module structure on derivations
(``a . D = a o D``), right connections the second (``a . D = +-D o a``), and
their symbols are ``+sigma_X`` and ``-sigma_X`` respectively.

The same class also carries general pairs ``(X, F)`` of any degree, which is
what the pair brackets and the transports eta^L, eta^R need.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

from .galgebra import FormSpace, FreeModule, Report, TensorSpace, mul_seq, tensor_mu
from .glinear import canonical_keys, normalize, vadd, vadd1, vscale
from .mder import (DEFAULT_CAP, FormalMultiderivation, FormDerivation, ModMultiderivation,
                   ce_component, eta, eta_inverse, forms_A, mder_bracket,
                   op_add, op_apply, op_commutator, op_compose, op_normalize, op_scale)
from .shlr import SHLRAlgebra, two_sum_residual
from .signs import sort_sign, splits, sgn

LEFT, RIGHT = "left", "right"


def _check_side(side: str) -> int:
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be {LEFT!r} or {RIGHT!r}")
    return 1 if side == LEFT else -1


def module_mul(P: FreeModule, x: dict) -> dict:
    """Operator p -> x p on the K-basis of P."""
    out = {}
    for b in P.kbasis:
        v = P.act(x, {b: 1})
        if v:
            out[b] = v
    return out


class DerForm:
    """Derivation-valued forms on L with values in operators on P.

    ``ops[m]`` maps sorted generator m-tuples to operators; the form has
    total degree ``degree`` so the operator on key has degree degree + |key|.
    """

    def __init__(self, L: FreeModule, P: FreeModule, side: str, degree: int = 1,
                 ops: dict | None = None):
        _check_side(side)
        if L.A != P.A:
            raise ValueError("L and P must live over the same algebra")
        self.L, self.P, self.A = L, P, L.A
        self.side, self.degree = side, degree
        self.ops: dict[int, dict] = {}
        self._mul: dict = {}
        for m, table in (ops or {}).items():
            for key, M in table.items():
                self.set(m, tuple(key), M)

    def _sort(self, gens):
        return sort_sign(tuple(gens), [self.L.gdegs[g] for g in gens])

    def set(self, m: int, key: tuple, M: dict) -> None:
        if len(key) != m:
            raise ValueError("key length differs from the number of arguments")
        s, sk = self._sort(key)
        M = op_normalize(M)
        if not s:
            if M:
                raise ValueError(f"nonzero value on {key} with repeated odd generator")
            return
        d = self.degree + sum(self.L.gdegs[g] for g in key)
        for b, col in M.items():
            if any(self.P.deg(c) != self.P.deg(b) + d for c in col):
                raise ValueError(f"operator on {key} has wrong degree")
        t = self.ops.setdefault(m, {})
        new = op_add(t.get(sk, {}), M, s)
        if new:
            t[sk] = new
        else:
            t.pop(sk, None)
            if not t:
                self.ops.pop(m)

    def on(self, m: int, gens: tuple) -> dict:
        s, sk = self._sort(gens)
        M = self.ops.get(m, {}).get(sk) if s else None
        if not M:
            return {}
        return M if s == 1 else op_scale(M, -1)

    def _mulop(self, x: int) -> dict:
        M = self._mul.get(x)
        if M is None:
            M = self._mul[x] = module_mul(self.P, {x: 1})
        return M

    def eval_args(self, args: tuple) -> dict:
        """Operator on L-basis arguments ``(a, g)``, extended A-multilinearly."""
        A, L = self.A, self.L
        e, acc = 0, self.degree
        avals, gens = [], []
        for a, g in args:
            e += A.degs[a] * acc
            acc += L.gdegs[g]
            avals.append(a)
            gens.append(g)
        M = self.on(len(gens), tuple(gens))
        if not M:
            return {}
        B = mul_seq(A, avals)
        out: dict = {}
        for x, c in B.items():
            if self.side == LEFT:
                T = op_compose(self._mulop(x), M)
            else:
                T = op_compose(M, self._mulop(x))
                c *= sgn(A.degs[x] * acc)
            out = op_add(out, T, c)
        return op_scale(out, sgn(e))

    def eval_first(self, m: int, x: dict, rest: tuple) -> dict:
        """Operator with an L-element in the first slot and generators after it."""
        out: dict = {}
        tail = tuple((self.A.unit, g) for g in rest)
        for b, c in x.items():
            out = op_add(out, self.eval_args((b,) + tail), c)
        return out

    @property
    def arities(self) -> list[int]:
        return sorted(self.ops)

    def is_zero(self) -> bool:
        return not self.ops

    def __eq__(self, other):
        return (isinstance(other, DerForm) and self.L == other.L and self.P == other.P
                and self.side == other.side and self.ops == other.ops
                and (self.degree == other.degree or self.is_zero()))

    def __repr__(self):
        return f"DerForm({self.side}, degree={self.degree}, arities={self.arities})"


def symbol_report(F: DerForm, X: FormalMultiderivation, name: str = "subordination") -> Report:
    """Check that every value of F is a derivation of P with symbol +-sigma_X."""
    rep = Report(name)
    sign = _check_side(F.side)
    A, P, L = F.A, F.P, F.L
    for m in sorted(set(F.ops) | {k - 1 for k in X.components if k >= 1}):
        Xc = X.components.get(m + 1)
        for key in canonical_keys(L.gdegs, m):
            M = F.on(m, key)
            S = Xc.sigma_on(key) if Xc is not None else {}
            if not M and not S:
                continue
            d = F.degree + sum(L.gdegs[g] for g in key)
            for a in range(A.dim):
                sa = op_apply(S, {a: 1})
                for b in P.kbasis:
                    lhs = op_apply(M, P.act({a: 1}, {b: 1}))
                    rhs = P.act({a: 1}, op_apply(M, {b: 1}))
                    rhs = vscale(rhs, sgn(d * A.degs[a]))
                    vadd(rhs, P.act(sa, {b: 1}), sign)
                    if normalize(lhs) != normalize(rhs):
                        rep.fail((m, key, a, b))
                        break
                else:
                    continue
                break
    return rep


def derform_from_generators(L: FreeModule, P: FreeModule, side: str, X: FormalMultiderivation,
                            values: dict, degree: int = 1) -> DerForm:
    """Build the unique subordinate form with the given values on P-generators.

    ``values[m][key][g]`` is the image of the generator g under the operator
    attached to the generator tuple key.
    """
    sign = _check_side(side)
    A = L.A
    F = DerForm(L, P, side, degree)
    ms = set(values) | {k - 1 for k in X.components}
    for m in sorted(ms):
        Xc = X.components.get(m + 1)
        table = values.get(m, {})
        for key in canonical_keys(L.gdegs, m):
            s, sk = sort_sign(tuple(key), [L.gdegs[g] for g in key])
            vals = {}
            for k2, v in table.items():
                s2, sk2 = sort_sign(tuple(k2), [L.gdegs[g] for g in k2])
                if sk2 == sk and s2:
                    for g, pv in v.items():
                        vals[g] = vadd(vals.get(g, {}), pv, s2)
            S = Xc.sigma_on(key) if Xc is not None else {}
            if not vals and not S:
                continue
            d = degree + sum(L.gdegs[g] for g in key)
            M = {}
            for a, g in P.kbasis:
                col = vscale(P.act({a: 1}, vals.get(g, {})), sgn(d * A.degs[a]))
                for c, x in op_apply(S, {a: 1}).items():
                    vadd1(col, (c, g), sign * x)
                col = normalize(col)
                if col:
                    M[(a, g)] = col
            F.set(m, key, M)
    return F


# pair brackets


def derform_compose(F: DerForm, Y: FormalMultiderivation, max_args: int) -> DerForm:
    """F o Y: feed the value of Y into the first slot of F."""
    L = F.L
    gd = L.gdegs
    out = DerForm(L, F.P, F.side, F.degree + Y.degree)
    for n in range(max_args + 1):
        for key in canonical_keys(gd, n):
            degs = [gd[g] for g in key]
            M: dict = {}
            for j, Yc in Y.components.items():
                m = n - j + 1
                if m < 1 or m not in F.ops:
                    continue
                for first, rest, a in splits(degs, j):
                    y = Yc.X_on(tuple(key[i] for i in first))
                    if y:
                        M = op_add(M, F.eval_first(m, y, tuple(key[i] for i in rest)), a)
            out.set(n, key, M)
    return out


def derform_commutator(F: DerForm, G: DerForm, max_args: int) -> DerForm:
    """[F, G]: unshuffle sum of graded commutators of the values."""
    L = F.L
    gd = L.gdegs
    out = DerForm(L, F.P, F.side, F.degree + G.degree)
    for n in range(max_args + 1):
        for key in canonical_keys(gd, n):
            degs = [gd[g] for g in key]
            M: dict = {}
            for m in F.ops:
                if m > n or (n - m) not in G.ops:
                    continue
                for first, rest, a in splits(degs, m):
                    f = tuple(key[i] for i in first)
                    r = tuple(key[i] for i in rest)
                    Mf, Mg = F.on(m, f), G.on(n - m, r)
                    if Mf and Mg:
                        df = sum(degs[i] for i in first)
                        dr = sum(degs[i] for i in rest)
                        C = op_commutator(Mf, F.degree + df, Mg, G.degree + dr)
                        M = op_add(M, C, a * sgn(G.degree * df))
            out.set(n, key, M)
    return out


def derform_add(F: DerForm, G: DerForm, c=1) -> DerForm:
    deg = F.degree if not F.is_zero() else G.degree
    out = DerForm(F.L, F.P, F.side, deg)
    for H, f in ((F, 1), (G, c)):
        for m, table in H.ops.items():
            for key, M in table.items():
                out.set(m, key, op_scale(M, f))
    return out


def derform_scale(F: DerForm, c) -> DerForm:
    return derform_add(DerForm(F.L, F.P, F.side, F.degree), F, c)


def _max_args(*objs) -> int:
    n = 0
    for o in objs:
        if isinstance(o, DerForm):
            n = max([n] + [m + 1 for m in o.ops])
        else:
            n = max([n] + list(o.components))
    return n


def pair_bracket(X: FormalMultiderivation, F: DerForm, Y: FormalMultiderivation, G: DerForm,
                 max_args: int | None = None) -> tuple[FormalMultiderivation, DerForm]:
    """Lie bracket of subordinate pairs; the commutator term is +[F,G] on the left and -[F,G] on the right."""
    if F.side != G.side or F.P != G.P:
        raise ValueError("pairs of different kinds")
    sign = _check_side(F.side)
    if max_args is None:
        max_args = _max_args(X, F, Y, G) * 2
    Z = mder_bracket(X, Y, cap=max(X.cap, Y.cap, max_args + 1))
    H = derform_compose(F, Y, max_args)
    H = derform_add(H, derform_compose(G, X, max_args), -sgn(X.degree * Y.degree))
    H = derform_add(H, derform_commutator(F, G, max_args), sign)
    return Z, H


# connections


class Connection(DerForm):
    """A degree 1 derivation-valued form subordinate to the structure of an SH LR algebra."""

    def __init__(self, S: SHLRAlgebra, P: FreeModule, side: str, ops: dict | None = None,
                 check: bool = True):
        super().__init__(S.L, P, side, 1, ops)
        self.S = S
        if check:
            rep = self.subordination()
            if not rep.ok:
                raise ValueError(f"connection is not subordinate to the structure: {rep.failures[:3]}")

    @classmethod
    def from_generators(cls, S: SHLRAlgebra, P: FreeModule, values: dict):
        """The unique subordinate connection with the given values on P-generators."""
        F = derform_from_generators(S.L, P, cls.SIDE, S.X, values)
        return cls(S, P, F.ops, check=False)

    def subordination(self) -> Report:
        return symbol_report(self, self.S.X)

    @property
    def max_args(self) -> int:
        return max(self.arities + [k - 1 for k in self.S.X.components] + [0])


class LeftConnection(Connection):
    SIDE = LEFT

    def __init__(self, S: SHLRAlgebra, P: FreeModule, ops: dict | None = None, check: bool = True):
        super().__init__(S, P, LEFT, ops, check)


class RightConnection(Connection):
    SIDE = RIGHT

    def __init__(self, S: SHLRAlgebra, P: FreeModule, ops: dict | None = None, check: bool = True):
        super().__init__(S, P, RIGHT, ops, check)


def as_connection(S: SHLRAlgebra, F: DerForm, check: bool = True) -> Connection:
    cls = LeftConnection if F.side == LEFT else RightConnection
    return cls(S, F.P, F.ops, check)


def zero_connection(S: SHLRAlgebra, P: FreeModule, side: str) -> Connection:
    """The connection with vanishing values on generators."""
    F = derform_from_generators(S.L, P, side, S.X, {})
    return as_connection(S, F, check=False)


def anchor_connection(S: SHLRAlgebra, side: str = LEFT) -> Connection:
    """+-sigma_X itself as a connection in A."""
    from .galgebra import trivial_module
    return zero_connection(S, trivial_module(S.A), side)


def curvature(C: Connection, max_args: int | None = None) -> DerForm:
    """Curvature component formulas; the composite sum carries - on the right."""
    if not C.subordination().ok:
        raise ValueError("connection is not subordinate to the structure")
    L = C.L
    gd = L.gdegs
    n_max = C.max_args * 2 if max_args is None else max_args
    sign = _check_side(C.side)
    J = DerForm(L, C.P, C.side, 2)
    for n in range(n_max + 1):
        for key in canonical_keys(gd, n):
            M = two_sum_residual(gd, key, C.S.X.components, C.eval_first, C.on, 1, sign)
            J.set(n, key, M)
    return J


left_curvature = right_curvature = curvature


def curvature_by_bracket(C: Connection, max_args: int | None = None) -> DerForm:
    """Second component of half the self-bracket of (X, C)."""
    n_max = C.max_args * 2 if max_args is None else max_args
    _, H = pair_bracket(C.S.X, C, C.S.X, C, n_max)
    return derform_scale(H, Fraction(1, 2))


def is_flat(C: Connection, max_args: int | None = None) -> bool:
    return curvature(C, max_args).is_zero()


def bianchi_residual(C: Connection, J: DerForm | None = None, max_args: int | None = None) -> DerForm:
    """[C, J] - J o X on the left and [C, J] + J o X on the right."""
    n_max = C.max_args * 2 if max_args is None else max_args
    if J is None:
        J = curvature(C, n_max + 1)
    sign = _check_side(C.side)
    R = derform_commutator(C, J, n_max)
    return derform_add(R, derform_compose(J, C.S.X, n_max), -sign)


bianchi_left_residual = bianchi_right_residual = bianchi_residual


# the operator D on P-valued forms


class ModuleDerivation:
    """A pair (D, symbol) of operator families; D acts on forms or tensors."""

    def __init__(self, D: FormDerivation, symbol: FormDerivation):
        self.D, self.symbol = D, symbol
        self.degree = D.degree

    def __call__(self, x: dict, k: int | None = None) -> dict:
        return self.D.apply(x, k)


def _pair_X(S_or_X) -> FormalMultiderivation:
    return S_or_X.X if isinstance(S_or_X, SHLRAlgebra) else S_or_X


def ce_module_operator(X: FormalMultiderivation, F: DerForm) -> FormDerivation:
    """The operator op o W - (-)^{X W} W o X on P-valued forms, component-wise."""
    if F.side != LEFT:
        raise ValueError("needs a left form")
    FP = FormSpace(F.L, F.P)
    ks = sorted(set(X.components) | {m + 1 for m in F.ops})
    comps = {}
    for k in ks:
        Xc = X.components.get(k)
        X_on = Xc.X_on if Xc is not None else (lambda gens: {})

        def op_on(gens, k=k):
            M = F.on(k - 1, gens)
            return (lambda w: op_apply(M, w)) if M else None

        comps[k] = (lambda k, X_on, op_on: lambda w: ce_component(FP, w, k, F.degree, X_on, op_on))(k, X_on, op_on)
    return FormDerivation(FP, F.degree, comps)


def D_nabla(C: Connection) -> FormDerivation:
    if not C.subordination().ok:
        raise ValueError("connection is not subordinate to the structure")
    return ce_module_operator(C.S.X, C)


def curvature_operator(J: DerForm) -> FormDerivation:
    """Component formula of the A-linear operator on forms built from a curvature."""
    zero = FormalMultiderivation(J.L, J.degree, cap=1)
    return ce_module_operator(zero, J)


def eta_L(X: FormalMultiderivation, F: DerForm) -> ModuleDerivation:
    return ModuleDerivation(ce_module_operator(X, F), eta(X))


def check_module_derivation_forms(M: ModuleDerivation) -> Report:
    """D(w W) = sym(w) W + (-)^{D w} w D(W) on generating A-forms and P-valued 0-forms."""
    from .galgebra import form_product
    FP = M.D.F
    L, P, A = FP.L, FP.P, FP.A
    FA = forms_A(L)
    rep = Report("module_derivation")
    ws = [{((), (a, 0)): 1} for a in range(A.dim)] + [{((g,), (A.unit, 0)): 1} for g in range(L.rank)]
    Ws = [{((), b): 1} for b in P.kbasis]
    for w in ws:
        wd = FA.deg(next(iter(w)))
        for W in Ws:
            lhs = M.D.apply(form_product(FA, FP, w, W))
            rhs = form_product(FA, FP, M.symbol.apply(w), W)
            vadd(rhs, form_product(FA, FP, w, M.D.apply(W)), sgn(M.degree * wd))
            if normalize(lhs) != normalize(rhs):
                rep.fail((next(iter(w)), next(iter(W))))
    return rep


def eta_L_inverse(M: ModuleDerivation, cap: int = DEFAULT_CAP) -> tuple[FormalMultiderivation, DerForm]:
    """Recover (X, F) from a module derivation of P-valued forms."""
    rep = check_module_derivation_forms(M)
    if not rep.ok:
        raise ValueError(f"input is not a module derivation: {rep.failures[:3]}")
    X = eta_inverse(M.symbol, cap)
    FP = M.D.F
    L, P = FP.L, FP.P
    F = DerForm(L, P, LEFT, M.degree)
    for k in M.D.components:
        for key in canonical_keys(L.gdegs, k - 1):
            kd = sum(L.gdegs[g] for g in key)
            Op = {}
            for b in P.kbasis:
                img = FP.value(M.D.apply({((), b): 1}, k), key)
                if img:
                    Op[b] = vscale(img, sgn(kd * P.deg(b)))
            F.set(k - 1, key, Op)
    return X, F


# the operator D on tensors with coefficients


def rinehart_component(T: TensorSpace, X: FormalMultiderivation, F: DerForm, k: int, U: dict) -> dict:
    """Component k: X on k factors, minus F on k-1 factors acting on the coefficient."""
    L = T.L
    gd = L.gdegs
    Xc = X.components.get(k)
    d = F.degree
    out: dict = {}
    for b, c in U.items():
        s0, m, qv = T.split_coefficient(b)
        degs = [gd[g] for g in m]
        l = len(m)
        if Xc is not None and k <= l:
            for first, rest, al in splits(degs, k):
                x = Xc.X_on(tuple(m[i] for i in first))
                rg = tuple(m[i] for i in rest)
                for (a, h), cx in x.items():
                    s, mono = sort_sign((h,) + rg, [gd[h]] + [degs[i] for i in rest])
                    if not s:
                        continue
                    v = T.scalar_act({a: 1}, T.with_coefficient(mono, qv))
                    vadd(out, v, c * s0 * al * cx * s)
        if k - 1 <= l and (k - 1) in F.ops:
            for first, rest, al in splits(degs, l - k + 1):
                Op = F.on(k - 1, tuple(m[i] for i in rest))
                if not Op:
                    continue
                qq = op_apply(Op, qv)
                if not qq:
                    continue
                e = d * sum(degs[i] for i in first)
                vadd(out, T.with_coefficient(tuple(m[i] for i in first), qq), -c * s0 * al * sgn(e))
    return normalize(out)


class TensorDerivation:
    """Arity-indexed operators D_k on S_A(L) (x) Q; D_k lowers tensor degree by k-1."""

    def __init__(self, T: TensorSpace, degree: int, components: dict):
        self.T, self.degree, self.components = T, degree, components

    def apply(self, U: dict, k: int | None = None) -> dict:
        if k is not None:
            f = self.components.get(k)
            return f(U) if f else {}
        out: dict = {}
        for f in self.components.values():
            vadd(out, f(U))
        return normalize(out)

    __call__ = apply


def rinehart_operator(X: FormalMultiderivation, F: DerForm) -> TensorDerivation:
    if F.side != RIGHT:
        raise ValueError("needs a right form")
    T = TensorSpace(F.L, F.P)
    ks = sorted(set(X.components) | {m + 1 for m in F.ops})
    comps = {k: (lambda k: lambda U: rinehart_component(T, X, F, k, U))(k) for k in ks}
    return TensorDerivation(T, F.degree, comps)


def D_delta(C: Connection) -> TensorDerivation:
    if not C.subordination().ok:
        raise ValueError("connection is not subordinate to the structure")
    return rinehart_operator(C.S.X, C)


def curvature_tensor_operator(J: DerForm) -> TensorDerivation:
    zero = FormalMultiderivation(J.L, J.degree, cap=1)
    return rinehart_operator(zero, J)


class TensorModuleDerivation:
    def __init__(self, D: TensorDerivation, symbol: FormDerivation):
        self.D, self.symbol = D, symbol
        self.degree = D.degree

    def __call__(self, U: dict, k: int | None = None) -> dict:
        return self.D.apply(U, k)


def eta_R(X: FormalMultiderivation, F: DerForm) -> TensorModuleDerivation:
    return TensorModuleDerivation(rinehart_operator(X, F), eta(X))


def check_module_derivation_tensors(M: TensorModuleDerivation, window: int = 3) -> Report:
    """D(i_w U) = i_{sym(w)} U + (-)^{D w} i_w D(U) on generating forms and window tensors."""
    T = M.D.T
    L, A = T.L, T.A
    FA = forms_A(L)
    rep = Report("module_derivation")
    ws = [{((), (a, 0)): 1} for a in range(A.dim)] + [{((g,), (A.unit, 0)): 1} for g in range(L.rank)]
    for w in ws:
        wd = FA.deg(next(iter(w)))
        sw = M.symbol.apply(w)
        for b in T.basis(window):
            U = {b: 1}
            lhs = M.D.apply(tensor_mu(FA, T, w, U))
            rhs = tensor_mu(FA, T, sw, U)
            vadd(rhs, tensor_mu(FA, T, w, M.D.apply(U)), sgn(M.degree * wd))
            if normalize(lhs) != normalize(rhs):
                rep.fail((next(iter(w)), b))
    return rep


def eta_R_inverse(M: TensorModuleDerivation, cap: int = DEFAULT_CAP,
                  window: int = 3) -> tuple[FormalMultiderivation, DerForm]:
    """Recover (X, F): F(xi|q) is minus the (k-1)-factor tensor image under D_k."""
    rep = check_module_derivation_tensors(M, window)
    if not rep.ok:
        raise ValueError(f"input is not a module derivation: {rep.failures[:3]}")
    X = eta_inverse(M.symbol, cap)
    T = M.D.T
    L, Q = T.L, T.Q
    F = DerForm(L, Q, RIGHT, M.degree)
    for k in M.D.components:
        for key in canonical_keys(L.gdegs, k - 1):
            Op = {}
            for b in Q.kbasis:
                img = M.D.apply(T.with_coefficient(key, {b: 1}), k)
                col = {}
                for (a, m, q), c in img.items():
                    if m:
                        raise ValueError("component does not lower tensor degree by k-1")
                    vadd1(col, (a, q), -c)
                if col:
                    Op[b] = col
            F.set(k - 1, key, Op)
    return X, F


# tensor products and homomorphisms of free modules


class TensorModule(FreeModule):
    """P (x)_A P' on the generators g (x) h."""

    def __init__(self, P: FreeModule, P2: FreeModule):
        if P.A != P2.A:
            raise ValueError("modules over different algebras")
        gens = [(f"{n}*{m}", d + e) for n, d in P.generators for m, e in P2.generators]
        super().__init__(P.A, gens)
        self.left, self.right = P, P2

    def pair(self, g: int, h: int) -> int:
        return g * self.right.rank + h

    def tensor(self, p: dict, p2: dict) -> dict:
        """p (x) p2 for K-vectors of the factors."""
        A = self.A
        out: dict = {}
        for (a, g), c in p.items():
            gd = self.left.gdegs[g]
            for (b, h), d in p2.items():
                for x, e in A.mul_basis(a, b).items():
                    vadd1(out, (x, self.pair(g, h)), c * d * e * sgn(gd * A.degs[b]))
        return out

    def split(self, b) -> tuple[dict, dict]:
        """Basis element a (g (x) h) as (a g) (x) h."""
        a, gh = b
        g, h = divmod(gh, self.right.rank)
        return {(a, g): 1}, {(self.A.unit, h): 1}


class HomModule(FreeModule):
    """Hom_A(P, P') on the elementary maps g -> h, of degree |h| - |g|."""

    def __init__(self, P: FreeModule, P2: FreeModule):
        if P.A != P2.A:
            raise ValueError("modules over different algebras")
        gens = [(f"{n}->{m}", e - d) for n, d in P.generators for m, e in P2.generators]
        super().__init__(P.A, gens)
        self.source, self.target = P, P2

    def pair(self, g: int, h: int) -> int:
        return g * self.target.rank + h

    def apply(self, phi: dict, p: dict) -> dict:
        """phi(p), with phi(c g) = (-)^{phi c} c phi(g)."""
        A = self.A
        out: dict = {}
        for (a, gh), c in phi.items():
            g, h = divmod(gh, self.target.rank)
            fd = self.gdegs[gh]
            for (b, g2), d in p.items():
                if g2 != g:
                    continue
                for x, e in A.mul_basis(a, b).items():
                    vadd1(out, (x, h), c * d * e * sgn(fd * A.degs[b]))
        return out

    def from_map(self, f: Callable[[dict], dict]) -> dict:
        """The A-linear map fixed by its values on the generators of the source."""
        out: dict = {}
        for g in range(self.source.rank):
            for (b, h), c in f(self.source.gen(g)).items():
                vadd1(out, (b, self.pair(g, h)), c)
        return out


def tensor_form(F: DerForm, G: DerForm, c1: int, c2: int, side: str, degree: int | None = None,
                max_args: int | None = None) -> DerForm:
    """c1 F(xi|p) (x) p' + c2 (-)^{(deg + |xi|) p} p (x) G(xi|p') on generator tuples."""
    TM = TensorModule(F.P, G.P)
    L = F.L
    degree = F.degree if degree is None else degree
    out = DerForm(L, TM, side, degree)
    n_max = max(F.arities + G.arities + [0]) if max_args is None else max_args
    for m in range(n_max + 1):
        for key in canonical_keys(L.gdegs, m):
            Mf, Mg = F.on(m, key), G.on(m, key)
            if not Mf and not Mg:
                continue
            d = degree + sum(L.gdegs[g] for g in key)
            Op = {}
            for b in TM.kbasis:
                p, p2 = TM.split(b)
                col = vscale(TM.tensor(op_apply(Mf, p), p2), c1)
                vadd(col, TM.tensor(p, op_apply(Mg, p2)), c2 * sgn(d * F.P.deg(next(iter(p)))))
                col = normalize(col)
                if col:
                    Op[b] = col
            out.set(m, key, Op)
    return out


def hom_form(F: DerForm, G: DerForm, c1: int, c2: int, side: str, degree: int | None = None,
             max_args: int | None = None) -> DerForm:
    """c1 G(xi|phi(p)) + c2 (-)^{(deg + |xi|) phi} phi(F(xi|p)) on generator tuples."""
    HM = HomModule(F.P, G.P)
    L = F.L
    degree = F.degree if degree is None else degree
    out = DerForm(L, HM, side, degree)
    n_max = max(F.arities + G.arities + [0]) if max_args is None else max_args
    for m in range(n_max + 1):
        for key in canonical_keys(L.gdegs, m):
            Mf, Mg = F.on(m, key), G.on(m, key)
            if not Mf and not Mg:
                continue
            d = degree + sum(L.gdegs[g] for g in key)
            Op = {}
            for b in HM.kbasis:
                phi = {b: 1}
                s = c2 * sgn(d * HM.deg(b))

                def f(p, phi=phi, s=s):
                    v = vscale(op_apply(Mg, HM.apply(phi, p)), c1)
                    return vadd(v, HM.apply(phi, op_apply(Mf, p)), s)

                col = normalize(HM.from_map(f))
                if col:
                    Op[b] = col
            out.set(m, key, Op)
    return out


def _same_base(*conns: Connection) -> SHLRAlgebra:
    S = conns[0].S
    for C in conns[1:]:
        if C.S is not S and C.S != S:
            raise ValueError("connections along different SH LR algebras")
    return S


def _check_sides(pairs) -> None:
    for C, side in pairs:
        if C.side != side:
            raise ValueError(f"expected a {side} connection")


def tensor_left(C: Connection, C2: Connection) -> LeftConnection:
    """Left connection in P (x) P' from left connections in P and P'."""
    S = _same_base(C, C2)
    _check_sides([(C, LEFT), (C2, LEFT)])
    return LeftConnection(S, *_ops(tensor_form(C, C2, 1, 1, LEFT, max_args=_conn_args(C, C2))))


def hom_left(C: Connection, C2: Connection) -> LeftConnection:
    """Left connection in Hom(P, P') from left connections in P and P'."""
    S = _same_base(C, C2)
    _check_sides([(C, LEFT), (C2, LEFT)])
    return LeftConnection(S, *_ops(hom_form(C, C2, 1, -1, LEFT, max_args=_conn_args(C, C2))))


def _ops(F: DerForm):
    return F.P, F.ops


def _conn_args(*conns: Connection) -> int:
    return max(C.max_args for C in conns)


def right_ops(D: Connection, D2: Connection, N: Connection) -> dict[str, Connection]:
    """Composites of right connections D in Q, D2 in Q' and a left connection N in P."""
    S = _same_base(D, D2, N)
    _check_sides([(D, RIGHT), (D2, RIGHT), (N, LEFT)])
    n = _conn_args(D, D2, N)
    return {
        "tensor": LeftConnection(S, *_ops(tensor_form(D, D2, -1, -1, LEFT, max_args=n))),
        "hom": LeftConnection(S, *_ops(hom_form(D, D2, -1, 1, LEFT, max_args=n))),
        "diamond": RightConnection(S, *_ops(tensor_form(N, D, -1, 1, RIGHT, max_args=n))),
        "diamond_hom_pq": RightConnection(S, *_ops(hom_form(N, D, 1, 1, RIGHT, max_args=n))),
        "diamond_hom_qp": RightConnection(S, *_ops(hom_form(D, N, -1, -1, RIGHT, max_args=n))),
    }


def composite_curvature_formulas(D: Connection, D2: Connection, N: Connection | None = None,
                                 max_args: int = 3) -> dict[str, DerForm]:
    """Curvatures of the composites predicted from the curvatures of the inputs.

    With N None, D and D2 are left connections and the keys are
    ``tensor`` and ``hom``; otherwise the keys of ``right_ops``.
    """
    J1, J2 = curvature(D, max_args), curvature(D2, max_args)
    if N is None:
        return {"tensor": tensor_form(J1, J2, 1, 1, LEFT, 2, max_args),
                "hom": hom_form(J1, J2, 1, -1, LEFT, 2, max_args)}
    JN = curvature(N, max_args)
    return {"tensor": tensor_form(J1, J2, -1, -1, LEFT, 2, max_args),
            "hom": hom_form(J1, J2, -1, 1, LEFT, 2, max_args),
            "diamond": tensor_form(JN, J1, -1, 1, RIGHT, 2, max_args),
            "diamond_hom_pq": hom_form(JN, J1, 1, 1, RIGHT, 2, max_args),
            "diamond_hom_qp": hom_form(J1, JN, -1, -1, RIGHT, 2, max_args)}


# actions on algebra extensions


class AlgebraExtension:
    """The extension A -> A (x)_K B, seen both as an algebra and as a free A-module on the basis of B."""

    def __init__(self, A, B):
        from .galgebra import GradedAlgebra
        from .glinear import GradedSpace
        self.A, self.B = A, B
        self.M = FreeModule(A, B.space.basis)
        kb = self.M.kbasis
        self.index = {b: i for i, b in enumerate(kb)}
        sp = GradedSpace(tuple((f"{A.space.names[a]}*{B.space.names[j]}", self.M.deg((a, j))) for a, j in kb))
        table = {}
        for i, (a, j) in enumerate(kb):
            for i2, (a2, j2) in enumerate(kb):
                if i2 < i:
                    continue
                v = self.mul({(a, j): 1}, {(a2, j2): 1})
                if v:
                    table[(i, i2)] = {self.index[b]: c for b, c in v.items()}
        self.algebra = GradedAlgebra(sp, table, self.index[(A.unit, B.unit)])

    def mul(self, x: dict, y: dict) -> dict:
        """Product on K-vectors of the module view: (a b)(a' b') = (-)^{b a'} a a' b b'."""
        A, B = self.A, self.B
        out: dict = {}
        for (a, j), c in x.items():
            for (a2, j2), d in y.items():
                s = sgn(B.degs[j] * A.degs[a2])
                for x1, e1 in A.mul_basis(a, a2).items():
                    for x2, e2 in B.mul_basis(j, j2).items():
                        vadd1(out, (x1, x2), s * c * d * e1 * e2)
        return out

    def to_alg(self, x: dict) -> dict:
        return {self.index[b]: c for b, c in x.items()}

    def from_alg(self, x: dict) -> dict:
        kb = self.M.kbasis
        return {kb[i]: c for i, c in x.items()}

    def op_to_alg(self, M: dict) -> dict:
        return {self.index[b]: self.to_alg(col) for b, col in M.items()}

    def op_from_alg(self, M: dict) -> dict:
        kb = self.M.kbasis
        return {kb[i]: self.from_alg(col) for i, col in M.items()}


def check_action(C: Connection, ext: AlgebraExtension) -> dict[str, Report]:
    """Every value of C is an algebra derivation of the extension; flatness reported separately."""
    if C.P != ext.M:
        raise ValueError("connection must live in the extension algebra")
    rep = Report("derivation")
    kb = ext.M.kbasis
    for m, table in sorted(C.ops.items()):
        for key, Op in sorted(table.items()):
            d = 1 + sum(C.L.gdegs[g] for g in key)
            for f in kb:
                for g in kb:
                    lhs = op_apply(Op, ext.mul({f: 1}, {g: 1}))
                    rhs = ext.mul(op_apply(Op, {f: 1}), {g: 1})
                    vadd(rhs, ext.mul({f: 1}, op_apply(Op, {g: 1})), sgn(d * ext.M.deg(f)))
                    if normalize(lhs) != normalize(rhs):
                        rep.fail((m, key, f, g))
    flat = Report("flat")
    J = curvature(C)
    for m, table in sorted(J.ops.items()):
        for key in sorted(table):
            flat.fail((m, key))
    return {"derivation": rep, "flat": flat}


def transformation_lr(S: SHLRAlgebra, C: Connection, ext: AlgebraExtension) -> SHLRAlgebra:
    """The SH LR structure on (ext, ext (x)_A L) agreeing with S on (A, L)."""
    rep = check_action(C, ext)
    if not rep["derivation"].ok:
        raise ValueError(f"not a pre-action: {rep['derivation'].failures[:3]}")
    if not rep["flat"].ok:
        raise ValueError(f"pre-action is not flat: {rep['flat'].failures[:3]}")
    AA = ext.algebra
    Lx = FreeModule(AA, S.L.generators)
    comps = {}
    for k in sorted(set(S.X.components) | {m + 1 for m in C.ops}):
        Xc = S.X.components.get(k)
        c = ModMultiderivation(Lx, k, 1)
        if Xc is not None:
            for key, v in Xc.X.items():
                c.set_X(key, {(ext.index[(a, ext.B.unit)], h): x for (a, h), x in v.items()})
        for key, Op in C.ops.get(k - 1, {}).items():
            c.set_sigma(key, ext.op_to_alg(Op))
        if not c.is_zero():
            comps[k] = c
    X = FormalMultiderivation(Lx, 1, comps, cap=max([S.cap] + list(comps)))
    return SHLRAlgebra(Lx, X, name=f"{S.name}-transformation")


def transformation_iso_report(S: SHLRAlgebra, C: Connection, ext: AlgebraExtension,
                              T: SHLRAlgebra, max_arity: int = 2) -> Report:
    """Forms of T with values in ext agree with ext-valued forms of S under D and D^nabla."""
    rep = Report("ce_isomorphism")
    FS = FormSpace(S.L, ext.M)
    D1 = D_nabla(C)
    D2 = eta(T.X)
    for k in range(max_arity + 1):
        for key, b in FS.basis(k):
            w = {(key, b): 1}
            wt = {(key, (ext.index[b], 0)): 1}
            lhs = {(kk, (ext.index[p], 0)): c for (kk, p), c in D1(w).items()}
            if normalize(lhs) != normalize(D2(wt)):
                rep.fail((key, b))
    return rep


def sequence_report(S: SHLRAlgebra, C: Connection, ext: AlgebraExtension, max_arity: int = 2) -> Report:
    """Both maps of CE(A, L) -> CE(ext) -> (ext, nabla_1) commute with the differentials."""
    rep = Report("sequence")
    FA = forms_A(S.L)
    FS = FormSpace(S.L, ext.M)
    DA = eta(S.X)
    DN = D_nabla(C)
    u = ext.B.unit
    incl = lambda w: {(k, (a, u)): c for (k, (a, _)), c in w.items()}
    for k in range(max_arity + 1):
        for b in FA.basis(k):
            w = {b: 1}
            if normalize(DN(incl(w))) != normalize(incl(DA(w))):
                rep.fail(("inclusion", b))
    N1 = C.on(0, ())
    for k in range(max_arity + 1):
        for b in FS.basis(k):
            W = {b: 1}
            proj = lambda V: {p: c for (kk, p), c in V.items() if not kk}
            if normalize(proj(DN(W))) != normalize(op_apply(N1, proj(W))):
                rep.fail(("projection", b))
    return rep


# derivative representations


class ModuleExtension:
    """A free ext-module on generators p_i, also seen as a free A-module on b_j p_i."""

    def __init__(self, ext: AlgebraExtension, generators: Sequence[tuple[str, int]]):
        self.ext = ext
        B = ext.B
        self.gens = tuple((str(n), int(d)) for n, d in generators)
        self.over_ext = FreeModule(ext.algebra, self.gens)
        self.over_A = FreeModule(ext.A, [(f"{B.space.names[j]}*{n}", B.degs[j] + d)
                                         for j in range(B.dim) for n, d in self.gens])
        self.r = len(self.gens)

    def to_ext(self, v: dict) -> dict:
        return {(self.ext.index[(a, jp // self.r)], jp % self.r): c for (a, jp), c in v.items()}

    def from_ext(self, v: dict) -> dict:
        kb = self.ext.M.kbasis
        out = {}
        for (i, p), c in v.items():
            a, j = kb[i]
            out[(a, j * self.r + p)] = c
        return out

    def act(self, f: dict, v: dict) -> dict:
        """Action of an ext element (module-view K-vector) on a K-vector of the A-module view."""
        return self.from_ext(self.over_ext.act(self.ext.to_alg(f), self.to_ext(v)))

    def op_to_ext(self, M: dict) -> dict:
        return {next(iter(self.to_ext({b: 1}))): self.to_ext(col) for b, col in M.items()}

    def op_from_ext(self, M: dict) -> dict:
        return {next(iter(self.from_ext({b: 1}))): self.from_ext(col) for b, col in M.items()}


def check_derivative_rep(Crep: Connection, action: Connection, mext: ModuleExtension) -> Report:
    """Crep(xi|f p) = (-)^{(|xi|+1) f} f Crep(xi|p) +- action(xi|f) p, + on the left, - on the right."""
    sign = _check_side(Crep.side)
    rep = Report(f"{Crep.side}_derivative_rep")
    ext = mext.ext
    for m in sorted(set(Crep.ops) | set(action.ops)):
        for key in canonical_keys(Crep.L.gdegs, m):
            Op, Na = Crep.on(m, key), action.on(m, key)
            if not Op and not Na:
                continue
            d = 1 + sum(Crep.L.gdegs[g] for g in key)
            for f in ext.M.kbasis:
                nf = op_apply(Na, {f: 1})
                for p in mext.over_A.kbasis:
                    lhs = op_apply(Op, mext.act({f: 1}, {p: 1}))
                    rhs = vscale(mext.act({f: 1}, op_apply(Op, {p: 1})), sgn(d * ext.M.deg(f)))
                    vadd(rhs, mext.act(nf, {p: 1}), sign)
                    if normalize(lhs) != normalize(rhs):
                        rep.fail((m, key, f, p))
    return rep


check_derivative_rep_left = check_derivative_rep_right = check_derivative_rep


def extend_derivative_rep(Crep: Connection, T: SHLRAlgebra, mext: ModuleExtension) -> Connection:
    """The connection along the transformation algebra with the same generator values."""
    cls = LeftConnection if Crep.side == LEFT else RightConnection
    ops = {m: {key: mext.op_to_ext(Op) for key, Op in table.items()} for m, table in Crep.ops.items()}
    return cls(T, mext.over_ext, ops)


def restrict_derivative_rep(Cbar: Connection, S: SHLRAlgebra, mext: ModuleExtension) -> Connection:
    cls = LeftConnection if Cbar.side == LEFT else RightConnection
    ops = {m: {key: mext.op_from_ext(Op) for key, Op in table.items()} for m, table in Cbar.ops.items()}
    return cls(S, mext.over_A, ops)


def check_module_derivation_ext(Crep: Connection, action: Connection, mext: ModuleExtension,
                                max_arity: int = 1, window: int = 2) -> Report:
    """The pair of operators on forms (left) or tensors (right) is a module derivation over ext-valued forms."""
    from .galgebra import form_product
    ext = mext.ext
    L = Crep.L
    FE = FormSpace(L, ext.M)
    DE = D_nabla(action)
    ws = [{((), f): 1} for f in ext.M.kbasis] + [{((g,), (ext.A.unit, ext.B.unit)): 1} for g in range(L.rank)]
    rep = Report(f"{Crep.side}_module_derivation")
    if Crep.side == LEFT:
        FP = FormSpace(L, mext.over_A)
        D = D_nabla(Crep)
        vm = lambda a, p: mext.act(a, p)
        for w in ws:
            wd = FE.deg(next(iter(w)))
            for k in range(max_arity + 1):
                for b in FP.basis(k):
                    W = {b: 1}
                    lhs = D(form_product(FE, FP, w, W, vm))
                    rhs = form_product(FE, FP, DE(w), W, vm)
                    vadd(rhs, form_product(FE, FP, w, D(W), vm), sgn(wd))
                    if normalize(lhs) != normalize(rhs):
                        rep.fail((next(iter(w)), b))
        return rep
    T = TensorSpace(L, mext.over_A)
    D = D_delta(Crep)
    for w in ws:
        wd = FE.deg(next(iter(w)))
        for b in T.basis(window):
            U = {b: 1}
            lhs = D(_ext_contract(FE, T, mext, w, U))
            rhs = _ext_contract(FE, T, mext, DE(w), U)
            vadd(rhs, _ext_contract(FE, T, mext, w, D(U)), sgn(wd))
            if normalize(lhs) != normalize(rhs):
                rep.fail((next(iter(w)), b))
    return rep


def _ext_contract(FE: FormSpace, T: TensorSpace, mext: ModuleExtension, w: dict, U: dict) -> dict:
    """i_w U for ext-valued forms: as tensor_mu with the value acting on the coefficient."""
    A, L = T.A, T.L
    ldeg = L.gdegs
    out: dict = {}
    for (kw, f), c in w.items():
        wdeg = FE.deg((kw, f))
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
                s = s0 * al * sf * sgn(wdeg * kd)
                v = mext.act({f: 1}, {(A.unit, q): 1})
                vadd(out, T.scalar_act({a: 1}, T.with_coefficient(mk, v)), s * c * d)
    return out
