"""SH Lie-Rinehart algebras, L-infinity[1] algebras and modules, P-infinity[1] algebras.

An SH LR algebra is a pair (A, L) with a degree-1 formal multiderivation
``X`` of L (no 0-ary part) whose self-bracket vanishes.  Validity is only
ever certified up to the arity cap.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Callable, Sequence

from .galgebra import FreeModule, GradedAlgebra, Report, TensorSpace, validate_algebra
from .glinear import (GradedSpace, SymMultiMap, canonical_keys, gcirc, normalize,
                      vadd, vadd1, vscale)
from .linalg import nullspace, rank
from .mder import (DEFAULT_CAP, FormalMultiderivation, ModMultiderivation, SMultider,
                   SumSMultider, CircSMultider, eta, fm_scale, mder_bracket,
                   nu, op_add, op_compose, op_normalize, op_scale)
from .signs import decalage_sign, sort_sign, splits, sgn


class SHLRAlgebra:
    """Candidate SH LR algebra (A, L, X)."""

    def __init__(self, L: FreeModule, X: FormalMultiderivation, name: str = ""):
        if X.degree != 1 and not X.is_zero():
            raise ValueError("structure multiderivation must have degree 1")
        if X.L != L:
            raise ValueError("multiderivation of a different module")
        self.A, self.L, self.X = L.A, L, X
        self.name = name

    @property
    def cap(self) -> int:
        return self.X.cap

    def validate(self) -> dict[str, Report]:
        out = {"algebra": validate_algebra(self.A)}
        lz = Report("leibniz")
        for k, c in self.X.components.items():
            for f in c.check().failures:
                lz.fail((k, f))
        out["leibniz"] = lz
        if not (out["algebra"].ok and lz.ok):
            j = Report("jacobiator", skipped=True)
        else:
            J = jacobiator(self)
            j = Report("jacobiator")
            for k, c in J.components.items():
                for key in c.X:
                    j.fail(("X", k, key))
                for key in c.sigma:
                    j.fail(("sigma", k, key))
        out["jacobiator"] = j
        return out

    def is_valid(self) -> bool:
        return all(r.ok for r in self.validate().values())

    def __eq__(self, other):
        return isinstance(other, SHLRAlgebra) and self.L == other.L and self.X == other.X

    def __repr__(self):
        return f"SHLRAlgebra({self.name or ''} rank={self.L.rank}, dimA={self.A.dim}, arities={self.X.arities})"


class LInfinityOneAlgebra(SHLRAlgebra):
    """SH LR algebra over the ground field: brackets lambda_k on V."""

    def __init__(self, V: GradedSpace, brackets: dict[int, SymMultiMap], cap: int = DEFAULT_CAP, name: str = ""):
        K = GradedAlgebra.ground_field()
        L = FreeModule(K, V.basis)
        comps = {}
        for k, m in brackets.items():
            if m.skew:
                raise ValueError("brackets must be graded symmetric")
            if m.degree != 1 and not m.is_zero():
                raise ValueError("brackets must have degree 1")
            c = ModMultiderivation(L, k, 1)
            for key, v in m.table.items():
                c.set_X(key, {(0, j): x for j, x in v.items()})
            comps[k] = c
        super().__init__(L, FormalMultiderivation(L, 1, comps, cap=max([cap] + list(brackets))), name)
        self.V = V
        self.brackets = {k: m for k, m in brackets.items()}

    def bracket(self, k: int) -> SymMultiMap:
        m = self.brackets.get(k)
        return m if m is not None else SymMultiMap(self.V, self.V, k, 1)


def jacobiator(S: SHLRAlgebra) -> FormalMultiderivation:
    """Self-bracket obstruction, from the bracket and anchor component formulas."""
    X = S.X
    L = S.L
    gd = L.gdegs
    cap = X.cap
    comps = {}
    truncated = X.truncated
    ar = X.arities
    for n in range(1, cap + 1):
        c = ModMultiderivation(L, n, 2)
        for key in canonical_keys(gd, n):
            degs = [gd[g] for g in key]
            v: dict = {}
            for i in ar:
                j = n - i + 1
                if j not in X.components:
                    continue
                Xi, Xj = X.components[i], X.components[j]
                for first, rest, a in splits(degs, i):
                    x = Xi.X_on(tuple(key[t] for t in first))
                    if not x:
                        continue
                    tail = tuple((S.A.unit, key[t]) for t in rest)
                    for b, cb in x.items():
                        vadd(v, Xj.eval_basis((b,) + tail), a * cb)
            c.set_X(key, v)
        for key in canonical_keys(gd, n - 1):
            degs = [gd[g] for g in key]
            M: dict = {}
            m = n - 1
            # sigma(first | sigma(rest | a)) over all component pairs
            for i in range(0, m + 1):
                Xo, Xi_ = X.components.get(i + 1), X.components.get(m - i + 1)
                if Xo is None or Xi_ is None:
                    continue
                for first, rest, a in splits(degs, i):
                    So = Xo.sigma_on(tuple(key[t] for t in first))
                    Si = Xi_.sigma_on(tuple(key[t] for t in rest))
                    if So and Si:
                        e = sum(degs[t] for t in first)
                        M = op_add(M, op_compose(So, Si), a * sgn(e))
            # sigma(X(first), rest | a)
            for i in ar:
                j = n - i + 1
                Xj = X.components.get(j)
                if Xj is None or j < 2:
                    continue
                Xi = X.components[i]
                for first, rest, a in splits(degs, i):
                    x = Xi.X_on(tuple(key[t] for t in first))
                    if not x:
                        continue
                    tail = tuple((S.A.unit, key[t]) for t in rest)
                    for b, cb in x.items():
                        M = op_add(M, Xj.sigma_matrix((b,) + tail), a * cb)
            c.set_sigma(key, M)
        if not c.is_zero():
            comps[n] = c
    if any(i + j - 1 > cap for i in ar for j in ar):
        truncated = True
    return FormalMultiderivation(L, 2, comps, cap=cap, truncated=truncated)


def jacobiator_by_bracket(S: SHLRAlgebra) -> FormalMultiderivation:
    """Same obstruction computed as half the self-bracket."""
    return fm_scale(mder_bracket(S.X, S.X), Fraction(1, 2))


def ce_differential(S: SHLRAlgebra, form: dict, check: bool = True) -> dict:
    """Chevalley-Eilenberg differential of an A-valued form."""
    if check:
        rep = S.validate()
        bad = [r for r in rep.values() if not r.ok]
        if bad:
            raise ValueError(f"invalid SH LR structure: {[r.as_dict() for r in bad]}")
    return eta(S.X)(form)


# L-infinity[1] modules over the ground field


def two_sum_residual(gd: Sequence[int], key: tuple, X_comps: dict,
                     first_op: Callable[[int, dict, tuple], dict],
                     op_on: Callable[[int, tuple], dict], op_degree: int,
                     second_sign: int) -> dict:
    """The operator  sum op(X(first), rest) + second_sign * sum (+-) op(first) o op(rest).

    ``op_on(m, gens)`` is the module operator with m algebra arguments;
    ``first_op(m, x, rest)`` evaluates it with an L-element in the first slot.
    Used for module identities and for curvatures.
    """
    n = len(key)
    degs = [gd[g] for g in key]
    M: dict = {}
    for i, Xi in X_comps.items():
        if i > n:
            continue
        for first, rest, a in splits(degs, i):
            x = Xi.X_on(tuple(key[t] for t in first))
            if x:
                M = op_add(M, first_op(n - i + 1, x, tuple(key[t] for t in rest)), a)
    for i in range(n + 1):
        for first, rest, a in splits(degs, i):
            Of = op_on(i, tuple(key[t] for t in first))
            if not Of:
                continue
            Or = op_on(n - i, tuple(key[t] for t in rest))
            if not Or:
                continue
            e = op_degree * sum(degs[t] for t in first)
            M = op_add(M, op_compose(Of, Or), second_sign * a * sgn(e))
    return op_normalize(M)


class ModuleMaps:
    """Family mu_k(v_1..v_{k-1} | w): graded symmetric in the v's, operator on W.

    ``ops[m]`` maps sorted V-index m-tuples to operators (column dicts on W indices).
    """

    def __init__(self, V: GradedSpace, W: GradedSpace, ops: dict[int, dict] | None = None):
        self.V, self.W = V, W
        self.ops: dict[int, dict] = {}
        for m, table in (ops or {}).items():
            for key, M in table.items():
                self.set(m, tuple(key), M)

    def set(self, m: int, key: tuple, M: dict) -> None:
        s, sk = sort_sign(key, [self.V.deg(i) for i in key])
        M = op_normalize(M)
        if not s:
            if M:
                raise ValueError("nonzero value on a repeated odd argument")
            return
        want = 1 + sum(self.V.deg(i) for i in key)
        for j, col in M.items():
            if any(self.W.deg(t) != self.W.deg(j) + want for t in col):
                raise ValueError("module map of wrong degree")
        t = self.ops.setdefault(m, {})
        new = op_add(t.get(sk, {}), M, s)
        if new:
            t[sk] = new
        else:
            t.pop(sk, None)

    def on(self, m: int, gens: tuple) -> dict:
        s, sk = sort_sign(gens, [self.V.deg(i) for i in gens])
        M = self.ops.get(m, {}).get(sk) if s else None
        if not M:
            return {}
        return M if s == 1 else op_scale(M, -1)


def _module_residuals(V: LInfinityOneAlgebra, mu: ModuleMaps, sign: int, max_k: int) -> Report:
    gd = V.V.degs
    rep = Report("linf_module" if sign > 0 else "right_linf_module")

    def first_op(m, x, rest):
        out: dict = {}
        for (_, h), c in x.items():
            out = op_add(out, mu.on(m, (h,) + rest), c)
        return out

    for k in range(1, max_k + 1):
        for key in canonical_keys(gd, k - 1):
            R = two_sum_residual(gd, key, V.X.components, first_op, mu.on, 1, sign)
            if R:
                rep.fail((k, key))
    return rep


def check_linf_module(V: LInfinityOneAlgebra, W: GradedSpace, mu: ModuleMaps, max_k: int | None = None) -> Report:
    """Left module identities, one residual per arity k."""
    return _module_residuals(V, mu, 1, max_k or V.cap)


def check_right_linf_module(V: LInfinityOneAlgebra, Z: GradedSpace, rho: ModuleMaps, max_k: int | None = None) -> Report:
    """Right module identities: as the left ones with a minus on the composite sum."""
    return _module_residuals(V, rho, -1, max_k or V.cap)


def adjoint_module(V: LInfinityOneAlgebra) -> ModuleMaps:
    mu = ModuleMaps(V.V, V.V)
    for k, m in V.brackets.items():
        for key in canonical_keys(V.V.degs, k - 1):
            M = {}
            for w in range(V.V.dim):
                col = m.on_basis(key + (w,))
                if col:
                    M[w] = col
            mu.set(k - 1, key, M)
    return mu


def anchor_module(S: SHLRAlgebra) -> tuple[LInfinityOneAlgebra, ModuleMaps]:
    """The anchors as module maps over the underlying L-infinity[1] algebra of L over K.

    Only meaningful over the ground field view: L is regarded as the K-space
    spanned by its K-basis, with brackets extended by the Leibniz rule.
    """
    A, L = S.A, S.L
    kb = list(L.kbasis)
    V = GradedSpace(tuple((f"{A.space.names[a]}*{L.generators[g][0]}", L.deg((a, g))) for a, g in kb))
    idx = {b: i for i, b in enumerate(kb)}
    brackets = {}
    for k, c in S.X.components.items():
        m = SymMultiMap(V, V, k, 1)
        for key in canonical_keys(V.degs, k):
            val = c.eval_basis(tuple(kb[i] for i in key))
            if val:
                m.set(key, {idx[b]: x for b, x in val.items()})
        brackets[k] = m
    LV = LInfinityOneAlgebra(V, brackets, cap=S.cap)
    mu = ModuleMaps(V, A.space)
    for k, c in S.X.components.items():
        for key in canonical_keys(V.degs, k - 1):
            M = c.sigma_matrix(tuple(kb[i] for i in key))
            if M:
                mu.set(k - 1, key, M)
    return LV, mu


# classical (skew) L-infinity data and decalage


def check_classical_linf(V: GradedSpace, lam: dict[int, SymMultiMap], max_k: int) -> Report:
    """Skew-convention identity, sum over i+j=k of (-)^{ij} (-)^sigma alpha l_{j+1}(l_i(..), ..)."""
    rep = Report("classical_linf")
    degs = V.degs
    for k in range(1, max_k + 1):
        for key in canonical_keys([d + 1 for d in degs], k):
            pd = [degs[t] for t in key]
            v: dict = {}
            for i in range(1, k + 1):
                j = k - i
                li, lj = lam.get(i), lam.get(j + 1)
                if li is None or lj is None:
                    continue
                for (first, rest, a), (_, _, p) in zip(splits(pd, i), splits([1] * k, i)):
                    x = li.on_basis(tuple(key[t] for t in first))
                    if not x:
                        continue
                    for y, c in x.items():
                        vadd(v, lj.on_basis((y,) + tuple(key[t] for t in rest)), c * a * p * sgn(i * j))
            if normalize(v):
                rep.fail((k, key))
    return rep


def decalage_convert(V: GradedSpace, lam: dict[int, SymMultiMap], cap: int = DEFAULT_CAP) -> LInfinityOneAlgebra:
    """Skew brackets of degree 2-k on V to symmetric degree-1 brackets on V[1]."""
    V1 = GradedSpace(tuple((n, d - 1) for n, d in V.basis))
    out = {}
    for k, m in lam.items():
        if not m.skew:
            raise ValueError("classical brackets must be graded skew-symmetric")
        if m.degree != 2 - k and not m.is_zero():
            raise ValueError(f"classical bracket {k} must have degree {2 - k}")
        s = SymMultiMap(V1, V1, k, 1)
        for key, v in m.table.items():
            s.set(key, vscale(v, decalage_sign([V.deg(t) for t in key])))
        out[k] = s
    return LInfinityOneAlgebra(V1, out, cap=cap)


def decalage_inverse(V1: GradedSpace, lam: dict[int, SymMultiMap]) -> tuple[GradedSpace, dict[int, SymMultiMap]]:
    V = GradedSpace(tuple((n, d + 1) for n, d in V1.basis))
    out = {}
    for k, m in lam.items():
        s = SymMultiMap(V, V, k, 2 - k, skew=True)
        for key, v in m.table.items():
            s.set(key, vscale(v, decalage_sign([V.deg(t) for t in key])))
        out[k] = s
    return V, out


# P-infinity[1] algebras


class PInfinityOneAlgebra:
    """Commutative algebra with degree-1 multiderivations Lambda_k (finite-dimensional case)."""

    def __init__(self, P: GradedAlgebra, brackets: dict[int, SymMultiMap], name: str = ""):
        self.P = P
        self.brackets = {k: m for k, m in brackets.items() if not m.is_zero()}
        for m in self.brackets.values():
            if m.degree != 1 or m.skew:
                raise ValueError("brackets must be symmetric of degree 1")
        self.name = name

    def validate(self, cap: int = DEFAULT_CAP) -> dict[str, Report]:
        from .mder import AlgMultiderivation
        out = {"algebra": validate_algebra(self.P)}
        md = Report("multiderivation")
        for k, m in self.brackets.items():
            for f in AlgMultiderivation(self.P, m).check().failures:
                md.fail((k, f))
        out["multiderivation"] = md
        j = Report("jacobiator")
        for n, m in pinf_jacobiator(self, cap).items():
            for key in m.table:
                j.fail((n, key))
        out["jacobiator"] = j
        return out


def pinf_jacobiator(Pa: PInfinityOneAlgebra, cap: int = DEFAULT_CAP) -> dict[int, SymMultiMap]:
    out = {}
    for i, Li in Pa.brackets.items():
        for j, Lj in Pa.brackets.items():
            n = i + j - 1
            if n > cap:
                continue
            c = gcirc(Lj, Li)
            if n in out:
                from .glinear import mapsum
                out[n] = mapsum([out[n], c], [1, 1])
            else:
                out[n] = c
    return {n: m for n, m in out.items() if not m.is_zero()}


class InducedPInfinity:
    """Brackets on S_A(L) extending an SH LR structure, checked on a tensor window."""

    def __init__(self, S: SHLRAlgebra, window: int = 3):
        self.S = S
        self.T = TensorSpace(S.L)
        self.window = window
        self.brackets: dict[int, SMultider] = nu(S.X, self.T)

    def window_basis(self, max_degree: int | None = None) -> list:
        return self.T.basis(self.window if max_degree is None else max_degree)

    def jacobiator_residuals(self, max_arity: int | None = None) -> list:
        """Basis tuples (total tensor degree within window) where the self-bracket fails."""
        bad = []
        cap = max_arity or self.S.cap
        basis = self.window_basis()
        for n in range(1, cap + 1):
            terms = [CircSMultider(self.brackets[j], self.brackets[i])
                     for i in self.brackets for j in self.brackets if i + j - 1 == n]
            if not terms:
                continue
            J = SumSMultider([(1, t) for t in terms])
            for args in combinations_with_replacement(basis, n):
                if sum(len(b[1]) for b in args) > self.window:
                    continue
                if normalize(J.eval_basis(args)):
                    bad.append((n, args))
        return bad


def induced_pinfinity(S: SHLRAlgebra, window: int = 3) -> InducedPInfinity:
    return InducedPInfinity(S, window)


# Kaehler differentials of a P-infinity algebra


class KahlerReport(Report):
    pass


def kahler_module(P: GradedAlgebra):
    """Present the Kaehler differentials of P as a free module, if they are free.

    Returns (Omega, d) with d(e) the coordinates of the differential of basis
    element e, or raises ValueError with the reason when not free.
    The differential lowers degree by one so that brackets come out of degree 1.
    """
    n = P.dim
    rels = []
    for c in range(n):
        for a in range(n):
            for b in range(n):
                r: dict = {}
                for t, v in P.mul_basis(a, b).items():
                    for s, w in P.mul_basis(c, P.unit).items():
                        vadd1(r, (s, t), v * w)
                for s, v in P.mul_basis(c, a).items():
                    vadd1(r, (s, b), -v * sgn(P.deg(a)))
                for s, v in P.mul_basis(c, b).items():
                    vadd1(r, (s, a), -v * sgn((P.deg(a) + 1) * P.deg(b)))
                if r:
                    rels.append(r)
    relrank = rank(rels)
    qdim = n * n - relrank
    gens: list[int] = []
    span = list(rels)
    cur = relrank
    for e in range(n):
        if e == P.unit:
            continue
        new = [{(c, e): 1} for c in range(n)]
        r = rank(span + new)
        if r > cur:
            gens.append(e)
            span += new
            cur = r
    if qdim != n * len(gens) or cur != n * n:
        raise ValueError(f"Kaehler module is not free: quotient dimension {qdim}, {len(gens)} generator candidates")
    names = P.space.names
    Om = FreeModule(P, tuple((f"d{names[e]}", P.deg(e) - 1) for e in gens))

    # coordinates of d(e) = 1 (x) e modulo relations, in the basis c * d(g)
    def coords(target: dict) -> dict:
        unknown = [("r", i) for i in range(len(rels))] + [("t", c, j) for c in range(n) for j in range(len(gens))] + [("z",)]
        eqs: dict = {}
        for i, r in enumerate(rels):
            for col, v in r.items():
                eqs.setdefault(col, {})[("r", i)] = v
        for c in range(n):
            for j, g in enumerate(gens):
                eqs.setdefault((c, g), {})[("t", c, j)] = 1
        for col, v in target.items():
            eqs.setdefault(col, {})[("z",)] = -v
        order = {u: i for i, u in enumerate(unknown)}
        rows = [{order[u]: v for u, v in row.items()} for row in eqs.values()]
        # put z first so the null vector with z = 1 is found by the pivot rule
        zi = order[("z",)]
        ns = nullspace(rows, list(range(len(unknown))))
        for v in ns:
            if v.get(zi):
                z = v[zi]
                out = {}
                for u, i in order.items():
                    if u[0] == "t" and v.get(i):
                        out[(u[1], u[2])] = v[i] / z
                return normalize(out)
        raise ValueError("target not in the quotient span")

    dmap = {e: coords({(P.unit, e): 1}) for e in range(n)}
    return Om, dmap


def kahler_lr(P: GradedAlgebra, brackets: dict[int, SymMultiMap], cap: int = DEFAULT_CAP) -> SHLRAlgebra:
    """SH LR structure on (P, Omega^1(P)) induced by skew multiderivations Lambda_k."""
    if P.dim == 1:
        Om = FreeModule(P, ())
        return SHLRAlgebra(Om, FormalMultiderivation(Om, 1, {}, cap=cap), name="kahler")
    Om, dmap = kahler_module(P)
    gens = [int(_gen_index(P, name)) for name, _ in Om.generators]
    comps = {}
    for k, m in brackets.items():
        if not m.skew:
            raise ValueError("P-infinity brackets must be graded skew-symmetric")
        if (m.degree - k) % 2:
            raise ValueError(f"bracket {k} has degree of the wrong parity")
        if m.degree != 2 - k and not m.is_zero():
            raise ValueError(f"bracket {k} of degree {m.degree} cannot give a degree-1 structure; "
                             f"with d of degree -1 the integer degree must be {2 - k}")
        c = ModMultiderivation(Om, k, 1)
        for key in canonical_keys(Om.gdegs, k):
            fs = tuple(gens[t] for t in key)
            fd = [P.deg(f) for f in fs]
            chi = sum((k - 1 - i) * d for i, d in enumerate(fd))
            val: dict = {}
            for e, x in m.on_basis(fs).items():
                vadd(val, dmap[e], x)
            c.set_X(key, vscale(val, sgn(chi)))
        for key in canonical_keys(Om.gdegs, k - 1):
            fs = tuple(gens[t] for t in key)
            fd = [P.deg(f) for f in fs]
            chi = sum((k - 1 - i) * d for i, d in enumerate(fd)) - sum(fd)
            M = {}
            for a in range(P.dim):
                col = m.on_basis(fs + (a,))
                if col:
                    M[a] = vscale(col, sgn(chi))
            c.set_sigma(key, M)
        comps[k] = c
    return SHLRAlgebra(Om, FormalMultiderivation(Om, 1, comps, cap=cap), name="kahler")


def _gen_index(P: GradedAlgebra, dname: str) -> int:
    return P.space.index(dname[1:])


def kahler_d(P: GradedAlgebra, Om: FreeModule, dmap: dict, x: dict) -> dict:
    out: dict = {}
    for e, c in x.items():
        vadd(out, dmap[e], c)
    return out
