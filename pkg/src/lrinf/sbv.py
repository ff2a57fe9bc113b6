"""Higher Schouten-Nijenhuis calculus and BV-infinity operator families.

Operators are kept functional: an :class:`Op` is a degree together with a
K-linear callable on sparse vectors.  Every operator used here is finite on
each basis element (forms of bounded arity, tensors of bounded length), so
comparisons on a declared window of basis elements are exact.

Left calculus lives on P-valued forms, where symmetric tensors act by
insertion ``i_u``; right calculus lives on tensors with coefficients, where
they act by multiplication ``mu_u``.  The two are deliberately separate.
"""
from __future__ import annotations

from itertools import combinations_with_replacement
from math import comb
from typing import Callable, Iterable, Sequence

from .conn import (LEFT, RIGHT, Connection, D_delta, D_nabla, curvature,
                   curvature_operator, curvature_tensor_operator)
from .galgebra import FormSpace, GradedAlgebra, Report, TensorSpace, insert, tensor_mul
from .glinear import SymMultiMap, normalize, vadd, vscale
from .mder import basis_forms, nu
from .shlr import PInfinityOneAlgebra, SHLRAlgebra, induced_pinfinity
from .signs import sgn, splits

DEFAULT_WINDOW = 3


class Op:
    """A graded K-linear operator given by a callable on sparse vectors."""

    def __init__(self, degree: int, fn: Callable[[dict], dict]):
        self.degree = degree
        self.fn = fn

    def __call__(self, x: dict) -> dict:
        return normalize(self.fn(x)) if x else {}

    def __mul__(self, other: "Op") -> "Op":
        return Op(self.degree + other.degree, lambda x: self(other(x)))

    def scaled(self, c) -> "Op":
        return Op(self.degree, lambda x: vscale(self(x), c))


ZERO = Op(0, lambda x: {})


def comm(P: Op, Q: Op) -> Op:
    """Graded commutator [P, Q] = PQ - (-)^{PQ} QP."""
    s = sgn(P.degree * Q.degree)
    return Op(P.degree + Q.degree, lambda x: vadd(P(Q(x)), Q(P(x)), -s))


def nested(D: Op, ops: Sequence[Op]) -> Op:
    """[...[[D, b_1], b_2] ..., b_n]."""
    for b in ops:
        D = comm(D, b)
    return D


def tensor_degree(T: TensorSpace, u: dict) -> int:
    degs = {T.deg(b) for b in normalize(u)}
    if len(degs) > 1:
        raise ValueError("tensor is not homogeneous")
    return degs.pop() if degs else 0


def diff_order(op: Op, probes: Sequence[Op], basis: Sequence[dict], bound: int) -> int | None:
    """Smallest k with all (k+1)-fold commutators with probes vanishing on ``basis``.

    Probes must generate the acting algebra and commute among themselves,
    so tuples may be taken up to order.  Returns None when the order
    exceeds ``bound``.
    """
    for k in range(bound + 1):
        if _all_vanish(op, probes, basis, k + 1):
            return k
    return None


def _all_vanish(op: Op, probes: Sequence[Op], basis: Sequence[dict], n: int) -> bool:
    # depth-first over sorted index tuples so shared prefixes are computed once
    def rec(D: Op, start: int, depth: int) -> bool:
        if depth == n:
            return all(not D(x) for x in basis)
        return all(rec(comm(D, probes[i]), i, depth + 1) for i in range(start, len(probes)))
    return rec(op, 0, 0)


def binomial_identity(k: int, i: int, eps: int) -> int:
    """sum_{j=eps}^{i} (-)^j C(k,j) C(k-j,k-i)."""
    return sum((-1) ** j * comb(k, j) * comb(k - j, k - i) for j in range(eps, i + 1))


def binomial_identity_expected(k: int, i: int, eps: int) -> int:
    """Closed form: 0 (eps = 0) or -C(k, i) (eps = 1) for 1 <= i <= k; i = 0 adds 1."""
    return (1 if i == 0 else 0) - eps * comb(k, i)


def generator_tensors(T: TensorSpace) -> list[dict]:
    """Algebra basis elements and the generators of L, as tensors."""
    A = T.A
    out = [{(a, (), 0): 1} for a in range(A.dim)]
    out += [{(A.unit, (g,), 0): 1} for g in range(T.L.rank)]
    return out


def tensor_tuples(T: TensorSpace, n: int, max_degree: int, pool: Sequence[dict] | None = None) -> list[tuple]:
    """Unordered n-tuples of basis tensors with total tensor length <= max_degree."""
    pool = list(pool) if pool is not None else [{b: 1} for b in T.basis(max_degree)]
    size = [max(len(b[1]) for b in u) for u in pool]
    return [tuple(pool[i] for i in idx) for idx in combinations_with_replacement(range(len(pool)), n)
            if sum(size[i] for i in idx) <= max_degree]


def _two_sum(us: Sequence[dict], degs: Sequence[int], bracket: Callable, conn: Callable,
             x: dict, op_degree: int, second_sign: int) -> dict:
    """sum conn(bracket(first), rest | x) + second_sign * sum (+-) conn(first | conn(rest | x))."""
    n = len(us)
    out: dict = {}
    for i in range(1, n + 1):
        for first, rest, a in splits(degs, i):
            b = bracket([us[t] for t in first])
            if b:
                vadd(out, conn([b] + [us[t] for t in rest], x), a)
    for i in range(n + 1):
        for first, rest, a in splits(degs, i):
            inner = conn([us[t] for t in rest], x)
            if inner:
                e = op_degree * sum(degs[t] for t in first)
                vadd(out, conn([us[t] for t in first], inner), second_sign * a * sgn(e))
    return normalize(out)


# left calculus on forms


class LeftCalculus:
    """Insertions, nested commutators and the Lie derivative of a left connection."""

    def __init__(self, C: Connection, window: int = DEFAULT_WINDOW):
        if C.side != LEFT:
            raise ValueError("needs a left connection")
        self.C, self.S, self.window = C, C.S, window
        self.F = FormSpace(C.S.L, C.P)
        self.T = TensorSpace(C.S.L)
        self.D = D_nabla(C)
        self.brackets = nu(C.S.X, self.T)
        self._J = None

    def i(self, u: dict) -> Op:
        return Op(tensor_degree(self.T, u), lambda W: insert(self.T, self.F, u, W))

    def D_k(self, k: int) -> Op:
        return Op(1, lambda W: self.D.apply(W, k))

    def bracket(self, us: Sequence[dict]) -> dict:
        b = self.brackets.get(len(us))
        return normalize(b(*us)) if b else {}

    def nested(self, us: Sequence[dict], k: int | None = None) -> Op:
        return nested(self.D_k(len(us) if k is None else k), [self.i(u) for u in us])

    def insertion_of_bracket(self, us: Sequence[dict]) -> Op:
        """The right side -(-)^k i_{u_1...u_k} of the nested-commutator identity."""
        k = len(us)
        return self.i(self.bracket(us)).scaled(-sgn(k))

    def lie_derivative(self, us: Sequence[dict], W: dict) -> dict:
        k = len(us) + 1
        return vscale(self.nested(us, k)(W), -sgn(k))

    def lie_total(self, us: Sequence[dict], W: dict) -> dict:
        return self.lie_derivative(us, W)

    def lie_curvature(self, us: Sequence[dict], W: dict) -> dict:
        """Curvature of L along the brackets of S_A(L), from its definition."""
        degs = [tensor_degree(self.T, u) for u in us]
        return _two_sum(us, degs, self.bracket, self.lie_derivative, W, 1, 1)

    def curvature_nested(self, us: Sequence[dict], W: dict) -> dict:
        k = len(us) + 1
        Jop = self._curv_op(k)
        return vscale(nested(Op(2, lambda x: Jop.apply(x, k)), [self.i(u) for u in us])(W), -sgn(k))

    def _curv_op(self, k: int):
        if self._J is None or self._J[0] < k:
            self._J = (k, curvature_operator(curvature(self.C, k)))
        return self._J[1]

    def product(self, u: dict, v: dict) -> dict:
        return tensor_mul(self.T, u, v)

    def test_forms(self, max_arity: int) -> list[dict]:
        return basis_forms(self.F, max_arity)


# right calculus on tensors


class RightCalculus:
    """Multiplications, nested commutators and the right action of a right connection."""

    def __init__(self, C: Connection, window: int = DEFAULT_WINDOW):
        if C.side != RIGHT:
            raise ValueError("needs a right connection")
        self.C, self.S, self.window = C, C.S, window
        self.T = TensorSpace(C.S.L)
        self.TQ = TensorSpace(C.S.L, C.P)
        self.D = D_delta(C)
        self.brackets = nu(C.S.X, self.T)
        self._J = None

    def mu(self, u: dict) -> Op:
        return Op(tensor_degree(self.T, u), lambda U: tensor_mul(self.TQ, u, U))

    def D_k(self, k: int) -> Op:
        return Op(1, lambda U: self.D.apply(U, k))

    def bracket(self, us: Sequence[dict]) -> dict:
        b = self.brackets.get(len(us))
        return normalize(b(*us)) if b else {}

    def nested(self, us: Sequence[dict], k: int | None = None) -> Op:
        return nested(self.D_k(len(us) if k is None else k), [self.mu(u) for u in us])

    def multiplication_by_bracket(self, us: Sequence[dict]) -> Op:
        return self.mu(self.bracket(us))

    def right_action(self, us: Sequence[dict], U: dict) -> dict:
        return self.nested(us, len(us) + 1)(U)

    def module_map(self, us: Sequence[dict], U: dict) -> dict:
        """rho = -R: the sign that turns the nested commutators into right module maps."""
        return vscale(self.right_action(us, U), -1)

    def action_curvature(self, us: Sequence[dict], U: dict) -> dict:
        """Right-convention curvature of rho along the brackets of S_A(L)."""
        degs = [tensor_degree(self.T, u) for u in us]
        return _two_sum(us, degs, self.bracket, self.module_map, U, 1, -1)

    def curvature_nested(self, us: Sequence[dict], U: dict) -> dict:
        k = len(us) + 1
        Jop = self._curv_op(k)
        # the component formula in terms of J(Delta) is minus D o D
        return vscale(nested(Op(2, lambda x: Jop.apply(x, k)), [self.mu(u) for u in us])(U), -1)

    def _curv_op(self, k: int):
        if self._J is None or self._J[0] < k:
            self._J = (k, curvature_tensor_operator(curvature(self.C, k)))
        return self._J[1]

    def product(self, u: dict, v: dict) -> dict:
        return tensor_mul(self.T, u, v)

    def test_tensors(self, max_degree: int) -> list[dict]:
        return [{b: 1} for b in self.TQ.basis(max_degree)]


def nested_comm_left(C: Connection, us: Sequence[dict]) -> Op:
    return LeftCalculus(C).nested(us)


def nested_comm_right(C: Connection, us: Sequence[dict]) -> Op:
    return RightCalculus(C).nested(us)


def lie_derivative(C: Connection, us: Sequence[dict], W: dict) -> dict:
    return LeftCalculus(C).lie_derivative(us, W)


def right_action(C: Connection, us: Sequence[dict], U: dict) -> dict:
    return RightCalculus(C).right_action(us, U)


def _calc(C: Connection, window: int):
    return LeftCalculus(C, window) if C.side == LEFT else RightCalculus(C, window)


def _probe_inputs(calc, max_arity: int) -> list[dict]:
    return calc.test_forms(max_arity) if isinstance(calc, LeftCalculus) else calc.test_tensors(max_arity)


def _act(calc, u: dict) -> Op:
    return calc.i(u) if isinstance(calc, LeftCalculus) else calc.mu(u)


def _rhs_op(calc, us) -> Op:
    if isinstance(calc, LeftCalculus):
        return calc.insertion_of_bracket(us)
    return calc.multiplication_by_bracket(us)


def check_nested_brackets(C: Connection, window: int = DEFAULT_WINDOW, max_k: int = 3,
                          test_arity: int | None = None, pool: Sequence[dict] | None = None) -> Report:
    """Nested commutators of D_k with insertions (left) or multiplications (right)
    against the bracket of S_A(L), on all tuples of total tensor length <= window."""
    calc = _calc(C, window)
    rep = Report("nested_brackets_" + C.side)
    xs = _probe_inputs(calc, window if test_arity is None else test_arity)
    for k in range(1, max_k + 1):
        for us in tensor_tuples(calc.T, k, window, pool):
            lhs, rhs = calc.nested(us), _rhs_op(calc, us)
            for x in xs:
                if lhs(x) != rhs(x):
                    rep.fail((k, _keys(us), next(iter(x))))
                    break
    return rep


def _keys(us) -> tuple:
    return tuple(tuple(sorted(u)) for u in us)


def check_reduction_step(calc, D: Op, u: dict, v: dict, xs: Iterable[dict]) -> bool:
    """[b_{uv}, D] = b_u [b_v, D] + (-)^{vD} [b_u, D] b_v for the action b of tensors."""
    uv = calc.product(u, v)
    bu, bv = _act(calc, u), _act(calc, v)
    lhs = comm(_act(calc, uv), D)
    vd = tensor_degree(calc.T, v) * D.degree
    rhs = Op(lhs.degree, lambda x: vadd(bu(comm(bv, D)(x)), comm(bu, D)(bv(x)), sgn(vd)))
    return all(lhs(x) == rhs(x) for x in xs)


def check_calculus(C: Connection, window: int = DEFAULT_WINDOW, max_k: int = 3,
                   test_arity: int = 2, pool: Sequence[dict] | None = None) -> dict[str, Report]:
    """Curvature of the induced connection along S_A(L), the insertion/multiplication
    rule and the product rule, on generator-tensor tuples."""
    calc = _calc(C, window)
    T = calc.T
    pool = list(pool) if pool is not None else generator_tensors(T)
    xs = _probe_inputs(calc, test_arity)
    left = isinstance(calc, LeftCalculus)
    L = calc.lie_derivative if left else calc.right_action
    curv = calc.lie_curvature if left else calc.action_curvature
    reps = {n: Report(n) for n in ("curvature", "insertion", "product")}
    deg = lambda u: tensor_degree(T, u)
    for n in range(0, max_k):
        for us in tensor_tuples(T, n, window, pool):
            for x in xs:
                if curv(us, x) != calc.curvature_nested(us, x):
                    reps["curvature"].fail((n, _keys(us), next(iter(x))))
                    break
            for u in pool:
                if sum(max(len(b[1]) for b in w) for w in us) + len(next(iter(u))[1]) > window:
                    continue
                b_u = _act(calc, u)
                chi = deg(u) * (sum(deg(w) for w in us) + 1)
                for x in xs:
                    lhs = L(us, b_u(x))
                    rhs = vadd(_act(calc, calc.bracket(list(us) + [u]))(x), b_u(L(us, x)), sgn(chi))
                    if lhs != normalize(rhs):
                        reps["insertion"].fail((n, _keys(us), tuple(u), next(iter(x))))
                        break
            if n >= 1:
                u1, rest = us[0], list(us[1:])
                for u in pool:
                    uu1 = calc.product(u, u1)
                    if not uu1:
                        continue
                    chi2 = deg(u1) * sum(deg(w) for w in rest)
                    for x in xs:
                        lhs = L([uu1] + rest, x)
                        rhs = vadd(vscale(_act(calc, u)(L([u1] + rest, x)), sgn(deg(u))),
                                   L([u] + rest, _act(calc, u1)(x)), sgn(chi2))
                        if lhs != normalize(rhs):
                            reps["product"].fail((n, _keys(us), tuple(u), next(iter(x))))
                            break
    return reps


def order_report(C: Connection, max_k: int = 3, test_arity: int = 3) -> dict[int, int | None]:
    """diff_order of each D_k, probing with the action of algebra basis elements and generators."""
    calc = _calc(C, DEFAULT_WINDOW)
    probes = [_act(calc, u) for u in generator_tensors(calc.T)]
    xs = _probe_inputs(calc, test_arity)
    return {k: diff_order(calc.D_k(k), probes, xs, k + 1) for k in range(1, max_k + 1)}


# BV-infinity families and derived brackets


class BVError(ValueError):
    def __init__(self, k: int, detail: str = ""):
        super().__init__(f"family condition fails at k={k}{': ' + detail if detail else ''}")
        self.k = k


class OperatorFamily:
    """Operators box_k of degree 1 on a graded commutative algebra B.

    ``mul(b)`` is left multiplication by b, ``deg(b)`` the degree of a
    homogeneous element, ``basis`` the test elements (a window when B is
    infinite-dimensional) and ``probes`` algebra generators for order checks.
    """

    def __init__(self, ops: dict[int, Op], mul: Callable[[dict], Op], one: dict,
                 deg: Callable[[dict], int], basis: Sequence[dict], probes: Sequence[dict],
                 name: str = ""):
        self.ops = {k: op for k, op in ops.items()}
        self.mul, self.one, self.deg = mul, one, deg
        self.basis, self.probes = list(basis), list(probes)
        self.name = name

    def box(self, k: int) -> Op:
        return self.ops.get(k, ZERO)

    def eq_bv_failures(self) -> list[int]:
        bad = []
        for k in sorted(self.ops):
            if self.box(k)(self.one):
                bad.append(k)
        top = 2 * max(self.ops, default=0)
        for k in range(2, top + 1):
            terms = [(self.box(i), self.box(k - i)) for i in range(1, k) if i in self.ops and k - i in self.ops]
            if not terms:
                continue
            for x in self.basis:
                tot: dict = {}
                for P, Q in terms:
                    vadd(tot, comm(P, Q)(x))
                if normalize(tot):
                    bad.append(k)
                    break
        return sorted(set(bad))

    def orders(self, bound: int | None = None) -> dict[int, int | None]:
        probes = [self.mul(b) for b in self.probes]
        return {k: diff_order(op, probes, self.basis, (bound or k + 1)) for k, op in self.ops.items()}


class DerivedBrackets:
    """Lambda_k(u_1..u_k) = [...[box_k, u_1]..., u_k] 1."""

    def __init__(self, fam: OperatorFamily):
        self.fam = fam

    @property
    def arities(self) -> list[int]:
        return sorted(self.fam.ops)

    def __call__(self, *us: dict) -> dict:
        k = len(us)
        if k not in self.fam.ops:
            return {}
        return nested(self.fam.box(k), [self.fam.mul(u) for u in us])(self.fam.one)

    def jacobiator_residuals(self, elements: Sequence[dict], max_n: int = 3) -> list:
        deg = self.fam.deg
        bad = []
        for n in range(1, max_n + 1):
            for idx in combinations_with_replacement(range(len(elements)), n):
                us = [elements[i] for i in idx]
                degs = [deg(u) for u in us]
                tot: dict = {}
                for i in range(1, n + 1):
                    if n - i + 1 not in self.fam.ops or i not in self.fam.ops:
                        continue
                    for first, rest, a in splits(degs, i):
                        b = self(*[us[t] for t in first])
                        if b:
                            vadd(tot, self(b, *[us[t] for t in rest]), a)
                if normalize(tot):
                    bad.append((n, idx))
        return bad

    def multiderivation_residuals(self, elements: Sequence[dict]) -> list:
        """Leibniz rule in the last slot on pairs of elements."""
        fam, deg = self.fam, self.fam.deg
        bad = []
        for k in self.arities:
            for idx in combinations_with_replacement(range(len(elements)), k - 1):
                us = [elements[i] for i in idx]
                e = 1 + sum(deg(u) for u in us)
                for v in elements:
                    for w in elements:
                        vw = fam.mul(v)(w)
                        lhs = self(*us, vw)
                        rhs = vadd(fam.mul(self(*us, v))(w) if self(*us, v) else {},
                                   fam.mul(v)(self(*us, w)), sgn(e * deg(v)))
                        if lhs != normalize(rhs):
                            bad.append((k, idx, elements.index(v), elements.index(w)))
        return bad


def derived_brackets(fam: OperatorFamily, check: bool = True) -> DerivedBrackets:
    """Higher derived brackets of a family; refuses when the family condition fails."""
    if check:
        bad = fam.eq_bv_failures()
        if bad:
            raise BVError(bad[0])
    return DerivedBrackets(fam)


def algebra_family(B: GradedAlgebra, ops: dict[int, dict], name: str = "") -> OperatorFamily:
    """Family on a finite-dimensional algebra; ops[k] are column dicts on B's basis."""
    from .mder import op_apply
    fam_ops = {k: Op(1, (lambda M: lambda x: op_apply(M, x))(M)) for k, M in ops.items()}
    mul = lambda b: Op(_alg_deg(B, b), lambda x: B.mul(b, x))
    basis = [{i: 1} for i in range(B.dim)]
    probes = [{i: 1} for i in range(B.dim) if i != B.unit]
    return OperatorFamily(fam_ops, mul, B.one(), lambda b: _alg_deg(B, b), basis, probes, name)


def _alg_deg(B: GradedAlgebra, b: dict) -> int:
    ds = {B.deg(i) for i, c in b.items() if c}
    if len(ds) > 1:
        raise ValueError("element is not homogeneous")
    return ds.pop() if ds else 0


def brackets_as_pinfinity(B: GradedAlgebra, db: DerivedBrackets, name: str = "") -> PInfinityOneAlgebra:
    """Tabulate derived brackets on a finite-dimensional algebra."""
    from .glinear import canonical_keys
    out = {}
    for k in db.arities:
        m = SymMultiMap(B.space, B.space, k, 1)
        for key in canonical_keys(B.space.degs, k):
            val = db(*[{i: 1} for i in key])
            if val:
                m.set(key, val)
        out[k] = m
    return PInfinityOneAlgebra(B, out, name)


def bv_from_right_module(C: Connection, window: int = DEFAULT_WINDOW) -> OperatorFamily:
    """The family D_k of a flat right connection in A, on S_A(L) with A-coefficients."""
    if C.side != RIGHT:
        raise ValueError("needs a right connection")
    if C.P.rank != 1 or C.P.gdegs[0] != 0:
        raise ValueError("coefficients must be the algebra itself")
    J = curvature(C, max(window, C.max_args + 1))
    if not J.is_zero():
        raise ValueError("right connection is not flat")
    calc = RightCalculus(C, window)
    T = calc.T
    ks = sorted(set(C.S.X.components) | {m + 1 for m in C.ops})
    ops = {k: calc.D_k(k) for k in ks}
    one = {(T.A.unit, (), 0): 1}
    basis = [{b: 1} for b in T.basis(window)]
    return OperatorFamily(ops, calc.mu, one, lambda u: tensor_degree(T, u), basis,
                          generator_tensors(T), name="right module")


def compare_with_induced(db: DerivedBrackets, S: SHLRAlgebra, window: int = DEFAULT_WINDOW,
                         max_k: int | None = None) -> Report:
    """Derived brackets against the extension of the structure to S_A(L)."""
    ind = induced_pinfinity(S, window)
    T, br = ind.T, ind.brackets
    rep = Report("derived_vs_induced")
    ks = sorted(set(br) | set(db.arities))
    if max_k is not None:
        ks = [k for k in ks if k <= max_k]
    for k in ks:
        for us in tensor_tuples(T, k, window):
            a = db(*us)
            b = normalize(br[k](*us)) if k in br else {}
            if a != b:
                rep.fail((k, _keys(us)))
    return rep
