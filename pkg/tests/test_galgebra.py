from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from helpers import koszul_by_swaps
from lrinf.galgebra import (FormSpace, FreeModule, GradedAlgebra, TensorSpace, form_product,
                            insert, tensor_mu, tensor_mul, trivial_module, validate_algebra)
from lrinf.glinear import GradedSpace, normalize, vadd
from lrinf.sbv import Op, comm, diff_order, generator_tensors
from lrinf.signs import sgn


def _setup():
    A = GradedAlgebra.exterior([("x", 1)])
    L = FreeModule(A, (("e", 0), ("f", 1)))
    return A, L, FormSpace(L, trivial_module(A)), TensorSpace(L)


def _forms(F, max_arity):
    return [{b: 1} for k in range(max_arity + 1) for b in F.basis(k)]


def _fdeg(F, w):
    return F.deg(next(iter(w)))


def test_algebra_examples():
    assert validate_algebra(GradedAlgebra.exterior([("x", 1)])).ok
    assert validate_algebra(GradedAlgebra.ground_field()).ok
    assert validate_algebra(GradedAlgebra.truncated_polynomial("w", 2, 4)).ok
    E = GradedAlgebra.exterior([("a", 1), ("b", -1), ("c", 3)])
    assert validate_algebra(E).ok and E.dim == 8
    with pytest.raises(ValueError):
        GradedAlgebra.exterior([("a", 2)])
    with pytest.raises(ValueError):
        GradedAlgebra.truncated_polynomial("w", 1, 3)


def test_associativity_violation_is_reported():
    V = GradedSpace((("1", 0), ("a", 0), ("b", 0)))
    table = {(0, 0): {0: 1}, (0, 1): {1: 1}, (0, 2): {2: 1},
             (1, 1): {2: 1}, (1, 2): {1: 1}}
    rep = validate_algebra(GradedAlgebra(V, table))
    assert not rep.ok
    assert ("associativity", 1, 1, 2) in rep.failures


def test_module_action_laws():
    A = GradedAlgebra.exterior([("x", 1), ("y", -1)])
    M = FreeModule(A, (("p", 0), ("q", 1)))
    for b in M.kbasis:
        assert M.act(A.one(), {b: 1}) == {b: 1}
        for i in range(A.dim):
            for j in range(A.dim):
                lhs = M.act({i: 1}, M.act({j: 1}, {b: 1}))
                rhs = M.act(A.mul_basis(i, j), {b: 1})
                assert normalize(lhs) == normalize(rhs)


def _product_by_permutations(F, w, W, key):
    """(w W)(xi) as the full permutation sum over all orderings of the arguments."""
    A = F.A
    degs = [F.L.gdegs[g] for g in key]
    n = len(key)
    out: dict = {}
    for (kw, pw), c in w.items():
        for (kW, pW), d in W.items():
            k = len(kw)
            if k + len(kW) != n:
                continue
            dW = F.deg((kW, pW))
            for p in permutations(range(1, n + 1)):
                first = [key[i - 1] for i in p[:k]]
                rest = [key[i - 1] for i in p[k:]]
                a = koszul_by_swaps(p, degs) * sgn(dW * sum(F.L.gdegs[g] for g in first))
                x = F.value({(kw, pw): c}, first).get(pw, 0) if first or not kw else 0
                y = F.value({(kW, pW): d}, rest).get(pW, 0) if rest or not kW else 0
                if x and y:
                    for r, z in A.mul_basis(pw[0], pW[0]).items():
                        vadd(out, {((tuple(key)), (r, 0)): 1},
                             Fraction(a * x * y * z, factorial(k) * factorial(n - k)))
    return normalize(out)


def test_form_product_matches_permutation_sum():
    A, L, F, T = _setup()
    forms = _forms(F, 2)
    for w in forms:
        for W in forms:
            got = form_product(F, F, w, W)
            n = len(next(iter(w))[0]) + len(next(iter(W))[0])
            want: dict = {}
            for key in F.keys(n):
                vadd(want, _product_by_permutations(F, w, W, key))
            assert normalize(got) == normalize(want)


def test_form_product_examples():
    A, L, F, T = _setup()
    one = {((), (A.unit, 0)): 1}
    w = {((0,), (A.unit, 0)): 1}
    assert form_product(F, F, one, w) == w
    # two 1-forms on the even generator: (w w')(e, e) = 2 w(e) w'(e)
    w2 = {((0,), (1, 0)): 3}
    assert normalize(form_product(F, F, w, w2)) == {((0, 0), (1, 0)): 6}
    # a 1-form on the odd generator squares to zero
    eps = {((1,), (A.unit, 0)): 1}
    assert normalize(form_product(F, F, eps, eps)) == {}


def test_form_product_associative_and_commutative():
    A = GradedAlgebra.exterior([("x", 1)])
    for gens in ((("e", 0), ("f", 1)), (("e", 1), ("f", -2))):
        L = FreeModule(A, gens)
        F = FormSpace(L, trivial_module(A))
        forms = _forms(F, 2)
        for u in forms:
            for v in forms:
                uv = form_product(F, F, u, v)
                vu = form_product(F, F, v, u)
                assert normalize(uv) == normalize({k: sgn(_fdeg(F, u) * _fdeg(F, v)) * c for k, c in vu.items()})
                for w in forms:
                    lhs = form_product(F, F, uv, w)
                    rhs = form_product(F, F, u, form_product(F, F, v, w))
                    assert normalize(lhs) == normalize(rhs)


def _insert_by_definition(T, F, m, W):
    """(i_m W)(xi) = (-)^{m W} W(m, xi) on generator tuples xi."""
    md = T.mdeg(m)
    out: dict = {}
    for (key, p), c in W.items():
        if len(key) < len(m):
            continue
        r = len(key) - len(m)
        s = sgn(md * F.deg((key, p)))
        for xi in F.keys(r):
            v = F.value({(key, p): c}, tuple(m) + tuple(xi))
            for q, x in v.items():
                vadd(out, {(xi, q): 1}, s * x)
    return normalize(out)


def test_insert_matches_definition():
    A, L, F, T = _setup()
    for k in range(3):
        for m in T.monomials(k):
            u = {(A.unit, m, 0): 1}
            for W in _forms(F, 3):
                assert normalize(insert(T, F, u, W)) == _insert_by_definition(T, F, m, W)


def test_insert_examples():
    A, L, F, T = _setup()
    W = {((0,), (1, 0)): 2}
    assert insert(T, F, {(A.unit, (), 0): 1}, W) == W
    assert normalize(insert(T, F, {(A.unit, (0,), 0): 1}, W)) == {((), (1, 0)): 2}
    # too short forms give zero
    assert insert(T, F, {(A.unit, (0, 0), 0): 1}, W) == {}


def test_insertion_is_multiplicative():
    A, L, F, T = _setup()
    gens = generator_tensors(T)
    for u in gens:
        for v in gens:
            uv = tensor_mul(T, u, v)
            for W in _forms(F, 3):
                lhs = insert(T, F, uv, W)
                rhs = insert(T, F, u, insert(T, F, v, W))
                assert normalize(lhs) == normalize(rhs)


def test_tensor_mu_examples():
    A, L, F, T = _setup()
    U = {(A.unit, (0,), 0): 1}
    assert tensor_mu(F, T, {((), (A.unit, 0)): 1}, U) == U
    w = {((0,), (1, 0)): 1}
    assert normalize(tensor_mu(F, T, w, U)) == {(1, (), 0): 1}
    assert tensor_mu(F, T, {((0, 0), (1, 0)): 1}, U) == {}


def test_contraction_of_product_is_composite():
    A, L, F, T = _setup()
    forms = _forms(F, 2)
    for w in forms:
        for v in forms:
            p = form_product(F, F, w, v)
            for b in T.basis(3):
                U = {b: 1}
                assert normalize(tensor_mu(F, T, p, U)) == normalize(tensor_mu(F, T, w, tensor_mu(F, T, v, U)))


def _tdeg(T, u):
    return T.deg(next(iter(u)))


def test_actions_commute():
    A, L, F, T = _setup()
    basis = [{b: 1} for b in T.basis(3)]
    forms = _forms(F, 3)
    for u in basis:
        for v in basis:
            if len(next(iter(u))[1]) + len(next(iter(v))[1]) > 3:
                continue
            mu_uv = comm(Op(_tdeg(T, u), lambda U, u=u: tensor_mul(T, u, U)),
                         Op(_tdeg(T, v), lambda U, v=v: tensor_mul(T, v, U)))
            i_uv = comm(Op(_tdeg(T, u), lambda W, u=u: insert(T, F, u, W)),
                        Op(_tdeg(T, v), lambda W, v=v: insert(T, F, v, W)))
            for U in basis:
                assert not mu_uv(U)
            for W in forms:
                assert not i_uv(W)


def test_actions_are_differential_operators_of_their_arity():
    A, L, F, T = _setup()
    forms = _forms(F, 3)
    mult = [Op(_fdeg(F, w), lambda W, w=w: form_product(F, F, w, W)) for w in _forms(F, 1)]
    for k in range(3):
        for m in T.monomials(k):
            u = {(A.unit, m, 0): 1}
            op = Op(T.mdeg(m), lambda W, u=u: insert(T, F, u, W))
            assert diff_order(op, mult, forms, 3) == k
    tensors = [{b: 1} for b in T.basis(3)]
    tmult = [Op(_tdeg(T, u), lambda U, u=u: tensor_mul(T, u, U)) for u in generator_tensors(T)]
    for k in range(3):
        for key in F.keys(k):
            w = {(key, (A.unit, 0)): 1}
            op = Op(_fdeg(F, w), lambda U, w=w: tensor_mu(F, T, w, U))
            assert diff_order(op, tmult, tensors, 3) == k


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from((-1, 1, 3)), min_size=1, max_size=3))
def test_exterior_algebras_validate(degs):
    A = GradedAlgebra.exterior([(f"g{i}", d) for i, d in enumerate(degs)])
    assert validate_algebra(A).ok
    assert A.dim == 2 ** len(degs)
