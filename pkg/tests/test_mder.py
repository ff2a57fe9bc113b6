from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_fm, random_symmap, shapes
from lrinf.fixtures import fixture
from lrinf.galgebra import FreeModule, GradedAlgebra, TensorSpace, tensor_mul
from lrinf.glinear import GradedSpace, canonical_keys, gbracket, normalize, vadd
from lrinf.mder import (FormalMultiderivation, FormDerivation, ModMultiderivation, basis_forms,
                        eta, eta_inverse, fm_add, forms_A, mder_bracket, nu, op_apply,
                        op_commutator)
from lrinf.signs import sgn

EXT1 = GradedAlgebra.exterior([("x", 1)])


def test_component_rejects_bad_tables():
    L = FreeModule(EXT1, (("e", 0), ("f", 1)))
    c = ModMultiderivation(L, 2, 0)
    with pytest.raises(ValueError):
        c.set_X((0,), {(0, 0): 1})
    with pytest.raises(ValueError):
        c.set_X((1, 1), {(0, 0): 1})
    with pytest.raises(ValueError):
        c.set_X((0, 0), {(0, 1): 1})
    with pytest.raises(ValueError):
        c.set_sigma((0, 0), {})
    with pytest.raises(ValueError):
        ModMultiderivation(L, 0, 0)


def test_sigma_part_on_last_slot():
    L = FreeModule(EXT1, (("e", 0), ("f", 1)))
    # X table zero, sigma(e) sends x to x
    c = ModMultiderivation(L, 2, 0, sigma={(0,): {1: {1: 1}}})
    assert normalize(c({(0, 0): 1}, {(1, 1): 1})) == {(1, 1): 1}
    assert normalize(c({(0, 0): 1}, {(0, 1): 1})) == {}


def test_ground_field_is_multilinear_evaluation():
    K = GradedAlgebra.ground_field()
    L = FreeModule(K, (("a", 0), ("b", 1), ("c", 2)))
    V = GradedSpace(L.generators)
    rng = random.Random(3)
    for k in (1, 2, 3):
        for d in (-1, 0, 1):
            m = random_symmap(rng, V, k, d)
            c = ModMultiderivation(L, k, d, X={key: {(0, j): x for j, x in v.items()}
                                                 for key, v in m.table.items()})
            for key in V.keys(k):
                for perm in ((0, 1, 2)[:k], (0, 1, 2)[:k][::-1]):
                    args = [key[i] for i in perm]
                    got = c(*[{(0, g): 1} for g in args])
                    want = m(*[{g: 1} for g in args])
                    assert normalize(got) == {(0, j): x for j, x in want.items()}


def test_rank_one_hand_expansion():
    # even generator, degree 0: X(e) = mu e, sigma(x) = lam x
    L = FreeModule(EXT1, (("e", 0),))
    c = ModMultiderivation(L, 1, 0, X={(0,): {(0, 0): 5}}, sigma={(): {1: {1: 3}}})
    assert normalize(c({(1, 0): 1})) == {(1, 0): 8}
    # degree -1: X(e) = 0, sigma(x) = 1, so X(x e) = e
    c = ModMultiderivation(L, 1, -1, sigma={(): {1: {0: 1}}})
    assert normalize(c({(1, 0): 1})) == {(0, 0): 1}
    # odd generator, degree 1: X(f) = x f, sigma = 0, X(x f) = -x x f = 0
    L = FreeModule(EXT1, (("f", 1),))
    c = ModMultiderivation(L, 1, 1, X={(0,): {(1, 0): 1}})
    assert normalize(c({(0, 0): 1})) == {(1, 0): 1}
    assert normalize(c({(1, 0): 1})) == {}


def test_component_leibniz_in_last_slot():
    rng = random.Random(11)
    for L in shapes():
        A = L.A
        for trial in range(4):
            X = random_fm(rng, L, rng.choice((-1, 0, 1)), [1, 2])
            for k, c in X.components.items():
                assert c.check().ok
                for key in canonical_keys(L.gdegs, k - 1):
                    head = [{(A.unit, g): 1} for g in key]
                    hd = X.degree + sum(L.gdegs[g] for g in key)
                    for a in range(A.dim):
                        for b in L.kbasis:
                            lhs = c(*head, L.act({a: 1}, {b: 1}))
                            sig = c.sigma_apply(tuple((A.unit, g) for g in key), {a: 1})
                            rhs = vadd(L.act(sig, {b: 1}),
                                       L.act({a: 1}, c(*head, {b: 1})), sgn(hd * A.degs[a]))
                            assert normalize(lhs) == normalize(rhs)


def test_bracket_of_even_with_itself_vanishes():
    rng = random.Random(5)
    for L in shapes():
        for trial in range(3):
            X = random_fm(rng, L, 0, [1, 2])
            assert mder_bracket(X, X).is_zero()


def test_bracket_over_ground_field_is_gbracket():
    K = GradedAlgebra.ground_field()
    L = FreeModule(K, (("a", 0), ("b", 1), ("c", -1)))
    V = GradedSpace(L.generators)
    rng = random.Random(8)
    lift = lambda m: FormalMultiderivation(L, m.degree, {m.arity: ModMultiderivation(
        L, m.arity, m.degree, X={key: {(0, j): x for j, x in v.items()} for key, v in m.table.items()})})
    for trial in range(10):
        H, G = random_symmap(rng, V, 2, rng.choice((-1, 0, 1))), random_symmap(rng, V, 2, rng.choice((-1, 0, 1)))
        assert mder_bracket(lift(H), lift(G)) == lift(gbracket(H, G))


def test_arity_one_bracket_is_commutator():
    rng = random.Random(9)
    for L in shapes():
        for trial in range(3):
            X = random_fm(rng, L, rng.choice((-1, 0, 1)), [1])
            Y = random_fm(rng, L, rng.choice((-1, 0, 1)), [1])
            B = mder_bracket(X, Y).get(1)
            x, y = X.get(1), Y.get(1)
            s = sgn(X.degree * Y.degree)
            for b in L.kbasis:
                want = vadd(x(y({b: 1})), y(x({b: 1})), -s)
                assert normalize(B({b: 1})) == normalize(want)
            sx, sy = x.sigma_on(()), y.sigma_on(())
            assert B.sigma_on(()) == normalize_op(op_commutator(sx, X.degree, sy, Y.degree))


def normalize_op(M):
    return {i: c for i, c in ((i, normalize(c)) for i, c in M.items()) if c}


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_bracket_antisymmetry_and_jacobi(seed):
    rng = random.Random(seed)
    L = rng.choice(shapes())
    X, Y, Z = (random_fm(rng, L, rng.choice((-1, 0, 1)), rng.sample([1, 2], rng.randint(1, 2)))
               for _ in range(3))
    s = sgn(X.degree * Y.degree)
    assert mder_bracket(X, Y) == fm_add(FormalMultiderivation(L, X.degree + Y.degree), mder_bracket(Y, X), -s)
    lhs = mder_bracket(X, mder_bracket(Y, Z))
    rhs = fm_add(mder_bracket(mder_bracket(X, Y), Z), mder_bracket(Y, mder_bracket(X, Z)), s)
    assert lhs == rhs


# forms side


def test_eta_on_functions_is_anchor():
    rng = random.Random(2)
    for L in shapes():
        A = L.A
        X = random_fm(rng, L, rng.choice((-1, 0, 1)), [1])
        D = eta(X)
        sig = X.get(1).sigma_on(())
        for a in range(A.dim):
            got = D.apply({((), (a, 0)): 1})
            want = {((), (j, 0)): c for j, c in op_apply(sig, {a: 1}).items()}
            assert normalize(got) == normalize(want)


def test_eta_of_zero_is_zero():
    L = shapes()[0]
    D = eta(FormalMultiderivation(L, 1))
    for w in basis_forms(forms_A(L), 2):
        assert normalize(D.apply(w)) == {}
    assert eta_inverse(D).is_zero()


def test_eta_of_sl2_bracket_is_ce_differential():
    S = fixture("sl2_shifted").S
    L, A = S.L, S.A
    F = forms_A(L)
    D = eta(S.X)
    X2 = S.X.get(2)
    for j in range(L.rank):
        dw = D.apply({((j,), (A.unit, 0)): 1})
        for key in canonical_keys(L.gdegs, 2):
            assert F.value(dw, key).get((A.unit, 0), 0) == X2.X_on(key).get((A.unit, j), 0)


def test_eta_inverse_round_trips():
    assert eta_inverse(eta(fixture("sl2_shifted").S.X)) == fixture("sl2_shifted").S.X
    rng = random.Random(4)
    for L in shapes():
        for trial in range(3):
            X = random_fm(rng, L, rng.choice((-1, 0, 1)), [1, 2])
            assert eta_inverse(eta(X)) == X


def test_eta_inverse_rejects_non_derivations():
    L = shapes()[0]
    F = forms_A(L)
    D = FormDerivation(F, 0, {1: lambda w: dict(w)})
    with pytest.raises(ValueError):
        eta_inverse(D)


def test_eta_preserves_brackets():
    rng = random.Random(6)
    L = shapes()[0]
    F = forms_A(L)
    for trial in range(4):
        X, Y = (random_fm(rng, L, rng.choice((0, 1)), [1, 2]) for _ in range(2))
        eB, eX, eY = eta(mder_bracket(X, Y)), eta(X), eta(Y)
        s = sgn(X.degree * Y.degree)
        for w in basis_forms(F, 2):
            assert normalize(eB(w)) == normalize(vadd(eX(eY(w)), eY(eX(w)), -s))


# symmetric algebra side


def test_nu_restricts_to_the_tables():
    rng = random.Random(12)
    for L in shapes():
        A = L.A
        T = TensorSpace(L)
        X = random_fm(rng, L, rng.choice((-1, 0, 1)), [1, 2])
        for k, H in nu(X, T).items():
            c = X.get(k)
            for key in canonical_keys(L.gdegs, k):
                assert H.eval_basis(tuple((A.unit, (g,), 0) for g in key)) == T.from_module(c.X_on(key))
            for key in canonical_keys(L.gdegs, k - 1):
                for a in range(A.dim):
                    got = H.eval_basis(tuple((A.unit, (g,), 0) for g in key) + ((a, (), 0),))
                    want = T.from_algebra(c.sigma_apply(tuple((A.unit, g) for g in key), {a: 1}))
                    assert normalize(got) == normalize(want)


def test_nu_is_a_derivation_in_the_last_slot():
    rng = random.Random(13)
    for L in shapes()[:3]:
        A = L.A
        T = TensorSpace(L)
        atoms = [{(a, (), 0): 1} for a in range(A.dim)] + [{(A.unit, (g,), 0): 1} for g in range(L.rank)]
        deg = lambda u: T.deg(next(iter(u)))
        X = random_fm(rng, L, rng.choice((-1, 0, 1)), [2])
        H = nu(X, T)[2]
        for w in atoms:
            for u in atoms:
                for v in atoms:
                    lhs = H(w, tensor_mul(T, u, v))
                    rhs = vadd(tensor_mul(T, H(w, u), v),
                               tensor_mul(T, u, H(w, v)), sgn((X.degree + deg(w)) * deg(u)))
                    assert normalize(lhs) == normalize(rhs)
