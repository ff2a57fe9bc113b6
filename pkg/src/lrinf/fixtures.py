"""Deterministic desk-scale structures for tests and the command line.

Every fixture is a :class:`Fixture` bundle.  ``validate()`` runs the
declared validator suite and returns one report per validator name.
Randomness always goes through ``random.Random(seed)`` (Mersenne Twister),
so a seed gives the same structure on every platform.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any

from .conn import (LEFT, AlgebraExtension, Connection, LeftConnection,
                   RightConnection, anchor_connection, check_action, curvature)
from .galgebra import FreeModule, GradedAlgebra, Report, extend_multiderivation, trivial_module
from .glinear import GradedSpace, SymMultiMap, canonical_keys
from .mder import FormalMultiderivation, ModMultiderivation
from .sbv import OperatorFamily, algebra_family
from .shlr import PInfinityOneAlgebra, SHLRAlgebra, decalage_convert

COEFFS = (-2, -1, 0, 1, 2)


@dataclass
class Fixture:
    name: str
    params: dict = field(default_factory=dict)
    note: str = ""
    S: SHLRAlgebra | None = None
    connection: Connection | None = None
    flat: bool = False
    family_algebra: GradedAlgebra | None = None
    family_ops: dict | None = None
    pinf: PInfinityOneAlgebra | None = None
    extension: AlgebraExtension | None = None
    intended: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def family(self) -> OperatorFamily | None:
        if self.family_ops is None:
            return None
        return algebra_family(self.family_algebra, self.family_ops, self.name)

    def validate(self) -> dict[str, Report]:
        out: dict[str, Report] = {}
        if self.S is not None:
            out.update(self.S.validate())
        if self.connection is not None:
            out["subordination"] = self.connection.subordination()
            if self.flat and self.extension is None:
                rep = Report("flatness")
                if out["subordination"].ok:
                    J = curvature(self.connection)
                    for m, table in sorted(J.ops.items()):
                        for key in sorted(table):
                            rep.fail((m, key))
                else:
                    rep.skipped = True
                out["flatness"] = rep
        if self.extension is not None:
            acts = check_action(self.connection, self.extension)
            out["action_derivation"] = acts["derivation"]
            out["action_flat"] = acts["flat"]
        if self.pinf is not None:
            for k, r in self.pinf.validate().items():
                out["pinf_" + k] = r
        if self.family_ops is not None:
            fam = self.family
            rep = Report("family_condition")
            for k in fam.eq_bv_failures():
                rep.fail(k)
            out["family_condition"] = rep
            rep = Report("family_orders")
            for k, o in sorted(fam.orders().items()):
                if o is None or o > k:
                    rep.fail((k, o))
            out["family_orders"] = rep
        return out

    def failing(self) -> list[str]:
        return sorted(n for n, r in self.validate().items() if not r.ok)


# building blocks


def _linf(V: GradedSpace, brackets: dict[int, SymMultiMap], name: str, cap: int = 3):
    from .shlr import LInfinityOneAlgebra
    return LInfinityOneAlgebra(V, brackets, cap=cap, name=name)


def _sl2(hf: int = -2) -> SHLRAlgebra:
    V = GradedSpace((("e", 0), ("f", 0), ("h", 0)))
    l2 = SymMultiMap(V, V, 2, 0, {(2, 0): {0: 2}, (2, 1): {1: hf}, (0, 1): {2: 1}}, skew=True)
    S = decalage_convert(V, {2: l2}, cap=3)
    S.name = "sl2_shifted"
    return S


def _heisenberg() -> SHLRAlgebra:
    V = GradedSpace((("x", 0), ("y", 0), ("z", 0)))
    lam = SymMultiMap(V, V, 2, 0, {(0, 1): {2: 1}}, skew=True)
    S = decalage_convert(V, {2: lam}, cap=3)
    S.name = "heisenberg_shifted"
    return S


def _trivial_right(S: SHLRAlgebra) -> Connection:
    return RightConnection.from_generators(S, trivial_module(S.A), {})


def abelian(r: int = 2, degrees: tuple | list | None = None) -> Fixture:
    degrees = list(degrees) if degrees is not None else [0] * r
    if len(degrees) != r:
        raise ValueError("need one degree per generator")
    V = GradedSpace(tuple((f"v{i}", int(d)) for i, d in enumerate(degrees)))
    S = _linf(V, {}, "abelian")
    return Fixture("abelian", {"r": r, "degrees": degrees}, "zero brackets on a graded vector space",
                   S=S, connection=_trivial_right(S), flat=True)


def sl2_shifted(hf: int = -2) -> Fixture:
    S = _sl2(hf)
    return Fixture("sl2_shifted", {}, "decalage of sl2 over the rationals, [h,e]=2e, [h,f]=-2f, [e,f]=h",
                   S=S, connection=_trivial_right(S), flat=True)


def heisenberg_shifted() -> Fixture:
    S = _heisenberg()
    return Fixture("heisenberg_shifted", {}, "decalage of the Heisenberg algebra [x,y]=z",
                   S=S, connection=_trivial_right(S), flat=True)


def _exterior2() -> GradedAlgebra:
    return GradedAlgebra.exterior([("a", 1), ("b", -1)])


def exterior_bv(perturb: bool = False) -> Fixture:
    """Odd algebra on a (degree 1) and b (degree -1); the BV operator sends a*b to a."""
    B = _exterior2()
    ops = {2: {3: {1: 1}}}
    if perturb:
        ops[1] = {0: {1: 1}, 2: {3: 1}}   # multiplication by a
    return Fixture("exterior_bv", {}, "second-order BV operator on a two-generator odd algebra",
                   family_algebra=B, family_ops=ops)


def gerstenhaber_p1(perturb: bool = False) -> Fixture:
    """The bracket derived from exterior_bv as a P-infinity[1] algebra with Lambda_2 only."""
    B = _exterior2()
    lam = SymMultiMap(B.space, B.space, 2, 1, {(1, 2): {1: 1}, (2, 3): {3: 0 if perturb else -1}})
    return Fixture("gerstenhaber_p1", {}, "Gerstenhaber algebra (G, Lambda=Lambda_2)",
                   pinf=PInfinityOneAlgebra(B, {2: lam}, "gerstenhaber_p1"))


def kahler_base() -> SHLRAlgebra:
    from .shlr import kahler_lr
    P = GradedAlgebra.exterior([("t", 1), ("u", -1)])
    lam = extend_multiderivation(P, 2, 0, {(1, 2): {0: 1}}, skew=True)
    S = kahler_lr(P, {2: lam})
    S.name = "kahler"
    return S


def kahler(perturb: bool = False) -> Fixture:
    """Kaehler differentials of a Poisson exterior algebra, with the right module Delta = -sigma."""
    S = kahler_base()
    vals = {}
    if perturb:
        # Delta(dt | 1) = t keeps subordination but spoils flatness
        vals = {1: {(0,): {0: {(1, 0): 1}}}}
    C = RightConnection.from_generators(S, trivial_module(S.A), vals)
    return Fixture("kahler", {}, "Kaehler LR algebra of a Poisson algebra with its flat right module",
                   S=S, connection=C, flat=True)


def dg_higher() -> Fixture:
    """Rank-2 structure with nonzero components in arities 1, 2 and 3.

    A = Lambda[theta] (theta of degree -1) with sigma_1(theta) = 1;
    L = A e + A f with X_2(e, e) = f and X_3(e, e, e) = f.
    """
    A = GradedAlgebra.exterior([("theta", -1)])
    L = FreeModule(A, (("e", 0), ("f", 1)))
    c1 = ModMultiderivation(L, 1, 1)
    c1.set_sigma((), {1: {0: 1}})
    c2 = ModMultiderivation(L, 2, 1)
    c2.set_X((0, 0), {(0, 1): 1})
    c3 = ModMultiderivation(L, 3, 1)
    c3.set_X((0, 0, 0), {(0, 1): 1})
    S = SHLRAlgebra(L, FormalMultiderivation(L, 1, {1: c1, 2: c2, 3: c3}, cap=3), "dg_higher")
    return Fixture("dg_higher", {}, "DG coefficients tensored with brackets of arities 2 and 3",
                   S=S, connection=anchor_connection(S, LEFT), flat=False)


def heisenberg_action(perturb: bool = False) -> Fixture:
    """Heisenberg acting on K[w]/(w^2) by x.w = w (and z.w = w when perturbed)."""
    H = _heisenberg()
    B = GradedAlgebra.truncated_polynomial("w", 0, 2)
    ext = AlgebraExtension(H.A, B)
    vals = {(0,): {1: {(0, 1): 1}}}
    if perturb:
        vals[(2,)] = {1: {(0, 1): 1}}
    C = LeftConnection.from_generators(H, ext.M, {1: vals})
    return Fixture("heisenberg_action", {}, "action of the shifted Heisenberg algebra on K[w]/(w^2)",
                   S=H, connection=C, extension=ext)


def random_vec(rng: random.Random, basis) -> dict:
    out = {}
    for b in basis:
        c = rng.choice(COEFFS)
        if c:
            out[b] = c
    return out


def random_connection(seed: int = 0, side: str = LEFT, base: str = "kahler", max_args: int = 2) -> Fixture:
    """Connection with coefficients from {-2..2} on generators of M = A p + A q (p even, q odd)."""
    rng = random.Random(seed)
    S = _base(base)
    M = FreeModule(S.A, (("p", 0), ("q", 1)))
    vals: dict = {}
    for m in range(max_args + 1):
        for key in canonical_keys(S.L.gdegs, m):
            d = 1 + sum(S.L.gdegs[g] for g in key)
            vals.setdefault(m, {})[key] = {
                g: random_vec(rng, [b for b in M.kbasis if M.deg(b) == M.gdegs[g] + d]) for g in range(M.rank)}
    cls = LeftConnection if side == LEFT else RightConnection
    C = cls.from_generators(S, M, vals)
    return Fixture("random_connection", {"seed": seed, "side": side, "base": base}, "seeded random connection",
                   S=S, connection=C, flat=False)


def _base(name: str) -> SHLRAlgebra:
    if name == "kahler":
        return kahler_base()
    if name == "sl2_shifted":
        return _sl2()
    if name == "heisenberg_shifted":
        return _heisenberg()
    if name == "dg_higher":
        return dg_higher().S
    raise KeyError(f"unknown base {name!r}")


PERTURBATIONS = {
    "sl2_shifted": ("jacobiator", lambda: sl2_shifted(hf=-3)),
    "kahler": ("flatness", lambda: kahler(perturb=True)),
    "exterior_bv": ("family_condition", lambda: exterior_bv(perturb=True)),
    "gerstenhaber_p1": ("pinf_multiderivation", lambda: gerstenhaber_p1(perturb=True)),
    "heisenberg_action": ("action_flat", lambda: heisenberg_action(perturb=True)),
}


def perturbed(name: str) -> Fixture:
    """A negative control that fails exactly one validator of the named fixture."""
    if name not in PERTURBATIONS:
        raise KeyError(f"no perturbation for {name!r}")
    which, make = PERTURBATIONS[name]
    f = make()
    f.name = f"perturbed_{name}"
    f.intended = which
    f.params = {"of": name}
    return f


BUILDERS = {
    "abelian": abelian,
    "sl2_shifted": sl2_shifted,
    "heisenberg_shifted": heisenberg_shifted,
    "exterior_bv": exterior_bv,
    "gerstenhaber_p1": gerstenhaber_p1,
    "kahler": kahler,
    "dg_higher": dg_higher,
    "heisenberg_action": heisenberg_action,
    "random_connection": random_connection,
}

NAMED = ("abelian", "sl2_shifted", "heisenberg_shifted", "exterior_bv", "gerstenhaber_p1",
         "kahler", "dg_higher", "heisenberg_action")


def fixture(name: str, params: dict | None = None) -> Fixture:
    params = dict(params or {})
    if name.startswith("perturbed_"):
        return perturbed(name[len("perturbed_"):])
    if name == "perturbed":
        return perturbed(params["of"])
    if name not in BUILDERS:
        raise KeyError(f"unknown fixture {name!r}")
    if name == "abelian" and "degrees" in params:
        params["degrees"] = list(params["degrees"])
    return BUILDERS[name](**params)
