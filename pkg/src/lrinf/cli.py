"""Structure files and the ``lrinf`` command line.

A structure file is JSON with a ``schema`` field.  Scalars are integers or
strings ``"p/q"``; every table refers to declared basis names.  Exit codes:
0 valid, 1 invalid, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

from .conn import (LEFT, RIGHT, AlgebraExtension, LeftConnection, RightConnection,
                   curvature, D_nabla)
from .fixtures import Fixture, fixture
from .galgebra import FreeModule, GradedAlgebra
from .glinear import GradedSpace, SymMultiMap, canonical_keys, normalize
from .linalg import rank
from .mder import FormalMultiderivation, ModMultiderivation, eta
from .sbv import (BVError, bv_from_right_module, derived_brackets, tensor_tuples)
from .shlr import PInfinityOneAlgebra, SHLRAlgebra, jacobiator

SCHEMA = "lrinf-structure/1"


class InputError(Exception):
    pass


# scalars


def fmt_scalar(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def parse_scalar(s) -> Fraction | int:
    if isinstance(s, bool):
        raise InputError(f"bad scalar {s!r}")
    if isinstance(s, int):
        return s
    if not isinstance(s, str):
        raise InputError(f"bad scalar {s!r}")
    try:
        c = Fraction(s.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"bad scalar {s!r}") from None
    return int(c) if c.denominator == 1 else c


def _vec_doc(v: dict, names) -> dict:
    return {names[i]: fmt_scalar(c) for i, c in sorted(normalize(v).items())}


def _matrix_doc(M: dict, src, dst) -> dict:
    return {src[i]: _vec_doc(col, dst) for i, col in sorted(M.items()) if normalize(col)}


# export


def algebra_doc(A: GradedAlgebra) -> dict:
    names = A.space.names
    prod = [[names[i], names[j], _vec_doc(v, names)] for (i, j), v in sorted(A.product.table.items())]
    return {"basis": [[n, d] for n, d in A.space.basis], "unit": names[A.unit], "product": prod}


def generators_doc(M: FreeModule) -> list:
    return [[n, d] for n, d in M.generators]


def _kindex(M: FreeModule) -> tuple[dict, list]:
    names = list(M.space.names)
    return {b: i for i, b in enumerate(M.kbasis)}, names


def _kb_vec_doc(v: dict, M: FreeModule) -> dict:
    idx, names = _kindex(M)
    return {names[idx[b]]: fmt_scalar(c) for b, c in sorted(normalize(v).items())}


def _kb_matrix_doc(Op: dict, M: FreeModule) -> dict:
    idx, names = _kindex(M)
    return {names[idx[b]]: _kb_vec_doc(col, M) for b, col in sorted(Op.items()) if normalize(col)}


def structure_doc(S: SHLRAlgebra) -> list:
    L, A = S.L, S.A
    gn = [n for n, _ in L.generators]
    an = A.space.names
    out = []
    for k, c in sorted(S.X.components.items()):
        X = [{"args": [gn[g] for g in key], "value": _kb_vec_doc(v, L)} for key, v in sorted(c.X.items())]
        sig = [{"args": [gn[g] for g in key], "matrix": _matrix_doc(M, an, an)}
               for key, M in sorted(c.sigma.items())]
        out.append({"arity": k, "X": X, "sigma": sig})
    return out


def connection_doc(C, flat: bool) -> dict:
    gn = [n for n, _ in C.L.generators]
    ops = []
    for m, table in sorted(C.ops.items()):
        for key, Op in sorted(table.items()):
            ops.append({"args": [gn[g] for g in key], "matrix": _kb_matrix_doc(Op, C.P)})
    return {"side": C.side, "flat": flat, "module": generators_doc(C.P), "ops": ops}


def export_fixture(f: Fixture, arity_cap: int = 3, window: int = 3) -> dict:
    doc: dict[str, Any] = {"schema": SCHEMA, "name": f.name, "note": f.note,
                           "arity_cap": arity_cap, "window": window}
    if f.intended:
        doc["intended_failure"] = f.intended
    if f.S is not None:
        doc["algebra"] = algebra_doc(f.S.A)
        doc["L"] = generators_doc(f.S.L)
        doc["cap"] = f.S.cap
        doc["structure"] = structure_doc(f.S)
    if f.extension is not None:
        doc["extension"] = algebra_doc(f.extension.B)
    if f.connection is not None:
        doc["connection"] = connection_doc(f.connection, f.flat)
    if f.family_ops is not None:
        an = f.family_algebra.space.names
        doc["family"] = {"algebra": algebra_doc(f.family_algebra),
                         "ops": [{"arity": k, "matrix": _matrix_doc(M, an, an)}
                                 for k, M in sorted(f.family_ops.items())]}
    if f.pinf is not None:
        P = f.pinf.P
        an = P.space.names
        doc["pinfinity"] = {"algebra": algebra_doc(P), "brackets": [
            {"arity": k, "entries": [{"args": [an[i] for i in key], "value": _vec_doc(v, an)}
                                     for key, v in sorted(m.table.items())]}
            for k, m in sorted(f.pinf.brackets.items())]}
    return doc


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


# parsing


TOP_KEYS = {"schema", "name", "note", "arity_cap", "window", "intended_failure", "algebra", "L", "cap",
            "structure", "extension", "connection", "family", "pinfinity"}


def _keys(d: Any, allowed: set, where: str, required: Sequence[str] = ()) -> dict:
    if not isinstance(d, dict):
        raise InputError(f"{where}: expected an object")
    extra = set(d) - allowed
    if extra:
        raise InputError(f"{where}: unknown keys {sorted(extra)}")
    for r in required:
        if r not in d:
            raise InputError(f"{where}: missing key {r!r}")
    return d


def _names(pairs: Any, where: str) -> tuple:
    if not isinstance(pairs, list):
        raise InputError(f"{where}: expected a list of [name, degree]")
    out = []
    for p in pairs:
        if (not isinstance(p, list) or len(p) != 2 or not isinstance(p[0], str)
                or not isinstance(p[1], int) or isinstance(p[1], bool)):
            raise InputError(f"{where}: bad entry {p!r}")
        out.append((p[0], p[1]))
    if len({n for n, _ in out}) != len(out):
        raise InputError(f"{where}: repeated name")
    return tuple(out)


def _lookup(table: dict, name: Any, where: str):
    if not isinstance(name, str) or name not in table:
        raise InputError(f"{where}: unknown name {name!r}")
    return table[name]


def _vec(d: Any, table: dict, where: str) -> dict:
    if not isinstance(d, dict):
        raise InputError(f"{where}: expected an object of coefficients")
    out = {}
    for n, c in d.items():
        out[_lookup(table, n, where)] = parse_scalar(c)
    return normalize(out)


def _matrix(d: Any, src: dict, dst: dict, where: str) -> dict:
    if not isinstance(d, dict):
        raise InputError(f"{where}: expected a matrix object")
    return {_lookup(src, n, where): _vec(col, dst, where) for n, col in d.items()}


def parse_algebra(d: Any, where: str = "algebra") -> GradedAlgebra:
    _keys(d, {"basis", "unit", "product"}, where, ("basis", "unit", "product"))
    space = GradedSpace(_names(d["basis"], where + ".basis"))
    idx = {n: i for i, n in enumerate(space.names)}
    unit = _lookup(idx, d["unit"], where + ".unit")
    table = {}
    if not isinstance(d["product"], list):
        raise InputError(f"{where}.product: expected a list")
    for e in d["product"]:
        if not isinstance(e, list) or len(e) != 3:
            raise InputError(f"{where}.product: bad entry {e!r}")
        i, j = _lookup(idx, e[0], where), _lookup(idx, e[1], where)
        table[(i, j)] = _vec(e[2], idx, where + ".product")
    try:
        return GradedAlgebra(space, table, unit)
    except ValueError as err:
        raise InputError(f"{where}: {err}") from None


def _kb_table(M: FreeModule) -> dict:
    idx, names = _kindex(M)
    return {names[i]: b for b, i in idx.items()}


def _args(a: Any, gidx: dict, where: str) -> tuple:
    if not isinstance(a, list):
        raise InputError(f"{where}: args must be a list")
    return tuple(_lookup(gidx, n, where) for n in a)


def parse_structure(doc: Any) -> Fixture:
    d = _keys(doc, TOP_KEYS, "file", ("schema",))
    if d["schema"] != SCHEMA:
        raise InputError(f"unsupported schema {d['schema']!r}")
    for k in ("arity_cap", "window", "cap"):
        if k in d and (not isinstance(d[k], int) or isinstance(d[k], bool) or d[k] < 0):
            raise InputError(f"{k} must be a non-negative integer")
    f = Fixture(str(d.get("name", "")), {}, str(d.get("note", "")))
    f.intended = d.get("intended_failure")
    f.extra["arity_cap"] = d.get("arity_cap", 3)
    f.extra["window"] = d.get("window", 3)
    try:
        if "structure" in d or "L" in d:
            if "algebra" not in d or "L" not in d:
                raise InputError("a structure needs 'algebra' and 'L'")
            A = parse_algebra(d["algebra"])
            L = FreeModule(A, _names(d["L"], "L"))
            f.S = SHLRAlgebra(L, _parse_X(d.get("structure", []), L, d.get("cap", 3)), f.name)
        if "extension" in d:
            if f.S is None:
                raise InputError("extension needs a structure")
            f.extension = AlgebraExtension(f.S.A, parse_algebra(d["extension"], "extension"))
        if "connection" in d:
            if f.S is None:
                raise InputError("connection needs a structure")
            f.connection, f.flat = _parse_connection(d["connection"], f.S)
            if f.extension is not None and f.connection.P != f.extension.M:
                raise InputError("connection module differs from the extension")
        if "family" in d:
            fd = _keys(d["family"], {"algebra", "ops"}, "family", ("algebra", "ops"))
            B = parse_algebra(fd["algebra"], "family.algebra")
            idx = {n: i for i, n in enumerate(B.space.names)}
            ops = {}
            for e in fd["ops"]:
                _keys(e, {"arity", "matrix"}, "family.ops", ("arity", "matrix"))
                ops[_arity(e["arity"])] = _matrix(e["matrix"], idx, idx, "family.ops")
            f.family_algebra, f.family_ops = B, ops
        if "pinfinity" in d:
            pd = _keys(d["pinfinity"], {"algebra", "brackets"}, "pinfinity", ("algebra", "brackets"))
            B = parse_algebra(pd["algebra"], "pinfinity.algebra")
            idx = {n: i for i, n in enumerate(B.space.names)}
            brs = {}
            for e in pd["brackets"]:
                _keys(e, {"arity", "entries"}, "pinfinity.brackets", ("arity", "entries"))
                k = _arity(e["arity"])
                m = SymMultiMap(B.space, B.space, k, 1)
                for ent in e["entries"]:
                    _keys(ent, {"args", "value"}, "pinfinity.entries", ("args", "value"))
                    m.set(_args(ent["args"], idx, "pinfinity.entries"), _vec(ent["value"], idx, "pinfinity"))
                brs[k] = m
            f.pinf = PInfinityOneAlgebra(B, brs, f.name)
    except ValueError as err:
        raise InputError(str(err)) from None
    return f


def _arity(k: Any) -> int:
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise InputError(f"bad arity {k!r}")
    return k


def _parse_X(entries: Any, L: FreeModule, cap: int) -> FormalMultiderivation:
    A = L.A
    gidx = {n: i for i, (n, _) in enumerate(L.generators)}
    aidx = {n: i for i, n in enumerate(A.space.names)}
    kb = _kb_table(L)
    if not isinstance(entries, list):
        raise InputError("structure: expected a list")
    comps = {}
    for e in entries:
        _keys(e, {"arity", "X", "sigma"}, "structure", ("arity",))
        k = _arity(e["arity"])
        c = ModMultiderivation(L, k, 1)
        for x in e.get("X", []):
            _keys(x, {"args", "value"}, "structure.X", ("args", "value"))
            c.set_X(_args(x["args"], gidx, "structure.X"), _vec(x["value"], kb, "structure.X"))
        for s in e.get("sigma", []):
            _keys(s, {"args", "matrix"}, "structure.sigma", ("args", "matrix"))
            c.set_sigma(_args(s["args"], gidx, "structure.sigma"), _matrix(s["matrix"], aidx, aidx, "structure.sigma"))
        comps[k] = c
    return FormalMultiderivation(L, 1, comps, cap=max([cap] + list(comps)))


def _parse_connection(d: Any, S: SHLRAlgebra):
    _keys(d, {"side", "flat", "module", "ops"}, "connection", ("side", "module", "ops"))
    if d["side"] not in (LEFT, RIGHT):
        raise InputError(f"connection.side must be {LEFT!r} or {RIGHT!r}")
    P = FreeModule(S.A, _names(d["module"], "connection.module"))
    gidx = {n: i for i, (n, _) in enumerate(S.L.generators)}
    kb = _kb_table(P)
    ops: dict = {}
    for e in d["ops"]:
        _keys(e, {"args", "matrix"}, "connection.ops", ("args", "matrix"))
        key = _args(e["args"], gidx, "connection.ops")
        ops.setdefault(len(key), {})[key] = _matrix(e["matrix"], kb, kb, "connection.ops")
    cls = LeftConnection if d["side"] == LEFT else RightConnection
    return cls(S, P, ops, check=False), bool(d.get("flat", False))


def load(path: str) -> Fixture:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise InputError(f"invalid JSON: {err.msg} at line {err.lineno}") from None
    return parse_structure(doc)


# commands


def _jsonable(x):
    if isinstance(x, Fraction):
        return fmt_scalar(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def _residual_detail(f: Fixture, check: str, failure) -> dict | None:
    """Both sides of the first failing identity where a residual is available."""
    if check == "jacobiator" and f.S is not None:
        part, k, key = failure
        c = jacobiator(f.S).components[k]
        v = c.X.get(key) if part == "X" else c.sigma.get(key)
        if part == "X":
            return {"lhs": _kb_vec_doc(v or {}, f.S.L), "rhs": {}}
        an = f.S.A.space.names
        return {"lhs": _matrix_doc(v or {}, an, an), "rhs": {}}
    if check == "flatness" and f.connection is not None:
        m, key = failure
        J = curvature(f.connection)
        return {"lhs": _kb_matrix_doc(J.ops[m][key], f.connection.P), "rhs": {}}
    return None


def _named_failure(f: Fixture, check: str, failure):
    if f.S is None:
        return failure
    gn = [n for n, _ in f.S.L.generators]
    if check == "jacobiator":
        part, k, key = failure
        return [part, k, [gn[g] for g in key]]
    if check == "flatness":
        m, key = failure
        return [m + 1, [gn[g] for g in key]]
    return failure


def cmd_validate(f: Fixture, args) -> tuple[int, dict]:
    reps = f.validate()
    out = {}
    for name in sorted(reps):
        r = reps[name]
        status = "skipped" if getattr(r, "skipped", False) else ("ok" if r.ok else "failed")
        ent: dict[str, Any] = {"status": status, "failures": len(r.failures)}
        if r.failures:
            ent["first"] = _jsonable(_named_failure(f, name, r.failures[0]))
            det = _residual_detail(f, name, r.failures[0])
            if det is not None:
                ent.update(det)
        out[name] = ent
    ok = all(e["status"] == "ok" for e in out.values())
    return (0 if ok else 1), {"command": "validate", "name": f.name, "valid": ok, "checks": out}


def curvature_table(C, max_args: int) -> list:
    J = curvature(C, max_args)
    gn = [n for n, _ in C.L.generators]
    rows = []
    for m in sorted(J.ops):
        for key in sorted(J.ops[m]):
            rows.append({"arity": m + 1, "args": [gn[g] for g in key],
                         "matrix": _kb_matrix_doc(J.ops[m][key], C.P)})
    return rows


def cmd_curvature(f: Fixture, args) -> tuple[int, dict]:
    C = f.connection
    if C is None:
        raise InputError("file declares no connection")
    if args.side and args.side != C.side:
        raise InputError(f"file declares a {C.side} connection")
    if not C.subordination().ok:
        return 1, {"command": "curvature", "error": "connection is not subordinate"}
    cap = args.arity_cap if args.arity_cap is not None else f.extra.get("arity_cap", 3)
    rows = curvature_table(C, cap)
    return 0, {"command": "curvature", "name": f.name, "side": C.side, "arity_cap": cap,
               "flat": not rows, "components": rows}


# Chevalley-Eilenberg cohomology on a window of forms


def ce_operator(f: Fixture):
    """The differential on forms: D of a left connection, else the CE differential."""
    S = f.S
    if S is None:
        raise InputError("file declares no structure")
    if f.connection is not None and f.connection.side == LEFT and f.extension is None:
        C = f.connection
        D = D_nabla(C)
        flat = curvature(C, max(2 * C.max_args, 2)).is_zero()
        return D, flat and S.is_valid()
    D = eta(S.X)
    return D, S.is_valid()


def _shifts(D) -> list[int]:
    return sorted({k - 1 for k in D.components})


def cohomology_matrices(D, arity_max: int, degree: int | None = None) -> dict:
    """Cells with their D-matrices (rows = target basis, dense lists of Fractions).

    Returns ``{cell: {"dim", "out", "in", "incomplete"}}`` where ``out`` is the
    matrix of D leaving the cell and ``in`` the matrix of D arriving in it.
    """
    F = D.F
    shifts = _shifts(D)
    graded = len(shifts) <= 1
    s = shifts[0] if shifts else 0
    basis_by_cell: dict = {}
    for r in range(arity_max + 1):
        for b in F.basis(r):
            cell = (r, F.deg(b)) if graded else ("*", F.deg(b))
            basis_by_cell.setdefault(cell, []).append(b)

    def cell_basis(cell):
        r, d = cell
        if r == "*" or r <= arity_max:
            return basis_by_cell.get(cell, [])
        return [b for b in F.basis(r) if F.deg(b) == d]

    def matrix(src, dst):
        pos = {b: i for i, b in enumerate(dst)}
        cols = []
        for b in src:
            img = D.apply({b: 1})
            col = [Fraction(0)] * len(dst)
            for t, c in img.items():
                if t not in pos:
                    raise RuntimeError("image outside the target cell")
                col[pos[t]] = Fraction(c)
            cols.append(col)
        return [[cols[j][i] for j in range(len(src))] for i in range(len(dst))]

    def above(cell):
        r, d = cell
        return (r + s, d + 1) if r != "*" else ("*", d + 1)

    def below(cell):
        r, d = cell
        return (r - s, d - 1) if r != "*" else ("*", d - 1)

    out = {}
    for cell in sorted(basis_by_cell, key=lambda c: (str(c[0]), c[1])):
        if degree is not None and cell[1] != degree:
            continue
        src = basis_by_cell[cell]
        if graded:
            up, dn = above(cell), below(cell)
            tgt = cell_basis(up)
            incomplete = up[0] > arity_max and bool(tgt)
            pre = cell_basis(dn) if dn[0] >= 0 else []
        else:
            tgt = basis_by_cell.get(above(cell), [])
            pre = basis_by_cell.get(below(cell), [])
            # D raises arity, so images of window forms may leave the window
            incomplete = any(len(t[0]) > arity_max for b in src for t in D.apply({b: 1}))
        if graded:
            M_out = matrix(src, tgt)
        else:
            M_out = _truncated_matrix(D, src, tgt) if not incomplete else None
        M_in = matrix(pre, src) if graded else _truncated_matrix(D, pre, src)
        out[cell] = {"dim": len(src), "out": M_out, "in": M_in, "incomplete": incomplete}
    return out


def _truncated_matrix(D, src, dst):
    pos = {b: i for i, b in enumerate(dst)}
    M = [[Fraction(0)] * len(src) for _ in dst]
    for j, b in enumerate(src):
        for t, c in D.apply({b: 1}).items():
            if t in pos:
                M[pos[t]][j] = Fraction(c)
    return M


def _rank_dense(M) -> int:
    if not M or not M[0]:
        return 0
    rows = [{j: c for j, c in enumerate(row) if c} for row in M]
    return rank(rows)


def cohomology(D, arity_max: int, degree: int | None = None) -> list[dict]:
    cells = cohomology_matrices(D, arity_max, degree)
    rows = []
    for cell, c in cells.items():
        ent = {"arity": cell[0], "degree": cell[1], "cochains": c["dim"]}
        if c["incomplete"]:
            ent["incomplete"] = True
            ent["dim"] = None
        else:
            ent["dim"] = c["dim"] - _rank_dense(c["out"]) - _rank_dense(c["in"])
        rows.append(ent)
    return rows


def cmd_cohomology(f: Fixture, args) -> tuple[int, dict]:
    D, ok = ce_operator(f)
    if not ok:
        return 1, {"command": "cohomology", "name": f.name, "error": "structure is not flat"}
    n = args.arity_max if args.arity_max is not None else (
        args.arity_cap if args.arity_cap is not None else f.extra.get("arity_cap", 3))
    rows = cohomology(D, n, args.degree)
    return 0, {"command": "cohomology", "name": f.name, "arity_max": n, "cells": rows}


# derived brackets


def _tensor_name(T, b) -> str:
    a, m, q = b
    parts = [T.A.space.names[a]] + [T.L.generators[g][0] for g in m]
    return "*".join(parts)


def cmd_derived_brackets(f: Fixture, args) -> tuple[int, dict]:
    window = args.window if args.window is not None else f.extra.get("window", 3)
    cap = args.arity_cap if args.arity_cap is not None else f.extra.get("arity_cap", 3)
    rows = []
    try:
        if f.family_ops is not None:
            fam = f.family
            db = derived_brackets(fam)
            B = f.family_algebra
            an = B.space.names
            for k in sorted(fam.ops):
                if k > cap:
                    continue
                for key in canonical_keys(B.space.degs, k):
                    v = db(*[{i: 1} for i in key])
                    if v:
                        rows.append({"arity": k, "args": [an[i] for i in key], "value": _vec_doc(v, an)})
            source = "family"
        elif f.connection is not None and f.connection.side == RIGHT:
            try:
                fam = bv_from_right_module(f.connection, window)
            except ValueError as err:
                return 1, {"command": "derived-brackets", "name": f.name, "error": str(err)}
            db = derived_brackets(fam)
            from .galgebra import TensorSpace
            T = TensorSpace(f.S.L)
            for k in sorted(fam.ops):
                if k > cap:
                    continue
                for us in tensor_tuples(T, k, window):
                    v = db(*us)
                    if v:
                        rows.append({"arity": k, "args": [_tensor_name(T, next(iter(u))) for u in us],
                                     "value": {_tensor_name(T, b): fmt_scalar(c) for b, c in sorted(v.items())}})
            source = "right module"
        else:
            raise InputError("file declares neither an operator family nor a right connection")
    except BVError as err:
        return 1, {"command": "derived-brackets", "name": f.name, "error": str(err), "k": err.k}
    return 0, {"command": "derived-brackets", "name": f.name, "source": source, "window": window,
               "brackets": rows}


def cmd_export(args) -> tuple[int, Any]:
    params: dict = {}
    name = args.fixture
    if name == "random_connection":
        params = {"seed": args.seed or 0, "side": args.side or LEFT}
    try:
        f = fixture(name, params)
    except KeyError as err:
        raise InputError(str(err.args[0])) from None
    cap = args.arity_cap if args.arity_cap is not None else 3
    window = args.window if args.window is not None else 3
    return 0, export_fixture(f, cap, window)


# text rendering


def render_text(res: dict) -> str:
    lines = []
    cmd = res.get("command")
    if "error" in res:
        lines.append(f"{cmd}: {res.get('name', '')}: {res['error']}")
    elif cmd == "validate":
        lines.append(f"validate {res['name']}: {'valid' if res['valid'] else 'INVALID'}")
        for n, e in res["checks"].items():
            line = f"  {n}: {e['status']}"
            if "first" in e:
                line += f" first={json.dumps(e['first'], sort_keys=True)}"
            if "lhs" in e:
                line += f" lhs={json.dumps(e['lhs'], sort_keys=True)} rhs={json.dumps(e['rhs'], sort_keys=True)}"
            lines.append(line)
    elif cmd == "curvature":
        lines.append(f"curvature {res['name']} ({res['side']}): {'flat' if res['flat'] else 'not flat'}")
        for r in res["components"]:
            lines.append(f"  J_{r['arity']}({', '.join(r['args'])}) = {json.dumps(r['matrix'], sort_keys=True)}")
    elif cmd == "cohomology":
        lines.append(f"cohomology {res['name']} (arity <= {res['arity_max']})")
        for c in res["cells"]:
            dim = "incomplete" if c.get("incomplete") else str(c["dim"])
            lines.append(f"  arity {c['arity']} degree {c['degree']}: {dim} (cochains {c['cochains']})")
    elif cmd == "derived-brackets":
        lines.append(f"derived brackets {res['name']} ({res['source']})")
        for r in res["brackets"]:
            lines.append(f"  L_{r['arity']}({', '.join(r['args'])}) = {json.dumps(r['value'], sort_keys=True)}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrinf", description="Verify SH Lie-Rinehart structures.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arity-cap", type=int, default=None)
    common.add_argument("--window", type=int, default=None)
    common.add_argument("--side", choices=(LEFT, RIGHT), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("json", "text"), default="text")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("validate", "curvature", "derived-brackets"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("file")
    sp = sub.add_parser("cohomology", parents=[common])
    sp.add_argument("file")
    sp.add_argument("--arity-max", type=int, default=None)
    sp.add_argument("--degree", type=int, default=None)
    fx = sub.add_parser("fixtures")
    fsub = fx.add_subparsers(dest="fixtures_command", required=True)
    ex = fsub.add_parser("export", parents=[common])
    ex.add_argument("fixture")
    fsub.add_parser("list")
    return p


COMMANDS = {"validate": cmd_validate, "curvature": cmd_curvature, "cohomology": cmd_cohomology,
            "derived-brackets": cmd_derived_brackets}


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        if args.command == "fixtures":
            if args.fixtures_command == "list":
                from .fixtures import NAMED, PERTURBATIONS
                out.write("\n".join(list(NAMED) + ["random_connection"] +
                                    [f"perturbed_{n}" for n in PERTURBATIONS]) + "\n")
                return 0
            code, doc = cmd_export(args)
            out.write(dumps(doc))
            return code
        f = load(args.file)
        code, res = COMMANDS[args.command](f, args)
    except InputError as err:
        sys.stderr.write(f"lrinf: input error: {err}\n")
        return 2
    out.write(dumps(res) if args.format == "json" else render_text(res))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
