"""Sparse exact row reduction over Q."""
from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Sequence


def echelon(rows: Sequence[dict]) -> tuple[list[dict], list]:
    """Reduced row echelon form; pivot = smallest column key of each row.

    Returns (rows, pivots) with each pivot row normalized to 1 at its pivot.
    """
    piv_rows: dict = {}
    for r in rows:
        r = {k: Fraction(v) for k, v in r.items() if v}
        for p in [k for k in r if k in piv_rows]:
            c = r.get(p)
            if not c:
                continue
            for k, v in piv_rows[p].items():
                y = r.get(k, 0) - c * v
                if y:
                    r[k] = y
                else:
                    r.pop(k, None)
        if not r:
            continue
        p = min(r)
        c = r[p]
        r = {k: v / c for k, v in r.items()}
        for pr in piv_rows.values():
            f = pr.get(p)
            if f:
                for k, v in r.items():
                    y = pr.get(k, 0) - f * v
                    if y:
                        pr[k] = y
                    else:
                        pr.pop(k, None)
        piv_rows[p] = r
    pivots = sorted(piv_rows)
    return [piv_rows[p] for p in pivots], pivots


def rank(rows: Sequence[dict]) -> int:
    return len(echelon(rows)[1])


def nullspace(rows: Sequence[dict], columns: Sequence[Hashable]) -> list[dict]:
    """Basis of {x : row . x = 0 for all rows}, over the given column keys."""
    red, piv = echelon(rows)
    pset = set(piv)
    basis = []
    for f in columns:
        if f in pset:
            continue
        v = {f: Fraction(1)}
        for r, p in zip(red, piv):
            c = r.get(f)
            if c:
                v[p] = -c
        basis.append(v)
    return basis


def in_span(rows: Sequence[dict], v: dict) -> bool:
    return rank(list(rows) + [v]) == rank(rows)
