"""Reductions applied before the simplex sees a model.

Works on a row-dictionary copy of the problem::

    min c.x + offset   s.t.  lo <= A x <= hi,  lb <= x <= ub

and records what it removed so :meth:`Presolved.postsolve` can rebuild a
full-length assignment.  All reductions are primal only (no duals needed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

_TOL = 1e-9


class PresolveInfeasible(Exception):
    pass


@dataclass
class Presolved:
    n_orig: int
    keep: np.ndarray  # original column index of each reduced column
    c: np.ndarray
    A: sp.csr_matrix
    lo: np.ndarray
    hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray
    offset: float
    fixed: dict = field(default_factory=dict)
    # (eliminated col, kept col, ratio, shift): x_elim = shift + ratio * x_keep
    aggregated: list = field(default_factory=list)

    def postsolve(self, xr) -> np.ndarray:
        x = np.zeros(self.n_orig)
        x[self.keep] = xr
        for j, v in self.fixed.items():
            x[j] = v
        for j, k, ratio, shift in reversed(self.aggregated):
            x[j] = shift + ratio * x[k]
        return x


def _is_integral(v: float) -> bool:
    return abs(v - round(v)) <= _TOL


class _Work:
    def __init__(self, c, A, lo, hi, lb, ub, is_int):
        A = sp.csr_matrix(A)
        self.n = A.shape[1]
        self.c = [float(v) for v in c]
        self.lb = [float(v) for v in lb]
        self.ub = [float(v) for v in ub]
        self.is_int = [bool(v) for v in is_int]
        self.rows: dict[int, dict[int, float]] = {}
        self.lo: dict[int, float] = {}
        self.hi: dict[int, float] = {}
        self.cols: list[set[int]] = [set() for _ in range(self.n)]
        for r in range(A.shape[0]):
            s, e = A.indptr[r], A.indptr[r + 1]
            self.rows[r] = {int(j): float(v) for j, v in zip(A.indices[s:e], A.data[s:e]) if v != 0.0}
            self.lo[r] = float(lo[r])
            self.hi[r] = float(hi[r])
            for j in self.rows[r]:
                self.cols[j].add(r)
        self.alive = [True] * self.n
        self.offset = 0.0
        self.fixed: dict[int, float] = {}
        self.aggregated: list = []
        for j in range(self.n):
            if self.is_int[j]:
                self._round_bounds(j)
            self._check_bounds(j)

    # -- helpers ---------------------------------------------------------
    def _round_bounds(self, j):
        if self.lb[j] > -math.inf:
            self.lb[j] = math.ceil(self.lb[j] - 1e-6)
        if self.ub[j] < math.inf:
            self.ub[j] = math.floor(self.ub[j] + 1e-6)

    def _check_bounds(self, j):
        lb, ub = self.lb[j], self.ub[j]
        if lb > ub:
            if lb - ub <= 1e-9 * max(1.0, abs(lb)):
                self.ub[j] = self.lb[j] = ub if self.is_int[j] else 0.5 * (lb + ub)
            else:
                raise PresolveInfeasible(f"column {j}: bounds [{lb}, {ub}] are empty")

    def _tighten(self, j, lb, ub):
        changed = False
        if lb > self.lb[j] + _TOL:
            self.lb[j] = lb
            changed = True
        if ub < self.ub[j] - _TOL:
            self.ub[j] = ub
            changed = True
        if changed:
            if self.is_int[j]:
                self._round_bounds(j)
            self._check_bounds(j)
        return changed

    def _drop_row(self, r):
        for j in self.rows[r]:
            self.cols[j].discard(r)
        del self.rows[r], self.lo[r], self.hi[r]

    def _fix(self, j, v):
        self.fixed[j] = v
        self.offset += self.c[j] * v
        for r in list(self.cols[j]):
            a = self.rows[r].pop(j)
            self.lo[r] -= a * v
            self.hi[r] -= a * v
        self.cols[j].clear()
        self.alive[j] = False

    def _activity(self, r):
        amin = amax = 0.0
        for j, a in self.rows[r].items():
            if a > 0:
                amin += a * self.lb[j]
                amax += a * self.ub[j]
            else:
                amin += a * self.ub[j]
                amax += a * self.lb[j]
        return amin, amax

    # -- reductions ------------------------------------------------------
    def fixed_columns(self):
        hit = False
        for j in range(self.n):
            if self.alive[j] and self.lb[j] == self.ub[j]:
                self._fix(j, self.lb[j])
                hit = True
        return hit

    def empty_and_singleton_rows(self):
        hit = False
        for r in list(self.rows):
            row = self.rows[r]
            lo, hi = self.lo[r], self.hi[r]
            if not row:
                scale = 1e-9 * max(1.0, abs(lo) if lo > -math.inf else 0.0, abs(hi) if hi < math.inf else 0.0)
                if lo > scale or hi < -scale:
                    raise PresolveInfeasible(f"row {r}: empty row with bounds [{lo}, {hi}]")
                self._drop_row(r)
                hit = True
            elif len(row) == 1:
                (j, a), = row.items()
                lb, ub = (lo / a, hi / a) if a > 0 else (hi / a, lo / a)
                self._tighten(j, lb, ub)
                self._drop_row(r)
                hit = True
        return hit

    def activity_rows(self):
        hit = False
        for r in list(self.rows):
            amin, amax = self._activity(r)
            lo, hi = self.lo[r], self.hi[r]
            tol = 1e-9 * max(1.0, abs(amin) if amin > -math.inf else 0.0, abs(amax) if amax < math.inf else 0.0)
            if amin > hi + tol or amax < lo - tol:
                raise PresolveInfeasible(f"row {r}: activity [{amin}, {amax}] misses [{lo}, {hi}]")
            if amin >= lo - tol and amax <= hi + tol:
                self._drop_row(r)
                hit = True
            elif abs(amin - hi) <= tol or abs(amax - lo) <= tol:
                # forcing row: every column sits at the bound producing the extreme activity
                at_min = abs(amin - hi) <= tol
                row = dict(self.rows[r])
                self._drop_row(r)
                for j, a in row.items():
                    self._fix(j, self.lb[j] if (a > 0) == at_min else self.ub[j])
                hit = True
        return hit

    def doubleton_equalities(self):
        hit = False
        for r in list(self.rows):
            if r not in self.rows:
                continue
            row = self.rows[r]
            if len(row) != 2 or self.lo[r] != self.hi[r]:
                continue
            (j1, a1), (j2, a2) = sorted(row.items())
            rhs = self.lo[r]
            # eliminate a continuous column when possible, else the later binary
            pick = None
            for je, ae, jk, ak in ((j2, a2, j1, a1), (j1, a1, j2, a2)):
                if not self.is_int[je]:
                    pick = (je, ae, jk, ak)
                    break
            if pick is None:
                ratio, shift = -a1 / a2, rhs / a2
                if abs(abs(ratio) - 1) <= _TOL and _is_integral(shift):
                    pick = (j2, a2, j1, a1)
            if pick is None:
                continue
            je, ae, jk, ak = pick
            ratio, shift = -ak / ae, rhs / ae
            # bounds of the eliminated column become bounds on the kept one
            lo_e, hi_e = self.lb[je], self.ub[je]
            ends = [(lo_e - shift) / ratio, (hi_e - shift) / ratio]
            self._drop_row(r)
            self._tighten(jk, min(ends), max(ends))
            if self.c[je]:
                self.offset += self.c[je] * shift
                self.c[jk] += self.c[je] * ratio
                self.c[je] = 0.0
            for rr in list(self.cols[je]):
                a = self.rows[rr].pop(je)
                self.lo[rr] -= a * shift
                self.hi[rr] -= a * shift
                nv = self.rows[rr].get(jk, 0.0) + a * ratio
                if abs(nv) <= 1e-12:
                    self.rows[rr].pop(jk, None)
                    self.cols[jk].discard(rr)
                else:
                    self.rows[rr][jk] = nv
                    self.cols[jk].add(rr)
            self.cols[je].clear()
            self.alive[je] = False
            self.aggregated.append((je, jk, ratio, shift))
            hit = True
        return hit

    def empty_columns(self):
        hit = False
        for j in range(self.n):
            if self.alive[j] and not self.cols[j]:
                c = self.c[j]
                v = self.lb[j] if c > 0 else self.ub[j] if c < 0 else (
                    self.lb[j] if self.lb[j] > -math.inf else min(self.ub[j], 0.0))
                if not math.isfinite(v):
                    continue  # unbounded direction; leave to the LP
                self._fix(j, v)
                hit = True
        return hit


def presolve(c, A, lo, hi, lb, ub, is_int, aggregate: bool = True, max_passes: int = 50) -> Presolved:
    """Reduce the problem; raises :class:`PresolveInfeasible` on proven infeasibility."""
    w = _Work(c, A, lo, hi, lb, ub, is_int)
    for _ in range(max_passes):
        hit = w.fixed_columns()
        hit |= w.empty_and_singleton_rows()
        hit |= w.fixed_columns()
        hit |= w.activity_rows()
        if aggregate:
            hit |= w.doubleton_equalities()
        hit |= w.empty_columns()
        if not hit:
            break
    keep = np.array([j for j in range(w.n) if w.alive[j]], dtype=int)
    pos = {j: k for k, j in enumerate(keep)}
    rows = sorted(w.rows)
    data, ri, ci = [], [], []
    for k, r in enumerate(rows):
        for j, a in sorted(w.rows[r].items()):
            data.append(a)
            ri.append(k)
            ci.append(pos[j])
    A_red = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), len(keep)))
    return Presolved(
        n_orig=w.n, keep=keep,
        c=np.array([w.c[j] for j in keep]), A=A_red,
        lo=np.array([w.lo[r] for r in rows]), hi=np.array([w.hi[r] for r in rows]),
        lb=np.array([w.lb[j] for j in keep]), ub=np.array([w.ub[j] for j in keep]),
        is_int=np.array([w.is_int[j] for j in keep], dtype=bool),
        offset=w.offset, fixed=w.fixed, aggregated=w.aggregated,
    )
