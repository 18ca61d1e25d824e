"""Solver-agnostic sparse MILP representation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

BINARY = "binary"
CONTINUOUS = "continuous"

LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


@dataclass
class MilpModel:
    """Minimization model with sparse rows.

    Built incrementally through :meth:`add_var` / :meth:`add_row`; treat it as
    immutable once handed to a solver or exporter.
    """

    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0, ub: float = np.inf,
                obj: float = 0.0) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        idx = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._names[name] = idx
        if obj:
            self.objective[idx] = float(obj)
        return idx

    def add_obj(self, col: int, coef: float) -> None:
        if coef:
            self.objective[col] = self.objective.get(col, 0.0) + float(coef)

    def add_row(self, name: str, terms, sense: str, rhs: float) -> int:
        merged: dict[int, float] = {}
        for col, coef in terms:
            merged[col] = merged.get(col, 0.0) + float(coef)
        self.constraints.append(
            Constraint(name, tuple((c, v) for c, v in merged.items() if v != 0.0), sense, float(rhs)))
        return len(self.constraints) - 1

    def col(self, name: str) -> int:
        return self._names[name]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def count(self, kind: str) -> int:
        return sum(1 for v in self.variables if v.kind == kind)

    # array views -------------------------------------------------------

    def arrays(self):
        """Return ``(c, A, row_lo, row_hi, lb, ub, is_int)`` with ``A`` in CSR form."""
        n, m = self.n_vars, self.n_rows
        c = np.zeros(n)
        for j, v in self.objective.items():
            c[j] = v
        lengths = np.fromiter((len(con.terms) for con in self.constraints), dtype=np.int64, count=m)
        flat = [t for con in self.constraints for t in con.terms]
        cols = np.fromiter((j for j, _ in flat), dtype=np.int64, count=len(flat))
        vals = np.fromiter((v for _, v in flat), dtype=float, count=len(flat))
        rows = np.repeat(np.arange(m), lengths)
        senses = [con.sense for con in self.constraints]
        rhs = np.fromiter((con.rhs for con in self.constraints), dtype=float, count=m)
        lo = np.where([sn == LE for sn in senses], -np.inf, rhs) if m else np.empty(0)
        hi = np.where([sn == GE for sn in senses], np.inf, rhs) if m else np.empty(0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        is_int = np.array([v.kind == BINARY for v in self.variables], dtype=bool)
        return c, A, lo, hi, lb, ub, is_int

    def objective_value(self, x) -> float:
        return float(sum(coef * x[j] for j, coef in self.objective.items()))


def check_assignment(model: MilpModel, x, tol: float = 1e-6, int_tol: float = 1e-6) -> list[str]:
    """Independently verify ``x`` against bounds, integrality and every row.

    Tolerances are absolute, scaled by ``max(1, |rhs|)`` for rows.
    """
    x = np.asarray(x, dtype=float)
    problems = []
    if x.shape != (model.n_vars,):
        return [f"assignment has shape {x.shape}, expected ({model.n_vars},)"]
    c, A, lo, hi, lb, ub, is_int = model.arrays()
    for j in np.flatnonzero((x < lb - tol) | (x > ub + tol)):
        v = model.variables[j]
        problems.append(f"{v.name}={x[j]:g} outside [{v.lb:g}, {v.ub:g}]")
    for j in np.flatnonzero(is_int & (np.abs(x - np.round(x)) > int_tol)):
        problems.append(f"{model.variables[j].name}={x[j]:g} not integral")
    if model.n_rows:
        act = A @ x
        rhs = np.where(np.isfinite(lo), lo, hi)
        slack = tol * np.maximum(1.0, np.abs(rhs))
        for r in np.flatnonzero((act > hi + slack) | (act < lo - slack)):
            con = model.constraints[r]
            problems.append(f"row {con.name}: {act[r]:g} {con.sense} {con.rhs:g} violated")
    return problems
