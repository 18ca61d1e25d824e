"""Bounded dual simplex over ``A x - s = 0`` with a dense basis inverse.

Row activities become explicit slack columns ``s`` bounded by the row
limits, so every LP handled here reads::

    min c.x   s.t.   [A  -I] (x, s) = 0,   l <= (x, s) <= u

With finite structural bounds, the all-slack basis with each structural
parked at the bound favoured by its cost sign is dual feasible, so no phase 1
is needed.  Tightening bounds (branching) keeps any basis dual feasible,
which is what makes warm starts in branch-and-bound cheap.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"


class NumericalError(RuntimeError):
    """Raised when the basis becomes singular or pivots degrade beyond repair."""


class DualSimplex:
    refactor_every = 64
    bland_after = 50  # consecutive degenerate pivots before switching to Bland's rule

    def __init__(self, c, A, row_lo, row_hi, lb, ub, feas_tol: float = 1e-9, piv_tol: float = 1e-9):
        A = sp.csr_matrix(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.A = sp.hstack([A, -sp.identity(m, format="csr")], format="csc")
        self.AT = self.A.T.tocsr()
        self.cost = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.lo = np.concatenate([np.asarray(lb, dtype=float), np.asarray(row_lo, dtype=float)])
        self.hi = np.concatenate([np.asarray(ub, dtype=float), np.asarray(row_hi, dtype=float)])
        self.feas_tol = feas_tol
        self.piv_tol = piv_tol
        self.iterations = 0
        self.cold_start()

    # -- basis management ------------------------------------------------
    def cold_start(self):
        n, m = self.n, self.m
        self.basis = np.arange(n, n + m)
        self.is_basic = np.zeros(n + m, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(n + m, dtype=bool)
        self.at_upper[:n] = self.cost[:n] < 0
        self._refactor()

    def snapshot(self):
        return self.basis.copy(), self.at_upper.copy()

    def restore(self, snap):
        self.basis = snap[0].copy()
        self.at_upper = snap[1].copy()
        self.is_basic = np.zeros(self.n + self.m, dtype=bool)
        self.is_basic[self.basis] = True
        self._refactor()

    def set_bounds(self, lb, ub):
        self.lo[:self.n] = lb
        self.hi[:self.n] = ub

    def _refactor(self):
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            self._since_refactor = 0
            return
        B = self.A[:, self.basis].toarray()
        try:
            self.Binv = la.inv(B, check_finite=False)
        except la.LinAlgError as exc:
            raise NumericalError("singular basis") from exc
        if not np.all(np.isfinite(self.Binv)):
            raise NumericalError("basis inverse is not finite")
        self._since_refactor = 0

    # -- primal / dual values ---------------------------------------------
    def _nonbasic_values(self):
        x = np.where(self.at_upper, self.hi, self.lo)
        x[self.basis] = 0.0
        return x

    def primal(self):
        x = self._nonbasic_values()
        if self.m:
            x[self.basis] = self.Binv @ -(self.A @ x)
        return x

    def reduced_costs(self):
        y = self.cost[self.basis] @ self.Binv if self.m else np.zeros(0)
        d = self.cost - self.AT @ y if self.m else self.cost.copy()
        d[self.basis] = 0.0
        return d

    @property
    def objective(self) -> float:
        x = self.primal()
        return float(self.cost[:self.n] @ x[:self.n])

    def solution(self) -> np.ndarray:
        return self.primal()[:self.n]

    # -- main loop --------------------------------------------------------
    def solve(self, max_iter: int = 50_000) -> str:
        n, m = self.n, self.m
        # nonbasic columns must sit on finite bounds
        bad = ~self.is_basic & ~np.isfinite(np.where(self.at_upper, self.hi, self.lo))
        if bad.any():
            flip = bad & np.isfinite(np.where(self.at_upper, self.lo, self.hi))
            self.at_upper[flip] = ~self.at_upper[flip]
            if (bad & ~flip).any():
                raise NumericalError("free nonbasic column")
        fixed = self.lo == self.hi
        degenerate = 0
        for _ in range(max_iter):
            if m == 0:
                return OPTIMAL
            if self._since_refactor >= self.refactor_every:
                self._refactor()
            x = self.primal()
            xb = x[self.basis]
            lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]
            scale_lo = self.feas_tol * np.maximum(1.0, np.abs(np.where(np.isfinite(lo_b), lo_b, 0.0)))
            scale_hi = self.feas_tol * np.maximum(1.0, np.abs(np.where(np.isfinite(hi_b), hi_b, 0.0)))
            below = lo_b - xb
            above = xb - hi_b
            viol = np.maximum(np.where(below > scale_lo, below, 0.0), np.where(above > scale_hi, above, 0.0))
            if not viol.any():
                return OPTIMAL
            bland = degenerate >= self.bland_after
            if bland:
                cand = np.flatnonzero(viol > 0)
                r = int(cand[np.argmin(self.basis[cand])])
            else:
                r = int(np.argmax(viol))
            p = int(self.basis[r])
            s = 1.0 if above[r] > 0 and above[r] >= below[r] else -1.0

            d = self.reduced_costs()
            rho = self.Binv[r]
            alpha_r = self.AT @ rho
            at = s * alpha_r
            nb = ~self.is_basic & ~fixed
            ok = nb & ((~self.at_upper & (at > self.piv_tol)) | (self.at_upper & (at < -self.piv_tol)))
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                return INFEASIBLE
            dabs = np.where(self.at_upper[cand], np.maximum(-d[cand], 0.0), np.maximum(d[cand], 0.0))
            aabs = np.abs(at[cand])
            ratios = dabs / aabs
            if bland:
                best = ratios.min()
                tie = cand[ratios <= best + 1e-12]
                q = int(tie.min())
            else:
                # Harris-style two pass: admit a tiny dual infeasibility, then take the largest pivot
                bound = ((dabs + 1e-9) / aabs).min()
                pool = np.flatnonzero(ratios <= bound)
                q = int(cand[pool[np.argmax(aabs[pool])]])
            theta_d = ratios[np.searchsorted(cand, q)]
            degenerate = degenerate + 1 if theta_d <= 1e-12 else 0

            col = self.A[:, [q]].toarray().ravel()
            alpha_q = self.Binv @ col
            piv = alpha_q[r]
            if abs(piv) < 1e-11 or abs(piv - alpha_r[q]) > 1e-7 * max(1.0, abs(piv)):
                if self._since_refactor == 0:
                    raise NumericalError(f"unstable pivot {piv:g} on row {r}")
                self._refactor()
                continue
            # basis change: p leaves to the violated bound, q enters
            self.at_upper[p] = s > 0
            self.is_basic[p] = False
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.basis[r] = q
            e = alpha_q.copy()
            e[r] -= 1.0
            self.Binv -= np.outer(e / piv, self.Binv[r])
            self._since_refactor += 1
            self.iterations += 1
        return ITERATION_LIMIT
