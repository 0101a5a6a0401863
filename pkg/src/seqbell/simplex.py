"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c.x  s.t.  A x = b, x >= 0``. Problems here are small (a few
hundred columns at most), so a full tableau is simpler and more transparent
than a revised method. Phase 1 also yields a Farkas certificate when the
constraints are infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-12
MAX_ITER = 100_000


@dataclass
class LpResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None
    objective: float | None
    phase1_objective: float
    farkas: np.ndarray | None
    """Row multipliers ``y`` with ``A^T y <= 0`` and ``b.y = phase1_objective``."""
    iterations: int


def _pivot(t: np.ndarray, r: int, j: int) -> None:
    t[r] /= t[r, j]
    col = t[:, j].copy()
    col[r] = 0.0
    t -= np.outer(col, t[r])


def _run(t: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> tuple[str, int]:
    m = t.shape[0] - 1
    for it in range(max_iter):
        costs = t[-1, :-1]
        candidates = np.flatnonzero((costs < -COST_TOL) & allowed)
        if candidates.size == 0:
            return "optimal", it
        j = int(candidates[0])
        col = t[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", it
        ratios = t[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(t, r, j)
        basis[r] = j
    raise RuntimeError("simplex iteration limit reached")


def solve(c, a_eq, b_eq, feas_tol: float = 1e-9, max_iter: int = MAX_ITER) -> LpResult:
    c = np.asarray(c, dtype=float)
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = a.shape
    sign = np.where(b < 0, -1.0, 1.0)
    a *= sign[:, None]
    b *= sign

    # columns: n originals, m artificials, rhs
    t = np.zeros((m + 1, n + m + 1))
    t[:m, :n] = a
    t[:m, n:n + m] = np.eye(m)
    t[:m, -1] = b
    t[-1, :n] = -a.sum(axis=0)
    t[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)

    status, it1 = _run(t, basis, allowed, max_iter)
    phase1 = float(-t[-1, -1])
    if phase1 > feas_tol:
        # reduced cost of artificial i is 1 - y_i
        y = (1.0 - t[-1, n:n + m]) * sign
        return LpResult("infeasible", None, None, phase1, y, it1)

    # drive artificials out of the basis; drop rows that are redundant
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(t[r, :n]) > PIVOT_TOL)
            if nz.size:
                _pivot(t, r, int(nz[0]))
                basis[r] = int(nz[0])
            else:
                keep[r] = False
    rows = np.flatnonzero(keep)
    t = np.vstack([t[rows], t[-1:]])
    basis = [basis[r] for r in rows]

    t[-1] = 0.0
    t[-1, :n] = c
    for r, j in enumerate(basis):
        t[-1] -= c[j] * t[r]
    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    status, it2 = _run(t, basis, allowed, max_iter)
    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = t[r, -1]
    if status == "unbounded":
        return LpResult(status, None, None, phase1, None, it1 + it2)
    return LpResult("optimal", x, float(c @ x), phase1, None, it1 + it2)
