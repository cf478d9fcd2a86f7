"""Dense two-phase simplex for the LP relaxation of a (possibly fixed) instance.

Dantzig pricing with a switch to Bland's rule after 1000 degenerate pivots.
Feasibility tolerance 1e-7, optimality tolerance 1e-9. Instances at desk
scale (a few hundred variables) need no sparse machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np

from .instances import MilpInstance

LpStatus = Literal["optimal", "infeasible", "unbounded"]

FEASIBILITY_TOL = 1e-7
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-10
DEGENERATE_PIVOT_LIMIT = 1000


class NumericalBreakdown(RuntimeError):
    """Pivoting could not make progress even under Bland's rule."""


@dataclass(frozen=True, eq=False)
class LpResult:
    status: LpStatus
    objective: float
    primal_values: np.ndarray


def solve_lp(
    instance: MilpInstance,
    fixings: Mapping[int, float] | None = None,
    *,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> LpResult:
    """Solve the LP relaxation with ``fixings`` applied as equality bounds.

    ``bounds`` optionally replaces the instance's (lb, ub) arrays; branch and
    bound uses it to pass node-local bound tightenings.
    """
    if bounds is None:
        lo, hi = instance.bounds_arrays()
    else:
        lo, hi = bounds[0].copy(), bounds[1].copy()
    if fixings:
        for j, v in fixings.items():
            if not 0 <= j < instance.n:
                raise ValueError(f"fixing index {j} out of range")
            v = float(v)
            if v < lo[j] - 1e-9 or v > hi[j] + 1e-9:
                raise ValueError(
                    f"fixing {v} for variable {j} lies outside its bounds [{lo[j]}, {hi[j]}]"
                )
            lo[j] = hi[j] = v
    c = instance.objective_vector()
    A, b = instance.dense_matrix()
    return _solve_lp_arrays(c, A, b, lo, hi)


def _solve_lp_arrays(
    c: np.ndarray, A: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> LpResult:
    n = c.shape[0]
    m = A.shape[0]

    fixed = lo == hi
    x_fixed = np.where(fixed, lo, 0.0)
    b_eff = b - A[:, fixed] @ lo[fixed]

    # Shift every remaining variable to y >= 0; finite ranges get a cap row.
    cols: list[np.ndarray] = []
    costs: list[float] = []
    caps: list[float] = []  # inf when uncapped
    backmap: list[tuple[int, float, float]] = []  # (var index, offset, sign): x = offset + sign*y
    for j in np.flatnonzero(~fixed):
        aj = A[:, j]
        if np.isfinite(lo[j]):
            cols.append(aj)
            costs.append(float(c[j]))
            caps.append(float(hi[j] - lo[j]) if np.isfinite(hi[j]) else np.inf)
            backmap.append((int(j), float(lo[j]), 1.0))
            if lo[j] != 0.0:
                b_eff = b_eff - aj * lo[j]
        elif np.isfinite(hi[j]):
            cols.append(-aj)
            costs.append(float(-c[j]))
            caps.append(np.inf)
            backmap.append((int(j), float(hi[j]), -1.0))
            if hi[j] != 0.0:
                b_eff = b_eff - aj * hi[j]
        else:  # free: split x = y+ - y-
            cols.append(aj)
            costs.append(float(c[j]))
            caps.append(np.inf)
            backmap.append((int(j), 0.0, 1.0))
            cols.append(-aj)
            costs.append(float(-c[j]))
            caps.append(np.inf)
            backmap.append((int(j), 0.0, -1.0))

    n_y = len(cols)
    cap_idx = [k for k in range(n_y) if np.isfinite(caps[k])]
    A_std = np.zeros((m + len(cap_idx), n_y))
    if n_y:
        A_std[:m] = np.column_stack(cols)
    b_std = np.concatenate([b_eff, np.array([caps[k] for k in cap_idx], dtype=np.float64)])
    for r, k in enumerate(cap_idx):
        A_std[m + r, k] = 1.0
    c_std = np.array(costs, dtype=np.float64)

    status, y = _two_phase(A_std, b_std, c_std)
    if status == "infeasible":
        return LpResult("infeasible", float("inf"), np.full(n, np.nan))
    x = x_fixed.copy()
    seen_offset: set[int] = set()
    for k, (j, offset, sign) in enumerate(backmap):
        if j not in seen_offset:
            x[j] += offset
            seen_offset.add(j)
        x[j] += sign * y[k]
    np.clip(x, lo, hi, out=x)
    if status == "unbounded":
        return LpResult("unbounded", float("-inf"), x)
    if m:
        worst = float(np.max(A @ x - b))
        if worst > 1e-6:
            raise NumericalBreakdown(f"optimal point violates a row by {worst:.3e}")
    return LpResult("optimal", float(c @ x), x)


def _two_phase(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> tuple[LpStatus, np.ndarray]:
    """min c.y s.t. A y <= b, y >= 0. Returns (status, y)."""
    n_rows, n_y = A.shape
    neg = b < 0
    n_art = int(neg.sum())
    n_cols = n_y + n_rows + n_art

    M = np.zeros((n_rows, n_cols + 1))
    basis = np.empty(n_rows, dtype=np.int64)
    art_base = n_y + n_rows
    a_i = 0
    for i in range(n_rows):
        if neg[i]:
            M[i, :n_y] = -A[i]
            M[i, n_y + i] = -1.0  # surplus
            M[i, art_base + a_i] = 1.0
            M[i, -1] = -b[i]
            basis[i] = art_base + a_i
            a_i += 1
        else:
            M[i, :n_y] = A[i]
            M[i, n_y + i] = 1.0  # slack
            M[i, -1] = b[i]
            basis[i] = n_y + i

    if n_art:
        cost1 = np.zeros(n_cols + 1)
        cost1[art_base:n_cols] = 1.0
        for r in range(n_rows):
            if basis[r] >= art_base:
                cost1 -= M[r]
        enterable = np.ones(n_cols, dtype=bool)
        enterable[art_base:] = False
        status = _pivot_until_optimal(M, cost1, basis, enterable)
        if status != "optimal" or -cost1[-1] > FEASIBILITY_TOL:
            return "infeasible", np.zeros(n_y)
        keep = _drive_out_artificials(M, basis, art_base)
        M = np.concatenate([M[keep, :art_base], M[keep, -1:]], axis=1)
        basis = basis[keep]
        n_cols = art_base

    cost2 = np.zeros(n_cols + 1)
    cost2[:n_y] = c
    for r in range(len(basis)):
        j = basis[r]
        if cost2[j] != 0.0:
            cost2 -= cost2[j] * M[r]
    enterable = np.ones(n_cols, dtype=bool)
    status = _pivot_until_optimal(M, cost2, basis, enterable)
    y = np.zeros(n_y)
    for r, j in enumerate(basis):
        if j < n_y:
            y[j] = max(M[r, -1], 0.0)
    return ("unbounded" if status == "unbounded" else "optimal"), y


def _pivot_until_optimal(
    M: np.ndarray, costrow: np.ndarray, basis: np.ndarray, enterable: np.ndarray
) -> LpStatus:
    degenerate = 0
    bland = False
    max_iter = 20000 + 200 * (M.shape[0] + M.shape[1])
    for _ in range(max_iter):
        red = costrow[:-1]
        candidates = np.flatnonzero((red < -OPTIMALITY_TOL) & enterable)
        if candidates.size == 0:
            return "optimal"
        if bland:
            q = int(candidates[0])
        else:
            q = int(candidates[np.argmin(red[candidates])])
        col = M[:, q]
        pos = col > PIVOT_TOL
        if not pos.any():
            return "unbounded"
        rhs = np.maximum(M[:, -1], 0.0)
        ratios = np.full(M.shape[0], np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        best = ratios.min()
        tied = np.flatnonzero(ratios <= best + 1e-12)
        if bland:
            p = int(tied[np.argmin(basis[tied])])
        else:
            p = int(tied[0])
        if M[p, q] < PIVOT_TOL:
            raise NumericalBreakdown(f"pivot magnitude {M[p, q]:.3e} below tolerance")
        if best <= 1e-12:
            degenerate += 1
            if degenerate >= DEGENERATE_PIVOT_LIMIT:
                bland = True
        else:
            degenerate = 0
        _pivot(M, costrow, basis, p, q)
    raise NumericalBreakdown("simplex iteration limit exceeded")


def _pivot(M: np.ndarray, costrow: np.ndarray, basis: np.ndarray, p: int, q: int) -> None:
    M[p] /= M[p, q]
    col = M[:, q].copy()
    col[p] = 0.0
    M -= np.outer(col, M[p])
    costrow -= costrow[q] * M[p]
    basis[p] = q


def _drive_out_artificials(M: np.ndarray, basis: np.ndarray, art_base: int) -> np.ndarray:
    """Pivot basic artificials onto real columns; returns a row keep-mask."""
    keep = np.ones(M.shape[0], dtype=bool)
    for r in range(M.shape[0]):
        if basis[r] < art_base:
            continue
        row = M[r, :art_base]
        nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
        if nz.size == 0:
            keep[r] = False  # redundant row
            continue
        q = int(nz[0])
        dummy = np.zeros(M.shape[1])
        _pivot(M, dummy, basis, r, q)
    return keep
