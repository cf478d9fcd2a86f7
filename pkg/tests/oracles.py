"""Independent oracles used by the tests: exhaustive enumerations, no solver code."""

from __future__ import annotations

import itertools

import numpy as np

from confdive.instances import MilpInstance


def enumerate_binary_optimum(instance: MilpInstance, tol: float = 1e-9):
    """Exhaustive minimum over binary assignments via itertools; None if infeasible.

    Ties resolve to the lexicographically smallest vector because product()
    emits vectors in lexicographic order and only strict improvements replace.
    """
    A, b = instance.dense_matrix()
    c = instance.objective_vector()
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=instance.n):
        x = np.array(bits)
        if instance.m and np.any(A @ x > b + tol):
            continue
        obj = float(c @ x)
        if best is None or obj < best[0]:
            best = (obj, x)
    return best


def enumerate_lp_optimum(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    tol: float = 1e-7,
):
    """Exhaustive vertex enumeration for a box-bounded LP; returns (objective, x).

    Every vertex is the intersection of n active constraints drawn from the
    rows and the bound planes. Assumes the feasible region is a polytope
    (finite bounds), so the optimum sits on some vertex.
    """
    n = c.shape[0]
    rows = [(A[i], b[i]) for i in range(A.shape[0])]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append((e.copy(), ub[j]))
        rows.append((-e, -lb[j]))
    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in combo])
        rhs = np.array([rows[i][1] for i in combo])
        try:
            x = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.any(x < lb - tol) or np.any(x > ub + tol):
            continue
        if A.shape[0] and np.any(A @ x > b + tol):
            continue
        obj = float(c @ x)
        if best is None or obj < best[0] - 1e-12:
            best = (obj, x)
    return best


def random_feasible_lp(rng: np.random.Generator, n_vars: int, n_rows: int):
    """A random bounded LP guaranteed feasible: rhs gives an interior point slack."""
    c = rng.uniform(-5, 5, n_vars)
    A = rng.uniform(-3, 3, size=(n_rows, n_vars))
    ub = rng.uniform(1, 3, n_vars)
    lb = np.zeros(n_vars)
    x0 = rng.uniform(0.2, 0.8, n_vars) * ub
    b = A @ x0 + rng.uniform(0.1, 1.0, n_rows)
    return c, A, b, lb, ub
