"""Symmetric confidence-threshold fixing, the fix/solve/fallback pipeline, and grid search.

A threshold t in (0.5, 1] fixes a binary variable to 1 when its predicted
probability is >= t and to 0 when it is <= 1 - t; everything else stays free.
The fixed subproblem goes to branch and bound; if it proves infeasible, the
variables are unfixed and the solver reruns with the same full step budget.
Grid search scores each threshold by mean primal integral over a validation
set and keeps the best (ties to the larger threshold).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import bnb
from .bnb import IncumbentTrajectory, InfeasibleSubproblem, SolverConfig
from .encoder import BipartiteGraph, encode
from .evaluation import EvalConfig, primal_integral, worst_case_objective
from .gcnn import GcnnModel, forward
from .instances import ORACLE_MAX_VARS, MilpInstance, brute_force_solve

#: Default threshold grid; brackets both conservative and aggressive fixing.
DEFAULT_GRID = (0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99, 1.0)


class InvalidThreshold(ValueError):
    """Threshold outside (0.5, 1.0]."""


@dataclass(eq=False)
class PartialAssignment:
    """Fixings keyed by position in the probability vector (binary variables only)."""

    fixings: dict[int, int]
    threshold: float
    coverage: float
    confidences: np.ndarray


@dataclass(eq=False)
class DiveOutcome:
    fixed_feasible: bool
    fell_back: bool
    partial: PartialAssignment


@dataclass(eq=False)
class ThresholdRow:
    threshold: float
    mean_coverage: float
    feasibility_rate: float
    mean_primal_integral: float


@dataclass(eq=False)
class ThresholdReport:
    rows: list[ThresholdRow]
    best_t: float


def _check_threshold(t: float) -> float:
    t = float(t)
    if not 0.5 < t <= 1.0:
        raise InvalidThreshold(f"threshold must lie in (0.5, 1.0], got {t}")
    return t


def fix_by_threshold(
    probs: np.ndarray, t: float, *, zero_threshold: float | None = None
) -> PartialAssignment:
    """Fix positions with p >= t to 1 and p <= 1 - t0 to 0 (t0 = t unless asymmetric)."""
    t = _check_threshold(t)
    t0 = t if zero_threshold is None else _check_threshold(zero_threshold)
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size and (probs.min() <= 0.0 or probs.max() >= 1.0):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    fixings: dict[int, int] = {}
    for j, p in enumerate(probs):
        if p >= t:
            fixings[j] = 1
        elif p <= 1.0 - t0:
            fixings[j] = 0
    coverage = len(fixings) / probs.size if probs.size else 0.0
    return PartialAssignment(fixings, t, coverage, probs.copy())


def to_instance_fixings(partial: PartialAssignment, binary_mask: np.ndarray) -> dict[int, int]:
    """Translate probability-vector positions into instance variable indices."""
    positions = np.flatnonzero(binary_mask)
    return {int(positions[k]): v for k, v in partial.fixings.items()}


def dive_and_solve(
    instance: MilpInstance,
    model: GcnnModel,
    t: float,
    config: SolverConfig,
    *,
    graph: BipartiteGraph | None = None,
    probs: np.ndarray | None = None,
) -> tuple[IncumbentTrajectory, DiveOutcome]:
    """Fix by threshold, solve, and rerun unfixed on infeasibility.

    The returned trajectory is the executed run's: the fixed run when it is
    feasible, otherwise the fallback run alone (with the full step budget).
    ``graph``/``probs`` can be passed to reuse a cached encoding.
    """
    if graph is None:
        graph = encode(instance)
    if probs is None:
        probs = forward(model, graph)
    partial = fix_by_threshold(probs, t)
    fixings = to_instance_fixings(partial, graph.binary_mask)
    try:
        trajectory, _ = bnb.solve(instance, fixings, config)
        return trajectory, DiveOutcome(True, False, partial)
    except InfeasibleSubproblem:
        trajectory, _ = bnb.solve(instance, {}, config)
        return trajectory, DiveOutcome(False, True, partial)


def _instance_cells(
    args: tuple[MilpInstance, GcnnModel, tuple[float, ...], SolverConfig],
) -> list[tuple[IncumbentTrajectory, DiveOutcome]]:
    """All thresholds for one instance; top-level so process pools can pick it up."""
    instance, model, ts, config = args
    graph = encode(instance)
    probs = forward(model, graph)
    return [
        dive_and_solve(instance, model, t, config, graph=graph, probs=probs) for t in ts
    ]


def grid_search(
    instances: Sequence[MilpInstance],
    model: GcnnModel,
    grid: Sequence[float],
    config: SolverConfig,
    *,
    references: Sequence[float] | None = None,
    map_fn=map,
) -> ThresholdReport:
    """Evaluate every (instance, threshold) cell and rank thresholds.

    The per-instance reference objective is the brute-force optimum when the
    oracle can afford it, otherwise the best final objective seen across all
    executed cells ("best-known"); a per-instance constant offsets every
    threshold's mean equally, so the ranking does not depend on that choice.
    ``map_fn`` may be a parallel map; aggregation stays an ordered fold.
    """
    if not grid:
        raise ValueError("threshold grid is empty")
    ts = tuple(sorted({_check_threshold(t) for t in grid}))
    if references is not None and len(references) != len(instances):
        raise ValueError("need one reference objective per instance")

    per_instance = list(
        map_fn(_instance_cells, [(inst, model, ts, config) for inst in instances])
    )

    cfgs: list[EvalConfig] = []
    for i, instance in enumerate(instances):
        no_inc = worst_case_objective(instance)
        if references is not None:
            ref = references[i]
        elif instance.n <= ORACLE_MAX_VARS and bool(instance.binary_mask().all()):
            ref = brute_force_solve(instance).objective
        else:
            finals = [
                traj.final_objective()
                for traj, _ in per_instance[i]
                if traj.final_objective() is not None
            ]
            ref = min(finals) if finals else no_inc
        cfgs.append(EvalConfig(config.step_limit, ref, max(no_inc, ref)))

    rows: list[ThresholdRow] = []
    for k, t in enumerate(ts):
        cells = [per_instance[i][k] for i in range(len(instances))]
        coverages = [outcome.partial.coverage for _, outcome in cells]
        feasible = [not outcome.fell_back for _, outcome in cells]
        pis = [primal_integral(traj, cfg) for (traj, _), cfg in zip(cells, cfgs)]
        rows.append(
            ThresholdRow(
                threshold=t,
                mean_coverage=float(np.mean(coverages)),
                feasibility_rate=float(np.mean(feasible)),
                mean_primal_integral=float(np.mean(pis)),
            )
        )
    best = rows[0]
    for row in rows[1:]:
        if row.mean_primal_integral <= best.mean_primal_integral:
            best = row  # ascending scan: equal scores resolve to the larger t
    return ThresholdReport(rows, best.threshold)


def report_to_csv(report: ThresholdReport) -> str:
    lines = ["t,coverage,feasibility_rate,mean_primal_integral"]
    for row in report.rows:
        lines.append(
            f"{repr(row.threshold)},{repr(row.mean_coverage)},"
            f"{repr(row.feasibility_rate)},{repr(row.mean_primal_integral)}"
        )
    lines.append(f"BEST t={repr(report.best_t)}")
    return "\n".join(lines) + "\n"
