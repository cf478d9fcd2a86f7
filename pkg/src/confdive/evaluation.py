"""Primal-integral metrics, method comparison tables, and SVG primal-bound plots.

The primal integral is the piecewise-constant integral of the incumbent
objective over the step horizon [0, T], minus T times a reference objective;
before the first incumbent the bound sits at a configured no-incumbent value.
Cumulative reward is its negation. Horizontal-step SVG charts are emitted as
deterministic bytes with no plotting dependency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bnb import IncumbentTrajectory
from .instances import MilpInstance

SVG_WIDTH = 800
SVG_HEIGHT = 500

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class EventBeyondHorizon(ValueError):
    """A trajectory event lies past the evaluation horizon."""


@dataclass(frozen=True)
class EvalConfig:
    step_limit: int
    reference_objective: float
    no_incumbent_value: float

    def __post_init__(self):
        if self.step_limit < 1:
            raise ValueError("step_limit must be >= 1")
        if self.no_incumbent_value < self.reference_objective:
            raise ValueError("no_incumbent_value must be >= reference_objective")


@dataclass(eq=False)
class EvalRow:
    instance: str
    method: str
    primal_integral: float
    cumulative_reward: float
    first_incumbent_step: int | None
    final_objective: float | None


def primal_integral(traj: IncumbentTrajectory, cfg: EvalConfig) -> float:
    """Area between the incumbent step function and the reference over [0, T]."""
    t_limit = cfg.step_limit
    prev_step = 0
    prev_level = cfg.no_incumbent_value
    total = 0.0
    last: int | None = None
    for event in traj.events:
        if event.step > t_limit:
            raise EventBeyondHorizon(f"event at step {event.step} exceeds horizon {t_limit}")
        if event.step < 0 or (last is not None and event.step <= last):
            raise ValueError("trajectory steps must be nonnegative and strictly increasing")
        last = event.step
        total += prev_level * (event.step - prev_step)
        prev_step = event.step
        prev_level = event.objective
    total += prev_level * (t_limit - prev_step)
    return total - t_limit * cfg.reference_objective


def cumulative_reward(traj: IncumbentTrajectory, cfg: EvalConfig) -> float:
    return -primal_integral(traj, cfg)


def worst_case_objective(instance: MilpInstance) -> float:
    """Largest possible objective over the box: each variable at its worst bound."""
    c = instance.objective_vector()
    lb, ub = instance.bounds_arrays()
    worst = np.where(c > 0, c * ub, c * lb)
    worst[c == 0] = 0.0
    return float(worst.sum())


def make_row(
    instance_name: str, method: str, traj: IncumbentTrajectory, cfg: EvalConfig
) -> EvalRow:
    pi = primal_integral(traj, cfg)
    return EvalRow(
        instance=instance_name,
        method=method,
        primal_integral=pi,
        cumulative_reward=-pi,
        first_incumbent_step=traj.first_step(),
        final_objective=traj.final_objective(),
    )


def compare(
    instances: Sequence[MilpInstance],
    methods: Sequence[tuple[str, Callable[[MilpInstance], IncumbentTrajectory]]],
    cfgs: Sequence[EvalConfig],
) -> tuple[list[EvalRow], dict[str, tuple[float, float]]]:
    """Run every labeled method on every instance under its EvalConfig.

    Returns per-(instance, method) rows plus per-method
    (mean primal integral, mean cumulative reward) summaries.
    """
    if len(instances) != len(cfgs):
        raise ValueError("need one EvalConfig per instance")
    rows: list[EvalRow] = []
    per_method: dict[str, list[float]] = {label: [] for label, _ in methods}
    for instance, cfg in zip(instances, cfgs):
        for label, run in methods:
            traj = run(instance)
            row = make_row(instance.name, label, traj, cfg)
            rows.append(row)
            per_method[label].append(row.primal_integral)
    summary = {
        label: (float(np.mean(pis)), float(-np.mean(pis)))
        for label, pis in per_method.items()
    }
    return rows, summary


def rows_to_csv(rows: Sequence[EvalRow]) -> str:
    lines = ["instance,method,primal_integral,cumulative_reward,first_incumbent_step,final_objective"]
    for r in rows:
        first = "" if r.first_incumbent_step is None else str(r.first_incumbent_step)
        final = "" if r.final_objective is None else repr(float(r.final_objective))
        lines.append(
            f"{r.instance},{r.method},{repr(float(r.primal_integral))},"
            f"{repr(float(r.cumulative_reward))},{first},{final}"
        )
    return "\n".join(lines) + "\n"


def summary_to_csv(summary: dict[str, tuple[float, float]]) -> str:
    lines = ["method,mean_primal_integral,mean_cumulative_reward"]
    for label, (pi, reward) in summary.items():
        lines.append(f"{label},{repr(float(pi))},{repr(float(reward))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG primal-bound chart
# ---------------------------------------------------------------------------


def _fmt_coord(x: float) -> str:
    return f"{x:.2f}"


def plot_primal_bound(
    trajectories: Sequence[tuple[str, IncumbentTrajectory]], cfg: EvalConfig
) -> str:
    """Step-function chart of primal bounds over steps; deterministic bytes."""
    if not trajectories:
        raise ValueError("need at least one labeled trajectory")
    left, right, top, bottom = 70.0, 20.0, 20.0, 45.0
    plot_w = SVG_WIDTH - left - right
    plot_h = SVG_HEIGHT - top - bottom

    objs = [e.objective for _, traj in trajectories for e in traj.events]
    y_min = min(objs) if objs else 0.0
    y_max = max(objs) if objs else 1.0
    if y_max - y_min < 1e-12:
        y_min -= 1.0
        y_max += 1.0
    pad = 0.05 * (y_max - y_min)
    y_min -= pad
    y_max += pad
    x_max = float(cfg.step_limit)

    def sx(x: float) -> float:
        return left + (x / x_max) * plot_w

    def sy(y: float) -> float:
        return top + (y_max - y) / (y_max - y_min) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{_fmt_coord(left)}" y1="{_fmt_coord(top + plot_h)}" '
        f'x2="{_fmt_coord(left + plot_w)}" y2="{_fmt_coord(top + plot_h)}" stroke="black"/>',
        f'<line x1="{_fmt_coord(left)}" y1="{_fmt_coord(top)}" '
        f'x2="{_fmt_coord(left)}" y2="{_fmt_coord(top + plot_h)}" stroke="black"/>',
    ]
    for i in range(5):
        xv = x_max * i / 4
        x = sx(xv)
        parts.append(
            f'<line x1="{_fmt_coord(x)}" y1="{_fmt_coord(top + plot_h)}" '
            f'x2="{_fmt_coord(x)}" y2="{_fmt_coord(top + plot_h + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt_coord(x)}" y="{_fmt_coord(top + plot_h + 20)}" '
            f'font-size="12" text-anchor="middle">{xv:g}</text>'
        )
        yv = y_min + (y_max - y_min) * i / 4
        y = sy(yv)
        parts.append(
            f'<line x1="{_fmt_coord(left - 5)}" y1="{_fmt_coord(y)}" '
            f'x2="{_fmt_coord(left)}" y2="{_fmt_coord(y)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt_coord(left - 8)}" y="{_fmt_coord(y + 4)}" '
            f'font-size="12" text-anchor="end">{yv:.6g}</text>'
        )
    parts.append(
        f'<text x="{_fmt_coord(left + plot_w / 2)}" y="{_fmt_coord(SVG_HEIGHT - 8)}" '
        f'font-size="13" text-anchor="middle">step</text>'
    )
    parts.append(
        f'<text x="16" y="{_fmt_coord(top + plot_h / 2)}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {_fmt_coord(top + plot_h / 2)})">primal bound</text>'
    )

    for k, (label, traj) in enumerate(trajectories):
        color = _PALETTE[k % len(_PALETTE)]
        if traj.events:
            pts: list[str] = []
            prev_obj = traj.events[0].objective
            pts.append(f"{_fmt_coord(sx(traj.events[0].step))},{_fmt_coord(sy(prev_obj))}")
            for event in traj.events[1:]:
                pts.append(f"{_fmt_coord(sx(event.step))},{_fmt_coord(sy(prev_obj))}")
                pts.append(f"{_fmt_coord(sx(event.step))},{_fmt_coord(sy(event.objective))}")
                prev_obj = event.objective
            pts.append(f"{_fmt_coord(sx(x_max))},{_fmt_coord(sy(prev_obj))}")
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'points="{" ".join(pts)}"/>'
            )
        ly = top + 16 + 18 * k
        lx = left + plot_w - 150
        parts.append(
            f'<line x1="{_fmt_coord(lx)}" y1="{_fmt_coord(ly - 4)}" '
            f'x2="{_fmt_coord(lx + 24)}" y2="{_fmt_coord(ly - 4)}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_fmt_coord(lx + 30)}" y="{_fmt_coord(ly)}" font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
