"""Instance -> bipartite variable/constraint graph with normalized features.

Variable features: [objective / max|c|, is_binary, lb / B, ub / B, root LP
value / B] where B is the largest finite bound magnitude (guarded). Constraint
features: [rhs / max(|b|, 1), row degree / n]. Edge feature: coefficient
divided by the largest magnitude in its row. Everything lands in [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import MilpInstance
from .simplex import solve_lp

VAR_FEATURE_DIM = 5
CON_FEATURE_DIM = 2


@dataclass(eq=False)
class BipartiteGraph:
    var_feats: np.ndarray  # [n_vars, VAR_FEATURE_DIM]
    con_feats: np.ndarray  # [n_cons, CON_FEATURE_DIM]
    edge_con: np.ndarray  # [n_edges] constraint indices
    edge_var: np.ndarray  # [n_edges] variable indices
    edge_feat: np.ndarray  # [n_edges]
    binary_mask: np.ndarray  # [n_vars] bool

    @property
    def n_vars(self) -> int:
        return self.var_feats.shape[0]

    @property
    def n_cons(self) -> int:
        return self.con_feats.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_con.shape[0]

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(ci), int(vi), float(f))
            for ci, vi, f in zip(self.edge_con, self.edge_var, self.edge_feat)
        ]


def encode(instance: MilpInstance, include_root_lp: bool = True) -> BipartiteGraph:
    """Deterministic feature encoding; one edge per nonzero coefficient."""
    n, m = instance.n, instance.m
    c = instance.objective_vector()
    lb, ub = instance.bounds_arrays()
    binary = instance.binary_mask()

    c_denom = max(float(np.max(np.abs(c))) if n else 0.0, 1e-12)
    finite_bounds = np.abs(np.concatenate([lb[np.isfinite(lb)], ub[np.isfinite(ub)]]))
    b_denom_bounds = max(float(finite_bounds.max()) if finite_bounds.size else 0.0, 1e-12)

    root_vals = np.zeros(n)
    if include_root_lp:
        res = solve_lp(instance)
        if res.status == "optimal":
            root_vals = res.primal_values

    var_feats = np.zeros((n, VAR_FEATURE_DIM))
    var_feats[:, 0] = c / c_denom
    var_feats[:, 1] = binary.astype(np.float64)
    var_feats[:, 2] = np.clip(lb / b_denom_bounds, -1.0, 1.0)
    var_feats[:, 3] = np.clip(ub / b_denom_bounds, -1.0, 1.0)
    var_feats[:, 4] = np.clip(root_vals / b_denom_bounds, -1.0, 1.0)

    rhs = np.array([con.rhs for con in instance.constraints], dtype=np.float64)
    rhs_denom = max(float(np.max(np.abs(rhs))) if m else 0.0, 1.0)
    con_feats = np.zeros((m, CON_FEATURE_DIM))
    edge_con: list[int] = []
    edge_var: list[int] = []
    edge_feat: list[float] = []
    for i, con in enumerate(instance.constraints):
        coefs = np.array([a for _, a in con.terms], dtype=np.float64)
        con_feats[i, 0] = con.rhs / rhs_denom
        con_feats[i, 1] = len(con.terms) / n
        row_denom = max(float(np.max(np.abs(coefs))) if coefs.size else 0.0, 1e-12)
        for j, a in con.terms:
            edge_con.append(i)
            edge_var.append(j)
            edge_feat.append(a / row_denom)

    return BipartiteGraph(
        var_feats=var_feats,
        con_feats=con_feats,
        edge_con=np.asarray(edge_con, dtype=np.int64),
        edge_var=np.asarray(edge_var, dtype=np.int64),
        edge_feat=np.asarray(edge_feat, dtype=np.float64),
        binary_mask=binary,
    )


def graph_to_csv(graph: BipartiteGraph) -> tuple[str, str, str]:
    """Debug dump: (variable table, constraint table, edge table) as CSV text."""
    var_lines = ["index,obj_norm,is_binary,lb_norm,ub_norm,root_lp_norm"]
    for i, row in enumerate(graph.var_feats):
        var_lines.append(f"{i}," + ",".join(repr(float(x)) for x in row))
    con_lines = ["index,rhs_norm,degree_norm"]
    for i, row in enumerate(graph.con_feats):
        con_lines.append(f"{i}," + ",".join(repr(float(x)) for x in row))
    edge_lines = ["con_index,var_index,coef_norm"]
    for ci, vi, f in zip(graph.edge_con, graph.edge_var, graph.edge_feat):
        edge_lines.append(f"{int(ci)},{int(vi)},{repr(float(f))}")
    return (
        "\n".join(var_lines) + "\n",
        "\n".join(con_lines) + "\n",
        "\n".join(edge_lines) + "\n",
    )
