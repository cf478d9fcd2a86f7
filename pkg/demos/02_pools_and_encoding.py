"""Collect solution pools for training targets and encode instances as bipartite graphs.

Run: python3 demos/02_pools_and_encoding.py
"""

import numpy as np

from confdive import (
    SolverConfig,
    compute_solution_weights,
    encode,
    generate_covering,
    graph_to_csv,
    serialize_pool,
    solve,
)

instance = generate_covering(seed=42, n_vars=14, n_rows=9)

# Aggressive heuristic emphasis dives at every node, so a budgeted solve
# yields several distinct feasible solutions, not just the final incumbent.
config = SolverConfig(
    step_limit=120, heuristic_emphasis="aggressive", collect_pool=True, pool_size=5
)
_, pool = solve(instance, {}, config)
print(f"pool for {pool.instance_name}: {len(pool.entries)} solutions")
print("objectives:", [entry.objective for entry in pool.entries])

# Better solutions get larger training weights: a softmax over negated
# min-max-normalized objectives. Weights sum to one per instance.
weights = compute_solution_weights(pool, temperature=1.0)
print("weights:   ", np.round(weights, 3))

# Pools serialize in the SOL format, one block per solution.
print()
print("first pool block on disk:")
print(serialize_pool(pool, instance).split("---\n")[0])

# The model input is a bipartite graph: variable nodes, constraint nodes,
# one edge per nonzero coefficient, every feature normalized into [-1, 1].
graph = encode(instance)
print(f"graph: {graph.n_vars} variable nodes x {graph.n_cons} constraint nodes, "
      f"{graph.n_edges} edges")
print("variable feature rows (obj, is_binary, lb, ub, root LP value):")
print(np.round(graph.var_feats[:4], 3))

var_csv, _, edge_csv = graph_to_csv(graph)
print("debug CSV, first lines:")
print("\n".join(var_csv.splitlines()[:3]))
print("\n".join(edge_csv.splitlines()[:3]))
