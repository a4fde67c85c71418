"""Dependency-graph construction by nodewise stepwise regression.

Each variable is regressed on all the others with the selection cutoff
tightened to alpha/q to account for the q regressions; a selected
regressor becomes an edge.  By default an edge needs only one of the two
directed discoveries (OR rule); the AND variant is computed alongside.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from .engine import Dataset, make_dataset, standardize
from .lsq import SelectorConfig, select

__all__ = ["GraphResult", "build_graph"]


@dataclass(frozen=True)
class GraphResult:
    """Edges with per-edge provenance (which nodewise regressions fired).

    Edges are unordered 0-based index pairs (i, j) with i < j.  The OR
    rule joins on any directed discovery; ``edges_and`` keeps only pairs
    discovered in both directions.
    """

    nodes: int
    edges: tuple[tuple[int, int], ...]
    edges_and: tuple[tuple[int, int], ...]
    provenance: dict[tuple[int, int], tuple[int, ...]]
    alpha: float
    cutoff: float
    failures: dict[int, str]

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": self.nodes,
            "alpha": self.alpha,
            "cutoff": self.cutoff,
            "edge_count": self.edge_count,
            "edges": [[i + 1, j + 1] for i, j in self.edges],
            "edges_and": [[i + 1, j + 1] for i, j in self.edges_and],
            "provenance": {f"{i + 1}-{j + 1}": [s + 1 for s in srcs]
                           for (i, j), srcs in self.provenance.items()},
            "failures": {str(k + 1): v for k, v in self.failures.items()},
        }


def build_graph(data, alpha: float = 0.05, threads: int = 1,
                cfg: SelectorConfig | None = None) -> GraphResult:
    """Nodewise selection over the columns of ``data``.

    ``data`` is a Dataset (its response is ignored) or a plain n-by-q
    matrix whose columns are the variables.  Per-node failures are
    recorded, not fatal.  Node order fixes the aggregation, so the result
    does not depend on the thread count.
    """
    x = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    n, q = x.shape
    if q < 2:
        return GraphResult(q, (), (), {}, alpha, alpha / max(q, 1), {})
    cutoff = alpha / q
    node_cfg = SelectorConfig(
        alpha=cutoff,
        rule=(cfg.rule if cfg else SelectorConfig().rule),
        max_steps=(cfg.max_steps if cfg else None),
    )

    def regress(j: int):
        others = np.array([c for c in range(q) if c != j])
        try:
            ds = standardize(make_dataset(x[:, j], x[:, others]))
            trace = select(ds, node_cfg)
            return [int(others[s.index]) for s in trace.steps], None
        except Exception as exc:  # per-node failure is data, not a crash
            return [], f"{type(exc).__name__}: {exc}"

    nodes = range(q)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(regress, nodes))
    else:
        results = [regress(j) for j in nodes]

    directed: dict[int, list[int]] = {}
    failures: dict[int, str] = {}
    for j, (sel, err) in zip(nodes, results):
        directed[j] = sel
        if err is not None:
            failures[j] = err

    provenance: dict[tuple[int, int], list[int]] = {}
    for j in nodes:
        for k in directed[j]:
            key = (min(j, k), max(j, k))
            provenance.setdefault(key, []).append(j)
    edges = tuple(sorted(provenance))
    edges_and = tuple(e for e in edges if len(set(provenance[e])) == 2)
    prov = {e: tuple(sorted(set(provenance[e]))) for e in edges}
    return GraphResult(q, edges, edges_and, prov, alpha, cutoff, failures)
