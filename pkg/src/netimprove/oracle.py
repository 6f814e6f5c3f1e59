"""Brute-force ground truth: grid search over the allocation simplex.

The oracle enumerates allocations beta_e = k_e * B / R with sum k_e <= R
(an explicit slack coordinate keeps under-spending reachable, since delay
monotonicity in the budget is not assumed globally), evaluates the exact
equilibrium delay at every grid point and keeps the best.  Evaluation
dispatches to closed forms where they exist:

* affine dipoles: vectorized used-set scan over whole composition batches;
* affine parallel-path graphs: per-path conductances from the edge-level
  allocation, then the same vectorized scan at path level;
* anything else: one equilibrium solve per grid point.

Ties break toward the lexicographically smallest composition because the
generator emits compositions in lexicographic order and only strict
improvements replace the incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Iterator, NamedTuple

import numpy as np

from .core import Allocation, Instance
from .equilibrium import (
    dipole_links,
    parallel_links_delay_batch,
    solve_equilibrium,
    solve_parallel_links_equilibrium,
)
from .errors import GridTooLarge, Infeasible, NotParallelPaths, UnsupportedDelay, ValidationError
from .parallelpaths import as_parallel_paths

__all__ = [
    "GridSpec",
    "OracleResult",
    "grid_search",
    "sweep_segment",
    "evaluate_delay",
    "compositions",
    "count_compositions",
    "enumerate_discretized_minmax",
]


@dataclass(frozen=True)
class GridSpec:
    resolution: int
    max_evals: int = 10_000_000
    improvable: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.resolution < 1:
            raise ValidationError("resolution must be >= 1")
        if self.max_evals < 1:
            raise ValidationError("max_evals must be >= 1")


class OracleResult(NamedTuple):
    allocation: Allocation
    delay: float
    evaluations: int
    trace: list[tuple[dict, float]] | None


def count_compositions(total: int, parts: int) -> int:
    return comb(total + parts - 1, parts - 1)


def compositions(total: int, parts: int, chunk: int = 200_000
                 ) -> Iterator[np.ndarray]:
    """Nonnegative integer vectors summing to ``total``, lexicographically.

    Yields int32 arrays of shape (N, parts); the final coordinate is
    implied by the prefix, so inner loops vectorize over it.
    """
    if parts == 1:
        yield np.array([[total]], dtype=np.int32)
        return
    buf: list[np.ndarray] = []
    buf_rows = 0

    def outer(prefix: list[int], remaining: int, depth: int):
        nonlocal buf, buf_rows
        if depth == parts - 1:
            last = np.arange(remaining + 1, dtype=np.int32)
            block = np.empty((remaining + 1, parts), dtype=np.int32)
            if prefix:
                block[:, :depth - 1] = np.array(prefix, dtype=np.int32)
            block[:, depth - 1] = last
            block[:, depth] = remaining - last
            buf.append(block)
            buf_rows += len(block)
            if buf_rows >= chunk:
                out = np.vstack(buf)
                buf, buf_rows = [], 0
                yield out
            return
        for v in range(remaining + 1):
            yield from outer(prefix + [v], remaining - v, depth + 1)

    yield from outer([], total, 1)
    if buf:
        yield np.vstack(buf)


def _improvable_edges(inst: Instance, spec: GridSpec):
    if spec.improvable is not None:
        out = []
        for eid in spec.improvable:
            e = inst.edge_index.get(eid)
            if e is None:
                raise ValidationError(f"unknown edge {eid!r} in grid spec")
            if e.rigid:
                raise ValidationError(f"rigid edge {eid!r} cannot be improved")
            out.append(e)
        return out
    return [e for e in inst.edges if e.improvable]


def evaluate_delay(inst: Instance, alloc: Allocation, tol: float = 1e-8) -> float:
    """Equilibrium average delay under ``alloc`` via the cheapest exact route."""
    links = dipole_links(inst)
    if links is not None and all(e.affine for e in links):
        res = solve_parallel_links_equilibrium(
            links, alloc, inst.commodities[0].demand)
        return res.average_delay
    if inst.single_commodity and all(e.affine for e in inst.edges):
        try:
            ppi = as_parallel_paths(inst)
        except (NotParallelPaths, UnsupportedDelay):
            ppi = None
        if ppi is not None:
            return _paths_delay_edge_level(ppi, alloc)
    return solve_equilibrium(inst, alloc, tol=tol).average_delay


def _paths_delay_edge_level(ppi, alloc: Allocation) -> float:
    from .core import Edge
    from .equilibrium import parallel_links_delay

    links, c_eff = [], []
    for t, p in enumerate(ppi.paths):
        r = 0.0
        for e in p.edges:
            if e.rigid:
                continue
            g = e.c + e.mu * alloc.get(e.id)
            r = math.inf if g == 0.0 else r + 1.0 / g
        if r == 0.0:  # all edges rigid: constant-delay path
            links.append(Edge(f"p{t}", ppi.source, ppi.sink, b=p.length, rigid=True))
            c_eff.append(0.0)
        else:
            links.append(Edge(f"p{t}", ppi.source, ppi.sink, c=1.0, b=p.length))
            c_eff.append(0.0 if math.isinf(r) else 1.0 / r)
    L, _ = parallel_links_delay(links, c_eff, ppi.demand)
    return L


def _batch_dipole(inst: Instance, improvable, betas: np.ndarray) -> np.ndarray:
    links = inst.edges
    order = sorted((t for t, e in enumerate(links) if not e.rigid),
                   key=lambda t: (links[t].b, links[t].id))
    rigid = [e.b for e in links if e.rigid]
    cap = min(rigid) if rigid else math.inf
    b = np.array([links[t].b for t in order])
    base = np.array([links[t].c for t in order])
    c_eff = np.broadcast_to(base, (betas.shape[0], len(order))).copy()
    col_of = {links[t].id: j for j, t in enumerate(order)}
    for j, e in enumerate(improvable):
        c_eff[:, col_of[e.id]] += e.mu * betas[:, j]
    return parallel_links_delay_batch(c_eff, b, inst.commodities[0].demand, cap)


def _batch_paths(ppi, improvable, betas: np.ndarray) -> np.ndarray:
    n = betas.shape[0]
    beta_of = {e.id: betas[:, j] for j, e in enumerate(improvable)}
    cps = []
    caps = math.inf
    lengths = []
    for p in ppi.paths:
        r = np.zeros(n)
        rigid_only = True
        for e in p.edges:
            if e.rigid:
                continue
            rigid_only = False
            g = e.c + e.mu * beta_of.get(e.id, 0.0)
            with np.errstate(divide="ignore"):
                r = r + np.where(g > 0.0, 1.0 / np.maximum(g, 1e-300), np.inf)
        if rigid_only:
            caps = min(caps, p.length)
            continue
        with np.errstate(divide="ignore"):
            cps.append(np.where(np.isfinite(r), 1.0 / np.maximum(r, 1e-300), 0.0))
        lengths.append(p.length)
    # Dropped (permanently unusable) paths carry no flow at any grid point.
    if not cps:
        return np.full(n, caps)
    c_mat = np.column_stack(cps)
    return parallel_links_delay_batch(c_mat, np.array(lengths),
                                      ppi.demand, caps)


def grid_search(inst: Instance, spec: GridSpec, tol: float = 1e-8,
                keep_trace: bool = False) -> OracleResult:
    """Best allocation on the simplex grid {k * B / R : sum k <= R}."""
    improvable = _improvable_edges(inst, spec)
    R = spec.resolution
    if inst.budget == 0.0 or not improvable:
        alloc = Allocation()
        return OracleResult(alloc, evaluate_delay(inst, alloc, tol), 1, None)
    parts = len(improvable) + 1  # slack coordinate allows under-spending
    n_evals = count_compositions(R, parts)
    if n_evals > spec.max_evals:
        r_ok = R
        while r_ok > 1 and count_compositions(r_ok, parts) > spec.max_evals:
            r_ok = r_ok * 3 // 4
        raise GridTooLarge(
            f"grid needs {n_evals} evaluations (cap {spec.max_evals}); "
            f"try resolution <= {r_ok}")

    affine = all(e.affine for e in inst.edges)
    mode = "general"
    ppi = None
    if affine and dipole_links(inst) is not None:
        mode = "dipole"
    elif affine and inst.single_commodity:
        try:
            ppi = as_parallel_paths(inst)
            mode = "paths"
        except (NotParallelPaths, UnsupportedDelay):
            pass

    unit = inst.budget / R
    best_L = math.inf
    best_row: np.ndarray | None = None
    trace: list[tuple[dict, float]] | None = [] if keep_trace else None
    seen = 0
    for block in compositions(R, parts):
        betas = block[:, :-1].astype(np.float64) * unit
        if mode == "dipole":
            ls = _batch_dipole(inst, improvable, betas)
        elif mode == "paths":
            ls = _batch_paths(ppi, improvable, betas)
        else:
            ls = np.empty(len(betas))
            for r in range(len(betas)):
                alloc = Allocation({e.id: betas[r, j]
                                    for j, e in enumerate(improvable)})
                try:
                    ls[r] = evaluate_delay(inst, alloc, tol)
                except Infeasible:
                    ls[r] = math.inf
        seen += len(betas)
        if trace is not None:
            for r in range(len(betas)):
                trace.append(({e.id: float(betas[r, j])
                               for j, e in enumerate(improvable)}, float(ls[r])))
        idx = int(np.argmin(ls))
        if ls[idx] < best_L:
            best_L = float(ls[idx])
            best_row = betas[idx].copy()
    if best_row is None or not math.isfinite(best_L):
        raise Infeasible("no grid allocation admits a feasible routing")
    alloc = Allocation({e.id: float(best_row[j])
                        for j, e in enumerate(improvable) if best_row[j] > 0.0})
    return OracleResult(alloc, best_L, seen, trace)


def sweep_segment(inst: Instance, beta_from: Allocation, beta_to: Allocation,
                  steps: int, tol: float = 1e-8) -> list[tuple[float, float]]:
    """Delay along the line segment between two allocations."""
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    beta_from.validate_for(inst)
    beta_to.validate_for(inst)
    keys = sorted(set(beta_from.beta) | set(beta_to.beta))
    out = []
    for i in range(steps + 1):
        lam = i / steps
        alloc = Allocation({k: (1.0 - lam) * beta_from.get(k) + lam * beta_to.get(k)
                            for k in keys})
        out.append((lam, evaluate_delay(inst, alloc, tol)))
    return out


# ---------------------------------------------------------------------------
# Exhaustive reference for the discretized min-max table


def enumerate_discretized_minmax(inst: Instance, K: int) -> np.ndarray:
    """Table T[k, l] = min over discretized allocations of total k * B/K and
    discretized flows of value l * d/K of the maximum delay over paths whose
    every edge carries positive flow.

    Pure enumeration over edge-budget compositions and path-flow
    compositions; intended as an independent reference for the dynamic
    program on small graphs (a handful of edges, K of a few units).
    """
    if not inst.single_commodity:
        raise ValidationError("single-commodity instances only")
    from .core import edge_delay

    k0 = inst.commodities[0]
    paths = inst.simple_paths(k0.source, k0.sink, cap=64)
    edges = inst.edges
    m = len(edges)
    d_unit = k0.demand / K
    b_unit = inst.budget / K

    table = np.zeros((K + 1, K + 1))
    alloc_rows = {k: np.vstack(list(compositions(k, m))) if m > 1 else
                  np.array([[k]], dtype=np.int32) for k in range(K + 1)}
    flow_rows = {}
    for l in range(K + 1):
        rows = (np.vstack(list(compositions(l, len(paths))))
                if len(paths) > 1 else np.array([[l]], dtype=np.int32))
        flow_rows[l] = rows

    for k in range(K + 1):
        for l in range(K + 1):
            if l == 0:
                table[k, l] = 0.0
                continue
            best = math.inf
            for arow in alloc_rows[k]:
                beta = {e.id: float(arow[j]) * b_unit for j, e in enumerate(edges)}
                for frow in flow_rows[l]:
                    f: dict[str, float] = {}
                    for pj, units in enumerate(frow):
                        if units == 0:
                            continue
                        for eid in paths[pj]:
                            f[eid] = f.get(eid, 0.0) + float(units) * d_unit
                    worst = -math.inf
                    for p in paths:
                        if all(f.get(eid, 0.0) > 0.0 for eid in p):
                            dl = sum(edge_delay(inst.edge_index[eid], f[eid],
                                                beta[eid]) for eid in p)
                            worst = max(worst, dl)
                    if worst == -math.inf:
                        continue
                    best = min(best, worst)
            table[k, l] = best
    return table
