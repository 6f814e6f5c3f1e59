"""Wardrop equilibria and the average delay for a fixed allocation.

The equilibrium flow is the unique minimizer of the potential

    Phi(f) = sum_e integral_0^{f_e} delay_e(x, beta_e) dx

over the product of per-commodity flow polytopes.  Two engines implement
the minimization:

* A path-based active-set solver.  All simple paths per commodity are
  enumerated (graphs here are desk scale); the solver maintains the set of
  flow-carrying paths, equalizes their delays by a direct linear solve in
  the affine case or damped Newton otherwise, and exchanges paths in and
  out of the set until the Wardrop condition holds.  This reaches machine
  precision, which the tolerance contracts downstream rely on.

* Frank-Wolfe on edge flows, used when path enumeration exceeds its cap.
  The linear subproblem is a nonnegative-delay shortest path per commodity
  and the step size comes from bisection on the univariate convex step
  objective.  Its duality gap converges like O(1/k), so very tight
  tolerances are out of reach; a warning is issued if the iteration cap is
  hit first.

Either way the returned certificate is the relative duality gap
(Phi(f) - linearized lower bound) / Phi(f), and used-path delays per
commodity agree with the common delay to within the gap.

Dipole graphs (parallel links between the terminals) with affine delays
additionally get an exact closed form: with effective conductances g_e the
common delay over a used set S is (d + sum_S g_e b_e) / sum_S g_e, and the
used set grows along links sorted by length until the delay fits under the
next link's length.  Rigid links cap the delay at their length and absorb
the residual flow.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    Allocation,
    Edge,
    FlowState,
    Instance,
    edge_delay,
    edge_delay_integral,
    effective_conductance,
)
from .errors import Infeasible, UnsupportedDelay, ValidationError

__all__ = [
    "EquilibriumResult",
    "beckmann_potential",
    "solve_equilibrium",
    "solve_parallel_links_equilibrium",
    "parallel_links_delay",
    "parallel_links_delay_batch",
    "dipole_links",
]

_BOUNDARY_TOL = 1e-12  # used-set inclusion tolerance at delay == length ties


@dataclass(frozen=True)
class EquilibriumResult:
    flow: FlowState
    common_delay: tuple[float, ...]
    average_delay: float
    duality_gap: float
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "L": self.average_delay,
            "common_delay": list(self.common_delay),
            "flow": {k: v for k, v in sorted(self.flow.edge_flow.items())},
            "gap": self.duality_gap,
        }


def beckmann_potential(flow: FlowState | dict, beta: Allocation | None,
                       inst: Instance) -> float:
    """Potential of a flow: sum of per-edge delay integrals."""
    beta = beta or Allocation()
    fmap = flow.edge_flow if isinstance(flow, FlowState) else flow
    total = 0.0
    for e in inst.edges:
        x = fmap.get(e.id, 0.0)
        if x < 0:
            raise ValidationError(f"negative flow on edge {e.id!r}")
        total += edge_delay_integral(e, x, beta.get(e.id))
    return total


def _usable(edge: Edge, beta: Allocation) -> bool:
    return edge.rigid or effective_conductance(edge, beta.get(edge.id)) > 0.0


def _shortest_path(inst: Instance, delays: dict[str, float], source: str,
                   sink: str) -> tuple[float, tuple[str, ...] | None]:
    """Dijkstra over edges with finite delay; deterministic tie-breaking."""
    dist = {source: 0.0}
    prev: dict[str, str] = {}
    heap: list[tuple[float, str]] = [(0.0, source)]
    done: set[str] = set()
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == sink:
            break
        for e in inst.out_edges[u]:
            w = delays.get(e.id, math.inf)
            if not math.isfinite(w):
                continue
            nd = du + w
            if nd < dist.get(e.head, math.inf):
                dist[e.head] = nd
                prev[e.head] = e.id
                heapq.heappush(heap, (nd, e.head))
    if sink not in dist:
        return math.inf, None
    path: list[str] = []
    u = sink
    while u != source:
        eid = prev[u]
        path.append(eid)
        u = inst.edge_index[eid].tail
    path.reverse()
    return dist[sink], tuple(path)


# ---------------------------------------------------------------------------
# Path-based active-set engine


class _PathProblem:
    def __init__(self, inst: Instance, beta: Allocation, path_cap: int):
        self.inst = inst
        self.beta = beta
        self.g = {e.id: effective_conductance(e, beta.get(e.id)) for e in inst.edges}
        self.paths: list[tuple[int, tuple[str, ...]]] = []  # (commodity, edges)
        self.by_commodity: list[list[int]] = []
        for i, k in enumerate(inst.commodities):
            all_paths = inst.simple_paths(k.source, k.sink, cap=path_cap)
            usable = [p for p in all_paths
                      if all(_usable(inst.edge_index[eid], beta) for eid in p)]
            if not usable:
                raise Infeasible(
                    f"commodity {k.source}->{k.sink} has no usable path")
            idx = []
            for p in usable:
                idx.append(len(self.paths))
                self.paths.append((i, p))
            self.by_commodity.append(idx)
        self.free_flow = [sum(inst.edge_index[eid].b for eid in p)
                          for _, p in self.paths]
        # Shared-edge structure for delay and Jacobian assembly.
        self.edge_paths: dict[str, list[int]] = {}
        for j, (_, p) in enumerate(self.paths):
            for eid in p:
                self.edge_paths.setdefault(eid, []).append(j)

    def edge_flows(self, x: np.ndarray) -> dict[str, float]:
        f = {}
        for eid, js in self.edge_paths.items():
            v = float(sum(x[j] for j in js))
            if v != 0.0:
                f[eid] = max(v, 0.0)
        return f

    def path_delay(self, p: tuple[str, ...], f: dict[str, float]) -> float:
        return sum(edge_delay(self.inst.edge_index[eid], f.get(eid, 0.0),
                              self.beta.get(eid)) for eid in p)

    def _delay_slope(self, e: Edge, x: float) -> float:
        if e.rigid:
            return 0.0
        g = self.g[e.id]
        x = max(x, 0.0)
        if e.n == 1.0:
            return 1.0 / g
        if x == 0.0:
            return 0.0 if e.n > 1.0 else 1e18
        return e.n * x ** (e.n - 1.0) / g ** e.n


def _equalize_affine(prob: _PathProblem, active: list[int]) -> np.ndarray:
    """Solve the delay-equalization linear system on the active path set.

    Returns the stacked vector [x_active, L_1..L_I]; x entries may be
    negative (the caller prunes).
    """
    inst = prob.inst
    na = len(active)
    ncom = len(inst.commodities)
    pos = {j: t for t, j in enumerate(active)}
    A = np.zeros((na + ncom, na + ncom))
    rhs = np.zeros(na + ncom)
    for t, j in enumerate(active):
        i, p = prob.paths[j]
        rhs[t] = -prob.free_flow[j]
        A[t, na + i] = -1.0
        for eid in p:
            e = inst.edge_index[eid]
            if e.rigid:
                continue
            w = 1.0 / prob.g[eid]
            for j2 in prob.edge_paths[eid]:
                t2 = pos.get(j2)
                if t2 is not None:
                    A[t, t2] += w
    for i in range(ncom):
        row = na + i
        for t, j in enumerate(active):
            if prob.paths[j][0] == i:
                A[row, t] = 1.0
        rhs[row] = inst.commodities[i].demand
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, rhs, rcond=None)[0]


def _equalize_newton(prob: _PathProblem, active: list[int]) -> np.ndarray | None:
    """Damped Newton on delay equalization for nonlinear delays."""
    inst = prob.inst
    na = len(active)
    ncom = len(inst.commodities)
    pos = {j: t for t, j in enumerate(active)}
    demands = np.array([k.demand for k in inst.commodities])

    z = np.zeros(na + ncom)
    counts = np.zeros(ncom)
    for j in active:
        counts[prob.paths[j][0]] += 1
    for t, j in enumerate(active):
        i = prob.paths[j][0]
        z[t] = demands[i] / counts[i]

    def residual(z):
        x = np.maximum(z[:na], 0.0)
        full = np.zeros(len(prob.paths))
        for t, j in enumerate(active):
            full[j] = x[t]
        f = prob.edge_flows(full)
        r = np.zeros(na + ncom)
        for t, j in enumerate(active):
            i, p = prob.paths[j]
            r[t] = prob.path_delay(p, f) - z[na + i]
        for i in range(ncom):
            r[na + i] = sum(z[t] for t, j in enumerate(active)
                            if prob.paths[j][0] == i) - demands[i]
        return r, f

    r, f = residual(z)
    scale = 1.0 + float(np.max(np.abs(demands))) + max(prob.free_flow, default=0.0)
    for _ in range(120):
        if np.max(np.abs(r)) <= 1e-12 * scale:
            return z
        J = np.zeros((na + ncom, na + ncom))
        slopes = {eid: prob._delay_slope(prob.inst.edge_index[eid], f.get(eid, 0.0))
                  for eid in prob.edge_paths}
        for t, j in enumerate(active):
            i, p = prob.paths[j]
            J[t, na + i] = -1.0
            for eid in p:
                s = slopes[eid]
                if s == 0.0:
                    continue
                for j2 in prob.edge_paths[eid]:
                    t2 = pos.get(j2)
                    if t2 is not None:
                        J[t, t2] += s
        for i in range(ncom):
            for t, j in enumerate(active):
                if prob.paths[j][0] == i:
                    J[na + i, t] = 1.0
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        alpha = 1.0
        base = np.linalg.norm(r)
        improved = False
        for _ in range(40):
            z_new = z + alpha * step
            r_new, f_new = residual(z_new)
            if np.linalg.norm(r_new) < base * (1.0 - 1e-4 * alpha) or \
               np.max(np.abs(r_new)) <= 1e-12 * scale:
                z, r, f = z_new, r_new, f_new
                improved = True
                break
            alpha *= 0.5
        if not improved:
            return None
    if np.max(np.abs(r)) <= 1e-9 * scale:
        return z
    return None


def _active_set_loop(prob: _PathProblem, active: list[int], affine: bool):
    """Exchange paths in and out of the flow-carrying set until Wardrop
    holds; returns (path flows, common delays, iterations) or None when the
    nonlinear equalization cannot be driven to convergence."""
    inst = prob.inst
    ncom = len(inst.commodities)
    demands = [k.demand for k in inst.commodities]
    dscale = max(1.0, max(demands))

    iterations = 0
    x_full = np.zeros(len(prob.paths))
    L = [math.inf] * ncom
    for _ in range(400):
        iterations += 1
        if affine:
            z = _equalize_affine(prob, active)
        else:
            z = _equalize_newton(prob, active)
            if z is None:
                return None
        na = len(active)
        xs = z[:na]
        worst = int(np.argmin(xs))
        if xs[worst] < -1e-12 * dscale and na > ncom:
            i_worst = prob.paths[active[worst]][0]
            if sum(1 for j in active if prob.paths[j][0] == i_worst) > 1:
                del active[worst]
                continue
        x_full[:] = 0.0
        for t, j in enumerate(active):
            x_full[j] = max(xs[t], 0.0)
        L = [float(z[na + i]) for i in range(ncom)]
        f = prob.edge_flows(x_full)
        added = False
        for i in range(ncom):
            best_j, best_d = None, math.inf
            for j in prob.by_commodity[i]:
                dlt = prob.path_delay(prob.paths[j][1], f)
                if dlt < best_d - 1e-15:
                    best_j, best_d = j, dlt
            if best_j is not None and best_j not in active and \
                    best_d < L[i] - 1e-10 * (1.0 + abs(L[i])):
                active.append(best_j)
                active.sort()
                added = True
        if not added:
            return x_full, L, iterations
    return None


def _solve_paths(inst: Instance, beta: Allocation, tol: float,
                 path_cap: int, start: str) -> EquilibriumResult:
    prob = _PathProblem(inst, beta, path_cap)
    affine = all(e.affine for e in inst.edges)
    ncom = len(inst.commodities)

    active: list[int] = []
    for i in range(ncom):
        cands = prob.by_commodity[i]
        if start == "all":
            active.extend(cands)
        else:
            key = (min if start == "shortest" else max)
            active.append(key(cands, key=lambda j: (prob.free_flow[j], j)))
    result = _active_set_loop(prob, sorted(set(active)), affine)
    if result is None:
        # The equalization stalled (typically flat nonlinear delays near a
        # vanishing path flow).  Locate the support approximately, then
        # finish exactly on it.
        x, nit = _solve_paths_nlp(inst, prob)
        support = []
        for i in range(ncom):
            js = prob.by_commodity[i]
            d = inst.commodities[i].demand
            kept = [j for j in js if x[j] > 1e-5 * d]
            support.extend(kept or [max(js, key=lambda j: x[j])])
        result = _active_set_loop(prob, sorted(set(support)), affine)
        if result is None:
            f = prob.edge_flows(x)
            L = []
            for i in range(ncom):
                pairs = [(prob.path_delay(prob.paths[j][1], f), x[j])
                         for j in prob.by_commodity[i]]
                used = [(dl, w) for dl, w in pairs
                        if w > 1e-9 * inst.commodities[i].demand]
                L.append(sum(dl * w for dl, w in used)
                         / sum(w for _, w in used))
            return _finish(inst, prob, x, L, nit)
    x_full, L, iterations = result
    return _finish(inst, prob, x_full, L, iterations)


def _solve_paths_nlp(inst: Instance, prob: _PathProblem):
    """Approximate potential minimization over path flows with scipy."""
    from scipy import optimize

    npaths = len(prob.paths)
    demands = [k.demand for k in inst.commodities]

    def objective(x):
        f = prob.edge_flows(x)
        val = beckmann_potential(f, prob.beta, inst)
        grad = np.array([prob.path_delay(p, f) for _, p in prob.paths])
        return val, grad

    constraints = []
    for i, d in enumerate(demands):
        row = np.zeros(npaths)
        for j in prob.by_commodity[i]:
            row[j] = 1.0
        constraints.append(optimize.LinearConstraint(row, d, d))
    x0 = np.zeros(npaths)
    for i, d in enumerate(demands):
        for j in prob.by_commodity[i]:
            x0[j] = d / len(prob.by_commodity[i])
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="delta_grad == 0.0")
        res = optimize.minimize(
            objective, x0, jac=True, method="trust-constr",
            bounds=optimize.Bounds(0.0, max(demands)), constraints=constraints,
            options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 3000})
    return np.maximum(res.x, 0.0), int(res.nit)


def _finish(inst: Instance, prob: _PathProblem, x: np.ndarray,
            L: list[float], iterations: int) -> EquilibriumResult:
    f = prob.edge_flows(x)
    delays = {e.id: edge_delay(e, f.get(e.id, 0.0), prob.beta.get(e.id))
              for e in inst.edges if _usable(e, prob.beta)}
    total_delay = sum(f.get(eid, 0.0) * d for eid, d in delays.items())
    lower = 0.0
    for k in inst.commodities:
        dist, _ = _shortest_path(inst, delays, k.source, k.sink)
        lower += k.demand * dist
    gap = max(0.0, total_delay - lower)
    phi = beckmann_potential(f, prob.beta, inst)
    rel_gap = gap / phi if phi > 0 else 0.0

    per_comm = []
    paths_out = []
    dscale = max(1.0, max(k.demand for k in inst.commodities))
    for i in range(len(inst.commodities)):
        cmap: dict[str, float] = {}
        for j in prob.by_commodity[i]:
            w = float(x[j])
            if w > 1e-13 * dscale:
                paths_out.append((prob.paths[j][1], w))
                for eid in prob.paths[j][1]:
                    cmap[eid] = cmap.get(eid, 0.0) + w
        per_comm.append(cmap)
    total = sum(k.demand for k in inst.commodities)
    avg = sum(k.demand * L[i] for i, k in enumerate(inst.commodities)) / total
    flow = FlowState(edge_flow=f,
                     commodity_flows=tuple(per_comm) if len(per_comm) > 1 else None,
                     paths=tuple(paths_out))
    return EquilibriumResult(flow=flow, common_delay=tuple(L),
                             average_delay=avg, duality_gap=rel_gap,
                             iterations=iterations)


# ---------------------------------------------------------------------------
# Frank-Wolfe engine


def _frank_wolfe(inst: Instance, beta: Allocation, tol: float,
                 max_iters: int) -> EquilibriumResult:
    edges = inst.edges
    eidx = {e.id: t for t, e in enumerate(edges)}
    m = len(edges)
    ncom = len(inst.commodities)
    g = np.array([effective_conductance(e, beta.get(e.id)) for e in edges])

    def delays_of(f):
        return {e.id: edge_delay(e, float(f[eidx[e.id]]), beta.get(e.id))
                for e in edges if _usable(e, beta)}

    def aon(delays):
        y = np.zeros((ncom, m))
        dists = []
        for i, k in enumerate(inst.commodities):
            dist, path = _shortest_path(inst, delays, k.source, k.sink)
            if path is None:
                raise Infeasible(
                    f"commodity {k.source}->{k.sink} has no usable path")
            dists.append(dist)
            for eid in path:
                y[i, eidx[eid]] += k.demand
        return y, dists

    fi, _ = aon(delays_of(np.zeros(m)))
    f = fi.sum(axis=0)
    iterations = 0
    rel_gap = math.inf
    for iterations in range(1, max_iters + 1):
        delays = delays_of(f)
        y, dists = aon(delays)
        ytot = y.sum(axis=0)
        total_delay = float(sum(f[eidx[eid]] * d for eid, d in delays.items()))
        lower = sum(k.demand * dists[i] for i, k in enumerate(inst.commodities))
        gap = max(0.0, total_delay - lower)
        phi = beckmann_potential({e.id: float(f[t]) for t, e in enumerate(edges)},
                                 beta, inst)
        rel_gap = gap / phi if phi > 0 else 0.0
        if rel_gap <= tol:
            break
        delta = ytot - f
        lo, hi = 0.0, 1.0

        def slope(gamma):
            fg = f + gamma * delta
            return float(sum(
                edge_delay(e, max(fg[t], 0.0), beta.get(e.id)) * delta[t]
                for t, e in enumerate(edges) if delta[t] != 0.0))

        if slope(1.0) <= 0.0:
            gamma = 1.0
        else:
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if slope(mid) > 0.0:
                    hi = mid
                else:
                    lo = mid
            gamma = 0.5 * (lo + hi)
        fi = fi + gamma * (y - fi)
        f = fi.sum(axis=0)
    else:
        warnings.warn(
            f"Frank-Wolfe stopped at relative gap {rel_gap:.3e} > tol {tol:.3e}"
            f" after {max_iters} iterations", RuntimeWarning)

    fmap = {e.id: float(f[t]) for t, e in enumerate(edges) if f[t] > 1e-15}
    delays = delays_of(f)
    L = []
    for i, k in enumerate(inst.commodities):
        dist, _ = _shortest_path(inst, delays, k.source, k.sink)
        L.append(dist)
    total = sum(k.demand for k in inst.commodities)
    avg = sum(k.demand * L[i] for i, k in enumerate(inst.commodities)) / total
    per_comm = tuple({e.id: float(fi[i, t]) for t, e in enumerate(edges)
                      if fi[i, t] > 1e-15} for i in range(ncom))
    flow = FlowState(edge_flow=fmap,
                     commodity_flows=per_comm if ncom > 1 else None)
    return EquilibriumResult(flow=flow, common_delay=tuple(L),
                             average_delay=avg, duality_gap=rel_gap,
                             iterations=iterations)


def solve_equilibrium(inst: Instance, beta: Allocation | None = None,
                      tol: float = 1e-8, method: str = "auto",
                      path_cap: int = 200, start: str = "shortest",
                      max_iters: int = 50000) -> EquilibriumResult:
    """Equilibrium flow and common path delays under allocation ``beta``.

    ``method`` is "auto" (path engine when the path count fits under
    ``path_cap``, Frank-Wolfe otherwise), "paths" or "frank-wolfe".
    ``start`` seeds the active set ("shortest", "longest" or "all") and only
    affects the iteration trajectory, not the result.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    beta = beta or Allocation()
    beta.validate_for(inst)
    if method not in ("auto", "paths", "frank-wolfe"):
        raise ValidationError(f"unknown method {method!r}")
    if method in ("auto", "paths"):
        try:
            return _solve_paths(inst, beta, tol, path_cap, start)
        except ValidationError:
            if method == "paths":
                raise
    return _frank_wolfe(inst, beta, tol, max_iters)


# ---------------------------------------------------------------------------
# Parallel links (dipole) closed form


def dipole_links(inst: Instance) -> tuple[Edge, ...] | None:
    """The instance's edges if it is a single-commodity dipole, else None."""
    if not inst.single_commodity:
        return None
    k = inst.commodities[0]
    if all(e.tail == k.source and e.head == k.sink for e in inst.edges):
        return inst.edges
    return None


def parallel_links_delay(links, c_eff, d: float):
    """Common delay and per-link flows for affine parallel links.

    ``links`` is the edge sequence, ``c_eff`` the effective conductance per
    link (ignored for rigid links).  Returns (L, flows list).
    """
    order = sorted(range(len(links)), key=lambda t: (links[t].b, links[t].id))
    rigid_caps = [links[t].b for t in order if links[t].rigid]
    cap = min(rigid_caps) if rigid_caps else math.inf
    usable = [t for t in order if not links[t].rigid and c_eff[t] > 0.0]

    flows = [0.0] * len(links)
    if not usable:
        if not rigid_caps:
            raise Infeasible("no usable link")
        L = cap
    else:
        num = d
        den = 0.0
        L = math.inf
        for pos, t in enumerate(usable):
            num += c_eff[t] * links[t].b
            den += c_eff[t]
            M = num / den
            nxt = links[usable[pos + 1]].b if pos + 1 < len(usable) else math.inf
            if M <= nxt + _BOUNDARY_TOL * max(1.0, abs(M)):
                L = M
                break
        if L > cap:
            L = cap
    residual = d
    for t in usable:
        if links[t].b < L:
            flows[t] = c_eff[t] * (L - links[t].b)
            residual -= flows[t]
    if residual > 1e-12 * max(1.0, d):
        rigid_min = [t for t in order
                     if links[t].rigid and links[t].b == cap]
        if not rigid_min:
            raise Infeasible("flow residual without a rigid link to absorb it")
        share = residual / len(rigid_min)
        for t in rigid_min:
            flows[t] = share
    return L, flows


def parallel_links_delay_batch(c_eff: np.ndarray, b: np.ndarray, d: float,
                               cap: float = math.inf) -> np.ndarray:
    """Vectorized dipole delay over allocation batches.

    ``c_eff`` has shape (N, m) with columns sorted by ``b`` ascending and
    rigid links removed; ``cap`` is the smallest rigid length if any.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        num = d + np.cumsum(c_eff * b, axis=1)
        den = np.cumsum(c_eff, axis=1)
        M = np.where(den > 0.0, num / den, np.inf)
    b_next = np.append(b[1:], np.inf)
    ok = M <= b_next + _BOUNDARY_TOL * np.maximum(1.0, np.abs(M))
    idx = np.argmax(ok, axis=1)
    L = M[np.arange(M.shape[0]), idx]
    return np.minimum(L, cap)


def solve_parallel_links_equilibrium(links, beta: Allocation | None,
                                     d: float) -> EquilibriumResult:
    """Exact equilibrium on affine parallel links via the closed form."""
    links = list(links)
    if not links:
        raise ValidationError("no links")
    ends = {(e.tail, e.head) for e in links}
    if len(ends) != 1:
        raise ValidationError("links do not share endpoints")
    for e in links:
        if not e.affine:
            raise UnsupportedDelay(f"link {e.id!r} has exponent {e.n} != 1")
    beta = beta or Allocation()
    c_eff = [effective_conductance(e, beta.get(e.id)) for e in links]
    L, flows = parallel_links_delay(links, c_eff, d)
    fmap = {e.id: flows[t] for t, e in enumerate(links) if flows[t] > 0.0}
    paths = tuple(((e.id,), flows[t]) for t, e in enumerate(links)
                  if flows[t] > 0.0)
    flow = FlowState(edge_flow=fmap, paths=paths)
    return EquilibriumResult(flow=flow, common_delay=(L,), average_delay=L,
                             duality_gap=0.0, iterations=0)
