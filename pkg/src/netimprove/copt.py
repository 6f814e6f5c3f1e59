"""Joint convex relaxation over flows and allocations.

The relaxation drops the equilibrium constraint and minimizes the total
delay sum_e x_e * delay_e(x_e, beta_e) over the product of the flow
polytope and the budget simplex.  Each edge term

    T(x, beta) = x^(n+1) / (c + mu * beta)^n + b * x

has a positive semidefinite Hessian (its quadratic form collapses to a
perfect square), so the whole objective is convex and a first-order method
with a linear-minimization oracle applies:

* flow block: the gradient in x is a nonnegative edge cost, so the best
  vertex is a shortest-path all-or-nothing assignment per commodity;
* budget block: the gradient in beta is nonpositive, so the best vertex
  drops the entire budget on the steepest edge (or spends nothing).

Frank-Wolfe with bisection line search drives the relative duality gap
down, and a trust-region polish over the same constraints finishes the job
when very tight gaps are requested; the reported certificate is always the
exact Frank-Wolfe gap at the returned point.  The returned allocation
carries the standard price-of-anarchy guarantee for the equilibrium played
under it: factor 4/3 when every delay is affine, O(p / log p) for maximum
exponent p otherwise (reported as metadata, not numerically certified).

Exponents below one break the relaxation's smoothness at zero flow; such
instances are solved with Frank-Wolfe only, after a warning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Allocation, Edge, FlowState, Instance, edge_delay
from .equilibrium import _shortest_path
from .errors import Infeasible, ValidationError

__all__ = [
    "CoptResult",
    "solve_copt",
    "relaxed_total_delay",
    "hessian_quadratic_form",
    "hessian_quadratic_form_exact",
]

_G_PAD = 1e-300  # keeps 1/g**n finite during line search at the g=0 corner


@dataclass(frozen=True)
class CoptResult:
    relaxed_flow: FlowState
    allocation: Allocation
    relaxed_objective: float
    guarantee_label: str
    guarantee_factor: float | None
    max_exponent: float
    duality_gap: float
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "relaxed_objective": self.relaxed_objective,
            "guarantee": self.guarantee_label,
            "gap": self.duality_gap,
        }


def relaxed_total_delay(inst: Instance, flow: FlowState | dict,
                        beta: Allocation) -> float:
    """Total delay sum_e x_e * delay_e(x_e, beta_e) of an arbitrary flow."""
    fmap = flow.edge_flow if isinstance(flow, FlowState) else flow
    total = 0.0
    for e in inst.edges:
        x = fmap.get(e.id, 0.0)
        if x > 0.0:
            total += x * edge_delay(e, x, beta.get(e.id))
    return total


def _term_grad(e: Edge, x: float, g: float) -> tuple[float, float, float]:
    """(value, d/dx, d/dbeta) of one edge term at flow x, conductance g."""
    if e.rigid:
        return e.b * x, e.b, 0.0
    if x == 0.0:
        return 0.0, e.b, 0.0
    gp = max(g, _G_PAD)
    ratio = x / gp
    val = x * ratio ** e.n + e.b * x
    dx = (e.n + 1.0) * ratio ** e.n + e.b
    dbeta = -e.n * e.mu * ratio ** e.n * x / gp
    return val, dx, dbeta


def solve_copt(inst: Instance, tol: float = 1e-8, fw_iters: int = 2000,
               polish: bool = True) -> CoptResult:
    """Solve the relaxation to relative duality gap ``tol``.

    Returns the relaxed flow, the allocation to play, the relaxed objective
    (a lower bound on the total delay of the equilibrium under any valid
    allocation) and the achieved certificate.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    exponents = [e.n for e in inst.edges if not e.rigid]
    max_n = max(exponents, default=1.0)
    if any(n < 1.0 for n in exponents):
        warnings.warn(
            "exponents below 1: the relaxation is solved by Frank-Wolfe only "
            "and the approximation guarantee is not established", RuntimeWarning)
        polish = False
        fw_iters = max(fw_iters, 20000)

    edges = inst.edges
    m = len(edges)
    ncom = len(inst.commodities)
    improvable = [e for e in edges if e.improvable]
    p = len(improvable)
    beta_col = {e.id: j for j, e in enumerate(improvable)}

    def conductance(e: Edge, beta: np.ndarray) -> float:
        j = beta_col.get(e.id)
        return e.c + (e.mu * beta[j] if j is not None else 0.0)

    def objective(x: np.ndarray, beta: np.ndarray):
        xt = x.sum(axis=0)
        val = 0.0
        gx = np.zeros(m)
        gb = np.zeros(p)
        for t, e in enumerate(edges):
            v, dx, db = _term_grad(e, float(xt[t]), conductance(e, beta))
            val += v
            gx[t] = dx
            j = beta_col.get(e.id)
            if j is not None:
                gb[j] = db
        return val, gx, gb

    def aon(gx: np.ndarray, beta: np.ndarray):
        delays = {e.id: float(gx[t]) for t, e in enumerate(edges)
                  if e.rigid or conductance(e, beta) > 0.0}
        y = np.zeros((ncom, m))
        lower = 0.0
        for i, k in enumerate(inst.commodities):
            dist, path = _shortest_path(inst, delays, k.source, k.sink)
            if path is None:
                raise Infeasible(
                    f"commodity {k.source}->{k.sink} is disconnected")
            lower += k.demand * dist
            for eid in path:
                t = next(tt for tt, e in enumerate(edges) if e.id == eid)
                y[i, t] += k.demand
        return y, lower

    # Interior budget start keeps zero-conductance improvable edges usable.
    beta = np.full(p, inst.budget / p) if p else np.zeros(0)
    eidx = {e.id: t for t, e in enumerate(edges)}
    x = np.zeros((ncom, m))
    _, gx0, _ = objective(x, beta)
    y0, _ = aon(gx0, beta)
    x = y0

    best_lower = -math.inf
    gap_rel = math.inf
    iterations = 0
    for iterations in range(1, fw_iters + 1):
        val, gx, gb = objective(x, beta)
        y, sp_lower = aon(gx, beta)
        bvert = np.zeros(p)
        if p and gb.min() < 0.0:
            bvert[int(np.argmin(gb))] = inst.budget
        # Linearized value at the best vertex bounds the optimum from below.
        lower = sp_lower + float(gb @ bvert) + (val - float(gx @ x.sum(axis=0))
                                                - float(gb @ beta))
        best_lower = max(best_lower, lower)
        gap_rel = (val - best_lower) / max(abs(val), 1e-300)
        if gap_rel <= tol:
            break
        dx = y - x
        dbeta = bvert - beta

        def slope(gamma: float) -> float:
            xv = x + gamma * dx
            bv = beta + gamma * dbeta
            _, gxs, gbs = objective(xv, bv)
            return float(gxs @ dx.sum(axis=0)) + float(gbs @ dbeta)

        if slope(1.0) <= 0.0:
            gamma = 1.0
        else:
            lo, hi = 0.0, 1.0
            for _ in range(70):
                mid = 0.5 * (lo + hi)
                if slope(mid) > 0.0:
                    hi = mid
                else:
                    lo = mid
            gamma = 0.5 * (lo + hi)
        x = x + gamma * dx
        beta = beta + gamma * dbeta

    def certify(xx, bb):
        val, gx, gb = objective(xx, bb)
        _, sp_lower = aon(gx, bb)
        bvert = np.zeros(p)
        if p and gb.min() < 0.0:
            bvert[int(np.argmin(gb))] = inst.budget
        lower = sp_lower + float(gb @ bvert) + (
            val - float(gx @ xx.sum(axis=0)) - float(gb @ bb))
        return val, lower

    if polish and gap_rel > tol:
        # A single polish can settle into a near-optimal face; restart it
        # from a few budget configurations and keep the best point.  Every
        # start contributes a valid linearization lower bound, so the
        # certificate tightens even when the point does not move.
        best_val, lower = certify(x, beta)
        best_lower = max(best_lower, lower)
        starts = [(x, beta)]
        if p:
            vertex = np.zeros(p)
            vertex[int(np.argmax(beta)) if beta.size else 0] = inst.budget
            starts.append((x, vertex))
            starts.append((x, np.full(p, inst.budget / p)))
        for sx, sb in starts:
            if gap_rel <= tol:
                break
            xx, bb = _polish(inst, edges, improvable, sx, sb)
            for freeze in (1e-7, 1e-5, 1e-3):
                refined = _kkt_refine(inst, edges, improvable, xx, bb,
                                      freeze=freeze)
                if refined is not None:
                    rx, rb = refined
                    if objective(rx, rb)[0] <= objective(xx, bb)[0]:
                        xx, bb = rx, rb
            val2, lower2 = certify(xx, bb)
            best_lower = max(best_lower, lower2)
            if val2 < best_val:
                best_val = val2
                x, beta = xx, bb
            gap_rel = (best_val - best_lower) / max(abs(best_val), 1e-300)
    if gap_rel > tol:
        warnings.warn(f"relaxation gap {gap_rel:.3e} above tol {tol:.3e}",
                      RuntimeWarning)

    xt = x.sum(axis=0)
    fmap = {e.id: float(xt[t]) for t, e in enumerate(edges) if xt[t] > 1e-15}
    per_comm = tuple({e.id: float(x[i, t]) for t, e in enumerate(edges)
                      if x[i, t] > 1e-15} for i in range(ncom))
    flow = FlowState(edge_flow=fmap,
                     commodity_flows=per_comm if ncom > 1 else None)
    total = inst.budget
    vals = np.maximum(beta, 0.0)
    if vals.sum() > total > 0.0:
        vals = vals * (total / vals.sum())
    alloc = Allocation({e.id: float(vals[j]) for j, e in enumerate(improvable)
                        if vals[j] > 1e-15})
    objective_value = relaxed_total_delay(inst, fmap, alloc)
    affine = all(e.affine for e in edges)
    return CoptResult(
        relaxed_flow=flow,
        allocation=alloc,
        relaxed_objective=objective_value,
        guarantee_label="4/3" if affine else "O(p/log p)",
        guarantee_factor=4.0 / 3.0 if affine else None,
        max_exponent=max_n,
        duality_gap=gap_rel,
        iterations=iterations,
    )


def _polish(inst: Instance, edges, improvable, x0: np.ndarray,
            beta0: np.ndarray):
    """Tighten the Frank-Wolfe point: trust-region, then active-set."""
    from scipy import optimize

    m = len(edges)
    ncom = len(inst.commodities)
    p = len(improvable)
    beta_col = {e.id: j for j, e in enumerate(improvable)}
    col = {e.id: t for t, e in enumerate(edges)}
    dim = ncom * m + p

    def unpack(z):
        return z[:ncom * m].reshape(ncom, m), z[ncom * m:]

    def fun(z):
        x, beta = unpack(z)
        xt = x.sum(axis=0)
        val = 0.0
        gx = np.zeros(m)
        gb = np.zeros(p)
        for t, e in enumerate(edges):
            j = beta_col.get(e.id)
            g = e.c + (e.mu * beta[j] if j is not None else 0.0)
            v, dxv, dbv = _term_grad(e, float(xt[t]), g)
            val += v
            gx[t] = dxv
            if j is not None:
                gb[j] = dbv
        grad = np.concatenate([np.tile(gx, ncom), gb])
        return val, grad

    def hess(z):
        x, beta = unpack(z)
        xt = x.sum(axis=0)
        H = np.zeros((dim, dim))
        for t, e in enumerate(edges):
            if e.rigid:
                continue
            j = beta_col.get(e.id)
            g = e.c + (e.mu * beta[j] if j is not None else 0.0)
            g = max(g, 1e-12)
            xv = max(float(xt[t]), 0.0)
            n = e.n
            if xv == 0.0 and n > 1.0:
                hxx = 0.0
            else:
                hxx = n * (n + 1.0) * xv ** max(n - 1.0, 0.0) / g ** n
            rows = [i * m + t for i in range(ncom)]
            for r in rows:
                for s in rows:
                    H[r, s] += hxx
            if j is not None:
                hbb = n * (n + 1.0) * e.mu ** 2 * xv ** (n + 1.0) / g ** (n + 2.0)
                hxb = -n * (n + 1.0) * e.mu * xv ** n / g ** (n + 1.0)
                cidx = ncom * m + j
                H[cidx, cidx] += hbb
                for r in rows:
                    H[r, cidx] += hxb
                    H[cidx, r] += hxb
        return H

    eq_rows: list[tuple[np.ndarray, float]] = []
    for i, k in enumerate(inst.commodities):
        for u in inst.nodes:
            if u == k.sink:
                continue
            row = np.zeros(dim)
            for e in inst.out_edges[u]:
                row[i * m + col[e.id]] += 1.0
            for e in inst.in_edges[u]:
                row[i * m + col[e.id]] -= 1.0
            eq_rows.append((row, k.demand if u == k.source else 0.0))
    budget_row = np.zeros(dim)
    budget_row[ncom * m:] = 1.0

    tc_cons = [optimize.LinearConstraint(row, rhs, rhs) for row, rhs in eq_rows]
    if p:
        tc_cons.append(optimize.LinearConstraint(budget_row, 0.0, inst.budget))
    ub = np.concatenate([
        np.repeat([k.demand for k in inst.commodities], m),
        np.full(p, inst.budget)])
    z0 = np.concatenate([np.clip(x0.ravel(), 0.0, None),
                         np.clip(beta0, 0.0, None)])
    res = optimize.minimize(
        fun, z0, jac=True, hess=hess, method="trust-constr",
        bounds=optimize.Bounds(np.zeros(dim), ub), constraints=tc_cons,
        options={"gtol": 1e-12, "xtol": 1e-16, "barrier_tol": 1e-14,
                 "maxiter": 3000})
    z = np.asarray(res.x)

    # The interior-point loop stalls around 1e-7 relative; an active-set
    # refinement from its output reaches much tighter gaps.
    sq_cons = [{"type": "eq",
                "fun": lambda zz, row=row, rhs=rhs: float(row @ zz - rhs),
                "jac": lambda zz, row=row: row}
               for row, rhs in eq_rows]
    if p:
        sq_cons.append({"type": "ineq",
                        "fun": lambda zz: inst.budget - float(budget_row @ zz),
                        "jac": lambda zz: -budget_row})
    res2 = optimize.minimize(
        fun, z, jac=True, method="SLSQP",
        bounds=[(0.0, float(u)) for u in ub], constraints=sq_cons,
        options={"ftol": 1e-16, "maxiter": 500})
    if res2.success and fun(np.asarray(res2.x))[0] <= fun(z)[0]:
        z = np.asarray(res2.x)
    x, beta = unpack(z)
    return np.clip(x, 0.0, None), np.clip(beta, 0.0, None)


def _kkt_refine(inst: Instance, edges, improvable, x0: np.ndarray,
                beta0: np.ndarray, iters: int = 6, freeze: float = 1e-7):
    """Newton on the equality-constrained problem at the guessed active set.

    Variables below ``freeze`` (relative to their scale) are pinned at
    zero; the smooth KKT system then drives the remainder to machine
    precision.  Returns None when the guess proves inconsistent (a free
    variable wants to move negative).
    """
    m = len(edges)
    ncom = len(inst.commodities)
    p = len(improvable)
    beta_col = {e.id: j for j, e in enumerate(improvable)}
    col = {e.id: t for t, e in enumerate(edges)}
    dim = ncom * m + p
    dscale = max(k.demand for k in inst.commodities)

    z = np.concatenate([x0.ravel(), beta0])
    frozen = np.zeros(dim, dtype=bool)
    frozen[:ncom * m] = z[:ncom * m] < freeze * dscale
    if p:
        frozen[ncom * m:] = z[ncom * m:] < freeze * max(1.0, inst.budget)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for i, k in enumerate(inst.commodities):
        for u in inst.nodes:
            if u == k.sink:
                continue
            row = np.zeros(dim)
            for e in inst.out_edges[u]:
                row[i * m + col[e.id]] += 1.0
            for e in inst.in_edges[u]:
                row[i * m + col[e.id]] -= 1.0
            rows.append(row)
            rhs.append(k.demand if u == k.source else 0.0)
    if p and z[ncom * m:].sum() > inst.budget * (1.0 - 1e-7):
        row = np.zeros(dim)
        row[ncom * m:] = 1.0
        rows.append(row)
        rhs.append(inst.budget)
    for t in np.flatnonzero(frozen):
        row = np.zeros(dim)
        row[t] = 1.0
        rows.append(row)
        rhs.append(0.0)
    A = np.vstack(rows)
    b = np.array(rhs)

    def grad_hess(zz):
        xx = zz[:ncom * m].reshape(ncom, m)
        bb = zz[ncom * m:]
        xt = xx.sum(axis=0)
        g = np.zeros(dim)
        H = np.zeros((dim, dim))
        for t, e in enumerate(edges):
            j = beta_col.get(e.id)
            gg = e.c + (e.mu * bb[j] if j is not None else 0.0)
            _, dx, db = _term_grad(e, float(xt[t]), gg)
            for i in range(ncom):
                g[i * m + t] = dx
            if j is not None:
                g[ncom * m + j] = db
            if e.rigid:
                continue
            gg = max(gg, 1e-12)
            xv = max(float(xt[t]), 0.0)
            n = e.n
            hxx = (0.0 if (xv == 0.0 and n > 1.0)
                   else n * (n + 1.0) * xv ** max(n - 1.0, 0.0) / gg ** n)
            idxs = [i * m + t for i in range(ncom)]
            for r in idxs:
                for s in idxs:
                    H[r, s] += hxx
            if j is not None:
                cidx = ncom * m + j
                H[cidx, cidx] += n * (n + 1.0) * e.mu ** 2 * xv ** (n + 1.0) \
                    / gg ** (n + 2.0)
                hxb = -n * (n + 1.0) * e.mu * xv ** n / gg ** (n + 1.0)
                for r in idxs:
                    H[r, cidx] += hxb
                    H[cidx, r] += hxb
        return g, H

    nrows = len(rows)
    for _ in range(iters):
        g, H = grad_hess(z)
        if not np.isfinite(g).all() or not np.isfinite(H).all():
            return None
        kkt = np.zeros((dim + nrows, dim + nrows))
        kkt[:dim, :dim] = H + 1e-12 * np.eye(dim)
        kkt[:dim, dim:] = A.T
        kkt[dim:, :dim] = A
        resid = np.concatenate([-g, b - A @ z])
        try:
            sol = np.linalg.solve(kkt, resid)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, resid, rcond=None)[0]
        step = sol[:dim]
        if not np.isfinite(step).all():
            return None
        z = z + step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, np.max(np.abs(z))):
            break
    if not np.isfinite(z).all() or \
            (z < -1e-9 * max(1.0, dscale, inst.budget)).any():
        return None
    z = np.clip(z, 0.0, None)
    if p and z[ncom * m:].sum() > inst.budget * (1.0 + 1e-12):
        return None
    return z[:ncom * m].reshape(ncom, m), z[ncom * m:]


# ---------------------------------------------------------------------------
# Curvature checks for the relaxation's edge terms


def hessian_quadratic_form(c: float, b: float, n: float, mu: float,
                           x: float, beta: float,
                           alpha: tuple[float, float]) -> tuple[float, float]:
    """Directional second difference of one edge term along ``alpha``.

    Returns (quadratic form estimate, roundoff scale).  The estimate is the
    central second difference of T at (x, beta) along alpha; the scale is
    the magnitude against which its rounding error must be judged, so a
    convexity check should assert value >= -tol * scale.
    """
    def term(xx, bb):
        if xx <= 0.0:
            return 0.0
        g = c + mu * bb
        if g <= 0.0:
            return math.inf
        return xx ** (n + 1.0) / g ** n + b * xx

    h = 1e-4 * max(1.0, abs(x), abs(beta))
    f_plus = term(x + h * alpha[0], beta + h * alpha[1])
    f_mid = term(x, beta)
    f_minus = term(x - h * alpha[0], beta - h * alpha[1])
    value = (f_plus - 2.0 * f_mid + f_minus) / (h * h)
    scale = (abs(f_plus) + 2.0 * abs(f_mid) + abs(f_minus)) / (h * h) + 1.0
    return value, scale


def hessian_quadratic_form_exact(c: float, b: float, n: float, mu: float,
                                 x: float, beta: float,
                                 alpha: tuple[float, float]) -> float:
    """Closed form of the quadratic form: a weighted perfect square."""
    g = c + mu * beta
    if g <= 0.0:
        raise ValidationError("effective conductance must be positive")
    if x == 0.0:
        if n > 1.0:
            return 0.0
        if n == 1.0:
            return n * (n + 1.0) / g * alpha[0] ** 2
        raise ValidationError("exact form needs x > 0 when n < 1")
    lead = n * (n + 1.0) * x ** (n - 1.0) / g ** n
    return lead * (alpha[0] - alpha[1] * x * mu / g) ** 2
