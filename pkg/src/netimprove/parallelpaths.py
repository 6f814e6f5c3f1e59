"""Exact optimal budget allocation on parallel-path graphs with affine delays.

Structure: the graph is a union of internally disjoint source-sink paths.
With affine delays the common equilibrium delay over a used path set S is

    L = (d + sum_S c_p b_p) / sum_S c_p

where b_p is the path length and c_p the path conductance (reciprocal sum of
edge resistances).  The optimizer works at three levels:

1.  Within a path, a fixed path budget is split across edges to maximize
    c_p.  The KKT condition equalizes mu_a / (c_a + mu_a beta_a)^2 across
    funded edges, i.e. funded edges share a common level t with effective
    conductance t * sqrt(mu_a); this is classic water-filling with
    activation thresholds c_a / sqrt(mu_a).  The resulting c_p(budget) is a
    piecewise-smooth concave profile with closed-form value and derivative
    on each segment.

2.  Across paths, the subproblem "maximize sum_p w_p c_p(beta_p) subject to
    sum beta_p = budget" (the inner program of the optimal algorithm, with
    w_p = Lbar - b_p) is again water-filling, now on the weighted marginal
    w_p c_p'(beta_p).  Candidate marginal levels are segment boundaries, so
    the exact level solves in closed form inside a bracket; paths whose
    profile turns linear (zero residual resistance) act as flat sinks that
    absorb leftover budget at their constant marginal.

3.  The outer optimum does bisection on the target delay Lbar: the inner
    program is solved with growing budgets until the prefix delay M hits
    Lbar, and the spent budget is compared with the available one.  The
    used-path prefix follows the standard window rule: stop at the first
    prefix (paths sorted by length) whose minimized delay does not exceed
    the next path's length.

Only affine (n = 1) congestible edges are supported; rigid edges inside a
path contribute length but no resistance.  Paths that are permanently
unusable (a zero-conductance edge that no budget can improve) are dropped
from the optimization; paths consisting solely of rigid edges are not
supported by the optimizer.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

from .core import Allocation, Edge, Instance
from .errors import NotParallelPaths, UnsupportedDelay, ValidationError
from .equilibrium import parallel_links_delay

__all__ = [
    "PathSpec",
    "ParallelPathsInstance",
    "PathAllocation",
    "as_parallel_paths",
    "max_path_conductance",
    "prefix_delay",
    "inner_allocate",
    "solve_parallel_paths",
    "best_single_edge_allocation",
    "paths_delay",
]


class _Segment(NamedTuple):
    lo: float     # path budget at which this active set begins
    S: float      # sum of 1/sqrt(mu) over active edges
    C: float      # sum of c/mu over active edges
    R: float      # resistance of everything not active (rigid excluded)
    active: int   # number of active improvable edges


class _Profile:
    """Piecewise closed form for a path's max conductance vs. budget."""

    def __init__(self, edges: Sequence[Edge]):
        self.improvable = sorted(
            (e for e in edges if e.improvable),
            key=lambda e: (e.c / math.sqrt(e.mu), e.id))
        r_fix = 0.0
        self.dead = False
        for e in edges:
            if e.rigid or e.improvable:
                continue
            if e.c == 0.0:
                self.dead = True
            else:
                r_fix += 1.0 / e.c
        self.fixed_resistance = r_fix
        self.all_rigid = not self.improvable and r_fix == 0.0 and not self.dead

        self.segments: list[_Segment] = []
        if self.dead or not self.improvable:
            return
        thresholds = [e.c / math.sqrt(e.mu) for e in self.improvable]
        suffix_r = [0.0] * (len(self.improvable) + 1)
        for k in range(len(self.improvable) - 1, -1, -1):
            e = self.improvable[k]
            suffix_r[k] = suffix_r[k + 1] + (1.0 / e.c if e.c > 0.0 else math.inf)
        S = C = 0.0
        for k, e in enumerate(self.improvable):
            S += 1.0 / math.sqrt(e.mu)
            C += e.c / e.mu
            lo = max(0.0, thresholds[k] * S - C)
            hi = thresholds[k + 1] * S - C if k + 1 < len(thresholds) else math.inf
            if hi <= lo:
                continue
            self.segments.append(_Segment(lo, S, C, r_fix + suffix_r[k + 1], k + 1))
        self._los = [s.lo for s in self.segments]

    def _segment(self, budget: float) -> _Segment:
        return self.segments[max(0, bisect_right(self._los, budget) - 1)]

    def conductance(self, budget: float) -> float:
        if self.dead:
            return 0.0
        if self.all_rigid:
            return math.inf
        if budget <= 0.0 or not self.segments:
            r = self.fixed_resistance
            for e in self.improvable:
                if e.c == 0.0:
                    return 0.0
                r += 1.0 / e.c
            return 1.0 / r if r > 0.0 else math.inf
        seg = self._segment(budget)
        r = seg.R + seg.S * seg.S / (budget + seg.C)
        return 1.0 / r if r > 0.0 else math.inf

    def marginal(self, budget: float) -> float:
        """d conductance / d budget (right derivative at segment starts)."""
        if self.dead or self.all_rigid or not self.segments:
            return 0.0
        budget = max(budget, 0.0)
        seg = self._segment(budget)
        u = budget + seg.C
        denom = u * seg.R + seg.S * seg.S
        return seg.S * seg.S / (denom * denom)

    def budget_for_marginal(self, level: float) -> float:
        """Largest budget whose marginal still exceeds ``level``.

        Returns 0 when even the first unit of budget earns less than
        ``level`` and inf when a flat (linear) tail earns at least it
        forever.
        """
        if self.dead or self.all_rigid or not self.segments:
            return 0.0
        if level <= 0.0:
            return math.inf
        if self.marginal(0.0) <= level:
            return 0.0
        beta = 0.0
        for k, seg in enumerate(self.segments):
            hi = (self.segments[k + 1].lo if k + 1 < len(self.segments)
                  else math.inf)
            if seg.R == 0.0:
                # Levels within roundoff of the flat marginal count as "at"
                # it; the caller distributes any leftover among such paths.
                flat = 1.0 / (seg.S * seg.S)
                return seg.lo if level >= flat * (1.0 - 1e-12) else math.inf
            beta = (seg.S / math.sqrt(level) - seg.S * seg.S) / seg.R - seg.C
            if beta <= hi:
                return max(beta, seg.lo, 0.0)
        return max(beta, 0.0)

    def flat_level(self) -> float | None:
        """Marginal of the linear tail, if the profile has one."""
        if self.segments and self.segments[-1].R == 0.0:
            s = self.segments[-1].S
            return 1.0 / (s * s)
        return None

    def split(self, budget: float) -> dict[str, float]:
        """Per-edge budgets realizing conductance(budget)."""
        out = {e.id: 0.0 for e in self.improvable}
        if budget <= 0.0 or not self.segments or self.dead:
            return out
        seg = self._segment(budget)
        t = (budget + seg.C) / seg.S
        total = 0.0
        for e in self.improvable[: seg.active]:
            amt = max(0.0, t / math.sqrt(e.mu) - e.c / e.mu)
            out[e.id] = amt
            total += amt
        # Roll float dust into the largest share so the split sums exactly.
        if total != budget and total > 0.0:
            top = max(out, key=out.get)
            out[top] = max(0.0, out[top] + (budget - total))
        return out


@dataclass(frozen=True)
class PathSpec:
    edges: tuple[Edge, ...]

    @cached_property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    @cached_property
    def length(self) -> float:
        return sum(e.b for e in self.edges)

    @cached_property
    def profile(self) -> _Profile:
        return _Profile(self.edges)

    def conductance(self, budget: float = 0.0) -> float:
        return self.profile.conductance(budget)


@dataclass(frozen=True)
class ParallelPathsInstance:
    paths: tuple[PathSpec, ...]   # sorted by length, unusable paths dropped
    demand: float
    budget: float
    source: str
    sink: str
    dropped: tuple[PathSpec, ...] = ()

    @cached_property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        """Indices of paths grouped by (near-)equal length."""
        groups: list[list[int]] = []
        for t, p in enumerate(self.paths):
            if groups and abs(p.length - self.paths[groups[-1][0]].length) \
                    <= 1e-12 * max(1.0, p.length):
                groups[-1].append(t)
            else:
                groups.append([t])
        return tuple(tuple(g) for g in groups)


@dataclass(frozen=True)
class PathAllocation:
    path_budgets: tuple[float, ...]
    edge_split: dict[str, float]

    def to_allocation(self) -> Allocation:
        return Allocation({k: v for k, v in self.edge_split.items() if v > 0.0})

    def total(self) -> float:
        return sum(self.path_budgets)


def as_parallel_paths(inst: Instance) -> ParallelPathsInstance:
    """View the instance as disjoint source-sink paths or raise."""
    if not inst.single_commodity:
        raise NotParallelPaths("multi-commodity instance")
    k = inst.commodities[0]
    for e in inst.edges:
        if not e.affine:
            raise UnsupportedDelay(
                f"edge {e.id!r} has exponent {e.n} != 1")
    consumed: set[str] = set()
    raw_paths: list[PathSpec] = []
    for first in inst.out_edges[k.source]:
        chain = [first]
        node = first.head
        seen = {k.source, first.head}
        while node != k.sink:
            outs = inst.out_edges[node]
            ins = inst.in_edges[node]
            if len(outs) != 1 or len(ins) != 1 or node == k.source:
                raise NotParallelPaths(
                    f"internal node {node!r} is shared between paths")
            nxt = outs[0]
            if nxt.head in seen:
                raise NotParallelPaths("cycle while tracing a path")
            seen.add(nxt.head)
            chain.append(nxt)
            node = nxt.head
        raw_paths.append(PathSpec(tuple(chain)))
        consumed.update(e.id for e in chain)
    if len(consumed) != len(inst.edges):
        extra = sorted(set(inst.edge_index) - consumed)
        raise NotParallelPaths(f"edges not on any traced path: {extra}")

    raw_paths.sort(key=lambda p: (p.length, p.edge_ids))
    kept, dropped = [], []
    for p in raw_paths:
        (dropped if p.profile.dead else kept).append(p)
    if not kept:
        raise NotParallelPaths("every path is permanently unusable")
    return ParallelPathsInstance(
        paths=tuple(kept), demand=k.demand, budget=inst.budget,
        source=k.source, sink=k.sink, dropped=tuple(dropped))


def max_path_conductance(edges: Sequence[Edge], budget: float
                         ) -> tuple[float, dict[str, float]]:
    """Best conductance of a single path and the per-edge budget split."""
    if budget < 0.0:
        raise ValidationError("budget must be >= 0")
    for e in edges:
        if not e.affine:
            raise UnsupportedDelay(f"edge {e.id!r} has exponent {e.n} != 1")
    prof = _Profile(edges)
    split = prof.split(budget)
    for e in edges:
        split.setdefault(e.id, 0.0)
    return prof.conductance(budget), split


# ---------------------------------------------------------------------------
# Cross-path water-filling: maximize sum_p w_p c_p(beta_p), sum beta_p = B


def _weighted_budget(prof: _Profile, w: float, level: float) -> float:
    if w <= 0.0:
        return 0.0
    return prof.budget_for_marginal(level / w)


def _allocate_weighted(paths: Sequence[PathSpec], weights: Sequence[float],
                       total: float,
                       lower: Sequence[float] | None = None) -> list[float]:
    """Exact solution of the weighted conductance maximization.

    ``lower`` carries warm-start bounds from a previous, smaller budget; the
    water-filling solution is monotone in the budget, so the bounds only
    absorb float dust.
    """
    n = len(paths)
    budgets = [0.0] * n
    if total <= 0.0:
        return budgets
    profs = [p.profile for p in paths]
    tops = [w * prof.marginal(0.0) if w > 0.0 else 0.0
            for prof, w in zip(profs, weights)]
    if all(t <= 0.0 for t in tops):
        return budgets

    candidates: set[float] = set()
    for prof, w in zip(profs, weights):
        if w <= 0.0:
            continue
        for seg in prof.segments:
            candidates.add(w * prof.marginal(seg.lo))
        flat = prof.flat_level()
        if flat is not None:
            candidates.add(w * flat)
    levels = sorted((c for c in candidates if c > 0.0), reverse=True)

    def spend(level):
        return sum(_weighted_budget(prof, w, level)
                   for prof, w in zip(profs, weights))

    prev = math.inf
    bracket = None
    for cand in levels:
        s = spend(cand)
        if s >= total:
            bracket = (cand, prev)
            break
        prev = cand
    if bracket is None:
        bracket = (0.0, prev)
    lo_level, hi_level = bracket

    def flats_at(level):
        out = []
        for t, (prof, w) in enumerate(zip(profs, weights)):
            flat = prof.flat_level()
            if w > 0.0 and flat is not None and \
                    abs(w * flat - level) <= 1e-9 * level:
                out.append(t)
        return out

    if math.isfinite(hi_level) and flats_at(hi_level) and \
            spend(hi_level) <= total:
        # The bracket opened because a flat tail absorbs everything below
        # its level; the solution sits exactly at that level.
        level = hi_level
    else:
        # All funded paths sit in fixed curved segments inside the open
        # bracket (candidate levels are exactly the segment seams), so
        # sum_p beta_p(level) = total solves in closed form via 1/sqrt(level).
        probe = 0.5 * (lo_level + hi_level)
        num = total
        den = 0.0
        for t, (prof, w) in enumerate(zip(profs, weights)):
            beta_probe = _weighted_budget(prof, w, probe)
            if beta_probe <= 0.0 or not math.isfinite(beta_probe):
                continue
            seg = prof._segment(beta_probe)
            if seg.R == 0.0:
                continue
            num += seg.C + seg.S * seg.S / seg.R
            den += seg.S * math.sqrt(w) / seg.R
        if den <= 0.0:
            level = hi_level if lo_level <= 0.0 else lo_level
        else:
            xi = num / den
            level = 1.0 / (xi * xi)
            level = min(max(level, lo_level), hi_level)

    # Distribute at the chosen level.  Flat tails sitting exactly at it
    # absorb the leftover evenly; otherwise only float dust remains and is
    # scaled away.
    for t, (prof, w) in enumerate(zip(profs, weights)):
        budgets[t] = _weighted_budget(prof, w, level)
    flats = flats_at(level)
    leftover = total - sum(budgets)
    if flats and leftover > 0.0:
        for t in flats:
            budgets[t] += leftover / len(flats)
    else:
        s = sum(budgets)
        if s > 0.0 and math.isfinite(s):
            budgets = [b * (total / s) for b in budgets]

    if lower is not None:
        budgets = [max(b, lb) for b, lb in zip(budgets, lower)]
    return budgets


def prefix_delay(ppi: ParallelPathsInstance, path_budgets: Sequence[float],
                 count: int) -> float:
    """Common delay if exactly the ``count`` shortest paths carry flow."""
    if not (1 <= count <= len(ppi.paths)):
        raise ValidationError("path count out of range")
    num = ppi.demand
    den = 0.0
    for p, beta in zip(ppi.paths[:count], path_budgets):
        c = p.profile.conductance(beta)
        num += c * p.length
        den += c
    return num / den if den > 0.0 else math.inf


def inner_allocate(ppi: ParallelPathsInstance, l_target: float, count: int,
                   tol: float = 1e-12, budget_cap: float | None = None,
                   lower: Sequence[float] | None = None
                   ) -> tuple[list[float], float]:
    """Smallest budget whose optimal prefix allocation reaches ``l_target``.

    Returns (path budgets, spent).  ``spent`` is inf when the target is
    unreachable below the cap.  Budgets are found by bisection on the total
    handed to the weighted water-filling, warm-started monotonically.
    """
    paths = ppi.paths[:count]
    weights = [max(0.0, l_target - p.length) for p in paths]
    zeros = [0.0] * count
    m0 = prefix_delay(ppi, zeros, count)
    if m0 <= l_target * (1.0 + 1e-15):
        return zeros, 0.0
    if all(w <= 0.0 or not p.profile.segments for w, p in zip(weights, paths)):
        return zeros, math.inf

    cap = budget_cap if budget_cap is not None else 1e9 * max(1.0, ppi.budget)
    hi = max(ppi.budget, 1.0)
    lo = 0.0
    lo_budgets = list(lower) if lower is not None else zeros
    while True:
        budgets = _allocate_weighted(paths, weights, hi, lower=lo_budgets)
        if prefix_delay(ppi, budgets, count) <= l_target:
            break
        lo = hi
        lo_budgets = budgets
        hi *= 2.0
        if hi > cap:
            return budgets, math.inf
    hi_budgets = budgets
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        budgets = _allocate_weighted(paths, weights, mid, lower=lo_budgets)
        if prefix_delay(ppi, budgets, count) > l_target:
            lo = mid
            lo_budgets = budgets
        else:
            hi = mid
            hi_budgets = budgets
    return hi_budgets, hi


class ParallelPathsResult(NamedTuple):
    allocation: PathAllocation
    delay: float
    used_paths: int


def solve_parallel_paths(arg: Instance | ParallelPathsInstance,
                         tol: float = 1e-9) -> ParallelPathsResult:
    """Optimal allocation on parallel paths by target-delay bisection."""
    ppi = arg if isinstance(arg, ParallelPathsInstance) else as_parallel_paths(arg)
    for p in ppi.paths:
        if p.profile.all_rigid:
            raise UnsupportedDelay(
                "constant-delay path; optimizer needs congestible paths")
    budget = ppi.budget
    best_budgets: list[float] | None = None
    for group_end in _group_ends(ppi):
        count = group_end
        nxt = (ppi.paths[count].length if count < len(ppi.paths) else math.inf)
        m0 = prefix_delay(ppi, [0.0] * count, count)
        prefix_has_budget = budget > 0.0 and any(
            p.profile.segments for p in ppi.paths[:count])
        if not prefix_has_budget:
            m_star = m0
            budgets = [0.0] * count
        else:
            b_i = ppi.paths[count - 1].length
            lo, hi = b_i, m0
            scale = max(m0 - b_i, 1e-12 * max(1.0, m0))
            while hi - lo > tol * scale:
                mid = 0.5 * (lo + hi)
                _, spent = inner_allocate(ppi, mid, count)
                if spent > budget:
                    lo = mid
                else:
                    hi = mid
            weights = [max(0.0, hi - p.length) for p in ppi.paths[:count]]
            budgets = _allocate_weighted(ppi.paths[:count], weights, budget)
            m_star = prefix_delay(ppi, budgets, count)
            if m_star > m0:
                budgets, m_star = [0.0] * count, m0
        if m_star <= nxt + 1e-12 * max(1.0, abs(m_star)):
            best_budgets = budgets + [0.0] * (len(ppi.paths) - count)
            delay = m_star
            used = count
            break
    else:  # pragma: no cover - the last group always satisfies the window
        raise AssertionError("used-set iteration did not terminate")

    split: dict[str, float] = {}
    for p, pb in zip(ppi.paths, best_budgets):
        split.update(p.profile.split(pb))
        for e in p.edges:
            split.setdefault(e.id, 0.0)
    for p in ppi.dropped:
        for e in p.edges:
            split.setdefault(e.id, 0.0)
    alloc = PathAllocation(tuple(best_budgets), split)
    # The window test identified the used prefix; report the delay from the
    # full used-set scan, which agrees with m_star but is allocation-exact.
    delay = paths_delay(ppi, best_budgets)
    return ParallelPathsResult(alloc, delay, used)


def _group_ends(ppi: ParallelPathsInstance):
    end = 0
    for g in ppi.groups:
        end += len(g)
        yield end


def paths_delay(ppi: ParallelPathsInstance, path_budgets: Sequence[float]) -> float:
    """Equilibrium delay for given path budgets (used set by window scan)."""
    links = []
    c_eff = []
    for t, p in enumerate(ppi.paths):
        if p.profile.all_rigid:
            links.append(Edge(f"p{t}", ppi.source, ppi.sink, c=0.0,
                              b=p.length, rigid=True))
            c_eff.append(0.0)
        else:
            links.append(Edge(f"p{t}", ppi.source, ppi.sink, c=1.0, b=p.length))
            c_eff.append(p.profile.conductance(path_budgets[t]))
    L, _ = parallel_links_delay(links, c_eff, ppi.demand)
    return L


class SingleEdgeResult(NamedTuple):
    edge_id: str | None
    delay: float
    allocation: Allocation


def best_single_edge_allocation(links: Sequence[Edge], budget: float,
                                demand: float) -> SingleEdgeResult:
    """Best way to spend the whole budget on one link of a dipole.

    Evaluates the closed-form delay for each non-rigid link in id order and
    keeps the first minimum (ties break toward the lowest id).
    """
    links = sorted(links, key=lambda e: e.id)
    for e in links:
        if not e.affine:
            raise UnsupportedDelay(f"link {e.id!r} has exponent {e.n} != 1")
    base = [e.c for e in links]
    best_id = None
    best_L = math.inf
    for t, e in enumerate(links):
        if e.rigid:
            continue
        c_eff = list(base)
        c_eff[t] = e.c + e.mu * budget
        L, _ = parallel_links_delay(links, c_eff, demand)
        if best_id is None or L < best_L - 1e-15 * max(1.0, abs(best_L)):
            best_L = L
            best_id = e.id
    if best_id is None:
        L, _ = parallel_links_delay(links, base, demand)
        return SingleEdgeResult(None, L, Allocation())
    return SingleEdgeResult(best_id, best_L,
                            Allocation({best_id: budget} if budget > 0 else {}))
