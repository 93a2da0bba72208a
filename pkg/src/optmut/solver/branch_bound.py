"""Best-first branch and bound on LP relaxations.

Branches on the most-fractional integer variable (ties by declaration
order); nodes are explored best-bound-first with FIFO tie-breaking, so
the search order is fully deterministic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import replace

from ..model import Domain, LpModel, ObjSense, Variable, normalize

INT_TOL = 1e-6


def solve_milp(model, cfg=None):
    from . import Solution, SolverConfig, SolveStatus, solve_lp

    cfg = cfg or SolverConfig()
    m = normalize(model)
    int_idx = [i for i, v in enumerate(m.variables) if v.is_integer]
    if not int_idx:
        return solve_lp(m, cfg)

    maximize = m.objective.sense == ObjSense.MAXIMIZE

    def relaxed(bounds):
        variables = tuple(
            replace(v, lower=bounds[i][0], upper=bounds[i][1], domain=Domain.CONTINUOUS)
            for i, v in enumerate(m.variables)
        )
        return replace(m, variables=variables)

    root = tuple((v.lower, v.upper) for v in m.variables)
    incumbent = None
    incumbent_obj = None
    total_pivots = 0
    nodes = 0
    counter = 0
    budget_hit = False

    # heap entries: (bound key, insertion id, bounds); smaller key = better
    heap = []

    def push(bound, bounds):
        nonlocal counter
        key = -bound if maximize else bound
        heapq.heappush(heap, (key, counter, bounds))
        counter += 1

    lp = solve_lp(relaxed(root), cfg)
    total_pivots += lp.pivots
    nodes += 1
    if lp.status == SolveStatus.UNBOUNDED:
        return Solution(SolveStatus.UNBOUNDED, pivots=total_pivots, nodes=nodes)
    if lp.status == SolveStatus.ITERATION_LIMIT:
        return Solution(SolveStatus.ITERATION_LIMIT, pivots=total_pivots, nodes=nodes)
    if lp.status == SolveStatus.OPTIMAL:
        stack = [(lp, root)]
    else:
        stack = []

    while stack or heap:
        if stack:
            lp, bounds = stack.pop()
        else:
            key, _, bounds = heapq.heappop(heap)
            if nodes >= cfg.max_nodes:
                budget_hit = True
                break
            lp = solve_lp(relaxed(bounds), cfg)
            total_pivots += lp.pivots
            nodes += 1
            if lp.status == SolveStatus.ITERATION_LIMIT:
                budget_hit = True
                break
            if lp.status != SolveStatus.OPTIMAL:
                continue
        bound = lp.objective
        if incumbent_obj is not None:
            if maximize and bound <= incumbent_obj + 1e-9:
                continue
            if not maximize and bound >= incumbent_obj - 1e-9:
                continue
        # most fractional integer variable; ties by declaration order
        branch_i = -1
        branch_frac = INT_TOL
        for i in int_idx:
            x = lp.values[m.variables[i].name]
            frac = abs(x - round(x))
            if frac > branch_frac:
                branch_i = i
                branch_frac = frac
        if branch_i < 0:
            values = dict(lp.values)
            for i in int_idx:
                name = m.variables[i].name
                values[name] = float(round(values[name]))
            obj = m.objective.expr.evaluate(values)
            better = (
                incumbent_obj is None
                or (maximize and obj > incumbent_obj + 1e-9)
                or (not maximize and obj < incumbent_obj - 1e-9)
            )
            if better:
                incumbent, incumbent_obj = values, obj
            continue
        x = lp.values[m.variables[branch_i].name]
        lo, hi = bounds[branch_i]
        down_hi = math.floor(x)
        up_lo = math.ceil(x)
        if down_hi >= lo:
            down = tuple(
                (lo2, float(down_hi)) if i == branch_i else (lo2, hi2)
                for i, (lo2, hi2) in enumerate(bounds)
            )
            push(bound, down)
        if up_lo <= hi:
            up = tuple(
                (float(up_lo), hi2) if i == branch_i else (lo2, hi2)
                for i, (lo2, hi2) in enumerate(bounds)
            )
            push(bound, up)

    if budget_hit:
        return Solution(SolveStatus.ITERATION_LIMIT, pivots=total_pivots, nodes=nodes)
    if incumbent is None:
        return Solution(SolveStatus.INFEASIBLE, pivots=total_pivots, nodes=nodes)
    return Solution(
        SolveStatus.OPTIMAL, incumbent, incumbent_obj, pivots=total_pivots, nodes=nodes
    )
