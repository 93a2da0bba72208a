"""Independent brute-force oracles the solver tests check against.

Nothing here shares code with the simplex path: optima come from
enumerating candidate vertices (intersections of n active planes) or,
for integer models, from exhaustive lattice enumeration.
"""

import itertools
import math

import numpy as np

from optmut.model import INF, ObjSense, Sense, normalize


def _planes(model):
    names = model.variable_names()
    idx = {n: i for i, n in enumerate(names)}
    n = len(names)
    planes = []
    for c in model.constraints:
        a = np.zeros(n)
        for var, coef in c.lhs.terms:
            a[idx[var]] = coef
        planes.append((a, c.rhs))
    for i, v in enumerate(model.variables):
        if math.isfinite(v.lower):
            e = np.zeros(n)
            e[i] = 1.0
            planes.append((e, v.lower))
        if math.isfinite(v.upper):
            e = np.zeros(n)
            e[i] = 1.0
            planes.append((e, v.upper))
    return planes


def _point_feasible(model, x, tol):
    names = model.variable_names()
    idx = {n: i for i, n in enumerate(names)}
    for c in model.constraints:
        act = sum(coef * x[idx[var]] for var, coef in c.lhs.terms)
        if c.sense == Sense.LE and act > c.rhs + tol:
            return False
        if c.sense == Sense.GE and act < c.rhs - tol:
            return False
        if c.sense == Sense.EQ and abs(act - c.rhs) > tol:
            return False
    for i, v in enumerate(model.variables):
        if x[i] < v.lower - tol or x[i] > v.upper + tol:
            return False
    return True


def vertex_enumerate(model, feas_tol=1e-6):
    """Optimum by candidate-vertex enumeration.

    Sound for pointed feasible regions whose optimum is attained at a
    vertex (always true for the box-bounded corpora used in tests).
    Returns (status, objective, optimal_vertices) with status in
    {"optimal", "infeasible"}; vertices are rounded tuples.
    """
    m = normalize(model)
    n = len(m.variables)
    planes = _planes(m)
    names = m.variable_names()
    idx = {name: i for i, name in enumerate(names)}
    cobj = np.zeros(n)
    for var, coef in m.objective.expr.terms:
        cobj[idx[var]] = coef
    maximize = m.objective.sense == ObjSense.MAXIMIZE

    feasible_pts = []
    if n == 0:
        return "optimal", m.objective.expr.constant, [()]
    for combo in itertools.combinations(range(len(planes)), n):
        A = np.array([planes[k][0] for k in combo])
        b = np.array([planes[k][1] for k in combo])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        # discard garbage from near-singular systems
        if np.max(np.abs(A @ x - b)) > 1e-7 * max(1.0, np.max(np.abs(b))):
            continue
        if _point_feasible(m, x, feas_tol):
            feasible_pts.append(x)
    if not feasible_pts:
        return "infeasible", None, []
    vals = [float(cobj @ x) + m.objective.expr.constant for x in feasible_pts]
    best = max(vals) if maximize else min(vals)
    scale = max(1.0, abs(best))
    opt = {
        tuple(round(float(v), 9) for v in x)
        for x, val in zip(feasible_pts, vals)
        if abs(val - best) <= 1e-7 * scale
    }
    return "optimal", best, sorted(opt)


def lattice_enumerate(model, tol=1e-9):
    """Optimum of a pure-integer, box-bounded model by full enumeration."""
    m = normalize(model)
    ranges = []
    for v in m.variables:
        if not v.is_integer or not math.isfinite(v.lower) or not math.isfinite(v.upper):
            raise ValueError("lattice oracle needs box-bounded integer variables")
        ranges.append(range(math.ceil(v.lower - tol), math.floor(v.upper + tol) + 1))
    idx = {v.name: i for i, v in enumerate(m.variables)}
    cobj = [0.0] * len(m.variables)
    for var, coef in m.objective.expr.terms:
        cobj[idx[var]] = coef
    maximize = m.objective.sense == ObjSense.MAXIMIZE
    best = None
    best_pt = None
    for point in itertools.product(*ranges):
        x = np.array(point, dtype=float)
        if not _point_feasible(m, x, tol):
            continue
        val = float(np.dot(cobj, x)) + m.objective.expr.constant
        if best is None or (val > best if maximize else val < best):
            best = val
            best_pt = point
    if best is None:
        return "infeasible", None, None
    return "optimal", best, best_pt
