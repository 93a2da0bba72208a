"""Dense two-phase simplex over the model IR.

All variables are substituted to nonnegative columns (shift / flip /
free-split), finite upper bounds become explicit rows, and phase 1
minimizes artificial infeasibility. Tie-breaking is by declaration
order throughout, so a solve is a pure function of the model text.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ModelInvalid
from ..model import INF, LpModel, ObjSense, Sense
from . import kernel as _kernel_mod

PIVOT_EPS = 1e-9

# kernel status codes
OPTIMAL, UNBOUNDED, LIMIT = 0, 1, 2


class _Std:
    """Standardized column/row form of a model."""

    def __init__(self, model: LpModel):
        self.model = model
        self.offsets: list[float] = []
        self.var_cols: list[list[tuple[int, float]]] = []  # per var: (col, mult)
        ncols = 0
        bound_rows: list[tuple[int, float]] = []  # (col, upper-lower)
        for v in model.variables:
            lo, hi = v.lower, v.upper
            if lo == INF or hi == -INF:
                raise ModelInvalid(f"variable {v.name!r} has an impossible bound")
            if lo == -INF and hi == INF:
                self.offsets.append(0.0)
                self.var_cols.append([(ncols, 1.0), (ncols + 1, -1.0)])
                ncols += 2
            elif lo == -INF:
                self.offsets.append(hi)
                self.var_cols.append([(ncols, -1.0)])
                ncols += 1
            else:
                self.offsets.append(lo)
                self.var_cols.append([(ncols, 1.0)])
                if hi != INF:
                    bound_rows.append((ncols, hi - lo))
                ncols += 1
        self.ncols = ncols

        # rows: model constraints in declaration order, then bound rows
        self.rows: list[tuple[dict[int, float], str, float]] = []
        name_idx = {v.name: i for i, v in enumerate(model.variables)}
        for c in model.constraints:
            coefs: dict[int, float] = {}
            rhs = c.rhs
            for var, a in c.lhs.terms:
                vi = name_idx[var]
                rhs -= a * self.offsets[vi]
                for col, mult in self.var_cols[vi]:
                    coefs[col] = coefs.get(col, 0.0) + a * mult
            self.rows.append((coefs, c.sense.value, rhs))
        for col, ub in bound_rows:
            self.rows.append(({col: 1.0}, Sense.LE.value, ub))

        # minimization costs over structural columns
        sign = 1.0 if model.objective.sense == ObjSense.MINIMIZE else -1.0
        self.costs = np.zeros(ncols)
        for var, a in model.objective.expr.terms:
            vi = name_idx[var]
            for col, mult in self.var_cols[vi]:
                self.costs[col] += sign * a * mult

    def point_from_cols(self, xp: np.ndarray) -> dict[str, float]:
        values: dict[str, float] = {}
        for i, v in enumerate(self.model.variables):
            x = self.offsets[i]
            for col, mult in self.var_cols[i]:
                x += mult * xp[col]
            values[v.name] = float(x)
        return values


def simplex_solve(model: LpModel, feas_tol: float, opt_tol: float, max_pivots: int,
                  kernel=None):
    """Two-phase simplex. Returns (status_code, values, pivots) where
    status_code is one of OPTIMAL/UNBOUNDED/LIMIT or the string
    'infeasible'. ``values`` maps variable name -> value when optimal."""
    run = kernel if kernel is not None else _kernel_mod.run_simplex
    std = _Std(model)
    nc = std.ncols
    m = len(std.rows)

    # orient rows so rhs >= 0, then assign slack/artificial columns
    oriented = []
    for coefs, sense, rhs in std.rows:
        if rhs < 0:
            coefs = {c: -a for c, a in coefs.items()}
            rhs = -rhs
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        oriented.append((coefs, sense, rhs))

    slack_of: list[int | None] = []
    art_of: list[int | None] = []
    nslack = 0
    for _, sense, _ in oriented:
        slack_of.append(nslack if sense in ("<=", ">=") else None)
        if sense in ("<=", ">="):
            nslack += 1
    nart = 0
    art_start = nc + nslack
    for _, sense, _ in oriented:
        art_of.append(nart if sense in (">=", "==") else None)
        if sense in (">=", "=="):
            nart += 1

    n1 = nc + nslack + nart
    T = np.zeros((m + 1, n1 + 1))
    basis = np.full(m, -1, dtype=np.int64)
    for r, (coefs, sense, rhs) in enumerate(oriented):
        for col, a in coefs.items():
            T[r, col] = a
        if slack_of[r] is not None:
            T[r, nc + slack_of[r]] = 1.0 if sense == "<=" else -1.0
        if art_of[r] is not None:
            T[r, art_start + art_of[r]] = 1.0
            basis[r] = art_start + art_of[r]
        else:
            basis[r] = nc + slack_of[r]
        T[r, n1] = rhs

    # phase 1: minimize sum of artificials
    if nart:
        for j in range(nart):
            T[m, art_start + j] = 1.0
        for r in range(m):
            if basis[r] >= art_start:
                T[m] -= T[r]
        code, p1 = run(T, basis, max_pivots, opt_tol)
        if code == LIMIT:
            return LIMIT, None, p1
        if -T[m, n1] > feas_tol:
            return "infeasible", None, p1
        # drive remaining artificials out of the basis (zero-level pivots)
        for r in range(m):
            if basis[r] >= art_start:
                jc = -1
                for j in range(art_start):
                    if abs(T[r, j]) > PIVOT_EPS:
                        jc = j
                        break
                if jc < 0:
                    basis[r] = -1  # redundant row
                    continue
                piv = T[r, jc]
                T[r] /= piv
                for i in range(m + 1):
                    if i != r:
                        f = T[i, jc]
                        if f != 0.0:
                            T[i] -= f * T[r]
                basis[r] = jc
    else:
        p1 = 0

    # phase 2 on the artificial-free columns
    n2 = art_start
    T2 = np.ascontiguousarray(np.hstack([T[:, :n2], T[:, n1:]]))
    costs2 = np.zeros(n2)
    costs2[:nc] = std.costs
    T2[m, :n2] = costs2
    T2[m, n2] = 0.0
    for r in range(m):
        bi = basis[r]
        if bi >= 0 and costs2[bi] != 0.0:
            T2[m] -= costs2[bi] * T2[r]
    tol2 = opt_tol * max(1.0, float(np.max(np.abs(costs2))) if n2 else 1.0)
    code, p2 = run(T2, basis, max_pivots - p1, tol2)
    pivots = p1 + p2
    if code != OPTIMAL:
        return code, None, pivots

    xp = np.zeros(n2)
    for r in range(m):
        bi = basis[r]
        if 0 <= bi < n2:
            xp[bi] = T2[r, n2]
    return OPTIMAL, std.point_from_cols(xp), pivots
