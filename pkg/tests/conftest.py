import random

import pytest

from optmut.model import (
    Constraint,
    Domain,
    LinearExpr,
    LpModel,
    Objective,
    ObjSense,
    Sense,
    Variable,
)


def build_eq1(name="factory"):
    """max 120x + 90y s.t. x+y<=8, 2x+y<=10, x,y>=0 (optimum (2,6), 780)."""
    return LpModel(
        name=name,
        variables=(Variable("x"), Variable("y")),
        constraints=(
            Constraint("c1", LinearExpr.of({"x": 1.0, "y": 1.0}), Sense.LE, 8.0),
            Constraint("c2", LinearExpr.of({"x": 2.0, "y": 1.0}), Sense.LE, 10.0),
        ),
        objective=Objective(ObjSense.MAXIMIZE, LinearExpr.of({"x": 120.0, "y": 90.0})),
    )


@pytest.fixture
def eq1():
    return build_eq1()


def random_box_lp(rng: random.Random, nmax=5, mmax=5):
    """Random fully box-bounded LP with integer data (oracle-friendly)."""
    n = rng.randint(1, nmax)
    m = rng.randint(1, mmax)
    variables = []
    for i in range(n):
        lo = rng.randint(-3, 3)
        hi = lo + rng.randint(0, 8)
        variables.append(Variable(f"x{i}", float(lo), float(hi)))
    constraints = []
    for j in range(m):
        terms = {}
        for i in range(n):
            c = rng.randint(-5, 5)
            if c:
                terms[f"x{i}"] = float(c)
        if not terms:
            terms[f"x{rng.randrange(n)}"] = 1.0
        sense = rng.choice([Sense.LE, Sense.LE, Sense.LE, Sense.GE, Sense.GE, Sense.EQ])
        rhs = float(rng.randint(-10, 25))
        constraints.append(Constraint(f"c{j+1}", LinearExpr.of(terms), sense, rhs))
    obj = {f"x{i}": float(rng.randint(-10, 10)) for i in range(n)}
    objective = Objective(
        rng.choice([ObjSense.MAXIMIZE, ObjSense.MINIMIZE]), LinearExpr.of(obj)
    )
    return LpModel("rand", tuple(variables), tuple(constraints), objective)


def random_box_ip(rng: random.Random, nmax=4):
    """Random pure-integer model with a small lattice (<= ~4k points)."""
    n = rng.randint(1, nmax)
    variables = []
    for i in range(n):
        lo = rng.randint(0, 2)
        hi = lo + rng.randint(1, 7)
        variables.append(Variable(f"x{i}", float(lo), float(hi), Domain.INTEGER))
    m = rng.randint(1, 4)
    constraints = []
    for j in range(m):
        terms = {}
        for i in range(n):
            c = rng.randint(-4, 4)
            if c:
                terms[f"x{i}"] = float(c)
        if not terms:
            terms[f"x{rng.randrange(n)}"] = 1.0
        sense = rng.choice([Sense.LE, Sense.LE, Sense.LE, Sense.GE, Sense.EQ])
        rhs = float(rng.randint(-6, 20))
        constraints.append(Constraint(f"c{j+1}", LinearExpr.of(terms), sense, rhs))
    obj = {f"x{i}": float(rng.randint(-8, 8)) for i in range(n)}
    objective = Objective(
        rng.choice([ObjSense.MAXIMIZE, ObjSense.MINIMIZE]), LinearExpr.of(obj)
    )
    return LpModel("randint", tuple(variables), tuple(constraints), objective)
