"""LP kernel checked against brute-force vertex enumeration.

With finite box bounds every feasible region is a polytope, so the optimum
of a bounded LP sits on a vertex obtainable by intersecting n active rows.
Scanning all row subsets gives an oracle that shares no code with the
tableau implementation.
"""

import itertools
import math

import numpy as np
import pytest

from dfc import simplex

SEED = 20240
CASES = 200
FEAS_TOL = 1e-7


def brute_force(c, G, h, A_eq, b_eq, lb, ub, maximize=True):
    """(status, value) by scanning all candidate vertices."""
    n = len(c)
    rows = []
    rhs = []
    kinds = []
    if G is not None:
        for a, b in zip(G, h):
            rows.append(np.asarray(a, float))
            rhs.append(float(b))
            kinds.append("le")
    if A_eq is not None:
        for a, b in zip(A_eq, b_eq):
            rows.append(np.asarray(a, float))
            rhs.append(float(b))
            kinds.append("eq")
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append(e.copy())
        rhs.append(float(ub[j]))
        kinds.append("le")
        rows.append(-e)
        rhs.append(float(-lb[j]))
        kinds.append("le")

    def feasible(x):
        for a, b, k in zip(rows, rhs, kinds):
            v = float(a @ x)
            if k == "eq" and abs(v - b) > FEAS_TOL:
                return False
            if k == "le" and v > b + FEAS_TOL:
                return False
        return True

    eq_idx = [i for i, k in enumerate(kinds) if k == "eq"]
    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        if any(i not in combo for i in eq_idx):
            continue
        A = np.array([rows[i] for i in combo])
        if abs(np.linalg.det(A)) < 1e-10:
            continue
        x = np.linalg.solve(A, np.array([rhs[i] for i in combo]))
        if not feasible(x):
            continue
        v = float(np.dot(c, x))
        if best is None or (v > best if maximize else v < best):
            best = v
    if best is None:
        return "infeasible", None
    return "optimal", best


def random_instance(rng, with_eq=False):
    n = int(rng.integers(2, 4))
    m = int(rng.integers(1, 5))
    G = rng.normal(size=(m, n))
    h = rng.uniform(-0.5, 2.0, m)
    lb = rng.uniform(-3.0, -0.5, n)
    ub = rng.uniform(0.5, 3.0, n)
    c = rng.normal(size=n)
    A_eq = b_eq = None
    if with_eq:
        a = rng.normal(size=n)
        # pass the plane through a box point so the slice is often nonempty
        p = rng.uniform(lb, ub)
        A_eq = a.reshape(1, -1)
        b_eq = np.array([float(a @ p)])
    return c, G, h, A_eq, b_eq, lb, ub


def test_matches_vertex_oracle_on_inequalities():
    rng = np.random.default_rng(SEED)
    infeasible_seen = 0
    for _ in range(CASES):
        c, G, h, A_eq, b_eq, lb, ub = random_instance(rng)
        res = simplex.solve_lp(c, G, h, A_eq, b_eq, lb, ub)
        status, value = brute_force(c, G, h, A_eq, b_eq, lb, ub)
        assert res.status == status
        if status == "optimal":
            assert res.value == pytest.approx(value, abs=1e-7 * (1 + abs(value)))
            assert np.all(G @ res.x <= np.asarray(h) + 1e-7)
            assert np.all(res.x >= lb - 1e-9) and np.all(res.x <= ub + 1e-9)
        else:
            infeasible_seen += 1
    assert infeasible_seen > 0


def test_matches_vertex_oracle_with_equalities():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(CASES):
        c, G, h, A_eq, b_eq, lb, ub = random_instance(rng, with_eq=True)
        res = simplex.solve_lp(c, G, h, A_eq, b_eq, lb, ub)
        status, value = brute_force(c, G, h, A_eq, b_eq, lb, ub)
        assert res.status == status
        if status == "optimal":
            assert res.value == pytest.approx(value, abs=1e-7 * (1 + abs(value)))
            assert abs(float(A_eq[0] @ res.x) - float(b_eq[0])) <= 1e-7


def test_minimize_agrees_with_negated_maximize():
    rng = np.random.default_rng(SEED + 2)
    for _ in range(50):
        c, G, h, _, _, lb, ub = random_instance(rng)
        lo = simplex.solve_lp(c, G, h, None, None, lb, ub, maximize=False)
        hi = simplex.solve_lp(-c, G, h, None, None, lb, ub, maximize=True)
        assert lo.status == hi.status
        if lo.status == "optimal":
            assert lo.value == pytest.approx(-hi.value, abs=1e-9 * (1 + abs(lo.value)))


def test_bounds_only_box_corner():
    res = simplex.solve_lp(
        [1.0, -2.0], None, None, None, None, [-1.0, -1.0], [2.0, 3.0]
    )
    assert res.status == "optimal"
    assert res.x == pytest.approx([2.0, -1.0])
    assert res.value == pytest.approx(4.0)


def test_degenerate_duplicate_rows_deterministic():
    G = [[1.0, 1.0]] * 6 + [[1.0, 0.0]] * 3
    h = [1.0] * 6 + [0.6] * 3
    a = simplex.solve_lp([1.0, 1.0], G, h, None, None, [0.0, 0.0], [5.0, 5.0])
    b = simplex.solve_lp([1.0, 1.0], G, h, None, None, [0.0, 0.0], [5.0, 5.0])
    assert a.status == "optimal"
    assert a.value == pytest.approx(1.0, abs=1e-9)
    assert np.array_equal(a.x, b.x)


def test_infeasible_rows_detected():
    res = simplex.solve_lp(
        [1.0], [[1.0], [-1.0]], [0.0, -1.0], None, None, [-5.0], [5.0]
    )
    assert res.status == "infeasible"


def test_crossed_bounds_infeasible():
    res = simplex.solve_lp([1.0], None, None, None, None, [1.0], [0.0])
    assert res.status == "infeasible"
    assert res.residual > 0


def test_infinite_bounds_rejected():
    with pytest.raises(ValueError):
        simplex.solve_lp([1.0], None, None, None, None, [-math.inf], [1.0])


def test_zero_objective_returns_feasible_point():
    G = [[1.0, 1.0]]
    h = [1.0]
    res = simplex.solve_lp([0.0, 0.0], G, h, None, None, [0.0, 0.0], [2.0, 2.0])
    assert res.status == "optimal"
    assert float(res.x[0] + res.x[1]) <= 1.0 + 1e-9
    assert res.value == 0.0
