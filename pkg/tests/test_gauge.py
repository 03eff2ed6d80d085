"""Epigraph template lowering checked against direct membership oracles.

The template block for a set S describes {(w, tau) : w in tau * S} (tau > 0),
so every slice can be validated by scaling a point back into S and calling
the membership predicate, which never touches the lowering code.
"""

import math

import numpy as np
import pytest

from dfc import analysis, gauge, sets
from dfc.gauge import Aff

SEED = 20240
CASES = 200
INF = math.inf


# ---------------------------------------------------------------------------
# affine expressions
# ---------------------------------------------------------------------------


def test_aff_terms_sorted_and_nonzero():
    e = Aff.of({"b": 2.0, "a": 0.0, "c": -1.0}, 3.0)
    assert e.terms == (("b", 2.0), ("c", -1.0))
    assert e.const == 3.0


def test_aff_algebra_matches_numeric_evaluation():
    rng = np.random.default_rng(SEED)
    names = ["a", "b", "c"]
    for _ in range(CASES):
        c1 = {n: float(v) for n, v in zip(names, rng.normal(size=3))}
        c2 = {n: float(v) for n, v in zip(names, rng.normal(size=3))}
        k = float(rng.normal())
        e1 = Aff.of(c1, float(rng.normal()))
        e2 = Aff.of(c2, float(rng.normal()))
        env = {n: float(v) for n, v in zip(names, rng.normal(size=3))}
        assert (e1 + e2).evaluate(env) == pytest.approx(
            e1.evaluate(env) + e2.evaluate(env), abs=1e-12
        )
        assert (e1 - e2).evaluate(env) == pytest.approx(
            e1.evaluate(env) - e2.evaluate(env), abs=1e-12
        )
        assert e1.scaled(k).evaluate(env) == pytest.approx(
            k * e1.evaluate(env), abs=1e-12
        )
        assert e1.shifted(k).evaluate(env) == pytest.approx(
            e1.evaluate(env) + k, abs=1e-12
        )


def test_combo_builds_inner_product():
    e = gauge.combo(["x0", "x1"], [2.0, -3.0], 1.5)
    assert e.evaluate({"x0": 1.0, "x1": 1.0}) == pytest.approx(0.5)


def test_name_gen_is_sequential():
    gen = gauge.NameGen()
    assert [gen.fresh() for _ in range(3)] == ["z0", "z1", "z2"]
    assert gen.fresh("p") == "p3"


# ---------------------------------------------------------------------------
# atom evaluation
# ---------------------------------------------------------------------------


def test_linear_atom_violation():
    le = gauge.Linear(Aff.of({"x": 1.0}, -1.0))
    assert gauge.atom_violation(le, {"x": 0.5}) == pytest.approx(-0.5)
    assert gauge.atom_violation(le, {"x": 2.0}) == pytest.approx(1.0)
    eq = gauge.Linear(Aff.of({"x": 1.0}, -1.0), "eq")
    assert gauge.atom_violation(eq, {"x": 0.5}) == pytest.approx(0.5)


def test_soc_atom_violation():
    atom = gauge.SOC((Aff.var("a"), Aff.var("b")), Aff.var("r"))
    assert gauge.atom_violation(atom, {"a": 3.0, "b": 4.0, "r": 6.0}) == pytest.approx(
        -1.0
    )
    assert gauge.atom_violation(atom, {"a": 3.0, "b": 4.0, "r": 4.0}) == pytest.approx(
        1.0
    )


def test_perspective_atom_negative_scale():
    fn = sets.QuadraticPlus((1.0, 0.0), 0.0, (0.0, 1.0))
    atom = gauge.Perspective(fn, (Aff.var("x"), Aff.var("y")), Aff.var("t"))
    assert gauge.atom_violation(atom, {"x": 0.0, "y": 0.0, "t": -0.25}) == pytest.approx(
        0.25
    )


def test_gauge_plus_atom_positive_part():
    disk = sets.ball([0.0, 0.0], 1.0)
    atom = gauge.GaugePlus(
        disk,
        (((1.0, 0.0), Aff.var("u")), ((0.0, 1.0), Aff.var("v"))),
        Aff.const_of(1.0),
        positive_part=True,
    )
    # negative coordinates are clipped before the gauge is taken
    assert gauge.atom_violation(atom, {"u": -5.0, "v": 0.5}) == pytest.approx(-0.5)
    plain = gauge.GaugePlus(atom.set_ref, atom.terms, atom.rhs, positive_part=False)
    assert gauge.atom_violation(plain, {"u": -5.0, "v": 0.5}) > 0


def test_gauge_and_normal_subgradient_inequality():
    rng = np.random.default_rng(SEED)
    shapes = [
        sets.box([-1.0, -2.0], [2.0, 1.0]),
        sets.ball([0.0, 0.0], 1.5),
        sets.vpoly([[2.0, 0.0], [0.0, 2.0], [-1.0, -1.0]]),
        sets.hpoly([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], [1.0, 1.0, 1.0]),
        sets.translate(sets.ball([0.4, 0.0], 1.0), [-0.2, 0.1]),
    ]
    for _ in range(CASES):
        S = shapes[int(rng.integers(len(shapes)))]
        w = rng.uniform(-2, 2, 2)
        z = rng.uniform(-2, 2, 2)
        gam, q = gauge.gauge_and_normal(S, w)
        gz, _ = gauge.gauge_and_normal(S, z)
        assert float(q @ w) == pytest.approx(gam, abs=1e-6 * (1 + abs(gam)))
        assert float(q @ z) <= gz + 1e-6 * (1 + abs(gz))


def test_gauge_and_normal_matches_bisection_value():
    rng = np.random.default_rng(SEED)
    D = unit_disk_conic()
    V = sets.vpoly([[1.0, 0.2], [-0.3, 1.1], [-0.9, -0.8], [0.7, -1.0]])
    for _ in range(60):
        w = rng.uniform(-2, 2, 2)
        for S in (D, V):
            gam, _ = gauge.gauge_and_normal(S, w)
            want = sets.gauge_value(S, [0.0, 0.0], w)
            assert gam == pytest.approx(want, abs=1e-5 * (1 + want))


def test_gauge_and_normal_flat_direction_separates():
    S = sets.box([-1.0, 0.0], [1.0, 0.0])
    gam, u = gauge.gauge_and_normal(S, np.array([0.0, 1.0]))
    assert math.isinf(gam)
    assert float(u @ np.array([0.0, 1.0])) > 0
    assert sets.support(S, u) <= 1e-9


# ---------------------------------------------------------------------------
# template lowering: slice equivalence with plain membership
# ---------------------------------------------------------------------------


def unit_disk_conic():
    return sets.conic(
        A=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        B=None,
        c=[1.0, 0.0, 0.0],
        cones=[("soc", 3)],
    )


def block_holds(S, x, tau, tol=1e-7):
    gen = gauge.NameGen()
    atoms, aux = gauge.lower_epigraph(
        S,
        tuple(Aff.const_of(float(v)) for v in x),
        Aff.const_of(float(tau)),
        gen,
        with_tau_row=False,
    )
    if not aux:
        return gauge.block_feasible(atoms, {}, tol)
    variables = [(nm, -INF, INF) for nm in aux]
    gap, _ = analysis.feasibility_gap(atoms, variables)
    return gap <= tol


TEMPLATE_SHAPES = [
    sets.box([-1.0, -0.5], [0.5, 2.0]),
    sets.ball([0.2, -0.1], 1.2),
    sets.hpoly([[1.0, 1.0], [-1.0, 0.5], [0.0, -1.0]], [1.0, 0.8, 0.6]),
    sets.vpoly([[1.5, 0.0], [0.0, 1.5], [-1.0, -1.0], [-1.0, 1.0]]),
    sets.translate(sets.ball([0.0, 0.0], 1.0), [0.3, -0.2]),
    sets.scale(sets.box([-1.0, -1.0], [1.0, 1.0]), 1.7),
    sets.intersect(sets.ball([0.0, 0.0], 1.4), sets.box([-1.0, -1.0], [2.0, 2.0])),
]


def test_template_positive_slices_match_membership():
    rng = np.random.default_rng(SEED)
    for _ in range(CASES):
        S = TEMPLATE_SHAPES[int(rng.integers(len(TEMPLATE_SHAPES)))]
        x = rng.uniform(-2.5, 2.5, 2)
        tau = float(rng.uniform(0.2, 3.0))
        want = sets.contains(S, x / tau)
        # skip points too close to the scaled boundary to classify stably
        if want != sets.contains(S, x / tau, -1e-5):
            continue
        assert block_holds(S, x, tau) == want


def test_template_unit_slice_of_conic_disk():
    D = unit_disk_conic()
    rng = np.random.default_rng(SEED)
    for _ in range(60):
        x = rng.uniform(-1.5, 1.5, 2)
        r = float(np.linalg.norm(x))
        if abs(r - 1.0) < 1e-6:
            continue
        assert block_holds(D, x, 1.0) == (r <= 1.0)


def test_template_zero_slice_is_recession_cone():
    S = sets.sum_cone(sets.vpoly([[0.0, 0.0], [1.0, 0.0]]), [[0.0, 1.0]])
    assert block_holds(S, [0.0, 3.0], 0.0)
    assert not block_holds(S, [0.5, 0.0], 0.0)
    B = sets.box([-1.0, -1.0], [1.0, 1.0])
    assert block_holds(B, [0.0, 0.0], 0.0)
    assert not block_holds(B, [0.3, 0.0], 0.0)


def test_template_scale_zero_child_uses_recession():
    S = sets.scale(sets.box([0.0, -1.0], [INF, 1.0]), 0.0)
    assert block_holds(S, [4.0, 0.0], 1.0)
    assert not block_holds(S, [4.0, 0.5], 1.0)


def test_template_sum_cone_slice():
    S = sets.sum_cone(sets.ball([0.0, 0.0], 1.0), [[1.0, 0.0]])
    assert block_holds(S, [4.0, 0.5], 1.0)
    assert not block_holds(S, [4.0, 1.5], 1.0)
    assert not block_holds(S, [-1.5, 0.0], 1.0)


def test_template_level_set_slice():
    fn = sets.QuadraticPlus((1.0, 0.0), 0.0, (0.0, 1.0))
    S = sets.level_set(fn)
    assert block_holds(S, [0.5, 0.25], 1.0)
    assert not block_holds(S, [1.0, 0.5], 1.0)
    # tau scales the level set through the perspective
    assert block_holds(S, [1.0, 0.5], 2.0)


def test_template_arity_mismatch_raises():
    gen = gauge.NameGen()
    with pytest.raises(sets.DimensionMismatch):
        gauge.lower_epigraph(
            sets.ball([0.0, 0.0], 1.0), (Aff.var("x"),), Aff.var("y"), gen
        )


def test_template_with_tau_row_appends_sign_row():
    gen = gauge.NameGen()
    S = sets.box([-1.0, -1.0], [1.0, 1.0])
    w = (Aff.var("a"), Aff.var("b"))
    with_row, _ = gauge.lower_epigraph(S, w, Aff.var("t"), gen, with_tau_row=True)
    without, _ = gauge.lower_epigraph(S, w, Aff.var("t"), gen, with_tau_row=False)
    assert len(with_row) == len(without) + 1
    tail = with_row[-1]
    assert isinstance(tail, gauge.Linear)
    assert tail.expr.terms == (("t", -1.0),)


# ---------------------------------------------------------------------------
# epi_gauge blocks
# ---------------------------------------------------------------------------


def test_epi_gauge_block_matches_gauge_values():
    S = sets.ball([3.0, 3.0], 2.0)
    block = gauge.epi_gauge(S, [3.0, 3.0], ("x0", "x1"), "y")
    assert set(block.provenance) == {gauge.GAUGE_EPIGRAPH_LABEL}
    rng = np.random.default_rng(SEED)
    for _ in range(CASES):
        x = rng.uniform(-3, 3, 2)
        y = float(rng.uniform(0.01, 3))
        env = {"x0": float(x[0]), "x1": float(x[1]), "y": y}
        want = float(np.linalg.norm(x)) / 2.0 <= y
        if abs(float(np.linalg.norm(x)) / 2.0 - y) < 1e-9:
            continue
        assert gauge.block_feasible(block.atoms, env, 1e-9) == want


def test_epi_gauge_rejects_outside_base():
    with pytest.raises(sets.BasePointNotInSet):
        gauge.epi_gauge(sets.ball([0.0, 0.0], 1.0), [4.0, 0.0], ("a", "b"), "y")


def test_epi_gauge_names_cover_aux():
    S = sets.vpoly([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    block = gauge.epi_gauge(S, [0.0, 0.0], ("x0", "x1"), "y")
    used = set()
    for atom in block.atoms:
        used |= gauge.atom_names(atom)
    assert used <= set(block.variables)


# ---------------------------------------------------------------------------
# cone-sum blocks
# ---------------------------------------------------------------------------


def axis_basis(s, t):
    n = len(s)
    return sets.SignedBasis(tuple(tuple(float(v) for v in row) for row in np.eye(n)), tuple(s), tuple(t))


def test_cone_sum_block_monotone_box():
    # C = [0,1]^2 grown downward: the result is {x : x <= 1}
    C = sets.box([0.0, 0.0], [1.0, 1.0])
    block = gauge.epi_gauge_cone_sum(C, axis_basis((1, 1), (-1, -1)), ("x0", "x1"), "y")
    assert set(block.provenance) == {gauge.CONE_SUM_LABEL}
    rng = np.random.default_rng(SEED)
    for _ in range(CASES):
        x = rng.uniform(-3, 3, 2)
        y = float(rng.uniform(0.05, 2.5))
        env = {"x0": float(x[0]), "x1": float(x[1]), "y": y}
        want = max(x[0], x[1], 0.0) <= y
        if abs(max(x[0], x[1], 0.0) - y) < 1e-9:
            continue
        assert gauge.block_feasible(block.atoms, env, 1e-9) == want


def test_cone_sum_block_free_directions_get_sign_rows():
    # s = 0 on the second axis: membership constrains the projection only
    C = sets.box([0.0, -1.0], [1.0, 1.0])
    block = gauge.epi_gauge_cone_sum(
        C, axis_basis((1, 0), (-1, 1)), ("x0", "x1"), "y", check=False
    )
    gauges = [a for a in block.atoms if isinstance(a, gauge.GaugePlus)]
    rows = [a for a in block.atoms if isinstance(a, gauge.Linear)]
    assert len(gauges) == 1
    assert len(gauges[0].terms) == 1
    # one sign row for the free direction plus the y >= 0 row
    assert len(rows) == 2


def test_cone_sum_probe_rejects_escaping_difference():
    C = sets.box([0.5, 0.0], [1.0, 1.0])
    with pytest.raises(gauge.ConditionViolated) as err:
        gauge.epi_gauge_cone_sum(C, axis_basis((1, 1), (-1, -1)), ("x0", "x1"), "y")
    w = np.asarray(err.value.witness)
    assert np.all(w >= -1e-9)
    assert not sets.contains(C, w, 1e-6)


def test_cone_sum_probe_rejects_unbounded_piece():
    C = sets.box([0.0, 0.0], [INF, 1.0])
    with pytest.raises(gauge.ConditionViolated):
        gauge.epi_gauge_cone_sum(C, axis_basis((1, 1), (-1, -1)), ("x0", "x1"), "y")


def test_cone_sum_requires_square_basis():
    C = sets.box([0.0, 0.0], [1.0, 1.0])
    bad = sets.SignedBasis(((1.0, 0.0),), (1,), (-1,))
    with pytest.raises(sets.DimensionMismatch):
        gauge.epi_gauge_cone_sum(C, bad, ("x0", "x1"), "y")


def test_signed_basis_validation():
    with pytest.raises(ValueError):
        sets.SignedBasis(((1.0, 0.0), (1.0, 0.0)), (1, 1), (-1, -1)).validate()
    with pytest.raises(ValueError):
        sets.SignedBasis(((1.0, 0.0), (0.0, 1.0)), (2, 1), (-1, -1)).validate()
    with pytest.raises(ValueError):
        sets.SignedBasis(((1.0, 0.0), (0.0, 1.0)), (1, 1), (0, -1)).validate()
    with pytest.raises(sets.DimensionMismatch):
        sets.SignedBasis(((1.0, 0.0), (0.0, 1.0)), (1,), (-1, -1)).validate()
