"""Empirical certification of formulation strength.

The optimizer is a cutting-plane loop around a dense simplex master: linear
atoms seed the master, nonlinear atoms (cone rows, perspectives, gauge
bounds) contribute supporting cuts at master optima until the worst violation
drops below tolerance.  All optimization happens inside an explicit box
(radius 1e3); a solution pressed against that box is flagged and read as
"unbounded" by the support-function callers.

Verification routines compare a formulation's linear relaxation against
set-level oracles:

    check_sharp       projected support equality over sampled x-directions
    check_ideal       joint (x, y) support equality, or exact vertex
                      integrality for purely linear formulations
    check_par_conditions   membership and support equality for family covers
    check_bbj_condition    basis-subsystem optimum matching
    check_minkowski_ideal  slice-vs-average support comparison

Sampled checks return "not-refuted" rather than "pass"; only exact modes may
say "pass".  Every report records the seed, direction count, tolerance and
reproducible witnesses, and multi-process runs merge results by sample index
so the output is identical at any job count.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gauge as gauge_mod
from . import sets, simplex
from .gauge import Aff, GaugePlus, Linear, Perspective, SOC
from .sets import QuadraticPlus, SetExpr

BOX_RADIUS = 1e3
CUT_TOL = 1e-8
MAX_CUT_ROUNDS = 5000
VERTEX_ROW_CAP = 64
VERTEX_DIM_CAP = 10
BASIS_CAP = 10_000
DEFAULT_SEED = 20240


# ---------------------------------------------------------------------------
# atom compilation
# ---------------------------------------------------------------------------


def _aff_vec(e: Aff, index: dict[str, int], n: int) -> tuple[np.ndarray, float]:
    v = np.zeros(n)
    for name, c in e.terms:
        v[index[name]] += c
    return v, e.const


@dataclass
class _Compiled:
    names: list[str]
    index: dict[str, int]
    lb: np.ndarray
    ub: np.ndarray
    rows: list[np.ndarray]
    rhs: list[float]
    eq_rows: list[np.ndarray]
    eq_rhs: list[float]
    nonlinear: list  # (atom, precomputed data)
    trivially_infeasible: bool = False


def compile_atoms(atoms, variables) -> _Compiled:
    """variables: iterable of (name, lb, ub) triples, in a fixed order."""
    names = [v[0] for v in variables]
    index = {n: i for i, n in enumerate(names)}
    n = len(names)
    lb = np.array([v[1] for v in variables], dtype=float) if n else np.zeros(0)
    ub = np.array([v[2] for v in variables], dtype=float) if n else np.zeros(0)
    cp = _Compiled(names, index, lb, ub, [], [], [], [], [])

    def add_row(vec, const):
        # vec.z + const <= 0
        if not np.any(vec):
            if const > 1e-9:
                cp.trivially_infeasible = True
            return
        cp.rows.append(vec)
        cp.rhs.append(-const)

    for atom in atoms:
        if isinstance(atom, Linear):
            vec, const = _aff_vec(atom.expr, index, n)
            if atom.relation == "eq":
                if not np.any(vec):
                    if abs(const) > 1e-9:
                        cp.trivially_infeasible = True
                    continue
                cp.eq_rows.append(vec)
                cp.eq_rhs.append(-const)
            else:
                add_row(vec, const)
        elif isinstance(atom, SOC):
            arg = [_aff_vec(e, index, n) for e in atom.arg]
            bound = _aff_vec(atom.bound, index, n)
            cp.nonlinear.append((atom, (arg, bound)))
            add_row(-bound[0], -bound[1])  # bound expression must be nonnegative
        elif isinstance(atom, Perspective):
            arg = [_aff_vec(e, index, n) for e in atom.arg]
            sc = _aff_vec(atom.scale, index, n)
            cp.nonlinear.append((atom, (arg, sc)))
            add_row(-sc[0], -sc[1])
            for a, c in atom.fn.persp_valid_rows():
                vec = sum(float(a[j]) * arg[j][0] for j in range(len(arg))) - c * sc[0]
                const = sum(float(a[j]) * arg[j][1] for j in range(len(arg))) - c * sc[1]
                add_row(vec, const)
        elif isinstance(atom, GaugePlus):
            terms = [
                (np.asarray(d, dtype=float), _aff_vec(e, index, n))
                for d, e in atom.terms
            ]
            rhs = _aff_vec(atom.rhs, index, n)
            cp.nonlinear.append((atom, (terms, rhs)))
            add_row(-rhs[0], -rhs[1])
        else:
            raise TypeError(f"cannot compile atom {atom!r}")
    return cp


# ---------------------------------------------------------------------------
# cutting-plane optimizer
# ---------------------------------------------------------------------------


@dataclass
class OptResult:
    status: str  # optimal | infeasible | stalled
    value: float
    point: np.ndarray | None
    env: dict[str, float] | None
    box_active: bool
    rounds: int


def _atom_violation_and_cuts(atom, pre, z: np.ndarray, want_cut: bool):
    """Return (violation, cuts) with each cut a (vec, rhs) row vec.z <= rhs."""
    if isinstance(atom, SOC):
        arg, bound = pre
        vals = np.array([a @ z + c for a, c in arg])
        bval = bound[0] @ z + bound[1]
        nrm = float(np.linalg.norm(vals))
        viol = nrm - bval
        if not want_cut or viol <= 0.0 or nrm == 0.0:
            return viol, []
        g = vals / nrm
        vec = sum(float(g[i]) * arg[i][0] for i in range(len(arg))) - bound[0]
        const = sum(float(g[i]) * arg[i][1] for i in range(len(arg))) - bound[1]
        return viol, [(vec, -const)]
    if isinstance(atom, Perspective):
        arg, sc = pre
        x = np.array([a @ z + c for a, c in arg])
        t = float(sc[0] @ z + sc[1])
        if t < 0.0:
            return -t, [(-sc[0], sc[1])] if want_cut else []
        viol = atom.fn.persp_value(x, max(t, 0.0))
        if not want_cut or viol <= 0.0:
            return viol, []
        if isinstance(atom.fn, QuadraticPlus):
            return viol, _quadratic_plus_cut(atom.fn, arg, sc, x, t)
        gx, gt, off = _generic_persp_tangent(atom.fn, x, t)
        vec = sum(float(gx[j]) * arg[j][0] for j in range(len(arg))) + gt * sc[0]
        const = sum(float(gx[j]) * arg[j][1] for j in range(len(arg))) + gt * sc[1]
        return viol, [(vec, off - const)]
    if isinstance(atom, GaugePlus):
        terms, rhs = pre
        rval = float(rhs[0] @ z + rhs[1])
        dim = atom.set_ref.dim
        w = np.zeros(dim)
        vals = []
        for d, (vec, const) in terms:
            v = float(vec @ z + const)
            if atom.positive_part:
                v = max(v, 0.0)
            vals.append(v)
            w += v * d
        gamma, q = gauge_mod.gauge_and_normal(atom.set_ref, w)
        viol = gamma - rval if math.isfinite(gamma) else math.inf
        if not want_cut or viol <= 0.0:
            return viol, []
        kappa = 1.0 if math.isfinite(gamma) else 0.0
        vec = -kappa * rhs[0]
        const = -kappa * rhs[1]
        qscale = float(np.linalg.norm(q))
        for (d, (tvec, tconst)), v in zip(terms, vals):
            coef = float(q @ d)
            if atom.positive_part:
                if coef < -1e-6 * max(qscale, 1.0) * float(np.linalg.norm(d)):
                    raise ValueError(
                        "gauge term misaligned with the subgradient; "
                        "positive-part cut would be invalid here"
                    )
                coef = max(coef, 0.0)
                if v <= 0.0:
                    continue  # positive part is inactive; chain rule gives 0
            if coef != 0.0:
                vec = vec + coef * tvec
                const = const + coef * tconst
        return viol, [(vec, -const)]
    raise TypeError(f"not a separable atom: {atom!r}")


def _quadratic_plus_cut(fn: QuadraticPlus, arg, sc, x: np.ndarray, t: float):
    # constraint ((a.x')+)^2 <= t * (w.x'); tangents q <= (lam t + s/lam)/2
    a, wlin = sets._arr(fn.a), sets._arr(fn.w)
    q0 = float(a @ x + fn.beta * t)
    s0 = float(wlin @ x)
    q_vec = sum(float(a[j]) * arg[j][0] for j in range(len(arg))) + fn.beta * sc[0]
    q_const = sum(float(a[j]) * arg[j][1] for j in range(len(arg))) + fn.beta * sc[1]
    s_vec = sum(float(wlin[j]) * arg[j][0] for j in range(len(arg)))
    s_const = sum(float(wlin[j]) * arg[j][1] for j in range(len(arg)))
    cuts = []
    if s0 < 0.0:
        cuts.append((-s_vec, s_const))
    if q0 <= 0.0:
        return cuts
    if t > 1e-12 and s0 > 1e-12:
        lam = math.sqrt(s0 / t)
    elif t > 1e-12:
        # s0 ~ 0: anchor at the contact point with q = q0 so the cut
        # separates; lam = 1 would leave the candidate on the cut boundary.
        lam = q0 / t
    elif s0 > 1e-12:
        lam = s0 / q0
    else:
        lam = 1.0
    lam = min(max(lam, 1e-8), 1e8)
    vec = q_vec - 0.5 * lam * sc[0] - (0.5 / lam) * s_vec
    const = q_const - 0.5 * lam * sc[1] - (0.5 / lam) * s_const
    cuts.append((vec, -const))
    return cuts


def _generic_persp_tangent(fn, x: np.ndarray, t: float):
    """Supporting cut gx.x + gt.t <= off for {persp <= 0} near (x, t)."""
    t_cl = max(t, 1e-9)
    x_cl = x
    if isinstance(fn, sets.GeoMeanDeficit):
        x_cl = np.minimum(x, fn.shift * t_cl - 1e-9)
    if isinstance(fn, sets.MaxOf):
        best = max(fn.parts, key=lambda p: p.persp_value(x, t))
        return _generic_persp_tangent(best, x, t)
    gx, gt = fn.persp_grad(x_cl, t_cl)
    val = fn.persp_value(x_cl, t_cl)
    off = float(gx @ x_cl) + gt * t_cl - val
    return gx, gt, off


def maximize_over_atoms(
    compiled: _Compiled,
    objective: np.ndarray,
    box_radius: float = BOX_RADIUS,
    tol: float = CUT_TOL,
    max_rounds: int = MAX_CUT_ROUNDS,
    extra_eq: tuple[list[np.ndarray], list[float]] | None = None,
) -> OptResult:
    if compiled.trivially_infeasible:
        return OptResult("infeasible", -math.inf, None, None, False, 0)
    n = len(compiled.names)
    lb = np.maximum(compiled.lb, -box_radius)
    ub = np.minimum(compiled.ub, box_radius)
    rows = list(compiled.rows)
    rhs = list(compiled.rhs)
    eq_rows = list(compiled.eq_rows)
    eq_rhs = list(compiled.eq_rhs)
    if extra_eq is not None:
        eq_rows.extend(extra_eq[0])
        eq_rhs.extend(extra_eq[1])

    rounds = 0
    for rounds in range(1, max_rounds + 1):
        res = simplex.solve_lp(objective, rows, rhs, eq_rows, eq_rhs, lb, ub)
        if res.status == "infeasible":
            return OptResult("infeasible", -math.inf, None, None, False, rounds)
        if res.status != "optimal":
            return OptResult("stalled", math.nan, None, None, False, rounds)
        z = res.x
        worst = 0.0
        new_cuts = []
        for atom, pre in compiled.nonlinear:
            viol, cuts = _atom_violation_and_cuts(atom, pre, z, want_cut=True)
            if viol > tol:
                worst = max(worst, viol)
                new_cuts.extend(cuts)
        if worst <= tol:
            break
        if not new_cuts:
            return OptResult("stalled", math.nan, None, None, False, rounds)
        for vec, r in new_cuts:
            rows.append(vec)
            rhs.append(r)
    else:
        return OptResult("stalled", math.nan, None, None, False, rounds)

    at_box = (
        ((ub - z) <= 1e-6 * box_radius) & (compiled.ub > box_radius)
    ) | (((z - lb) <= 1e-6 * box_radius) & (compiled.lb < -box_radius))
    env = {nm: float(z[i]) for i, nm in enumerate(compiled.names)}
    return OptResult("optimal", float(res.value), z, env, bool(np.any(at_box)), rounds)


def feasibility_gap(
    atoms, variables, box_radius: float = BOX_RADIUS, tol: float = CUT_TOL
) -> tuple[float, dict[str, float] | None]:
    """Smallest uniform slack s >= 0 making all atoms hold, with a witness env.

    Returns (inf, None) when even the linear outer approximation is empty.
    """
    gap_name = "_gap"
    names = [v[0] for v in variables]
    n_aux = len(names)
    n = n_aux + 1
    gidx = n_aux
    index = {nm: i for i, nm in enumerate(names + [gap_name])}
    rows, rhs = [], []
    for atom in atoms:
        if not isinstance(atom, Linear):
            continue
        vec, const = _aff_vec(atom.expr, index, n)
        variants = [(vec, const)]
        if atom.relation == "eq":
            variants.append((-vec, -const))
        for v, c in variants:
            v = v.copy()
            v[gidx] -= 1.0
            rows.append(v)
            rhs.append(-c)
    nonlinear = compile_atoms(
        [a for a in atoms if not isinstance(a, Linear)],
        list(variables) + [(gap_name, 0.0, 1e6)],
    ).nonlinear
    obj = np.zeros(n)
    obj[gidx] = -1.0  # maximize -gap
    lb = np.array([max(v[1], -box_radius) for v in variables] + [0.0])
    ub = np.array([min(v[2], box_radius) for v in variables] + [1e6])
    for _ in range(200):
        res = simplex.solve_lp(obj, rows, rhs, None, None, lb, ub)
        if res.status == "infeasible":
            return math.inf, None
        if res.status != "optimal":
            return math.inf, None
        z = res.x
        ghat = z[gidx]
        worst = 0.0
        new_cuts = []
        for atom, pre in nonlinear:
            viol, cuts = _atom_violation_and_cuts(atom, pre, z, want_cut=True)
            if viol > ghat + tol:
                worst = max(worst, viol)
                for vec, r in cuts:
                    vec = vec.copy()
                    vec[gidx] -= 1.0
                    new_cuts.append((vec, r))
        if worst == 0.0:
            true_gap = max(ghat, 0.0)
            env = {nm: float(z[i]) for i, nm in enumerate(names)}
            return float(true_gap), env
        if not new_cuts:
            break
        for vec, r in new_cuts:
            rows.append(vec)
            rhs.append(r)
    env = {nm: float(z[i]) for i, nm in enumerate(names)}
    worst_true = max(
        (_atom_violation_and_cuts(a, p, z, want_cut=False)[0] for a, p in nonlinear),
        default=0.0,
    )
    return float(max(z[gidx], worst_true, 0.0)), env


# ---------------------------------------------------------------------------
# oracle backends used by sets.py
# ---------------------------------------------------------------------------


def _template_compiled(S: SetExpr, at_tau: float):
    gen = gauge_mod.NameGen()
    w_names = [f"w{j}" for j in range(S.dim)]
    atoms, aux = gauge_mod.lower_epigraph(
        S,
        tuple(Aff.var(nm) for nm in w_names),
        Aff.const_of(at_tau),
        gen,
        with_tau_row=False,
    )
    variables = [(nm, -math.inf, math.inf) for nm in w_names]
    variables += [(nm, -math.inf, math.inf) for nm in aux]
    return atoms, variables, w_names


def support_via_optimizer(S: SetExpr, u: np.ndarray) -> float:
    atoms, variables, w_names = _template_compiled(S, 1.0)
    compiled = compile_atoms(atoms, variables)
    obj = np.zeros(len(variables))
    obj[: S.dim] = u
    res = maximize_over_atoms(compiled, obj)
    if res.status == "infeasible":
        raise sets.EmptySet("support of an empty set")
    if res.status != "optimal":
        raise ArithmeticError("support optimization stalled")
    if res.box_active:
        return math.inf
    return res.value


def exposed_point_via_optimizer(S: SetExpr, u: np.ndarray) -> np.ndarray:
    atoms, variables, w_names = _template_compiled(S, 1.0)
    compiled = compile_atoms(atoms, variables)
    obj = np.zeros(len(variables))
    obj[: S.dim] = u
    res = maximize_over_atoms(compiled, obj)
    if res.status == "infeasible":
        raise sets.EmptySet("exposed point of an empty set")
    if res.status != "optimal":
        raise ArithmeticError("exposed point optimization stalled")
    if res.box_active:
        raise sets.UnboundedDirection("no exposed point along an unbounded direction")
    return res.point[: S.dim].copy()


def find_point_via_optimizer(S: SetExpr):
    atoms, variables, _ = _template_compiled(S, 1.0)
    compiled = compile_atoms(atoms, variables)
    # A zero objective would make every outer-approximation vertex optimal
    # and the cut loop would have to carve the whole box; a fixed direction
    # anchors the iterates so the cuts localize.
    obj = np.zeros(len(variables))
    obj[: S.dim] = -1.0 / math.sqrt(S.dim)
    res = maximize_over_atoms(compiled, obj)
    if res.status == "infeasible":
        return None
    if res.status != "optimal":
        raise ArithmeticError("feasibility probe stalled")
    return res.point[: S.dim].copy()


def member_via_feasibility(S: SetExpr, x: np.ndarray, tol: float) -> bool:
    gen = gauge_mod.NameGen()
    atoms, aux = gauge_mod.lower_epigraph(
        S,
        tuple(Aff.const_of(float(v)) for v in x),
        Aff.const_of(1.0),
        gen,
        with_tau_row=False,
    )
    if not aux:
        return gauge_mod.block_feasible(atoms, {}, tol)
    variables = [(nm, -math.inf, math.inf) for nm in aux]
    gap, _ = feasibility_gap(atoms, variables)
    return gap <= tol


def recession_member_via_template(S: SetExpr, d: np.ndarray, tol: float) -> bool:
    gen = gauge_mod.NameGen()
    atoms, aux = gauge_mod.lower_epigraph(
        S,
        tuple(Aff.const_of(float(v)) for v in d),
        Aff.const_of(0.0),
        gen,
        with_tau_row=False,
    )
    if not aux:
        return gauge_mod.block_feasible(atoms, {}, tol)
    variables = [(nm, -math.inf, math.inf) for nm in aux]
    gap, _ = feasibility_gap(atoms, variables)
    return gap <= tol


# ---------------------------------------------------------------------------
# direction sampling
# ---------------------------------------------------------------------------


def sample_directions(
    dim: int, count: int, seed: int, axes_first: bool = False
) -> np.ndarray:
    """Deterministic unit directions: an angle grid in the plane, a Fibonacci
    sphere in dimension three, normalized Gaussians beyond.  With axes_first
    the signed coordinate axes occupy the first 2*dim slots of the budget."""
    rng = np.random.default_rng(seed)
    out = []
    if axes_first:
        for j in range(dim):
            for sgn in (1.0, -1.0):
                e = np.zeros(dim)
                e[j] = sgn
                out.append(e)
    remaining = count - len(out)
    if remaining <= 0:
        return np.array(out[:count])
    if dim == 1:
        vals = [np.array([1.0 if i % 2 == 0 else -1.0]) for i in range(remaining)]
        out.extend(vals)
    elif dim == 2:
        offset = rng.uniform(0.0, 2.0 * math.pi / max(remaining, 1))
        for i in range(remaining):
            th = offset + 2.0 * math.pi * i / remaining
            out.append(np.array([math.cos(th), math.sin(th)]))
    elif dim == 3:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for i in range(remaining):
            zc = 1.0 - 2.0 * (i + 0.5) / remaining
            rad = math.sqrt(max(1.0 - zc * zc, 0.0))
            th = phase + golden * i
            out.append(np.array([rad * math.cos(th), rad * math.sin(th), zc]))
    else:
        while len(out) < count:
            v = rng.normal(size=dim)
            nm = float(np.linalg.norm(v))
            if nm > 1e-9:
                out.append(v / nm)
    return np.array(out[:count])


# ---------------------------------------------------------------------------
# vertex enumeration (double description)
# ---------------------------------------------------------------------------


@dataclass
class VertexSet:
    vertices: np.ndarray
    rays: np.ndarray
    lineality: np.ndarray


def enumerate_vertices(G, h, A_eq=None, b_eq=None, tol: float = 1e-9) -> VertexSet:
    """Vertices and extreme rays of {x : G x <= h, A_eq x = b_eq}.

    Double description over the homogenization cone, with combinatorial
    adjacency.  Capped at VERTEX_ROW_CAP rows and VERTEX_DIM_CAP dimensions.
    """
    G = np.asarray(G, dtype=float) if G is not None and len(G) else np.zeros((0, 0))
    d = G.shape[1] if G.size else (
        np.asarray(A_eq, dtype=float).shape[1] if A_eq is not None else 0
    )
    rows = []
    if G.size:
        hv = np.asarray(h, dtype=float).reshape(-1)
        for i in range(G.shape[0]):
            rows.append(np.concatenate([G[i], [-hv[i]]]))
    if A_eq is not None and len(A_eq):
        Am = np.asarray(A_eq, dtype=float).reshape(len(A_eq), d)
        bv = np.asarray(b_eq, dtype=float).reshape(-1)
        for i in range(Am.shape[0]):
            rows.append(np.concatenate([Am[i], [-bv[i]]]))
            rows.append(np.concatenate([-Am[i], [bv[i]]]))
    if len(rows) > VERTEX_ROW_CAP:
        raise ValueError(f"vertex enumeration capped at {VERTEX_ROW_CAP} rows")
    if d > VERTEX_DIM_CAP:
        raise ValueError(f"vertex enumeration capped at dim {VERTEX_DIM_CAP}")

    trow = np.zeros(d + 1)
    trow[d] = -1.0  # -t <= 0 first
    allrows = [trow] + rows
    allrows = [r / max(float(np.linalg.norm(r)), 1e-300) for r in allrows]

    lineality = [np.eye(d + 1)[j] for j in range(d + 1)]
    rays: list[np.ndarray] = []
    masks: list[int] = []

    for ridx, a in enumerate(allrows):
        bit = 1 << ridx
        if lineality:
            vals = [float(a @ l) for l in lineality]
            k = int(np.argmax(np.abs(vals)))
            if abs(vals[k]) > tol:
                l0, v0 = lineality[k], vals[k]
                lineality = [
                    l - (float(a @ l) / v0) * l0
                    for i, l in enumerate(lineality)
                    if i != k
                ]
                rays = [r - (float(a @ r) / v0) * l0 for r in rays]
                r0 = l0 if v0 < 0.0 else -l0
                # old rays now sit on this row; the fresh ray is strictly inside
                masks = [m | bit for m in masks]
                rays.append(r0 / max(float(np.linalg.norm(r0)), 1e-300))
                masks.append(bit - 1)
                continue
        vals = [float(a @ r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > tol]
        neg = [i for i, v in enumerate(vals) if v < -tol]
        zero = [i for i, v in enumerate(vals) if -tol <= v <= tol]
        new_rays: list[np.ndarray] = []
        new_masks: list[int] = []
        for i in zero:
            new_rays.append(rays[i])
            new_masks.append(masks[i] | bit)
        for i in neg:
            new_rays.append(rays[i])
            new_masks.append(masks[i])
        for p in pos:
            for q in neg:
                common = masks[p] & masks[q]
                adjacent = True
                for w in range(len(rays)):
                    if w in (p, q):
                        continue
                    if (common & masks[w]) == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                r = vals[p] * rays[q] - vals[q] * rays[p]
                nr = float(np.linalg.norm(r))
                if nr <= tol:
                    continue
                new_rays.append(r / nr)
                new_masks.append(common | bit)
        rays, masks = new_rays, new_masks

    verts, ray_out = [], []
    for r in rays:
        t = r[d]
        if t > tol:
            verts.append(r[:d] / t)
        elif abs(t) <= tol and float(np.linalg.norm(r[:d])) > tol:
            ray_out.append(r[:d] / float(np.linalg.norm(r[:d])))

    def dedup(points):
        seen = {}
        for p in points:
            key = tuple(np.round(p / 1e-9) * 1e-9)
            if key not in seen:
                seen[key] = p
        return np.array(list(seen.values())) if seen else np.zeros((0, d))

    lin = np.array([l[:d] for l in lineality if float(np.linalg.norm(l[:d])) > tol])
    if lin.size == 0:
        lin = np.zeros((0, d))
    return VertexSet(dedup(verts), dedup(ray_out), lin)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class AnalysisReport:
    check: str
    verdict: str  # pass | fail | not-refuted
    tolerance: float
    seed: int | None = None
    directions: int | None = None
    samples: int = 0
    margin: float = 0.0
    witnesses: tuple = ()
    notes: tuple = ()
    elapsed_s: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "directions": self.directions,
            "samples": self.samples,
            "margin": self.margin,
            "witnesses": [dict(w) for w in self.witnesses],
            "notes": list(self.notes),
            "elapsed_s": round(self.elapsed_s, 3),
        }


def _vec_list(v) -> list[float]:
    return [float(x) for x in np.asarray(v).reshape(-1)]


# ---------------------------------------------------------------------------
# formulation access
# ---------------------------------------------------------------------------


def compile_relaxation(form) -> _Compiled:
    """Compile a formulation's atoms with binaries relaxed to [0, 1]."""
    variables = []
    for v in form.variables:
        lo, hi = v.lb, v.ub
        if v.kind == "binary":
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        variables.append((v.name, lo, hi))
    return compile_atoms(list(form.atoms), variables)


def maximize_over_relaxation(
    form,
    objective: dict[str, float],
    box_radius: float = BOX_RADIUS,
    tol: float = CUT_TOL,
    extra_eq: dict[str, float] | None = None,
) -> OptResult:
    compiled = compile_relaxation(form)
    obj = np.zeros(len(compiled.names))
    for nm, c in objective.items():
        obj[compiled.index[nm]] += c
    eq = None
    if extra_eq:
        rows, rhs = [], []
        for nm, val in extra_eq.items():
            r = np.zeros(len(compiled.names))
            r[compiled.index[nm]] = 1.0
            rows.append(r)
            rhs.append(val)
        eq = (rows, rhs)
    return maximize_over_atoms(compiled, obj, box_radius=box_radius, tol=tol, extra_eq=eq)


def relaxation_max_violation(form, env: dict[str, float]) -> float:
    """Worst atom violation of a named point, bounds included."""
    worst = 0.0
    for v in form.variables:
        val = env[v.name]
        if math.isfinite(v.lb):
            worst = max(worst, v.lb - val)
        if math.isfinite(v.ub):
            worst = max(worst, val - v.ub)
    for atom in form.atoms:
        worst = max(worst, gauge_mod.atom_violation(atom, env))
    return worst


def _union_support(disjuncts, u: np.ndarray) -> float:
    return max(sets.support(S, u) for S in disjuncts)


# ---------------------------------------------------------------------------
# sampled support comparisons (sharp / ideal / minkowski)
# ---------------------------------------------------------------------------


def _eval_support_gap(args):
    """Worker: compare relaxation optimum against the union support bound."""
    form, dirs, idx0, y_weights = args
    n = len(form.x_names)
    recs = []
    for off, d in enumerate(dirs):
        u = d[:n]
        obj = {nm: float(u[j]) for j, nm in enumerate(form.x_names)}
        bounds = []
        if d.shape[0] > n:
            v = d[n:]
            for i, nm in enumerate(form.y_names):
                obj[nm] = float(v[i])
            for i, S in enumerate(form.sets):
                bounds.append(sets.support(S, u) + float(v[i]))
        else:
            for S in form.sets:
                bounds.append(sets.support(S, u))
        bound = max(bounds)
        res = maximize_over_relaxation(form, obj, extra_eq=y_weights)
        relax = math.inf if res.box_active else res.value
        if res.status == "infeasible":
            relax = -math.inf
        recs.append((idx0 + off, _vec_list(d), relax, bound))
    return recs


def _run_support_comparison(form, dirs, tol, jobs, y_weights=None):
    chunks = []
    if jobs and jobs > 1:
        size = max(1, (len(dirs) + jobs - 1) // jobs)
        payload = [
            (form, dirs[i : i + size], i, y_weights)
            for i in range(0, len(dirs), size)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for part in ex.map(_eval_support_gap, payload):
                chunks.extend(part)
    else:
        chunks.extend(_eval_support_gap((form, dirs, 0, y_weights)))
    chunks.sort(key=lambda r: r[0])
    failures = []
    margin = 0.0
    for idx, d, relax, bound in chunks:
        if math.isinf(bound):
            if bound > 0:
                continue  # relaxation cannot exceed an infinite bound
        if math.isinf(relax) and relax > 0:
            failures.append((math.inf, idx, d, relax, bound))
            continue
        excess = relax - bound
        scale = 1.0 + abs(bound) if math.isfinite(bound) else 1.0
        if excess > tol * scale:
            failures.append((excess, idx, d, relax, bound))
        margin = max(margin, excess if math.isfinite(excess) else 0.0)
    return failures, margin, len(chunks)


def check_sharp(
    form,
    count: int = 500,
    seed: int = DEFAULT_SEED,
    tol: float = sets.SUPPORT_EQ_TOL,
    jobs: int = 1,
) -> AnalysisReport:
    """Projected support equality along sampled x-space directions."""
    t0 = time.perf_counter()
    n = len(form.x_names)
    dirs = sample_directions(n, count, seed)
    failures, margin, total = _run_support_comparison(form, dirs, tol, jobs)
    failures.sort(key=lambda f: (-f[0], f[1]))
    witnesses = tuple(
        {
            "sample": idx,
            "direction": d,
            "relaxation_value": relax,
            "union_support": bound,
            "excess": exc,
        }
        for exc, idx, d, relax, bound in failures[:8]
    )
    verdict = "fail" if failures else "not-refuted"
    return AnalysisReport(
        check="sharp",
        verdict=verdict,
        tolerance=tol,
        seed=seed,
        directions=count,
        samples=total,
        margin=float(margin),
        witnesses=witnesses,
        elapsed_s=time.perf_counter() - t0,
    )


def _ideal_exact(form, tol: float) -> AnalysisReport:
    t0 = time.perf_counter()
    for atom in form.atoms:
        if not isinstance(atom, Linear):
            raise ValueError("exact mode needs a purely linear formulation")
    compiled = compile_relaxation(form)
    G = list(compiled.rows)
    h = list(compiled.rhs)
    for i, nm in enumerate(compiled.names):
        e = np.zeros(len(compiled.names))
        e[i] = 1.0
        if math.isfinite(compiled.ub[i]):
            G.append(e.copy())
            h.append(float(compiled.ub[i]))
        if math.isfinite(compiled.lb[i]):
            G.append(-e)
            h.append(-float(compiled.lb[i]))
    vs = enumerate_vertices(G, h, compiled.eq_rows, compiled.eq_rhs)
    y_idx = [compiled.index[nm] for nm in form.y_names]
    witnesses = []
    margin = 0.0
    for v in vs.vertices:
        frac = max(abs(v[i] - round(v[i])) for i in y_idx) if y_idx else 0.0
        margin = max(margin, frac)
        if frac > tol:
            witnesses.append(
                {
                    "vertex": _vec_list(v),
                    "variables": list(compiled.names),
                    "fractionality": float(frac),
                }
            )
    witnesses.sort(key=lambda w: -w["fractionality"])
    return AnalysisReport(
        check="ideal",
        verdict="fail" if witnesses else "pass",
        tolerance=tol,
        samples=int(vs.vertices.shape[0]),
        margin=float(margin),
        witnesses=tuple(witnesses[:8]),
        notes=("exact vertex enumeration",),
        elapsed_s=time.perf_counter() - t0,
    )


def check_ideal(
    form,
    count: int = 500,
    seed: int = DEFAULT_SEED,
    tol: float = sets.SUPPORT_EQ_TOL,
    mode: str = "auto",
    jobs: int = 1,
) -> AnalysisReport:
    """Joint (x, y) support equality against the embedded union bound.

    Purely linear formulations of modest size are settled exactly through
    vertex integrality; otherwise sampled directions refute or fail to
    refute.  Roughly forty percent of samples keep the y-part at zero, where
    projected gaps surface first.
    """
    if mode not in ("auto", "exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode in ("auto", "exact"):
        try:
            return _ideal_exact(form, tol=1e-7 if tol < 1e-7 else tol)
        except ValueError:
            if mode == "exact":
                raise
    t0 = time.perf_counter()
    n = len(form.x_names)
    k = len(form.y_names)
    dirs = sample_directions(n + k, count, seed)
    for i in range(dirs.shape[0]):
        if i % 5 < 2:
            u = dirs[i, :n]
            nu = float(np.linalg.norm(u))
            if nu > 1e-9:
                dirs[i, n:] = 0.0
                dirs[i, :n] = u / nu
    failures, margin, total = _run_support_comparison(form, dirs, tol, jobs)
    failures.sort(key=lambda f: (-f[0], f[1]))
    witnesses = tuple(
        {
            "sample": idx,
            "direction": d,
            "relaxation_value": relax,
            "embedded_support": bound,
            "excess": exc,
        }
        for exc, idx, d, relax, bound in failures[:8]
    )
    return AnalysisReport(
        check="ideal",
        verdict="fail" if failures else "not-refuted",
        tolerance=tol,
        seed=seed,
        directions=count,
        samples=total,
        margin=float(margin),
        witnesses=witnesses,
        elapsed_s=time.perf_counter() - t0,
    )


def check_minkowski_ideal(
    form,
    count: int = 200,
    seed: int = DEFAULT_SEED,
    tol: float = sets.SUPPORT_EQ_TOL,
    jobs: int = 1,
) -> AnalysisReport:
    """Compare the equal-weights slice of the relaxation against the scaled
    Minkowski average of the disjunct supports."""
    t0 = time.perf_counter()
    k = len(form.y_names)
    weights = {nm: 1.0 / k for nm in form.y_names}
    n = len(form.x_names)
    dirs = sample_directions(n, count, seed)
    chunks = []
    if jobs and jobs > 1:
        size = max(1, (len(dirs) + jobs - 1) // jobs)
        payload = [
            (form, dirs[i : i + size], i, weights) for i in range(0, len(dirs), size)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for part in ex.map(_eval_slice_gap, payload):
                chunks.extend(part)
    else:
        chunks.extend(_eval_slice_gap((form, dirs, 0, weights)))
    chunks.sort(key=lambda r: r[0])
    failures = []
    margin = 0.0
    for idx, d, relax, avg in chunks:
        if math.isinf(avg) and avg > 0:
            continue
        if math.isinf(relax) and relax > 0:
            failures.append((math.inf, idx, d, relax, avg))
            continue
        excess = relax - avg
        if excess > tol * (1.0 + abs(avg)):
            failures.append((excess, idx, d, relax, avg))
        margin = max(margin, excess)
    failures.sort(key=lambda f: (-f[0], f[1]))
    witnesses = tuple(
        {
            "sample": idx,
            "direction": d,
            "slice_value": relax,
            "average_support": avg,
            "excess": exc,
        }
        for exc, idx, d, relax, avg in failures[:8]
    )
    return AnalysisReport(
        check="minkowski-slice",
        verdict="fail" if failures else "not-refuted",
        tolerance=tol,
        seed=seed,
        directions=count,
        samples=len(chunks),
        margin=float(margin),
        witnesses=witnesses,
        elapsed_s=time.perf_counter() - t0,
    )


def _eval_slice_gap(args):
    form, dirs, idx0, weights = args
    k = len(form.y_names)
    recs = []
    for off, d in enumerate(dirs):
        obj = {nm: float(d[j]) for j, nm in enumerate(form.x_names)}
        res = maximize_over_relaxation(form, obj, extra_eq=weights)
        relax = math.inf if res.box_active else res.value
        if res.status == "infeasible":
            relax = -math.inf
        avg = sum(sets.support(S, d) for S in form.sets) / k
        recs.append((idx0 + off, _vec_list(d), relax, avg))
    return recs


# ---------------------------------------------------------------------------
# family cover conditions
# ---------------------------------------------------------------------------


def check_par_conditions(
    disjuncts,
    covers,
    count: int = 360,
    seed: int = DEFAULT_SEED,
    tol: float = sets.SUPPORT_EQ_TOL,
) -> AnalysisReport:
    """Cover-family conditions behind the combined homothety formulation.

    Every disjunct must sit inside each of its covering sets, and along every
    sampled direction some cover family must reproduce all disjunct support
    values at once.
    """
    t0 = time.perf_counter()
    n = disjuncts[0].dim
    dirs = sample_directions(n, count, seed)
    witnesses = []
    margin = 0.0
    for idx, u in enumerate(dirs):
        for i, C in enumerate(disjuncts):
            try:
                p = sets.exposed_point(C, u)
            except sets.UnboundedDirection:
                continue
            for j, fam in enumerate(covers):
                if not sets.contains(fam[i], p, 1e-6):
                    witnesses.append(
                        {
                            "condition": "membership",
                            "sample": idx,
                            "direction": _vec_list(u),
                            "disjunct": i,
                            "family": j,
                            "point": _vec_list(p),
                        }
                    )
    for idx, u in enumerate(dirs):
        base_sup = [sets.support(C, u) for C in disjuncts]
        best_gap = math.inf
        for j, fam in enumerate(covers):
            gap = 0.0
            for i, C in enumerate(disjuncts):
                s0, s1 = base_sup[i], sets.support(fam[i], u)
                if math.isinf(s0) and math.isinf(s1):
                    continue
                if math.isinf(s0) or math.isinf(s1):
                    gap = math.inf
                    break
                gap = max(gap, abs(s1 - s0) / (1.0 + abs(s0)))
            best_gap = min(best_gap, gap)
        margin = max(margin, 0.0 if math.isinf(best_gap) else best_gap)
        if best_gap > tol:
            witnesses.append(
                {
                    "condition": "support-match",
                    "sample": idx,
                    "direction": _vec_list(u),
                    "best_gap": float(best_gap) if math.isfinite(best_gap) else "inf",
                }
            )
    return AnalysisReport(
        check="cover-conditions",
        verdict="fail" if witnesses else "not-refuted",
        tolerance=tol,
        seed=seed,
        directions=count,
        samples=len(dirs),
        margin=float(margin),
        witnesses=tuple(witnesses[:8]),
        elapsed_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# shared-basis condition
# ---------------------------------------------------------------------------


def _polyhedron_max(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    n = A.shape[1]
    lb = np.full(n, -BOX_RADIUS)
    ub = np.full(n, BOX_RADIUS)
    res = simplex.solve_lp(c, list(A), list(b), None, None, lb, ub)
    if res.status == "infeasible":
        return -math.inf
    if res.status != "optimal":
        raise ArithmeticError("basis condition subproblem stalled")
    at_box = np.any(
        (np.abs(res.x - ub) <= 1e-6 * BOX_RADIUS)
        | (np.abs(res.x - lb) <= 1e-6 * BOX_RADIUS)
    )
    return math.inf if at_box else float(res.value)


def check_bbj_condition(
    A,
    b_list,
    count: int = 100,
    seed: int = DEFAULT_SEED,
    tol: float = sets.SUPPORT_EQ_TOL,
) -> AnalysisReport:
    """For sampled objectives, some full-rank row basis must reproduce every
    disjunct's optimum from its own subsystem alone."""
    t0 = time.perf_counter()
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    rank = int(np.linalg.matrix_rank(A, tol=1e-9))
    if math.comb(m, rank) > BASIS_CAP:
        raise ValueError(f"basis enumeration capped at {BASIS_CAP} candidates")
    bases = [
        B
        for B in itertools.combinations(range(m), rank)
        if np.linalg.matrix_rank(A[list(B)], tol=1e-9) == rank
    ]
    b_arr = [np.asarray(b, dtype=float).reshape(-1) for b in b_list]
    dirs = sample_directions(n, count, seed, axes_first=True)
    witnesses = []
    margin = 0.0
    for idx, c in enumerate(dirs):
        full = [_polyhedron_max(A, b, c) for b in b_arr]
        matched = False
        best = math.inf
        for B in bases:
            rowsB = list(B)
            worst = 0.0
            for i, b in enumerate(b_arr):
                sub = _polyhedron_max(A[rowsB], b[rowsB], c)
                if math.isinf(full[i]) and math.isinf(sub):
                    continue
                if math.isinf(full[i]) != math.isinf(sub):
                    worst = math.inf
                    break
                worst = max(worst, abs(sub - full[i]) / (1.0 + abs(full[i])))
            best = min(best, worst)
            if worst <= tol:
                matched = True
                break
        if not matched:
            margin = max(margin, best if math.isfinite(best) else 0.0)
            witnesses.append(
                {
                    "sample": idx,
                    "direction": _vec_list(c),
                    "best_gap": float(best) if math.isfinite(best) else "inf",
                }
            )
    return AnalysisReport(
        check="basis-condition",
        verdict="fail" if witnesses else "not-refuted",
        tolerance=tol,
        seed=seed,
        directions=count,
        samples=len(dirs),
        margin=float(margin),
        witnesses=tuple(witnesses[:8]),
        notes=(f"bases considered: {len(bases)}",),
        elapsed_s=time.perf_counter() - t0,
    )
