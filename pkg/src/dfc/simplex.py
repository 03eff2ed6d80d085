"""Dense two-phase tableau simplex for small cut-master problems.

Solves max c.x subject to G x <= h, A x = b and finite box bounds lb <= x <= ub.
Every variable must carry finite bounds; the callers in this package always
optimize inside an explicit box, which keeps phase 2 bounded and the tableau
well scaled at desk size (tens of variables, at most a few hundred rows).

Pivoting is Dantzig's rule with a switch to Bland's rule after a stall
threshold, so cycling cannot run away on degenerate masters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = 1e-9


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded | stalled
    x: np.ndarray | None
    value: float
    residual: float = 0.0


def solve_lp(c, G, h, A_eq, b_eq, lb, ub, maximize: bool = True) -> LPResult:
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    lb = np.asarray(lb, dtype=float).reshape(-1)
    ub = np.asarray(ub, dtype=float).reshape(-1)
    if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
        raise ValueError("solve_lp needs finite variable bounds")
    if np.any(ub < lb - 1e-12):
        return LPResult("infeasible", None, 0.0, float(np.max(lb - ub)))

    rows = []
    rhs = []
    senses = []
    if G is not None and len(G) > 0:
        Gm = np.asarray(G, dtype=float).reshape(len(G), n)
        hv = np.asarray(h, dtype=float).reshape(-1)
        for i in range(Gm.shape[0]):
            rows.append(Gm[i])
            rhs.append(hv[i] - float(Gm[i] @ lb))
            senses.append("le")
    if A_eq is not None and len(A_eq) > 0:
        Am = np.asarray(A_eq, dtype=float).reshape(len(A_eq), n)
        bv = np.asarray(b_eq, dtype=float).reshape(-1)
        for i in range(Am.shape[0]):
            rows.append(Am[i])
            rhs.append(bv[i] - float(Am[i] @ lb))
            senses.append("eq")
    # upper bounds as rows in the shifted frame 0 <= x' <= ub - lb
    span = ub - lb
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append(e)
        rhs.append(float(span[j]))
        senses.append("le")

    m = len(rows)
    A = np.array(rows) if m else np.zeros((0, n))
    b = np.array(rhs) if m else np.zeros(0)

    # normalize to b >= 0; count slack and artificial columns
    n_slack = 0
    n_art = 0
    colplan = []  # per row: (sign, slack_col or None, art_col or None)
    for i in range(m):
        sign = 1.0
        if b[i] < 0.0:
            sign = -1.0
        if senses[i] == "le":
            if sign > 0:
                colplan.append((sign, n_slack, None))
                n_slack += 1
            else:
                colplan.append((sign, n_slack, n_art))
                n_slack += 1
                n_art += 1
        else:
            colplan.append((sign, None, n_art))
            n_art += 1

    ncols = n + n_slack + n_art
    T = np.zeros((m, ncols + 1))
    basis = np.empty(m, dtype=int)
    for i in range(m):
        sign, s_col, a_col = colplan[i]
        T[i, :n] = sign * A[i]
        T[i, -1] = sign * b[i]
        if s_col is not None:
            T[i, n + s_col] = sign  # slack enters with the row's sign
        if a_col is not None:
            T[i, n + n_slack + a_col] = 1.0
            basis[i] = n + n_slack + a_col
        else:
            basis[i] = n + s_col

    scale_b = 1.0 + float(np.max(np.abs(b), initial=0.0))

    if n_art > 0:
        obj = np.zeros(ncols)
        obj[n + n_slack :] = 1.0
        red = obj.copy()
        # zero out reduced costs of the basic artificial columns
        for i in range(m):
            if basis[i] >= n + n_slack:
                red -= T[i, :ncols]
        status = _iterate(T, basis, red, allow=np.ones(ncols, dtype=bool))
        if status != "optimal":
            return LPResult("stalled", None, 0.0)
        art_val = sum(T[i, -1] for i in range(m) if basis[i] >= n + n_slack)
        if art_val > 1e-7 * scale_b:
            return LPResult("infeasible", None, 0.0, float(art_val))
        _drive_out_artificials(T, basis, n + n_slack)

    # phase 2 on the original objective, artificial columns frozen
    sense = -1.0 if maximize else 1.0  # tableau minimizes
    red = np.zeros(ncols)
    red[:n] = sense * c
    for i in range(m):
        if red[basis[i]] != 0.0:
            red -= red[basis[i]] * T[i, :ncols]
    allow = np.ones(ncols, dtype=bool)
    allow[n + n_slack :] = False
    status = _iterate(T, basis, red, allow)
    if status == "unbounded":
        return LPResult("unbounded", None, np.inf if maximize else -np.inf)
    if status != "optimal":
        return LPResult("stalled", None, 0.0)

    xs = np.zeros(ncols)
    for i in range(m):
        xs[basis[i]] = T[i, -1]
    x = lb + xs[:n]
    return LPResult("optimal", x, float(c @ x))


def _iterate(T, basis, red, allow) -> str:
    m, ncols = T.shape[0], T.shape[1] - 1
    stall_at = 5 * (m + ncols) + 50
    max_iter = 40 * (m + ncols) + 200
    for it in range(max_iter):
        cand = np.where(allow & (red < -_EPS))[0]
        if cand.size == 0:
            return "optimal"
        if it < stall_at:
            j = cand[int(np.argmin(red[cand]))]
        else:
            j = int(cand[0])  # Bland
        col = T[:, j]
        pos = np.where(col > _EPS)[0]
        if pos.size == 0:
            return "unbounded"
        ratios = T[pos, -1] / col[pos]
        best = float(np.min(ratios))
        ties = pos[np.where(ratios <= best + 1e-12)[0]]
        r = int(ties[np.argmin(basis[ties])]) if ties.size > 1 else int(pos[int(np.argmin(ratios))])
        piv = T[r, j]
        T[r] /= piv
        fac = T[:, j].copy()
        fac[r] = 0.0
        T -= np.outer(fac, T[r])
        red -= red[j] * T[r, :ncols]
        basis[r] = j
    return "stalled"


def _drive_out_artificials(T, basis, art_start) -> None:
    m = T.shape[0]
    for i in range(m):
        if basis[i] < art_start:
            continue
        row = T[i, :art_start]
        nz = np.where(np.abs(row) > _EPS)[0]
        if nz.size == 0:
            continue  # redundant row; leave the artificial at value 0
        j = int(nz[0])
        piv = T[i, j]
        T[i] /= piv
        fac = T[:, j].copy()
        fac[i] = 0.0
        T -= np.outer(fac, T[i])
        basis[i] = j
