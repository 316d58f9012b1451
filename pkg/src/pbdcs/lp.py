"""Primal-dual interior point solver for basis pursuit.

Solves  min cp'u + cm'w  s.t.  A(u - w) = y,  u, w >= 0
(plain basis pursuit has cp = cm = 1) with Mehrotra's predictor-corrector
method.  The normal equations collapse to A diag(du + dw) A' because the
split columns are A and -A.  Near the end the iterate is purified: the
support is read off from the complementarity pattern, the restricted system
is solved exactly and the dual iterate is projected onto the optimal face to
certify the duality gap.

When y has a small component outside the span of the dominant columns (noisy
samples), the optimum is a full vertex whose entries span ten or more orders
of magnitude and the iterate cannot resolve the small ones.  The solution is
then refined: with the signs on the purified support S held fixed, the
correction solves a weighted basis pursuit on the orthogonal complement of
range(A_S), which is well scaled, and the two duals combine into a
certificate for the original problem.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

STEP_FRACTION = 0.99995


@dataclass
class LPSolution:
    x: np.ndarray
    dual: np.ndarray
    status: str  # converged | maxIterations | infeasible
    iterations: int
    primal_residual: float
    gap: float
    certificate_norm: float = 0.0
    purified: bool = False
    refined: bool = False


def _reduce_rows(a: np.ndarray, y: np.ndarray, tol: float):
    """Replace A x = y by an equivalent full-row-rank system.

    Returns (a', y', residual, basis) where residual is the distance of y from
    the range of A (nonzero means infeasible) and ``basis @ dual'`` maps a dual
    of the reduced system back to the original rows.
    """
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    k = int(np.sum(s > s[0] * max(a.shape) * np.finfo(float).eps)) if s.size else 0
    proj = u[:, :k].T @ y
    resid = float(np.linalg.norm(y - u[:, :k] @ proj))
    return s[:k, None] * vt[:k], proj, resid, u[:, :k]


def _modified_cholesky(m: np.ndarray) -> np.ndarray:
    """Cholesky factor in which tiny pivots are replaced by a huge value, so the
    matching components of the solution are driven to zero."""
    n = m.shape[0]
    l = np.tril(m).copy()
    floor = 1e-30 * float(np.max(np.diag(m)))
    for k in range(n):
        d = l[k, k]
        if d <= floor:
            d = 1e128
        sd = np.sqrt(d)
        l[k, k] = sd
        col = l[k + 1 :, k] / sd
        l[k + 1 :, k] = col
        l[k + 1 :, k + 1 :] -= np.tril(np.outer(col, col))
    return l


class _NormalSolver:
    def __init__(self, a: np.ndarray, d: np.ndarray):
        m = (a * d) @ a.T
        try:
            self.factor = linalg.cho_factor(m, lower=True, check_finite=False)
        except linalg.LinAlgError:
            self.factor = (_modified_cholesky(m), True)

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self.factor, rhs, check_finite=False)


def _objective(x, cp, cm):
    return float(cp @ np.maximum(x, 0.0) + cm @ np.maximum(-x, 0.0))


def _certify(a, y, x, dual, cp, cm):
    """Primal residual and certified duality gap for x, the dual scaled into
    the feasible box -cm <= A'dual <= cp."""
    pres = float(np.linalg.norm(a @ x - y))
    atl = a.T @ dual
    over = float(np.max(np.maximum(atl / cp, -atl / cm), initial=0.0))
    lam = dual / max(1.0, over)
    gap = _objective(x, cp, cm) - float(y @ lam)
    return pres, gap


def _merit(a, y, ynorm, x, dual, cp, cm):
    """Largest of relative primal residual, relative gap and dual box violation."""
    pres = float(np.linalg.norm(a @ x - y))
    atl = a.T @ dual
    dinf = float(np.max(np.maximum(atl - cp, -cm - atl), initial=0.0))
    obj = _objective(x, cp, cm)
    gap = obj - float(y @ dual)
    return max(pres / (1 + ynorm), abs(gap) / (1 + abs(obj)), max(dinf, 0.0))


def _purify(a, y, xp, xm, sp, sm, dual, cp, cm):
    pos = xp > sp
    neg = xm > sm
    support = np.flatnonzero(pos | neg)
    if support.size == 0 or support.size > a.shape[0]:
        return None
    sub = a[:, support]
    xs, *_ = np.linalg.lstsq(sub, y, rcond=None)
    sign = np.where(pos[support], 1.0, -1.0)
    if np.any(xs * sign < 0):
        return None
    x = np.zeros(a.shape[1])
    x[support] = xs
    # project the dual onto the face {lam : sub' lam = cost of the active half}
    target = np.where(pos[support], cp[support], -cm[support])
    g = sub.T @ dual - target
    corr, *_ = np.linalg.lstsq(sub.T, g, rcond=None)
    lam = dual - corr
    return x, lam


def _ipm(a, y, cp, cm, tol, max_iter):
    """Mehrotra iterations on a full-row-rank system.

    Returns (x, dual, status, iterations, purified).
    """
    m, N = a.shape
    ynorm = float(np.linalg.norm(y))
    c0 = linalg.cho_factor(a @ a.T, lower=True)

    # Mehrotra starting point for the split problem
    lam = linalg.cho_solve(c0, y) / 2.0
    x_ls = a.T @ lam
    xp, xm = np.maximum(x_ls, 0.0), np.maximum(-x_ls, 0.0)
    dual = np.zeros(m)
    sp = cp.copy()
    sm = cm.copy()
    dx = max(-1.5 * min(xp.min(), xm.min()), 0.0)
    ds = max(-1.5 * min(sp.min(), sm.min()), 0.0)
    xp, xm, sp, sm = xp + dx, xm + dx, sp + ds, sm + ds
    xs = xp @ sp + xm @ sm
    xp = xp + 0.5 * xs / (sp.sum() + sm.sum())
    xm = xm + 0.5 * xs / (sp.sum() + sm.sum())
    xs = xp @ sp + xm @ sm
    sp = sp + 0.5 * xs / (xp.sum() + xm.sum())
    sm = sm + 0.5 * xs / (xp.sum() + xm.sum())

    best = None  # (merit, x, dual, purified)
    raw_best = np.inf
    status = "maxIterations"
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        rp = y - a @ (xp - xm)
        atl = a.T @ dual
        rdp = cp - atl - sp
        rdm = cm + atl - sm
        mu = (xp @ sp + xm @ sm) / (2 * N)

        candidates = [(xp - xm, dual, False)]
        if (xp @ sp + xm @ sm) <= 1e-5 * (1 + xp.sum() + xm.sum()):
            pur = _purify(a, y, xp, xm, sp, sm, dual, cp, cm)
            if pur is not None:
                candidates.append((pur[0], pur[1], True))
        improved = False
        for i, (x, lam_i, purified) in enumerate(candidates):
            merit = _merit(a, y, ynorm, x, lam_i, cp, cm)
            if best is None or merit < best[0]:
                best = (merit, x, lam_i, purified)
                improved = True
            # the raw iterate still converging counts as progress even when a
            # purified point holds the best merit
            if i == 0 and merit < 0.5 * raw_best:
                raw_best = merit
                improved = True
        if best[0] <= tol:
            status = "converged"
            break
        stall = 0 if improved else stall + 1
        if stall >= 5:
            break

        dp = xp / sp
        dm = xm / sm
        solve = _NormalSolver(a, dp + dm)

        def direction(rxs_p, rxs_m):
            # rxs_* are the complementarity targets for the two halves
            tp = (rxs_p - xp * rdp) / sp
            tm = (rxs_m - xm * rdm) / sm
            dl = solve(rp - a @ (tp - tm))
            atdl = a.T @ dl
            return dp * atdl + tp, -dm * atdl + tm, dl, rdp - atdl, rdm + atdl

        aff = direction(-xp * sp, -xm * sm)
        ap = min(1.0, _max_step(xp, aff[0]), _max_step(xm, aff[1]))
        ad = min(1.0, _max_step(sp, aff[3]), _max_step(sm, aff[4]))
        mu_aff = ((xp + ap * aff[0]) @ (sp + ad * aff[3]) + (xm + ap * aff[1]) @ (sm + ad * aff[4])) / (2 * N)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        cor = direction(sigma * mu - xp * sp - aff[0] * aff[3], sigma * mu - xm * sm - aff[1] * aff[4])
        ap = min(1.0, STEP_FRACTION * min(_max_step(xp, cor[0]), _max_step(xm, cor[1])))
        ad = min(1.0, STEP_FRACTION * min(_max_step(sp, cor[3]), _max_step(sm, cor[4])))
        xp = xp + ap * cor[0]
        xm = xm + ap * cor[1]
        dual = dual + ad * cor[2]
        sp = sp + ad * cor[3]
        sm = sm + ad * cor[4]
        if not (np.all(np.isfinite(xp)) and np.all(np.isfinite(dual)) and np.all(np.isfinite(sp))):
            break

    _, x, lam, purified = best
    return x, lam, status, it, purified


def _refine(a, y, x0, z0, tol, max_iter):
    """Correct x0 = purified point towards the exact optimum of min ||x||_1, Ax = y.

    Holding sign(x0) on S = supp(x0), the objective is linear in x_S and the
    free block can be eliminated with an orthonormal basis Q of range(A_S)^perp:
        min  sum_j (1 - w_j) u_j + (1 + w_j) v_j   s.t.  Q'A_T (u - v) = Q'r
    with T the complement of S, r = y - A x0 and w = A_T' z for any z with
    A_S' z = sign(x0_S).  z is the projection of the dual estimate z0 onto that
    affine set, which keeps the weights close to nonnegative.  Returns
    (x, dual, iterations) or None when the reduction does not apply.
    """
    m, N = a.shape
    S = np.flatnonzero(x0)
    T = np.setdiff1d(np.arange(N), S)
    if S.size == 0 or S.size >= m:
        return None
    sign = np.sign(x0[S])
    aS, aT = a[:, S], a[:, T]
    q, rfac = linalg.qr(aS, mode="full")
    k = S.size
    if abs(rfac[k - 1, k - 1]) < 1e-12 * abs(rfac[0, 0]):
        return None
    qS, qN = q[:, :k], q[:, k:]
    z = qS @ linalg.solve_triangular(rfac[:k], sign, trans="T") + qN @ (qN.T @ z0)
    w = aT.T @ z
    r = y - a @ x0
    b = qN.T @ r
    scale = float(np.linalg.norm(b))
    if scale == 0.0:
        return None
    B = qN.T @ aT
    dT, mu, _, it, _ = _ipm(B, b / scale, 1.0 - w, 1.0 + w, tol, max_iter)
    dT = dT * scale
    # back-substitute the free block and check the sign assumption
    dS = linalg.solve_triangular(rfac[:k], qS.T @ (r - aT @ dT))
    xS = x0[S] + dS
    if np.any(xS * sign <= 0):
        return None
    x = np.zeros(N)
    x[S] = xS
    x[T] = dT
    return x, z + qN @ mu, it


def basis_pursuit_lp(a: np.ndarray, y: np.ndarray, tol: float = 1e-9, max_iter: int = 100) -> LPSolution:
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, N = a.shape
    ynorm = float(np.linalg.norm(y))
    if N == 0 or ynorm == 0.0:
        return LPSolution(np.zeros(N), np.zeros(m), "converged", 0, ynorm, 0.0)

    a_work, y_work, basis = a, y, None
    try:
        if m > N:
            raise linalg.LinAlgError
        c0 = linalg.cho_factor(a @ a.T, lower=True)
        if np.min(np.abs(np.diag(c0[0]))) < 1e-7 * np.max(np.abs(np.diag(c0[0]))):
            raise linalg.LinAlgError
    except linalg.LinAlgError:
        a_work, y_work, resid, basis = _reduce_rows(a, y, tol)
        if resid > tol * (1 + ynorm):
            return LPSolution(np.zeros(N), np.zeros(m), "infeasible", 0, resid, np.inf, certificate_norm=resid)

    ones = np.ones(N)
    x, dual, status, it, purified = _ipm(a_work, y_work, ones, ones, tol, max_iter)
    lam = _lift(dual, basis)
    pres, gap = _certify(a, y, x, lam, ones, ones)
    refined = False
    if status != "converged" and purified:
        ref = _refine(a_work, y_work, x, dual, tol, max_iter)
        if ref is not None:
            rx, rdual, rit = ref
            it += rit
            rlam = _lift(rdual, basis)
            rpres, rgap = _certify(a, y, rx, rlam, ones, ones)
            merit = max(rpres / (1 + ynorm), abs(rgap) / (1 + np.abs(rx).sum()))
            if merit <= tol:
                x, lam, pres, gap, status, refined = rx, rlam, rpres, rgap, "converged", True
    return LPSolution(x, lam, status, it, pres, gap, purified=purified, refined=refined)


def _lift(dual: np.ndarray, basis) -> np.ndarray:
    """Map a dual for the reduced system back to the original rows."""
    return dual if basis is None else basis @ dual


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))
