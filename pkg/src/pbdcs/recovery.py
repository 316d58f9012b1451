"""Sparse recovery: orthogonal matching pursuit, basis pursuit and the
design-tailored thresholding algorithm."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from pbdcs.construction import SensingMatrix, dense
from pbdcs.lp import basis_pursuit_lp

STATUSES = ("converged", "maxIterations", "singularSystem", "infeasible")
COND_LIMIT = 1e12


@dataclass
class RecoveryResult:
    estimate: np.ndarray
    iterations: int
    residual_norm: float
    status: str
    elapsed: float
    notes: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"status={self.status}",
            f"iterations={self.iterations}",
            f"residualNorm={self.residual_norm!r}",
            f"elapsed={self.elapsed!r}",
        ]
        lines += [f"{k}={v}" for k, v in sorted(self.notes.items())]
        return "\n".join(lines) + "\n"


def _residual(phi: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(phi @ x - y))


def omp(phi, y, max_iter: int | None = None, tol: float = 1e-10) -> RecoveryResult:
    """Orthogonal matching pursuit without knowledge of the sparsity.

    The active set is orthonormalized incrementally (Gram-Schmidt with one
    reorthogonalization pass), so the residual stays orthogonal to every
    selected column.  Stops when ||r|| <= tol or after ``max_iter`` (default:
    number of rows) selections.
    """
    t0 = time.perf_counter()
    a = np.asarray(dense(phi))
    y = np.asarray(y)
    n, N = a.shape
    dtype = np.result_type(a, y, np.float64)
    norms = np.linalg.norm(a, axis=0)
    normalized = bool(norms.size and np.max(np.abs(norms - 1.0)) > 1e-6)
    if normalized:
        safe = np.where(norms > 0, norms, 1.0)
        a = a / safe
    if max_iter is None:
        max_iter = n
    q = np.zeros((n, min(max_iter, n, N)), dtype=dtype)
    selected: list[int] = []
    r = y.astype(dtype, copy=True)
    status = "maxIterations"
    # zero columns are never selectable
    mask = norms == 0
    it = 0
    if np.linalg.norm(r) <= tol:
        status = "converged"
    else:
        while it < max_iter and it < q.shape[1]:
            corr = np.abs(a.conj().T @ r)
            corr[mask] = -1.0
            j = int(np.argmax(corr))
            col = a[:, j].astype(dtype)
            k = len(selected)
            w = col - q[:, :k] @ (q[:, :k].conj().T @ col)
            w = w - q[:, :k] @ (q[:, :k].conj().T @ w)
            wn = np.linalg.norm(w)
            if wn <= 1e-12 * max(np.linalg.norm(col), 1e-300):
                status = "singularSystem"
                break
            q[:, k] = w / wn
            selected.append(j)
            mask[j] = True
            r = r - q[:, k] * (q[:, k].conj() @ r)
            it += 1
            if np.linalg.norm(r) <= tol:
                status = "converged"
                break
    x = np.zeros(N, dtype=dtype)
    if selected:
        sub = a[:, selected]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        x[selected] = coef
    if normalized:
        x = x / np.where(norms > 0, norms, 1.0)
    a_orig = np.asarray(dense(phi))
    return RecoveryResult(
        estimate=x,
        iterations=it,
        residual_norm=_residual(a_orig, x, y),
        status=status,
        elapsed=time.perf_counter() - t0,
        notes={"normalized": normalized, "support": tuple(selected)},
    )


def basis_pursuit(phi, y, tol: float = 1e-9, max_iter: int = 100) -> RecoveryResult:
    """min ||x||_1 s.t. phi x = y, through the split x = x+ - x- and an
    interior point LP solve.  Convergence means primal feasibility and the
    certified duality gap are both within ``tol`` (relative)."""
    t0 = time.perf_counter()
    if np.iscomplexobj(dense(phi)):
        raise TypeError("basis_pursuit needs a real matrix; realify complex matrices first")
    a = np.asarray(dense(phi), dtype=np.float64)
    sol = basis_pursuit_lp(a, np.asarray(y, dtype=np.float64), tol=tol, max_iter=max_iter)
    notes = {"gap": sol.gap, "purified": sol.purified, "refined": sol.refined}
    if sol.status == "infeasible":
        notes["certificateNorm"] = sol.certificate_norm
    return RecoveryResult(
        estimate=sol.x,
        iterations=sol.iterations,
        residual_norm=_residual(a, sol.x, y),
        status=sol.status,
        elapsed=time.perf_counter() - t0,
        notes=notes,
    )


# --- design-tailored algorithm ----------------------------------------------

def _point_samples(m: SensingMatrix, y: np.ndarray, x: int) -> np.ndarray:
    """Samples at the rows of point x, ordered by the Hadamard row they carry."""
    rows = np.asarray(m.point_rows[x])
    order = np.argsort(m.had_row_at[x])
    return y[rows[order]]


def apply_from_metadata(m: SensingMatrix, x) -> np.ndarray:
    """Phi @ x assembled from the row bookkeeping and the Hadamard matrices."""
    x = np.asarray(x, dtype=np.complex128)
    out = np.zeros(m.n, dtype=np.complex128)
    for p, (a, b) in enumerate(m.point_cols):
        xp = x[a:b]
        if b == a or not np.any(xp):
            continue
        h = m.hadamards[p].entries
        vals = h[list(m.had_row_at[p])] @ xp / np.sqrt(b - a)
        out[list(m.point_rows[p])] += vals
    return out


def initial_estimate(m: SensingMatrix, y) -> np.ndarray:
    """Per point i: (1/sqrt(r_i)) H_i^* y_i, concatenated in column order."""
    y = np.asarray(y, dtype=np.complex128)
    est = np.zeros(m.N, dtype=np.complex128)
    for x, (a, b) in enumerate(m.point_cols):
        r = b - a
        if r == 0:
            continue
        h = m.hadamards[x].entries
        est[a:b] = h.conj().T @ _point_samples(m, y, x) / np.sqrt(r)
    return est


def alg1_recover(m: SensingMatrix, y, s_size: int = 0) -> RecoveryResult:
    """Thresholding recovery using only row bookkeeping and the Hadamard matrices.

    1. initial estimate; 2. keep the ``s_size`` largest coordinates (lowest
    index wins ties); 3. per involved point pick rows shared with no other
    involved point; 4. solve the small square systems on those rows.
    ``s_size = 0`` means the smallest replication number.
    """
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=np.complex128)
    reps = m.replication
    r1 = min(reps)
    if s_size <= 0:
        s_size = r1
    if s_size > r1:
        raise ValueError(f"s_size={s_size} exceeds the smallest replication number {r1}")

    est = initial_estimate(m, y)
    order = np.argsort(-np.abs(est), kind="stable")
    chosen = np.sort(order[:s_size])

    col_point = np.empty(m.N, dtype=np.intp)
    for x, (a, b) in enumerate(m.point_cols):
        col_point[a:b] = x
    by_point: dict[int, list[int]] = {}
    for c in chosen:
        by_point.setdefault(int(col_point[c]), []).append(int(c))

    hits = np.zeros(m.n, dtype=np.int64)
    for x in by_point:
        hits[list(m.point_rows[x])] += 1

    out = np.zeros(m.N, dtype=np.complex128)
    status = "converged"
    retries = 0
    for x, cols in sorted(by_point.items()):
        a0 = m.point_cols[x][0]
        r = reps[x]
        local = [c - a0 for c in cols]
        # uncontaminated rows, ascending block index
        clean = sorted((row, k) for k, row in enumerate(m.point_rows[x]) if hits[row] == 1)
        qi = len(cols)
        h = m.hadamards[x].entries
        solved = False
        for pick in combinations(clean, qi):
            rows = [p[0] for p in pick]
            hrows = [m.had_row_at[x][p[1]] for p in pick]
            sys_mat = h[np.ix_(hrows, local)] / np.sqrt(r)
            if np.linalg.cond(sys_mat) > COND_LIMIT:
                retries += 1
                continue
            out[cols] = np.linalg.solve(sys_mat, y[rows])
            solved = True
            break
        if not solved:
            status = "singularSystem"
    return RecoveryResult(
        estimate=out,
        iterations=1,
        residual_norm=float(np.linalg.norm(apply_from_metadata(m, out) - y)),
        status=status,
        elapsed=time.perf_counter() - t0,
        notes={"sSize": s_size, "retries": retries, "points": len(by_point)},
    )


# --- text I/O ------------------------------------------------------------------

def dumps_vector(x) -> str:
    """One coordinate per line; complex vectors as ``re,im``."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return "".join(f"{z.real!r},{z.imag!r}\n" for z in x.tolist())
    return "".join(f"{float(z)!r}\n" for z in x.tolist())


def loads_vector(text: str) -> np.ndarray:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        return np.zeros(0)
    if "," in rows[0]:
        vals = [tuple(float(p) for p in ln.split(",")) for ln in rows]
        if any(len(v) != 2 for v in vals):
            raise ValueError("complex vector lines must hold exactly two fields")
        return np.array([complex(a, b) for a, b in vals])
    return np.array([float(ln) for ln in rows])


def loads_result_text(text: str) -> dict:
    """Parse the key=value form written by RecoveryResult.to_text."""
    out = {}
    for ln in text.splitlines():
        if "=" in ln:
            k, v = ln.split("=", 1)
            out[k.strip()] = v.strip()
    return out
