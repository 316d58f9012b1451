"""Spark witnesses, brute-force spark and recoverability bounds."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil, comb, sqrt

import numpy as np

from pbdcs import _kernels
from pbdcs.construction import SensingMatrix, dense
from pbdcs.hadamard import SearchBudgetExceeded

NULL_TOL = 1e-9
# candidate filter handed to the kernels; every hit is re-checked by SVD
FILTER_TOL = 1e-6
DEFAULT_SPARK_BUDGET = 20_000_000


class CertificationError(ValueError):
    pass


def _check_null(phi: np.ndarray, vec: np.ndarray, tol: float) -> float:
    res = float(np.max(np.abs(phi @ vec), initial=0.0))
    if res >= tol:
        raise CertificationError(f"vector is not in the nullspace: |Phi v|_inf = {res:.3e}")
    return res


def spark_witness_two_points(m: SensingMatrix, p1: int, p2: int) -> np.ndarray:
    """Nullvector supported on the columns of two points.

    Columns of p1 are scaled so the shared row reads 1/r_p1, those of p2 so
    it reads -1/r_p2; the scaled columns then sum to zero.
    """
    if p1 == p2:
        raise CertificationError("points must be distinct")
    rho = m.shared_row(p1, p2)
    vec = np.zeros(m.N, dtype=np.complex128)
    for p, target in ((p1, 1.0), (p2, -1.0)):
        a, b = m.point_cols[p]
        r = b - a
        vec[a:b] = (target / r) / m.entries[rho, a:b]
    return vec


def min_replication_points(m: SensingMatrix) -> tuple[int, int]:
    order = sorted(range(m.v), key=lambda x: (m.replication[x], x))
    return order[0], order[1]


def find_arc3(m: SensingMatrix, r: int | None = None) -> tuple[int, int, int] | None:
    """Three points of equal replication (``r`` if given) not on a common block."""
    blocks = [set(b) for b in m.block_points()]
    by_r: dict[int, list[int]] = {}
    for x, rx in enumerate(m.replication):
        by_r.setdefault(rx, []).append(x)
    for rx in sorted(by_r):
        if r is not None and rx != r:
            continue
        pts = by_r[rx]
        if len(pts) < 3:
            continue
        a, b = pts[0], pts[1]
        line = blocks[m.shared_row(a, b)]
        for c in pts[2:]:
            if c not in line:
                return a, b, c
    return None


def arc_nullvector(m: SensingMatrix, arc) -> np.ndarray:
    """Nullvector of sparsity 3r/2 on three arc points with real Hadamard blocks.

    With h_x(B) the Hadamard row that point x carries in block B, the vector
    is (h_a(ab) - h_a(ac))/2, -(h_b(ab) - h_b(bc))/2, (h_c(ac) - h_c(bc))/2 on
    the columns of a, b, c; each piece is +-1 on half the coordinates.
    """
    pts = tuple(int(p) for p in arc)
    if len(pts) != 3 or len(set(pts)) != 3:
        raise CertificationError("an arc of exactly three distinct points is required")
    a, b, c = pts
    reps = {m.replication[p] for p in pts}
    if len(reps) != 1:
        raise CertificationError(f"arc points have unequal replication numbers {sorted(reps)}")
    r = reps.pop()
    if r % 4:
        raise CertificationError(f"replication number {r} is not divisible by 4")
    for p in pts:
        h = m.hadamards[p]
        if not (h.is_real and np.all(np.abs(h.entries.real) == 1)):
            raise CertificationError(f"point {p} does not carry a real Hadamard matrix")
    ab, ac, bc = m.shared_row(a, b), m.shared_row(a, c), m.shared_row(b, c)
    if len({ab, ac, bc}) != 3:
        raise CertificationError(f"points {pts} are not an arc: they share a block")

    def hrow(p, row):
        return m.hadamards[p].entries[m.hadamard_row(p, row)].real

    vec = np.zeros(m.N, dtype=np.complex128)
    for p, (keep, split, sign) in zip(pts, ((ab, ac, 1.0), (ab, bc, -1.0), (ac, bc, 1.0))):
        lo, hi = m.point_cols[p]
        vec[lo:hi] = sign * (hrow(p, keep) - hrow(p, split)) / 2.0
    return vec


def rank_threshold(n_cols: int) -> float:
    return 1e-9 * sqrt(n_cols)


def _is_rank_deficient(phi: np.ndarray, cols, thr: float) -> bool:
    sub = phi[:, list(cols)]
    if sub.shape[0] < sub.shape[1]:
        return True
    return bool(np.linalg.svd(sub, compute_uv=False)[-1] < thr)


@dataclass
class SparkSearch:
    spark: int | None
    smax: int
    support: tuple[int, ...] = ()
    subsets_visited: int = 0

    @property
    def exceeds_smax(self) -> bool:
        return self.spark is None

    def __str__(self):
        if self.spark is None:
            return f"exceeds smax={self.smax}"
        return f"spark = {self.spark}"


def spark_search(m, smax: int, budget: int = DEFAULT_SPARK_BUDGET, max_hits: int = 64) -> SparkSearch:
    """Smallest s <= smax with a rank-deficient s-column submatrix.

    A submatrix counts as rank deficient when its smallest singular value is
    below 1e-9 * sqrt(N).  Raises SearchBudgetExceeded when the enumeration
    sum_{s<=smax} C(N, s) is larger than ``budget``.
    """
    phi = np.ascontiguousarray(dense(m), dtype=np.complex128)
    N = phi.shape[1]
    smax = min(int(smax), N)
    cost = sum(comb(N, s) for s in range(1, smax + 1))
    if cost > budget:
        raise SearchBudgetExceeded(f"spark search needs {cost} subsets, budget is {budget}")
    thr = rank_threshold(N)
    gram = np.ascontiguousarray(phi.conj().T @ phi)
    visited = 0
    for s in range(1, smax + 1):
        hits, nodes = _kernels.dependent_sets(phi, gram, s, FILTER_TOL, max_hits)
        visited += nodes
        for cols in hits:
            if _is_rank_deficient(phi, cols, thr):
                return SparkSearch(s, smax, tuple(cols), visited)
        if len(hits) >= max_hits:
            # filter saturated without confirmation: settle this level by SVD
            for cols in combinations(range(N), s):
                if _is_rank_deficient(phi, cols, thr):
                    return SparkSearch(s, smax, cols, visited)
    return SparkSearch(None, smax, (), visited)


def brute_spark(m, smax: int, budget: int = DEFAULT_SPARK_BUDGET) -> int | None:
    """Spark if it is at most ``smax``, else None ("exceeds smax")."""
    return spark_search(m, smax, budget).spark


def split_nonrecoverable(m, nullvec: np.ndarray, tol: float = NULL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Split a nullvector of sparsity s into m1 (floor(s/2) entries) and m2
    (the rest) with Phi m2 = Phi(-m1); one of -m1, m2 cannot be recovered."""
    phi = dense(m)
    vec = np.asarray(nullvec)
    _check_null(phi, vec, tol)
    support = np.flatnonzero(vec)
    s = support.size
    if s < 2:
        raise CertificationError("nullvector must have sparsity >= 2")
    m1 = np.zeros_like(vec)
    m2 = np.zeros_like(vec)
    first = support[: s // 2]
    rest = support[s // 2 :]
    m1[first] = vec[first]
    m2[rest] = vec[rest]
    diff = float(np.max(np.abs(phi @ m2 - phi @ (-m1))))
    if diff >= tol:
        raise CertificationError(f"split images differ by {diff:.3e}")
    return m1, m2


@dataclass
class RecoveryBounds:
    t_guaranteed: int
    t_impossible: int | None
    witnesses: dict[str, int]

    def __iter__(self):
        return iter((self.t_guaranteed, self.t_impossible))


def recovery_guarantee_bounds(m: SensingMatrix) -> RecoveryBounds:
    """(t_guaranteed, t_impossible): every t <= ceil(sqrt(n)/4) is recoverable by
    the cited guarantee; some ceil(s/2)-sparse vector is not, s being the
    smallest known witness sparsity."""
    t_g = max(1, ceil(sqrt(m.n) / 4))
    witnesses: dict[str, int] = {}
    if m.v >= 2:
        p1, p2 = min_replication_points(m)
        witnesses["two-point"] = m.replication[p1] + m.replication[p2]
    arc = real_arc(m)
    if arc is not None:
        witnesses["arc"] = 3 * m.replication[arc[0]] // 2
    t_i = min((ceil(s / 2) for s in witnesses.values()), default=None)
    return RecoveryBounds(t_g, t_i, witnesses)


def real_arc(m: SensingMatrix):
    for rx in sorted(set(m.replication)):
        if rx % 4:
            continue
        arc = find_arc3(m, rx)
        if arc and all(m.hadamards[p].is_real for p in arc):
            return arc
    return None
