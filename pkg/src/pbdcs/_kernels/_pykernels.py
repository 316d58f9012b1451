"""Numpy implementations of the combinatorial search kernels.

Used when the compiled extension is unavailable or PBDCS_PURE_PYTHON is set.
Both backends share the contracts documented in ``pbdcs._kernels``.
"""
from __future__ import annotations

from itertools import combinations, islice

import numpy as np

CHUNK = 4096


def _chunks(it, size):
    while True:
        block = list(islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def max_zeros(m: np.ndarray, zero_tol: float, rank_tol: float) -> int:
    r, u = m.shape
    if u == 1:
        return int(np.count_nonzero(np.abs(m[:, 0]) <= zero_tol))
    best = 0
    for rows in _chunks(combinations(range(r), u - 1), CHUNK):
        sub = m[rows]  # (K, u-1, u)
        _, s, vh = np.linalg.svd(sub)
        ok = s[:, -1] > rank_tol
        if not ok.any():
            continue
        c = vh[ok, -1, :].conj()
        vals = np.abs(c @ m.T)
        best = max(best, int((vals <= zero_tol).sum(axis=1).max()))
    return best


def dependent_sets(phi: np.ndarray, gram: np.ndarray, s: int, dist_tol: float,
                   max_hits: int) -> tuple[list[tuple[int, ...]], int]:
    n_cols = phi.shape[1]
    hits: list[tuple[int, ...]] = []
    nodes = 0
    norms = np.sqrt(np.real(np.diag(gram)))
    for sets in _chunks(combinations(range(n_cols), s), CHUNK):
        nodes += len(sets)
        sub = phi[:, sets].transpose(1, 0, 2)  # (K, n, s)
        if sub.shape[1] < s:
            smin = np.zeros(len(sets))
        else:
            smin = np.linalg.svd(sub, compute_uv=False)[:, -1]
        scale = norms[sets].max(axis=1)
        for k in np.nonzero(smin <= dist_tol * scale)[0]:
            hits.append(tuple(int(i) for i in sets[k]))
            if len(hits) >= max_hits:
                return hits, nodes
    return hits, nodes
