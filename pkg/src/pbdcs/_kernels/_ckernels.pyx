# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels: null vectors of row subsets and a depth-first
spark search over column subsets with incremental Cholesky updates."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int null_vector(cplx* a, int rows, int cols, double rank_tol,
                     int* perm, cplx* x) nogil:
    """Gaussian elimination with complete pivoting on a rows x cols matrix
    (rows = cols - 1).  Writes a unit null vector into x; returns 0 when the
    rank is below rows."""
    cdef int k, i, j, pi, pj, t
    cdef double best, mag, nrm
    cdef cplx f, tmp
    for j in range(cols):
        perm[j] = j
    for k in range(rows):
        best = -1.0
        pi = k
        pj = k
        for i in range(k, rows):
            for j in range(k, cols):
                mag = cabs2(a[i * cols + j])
                if mag > best:
                    best = mag
                    pi = i
                    pj = j
        if sqrt(best) <= rank_tol:
            return 0
        if pi != k:
            for j in range(cols):
                tmp = a[k * cols + j]
                a[k * cols + j] = a[pi * cols + j]
                a[pi * cols + j] = tmp
        if pj != k:
            for i in range(rows):
                tmp = a[i * cols + k]
                a[i * cols + k] = a[i * cols + pj]
                a[i * cols + pj] = tmp
            t = perm[k]
            perm[k] = perm[pj]
            perm[pj] = t
        for i in range(k + 1, rows):
            f = a[i * cols + k] / a[k * cols + k]
            if f != 0:
                for j in range(k, cols):
                    a[i * cols + j] = a[i * cols + j] - f * a[k * cols + j]
    # free variable is the last permuted column
    cdef cplx* y = <cplx*> malloc(cols * sizeof(cplx))
    y[cols - 1] = 1.0
    for k in range(rows - 1, -1, -1):
        f = -a[k * cols + cols - 1]
        for j in range(k + 1, rows):
            f = f - a[k * cols + j] * y[j]
        y[k] = f / a[k * cols + k]
    nrm = 0.0
    for j in range(cols):
        nrm += cabs2(y[j])
    nrm = sqrt(nrm)
    for j in range(cols):
        x[perm[j]] = y[j] / nrm
    free(y)
    return 1


def max_zeros(cnp.ndarray[cplx, ndim=2, mode="c"] m, double zero_tol, double rank_tol):
    cdef int r = m.shape[0]
    cdef int u = m.shape[1]
    cdef int rows = u - 1
    cdef int i, j, k, zeros, best = 0
    cdef cplx acc
    cdef cplx* mp = &m[0, 0]
    if u == 1:
        for i in range(r):
            if sqrt(cabs2(mp[i])) <= zero_tol:
                best += 1
        return best
    cdef int* sel = <int*> malloc(rows * sizeof(int))
    cdef int* perm = <int*> malloc(u * sizeof(int))
    cdef cplx* a = <cplx*> malloc(rows * u * sizeof(cplx))
    cdef cplx* c = <cplx*> malloc(u * sizeof(cplx))
    with nogil:
        for k in range(rows):
            sel[k] = k
        while True:
            for i in range(rows):
                for j in range(u):
                    a[i * u + j] = mp[sel[i] * u + j]
            if null_vector(a, rows, u, rank_tol, perm, c):
                zeros = 0
                for i in range(r):
                    acc = 0
                    for j in range(u):
                        acc = acc + mp[i * u + j] * c[j]
                    if sqrt(cabs2(acc)) <= zero_tol:
                        zeros += 1
                if zeros > best:
                    best = zeros
            # next lexicographic combination
            k = rows - 1
            while k >= 0 and sel[k] == r - rows + k:
                k -= 1
            if k < 0:
                break
            sel[k] += 1
            for i in range(k + 1, rows):
                sel[i] = sel[i - 1] + 1
    free(sel)
    free(perm)
    free(a)
    free(c)
    return best


def dependent_sets(cnp.ndarray phi, cnp.ndarray[cplx, ndim=2, mode="c"] gram,
                   int s, double dist_tol, int max_hits):
    cdef int N = gram.shape[0]
    cdef cplx* g = &gram[0, 0]
    cdef int* idx = <int*> malloc(s * sizeof(int))
    cdef cplx* L = <cplx*> malloc(s * s * sizeof(cplx))
    cdef cplx* w = <cplx*> malloc(s * sizeof(cplx))
    cdef double tol2 = dist_tol * dist_tol
    cdef long nodes = 0
    cdef int k = 0, i, l, j, nhits = 0
    cdef double d, gjj
    cdef cplx acc
    hits = []
    idx[0] = -1
    while True:
        idx[k] += 1
        if idx[k] > N - (s - k):
            k -= 1
            if k < 0:
                break
            continue
        j = idx[k]
        nodes += 1
        gjj = g[j * N + j].real
        d = gjj
        for i in range(k):
            acc = g[idx[i] * N + j]
            for l in range(i):
                acc = acc - L[i * s + l] * w[l]
            w[i] = acc / L[i * s + i]
            d -= cabs2(w[i])
        if d <= tol2 * gjj:
            if k == s - 1:
                hits.append(tuple(idx[i] for i in range(s)))
                nhits += 1
                if nhits >= max_hits:
                    break
            continue
        if k == s - 1:
            continue
        for i in range(k):
            L[k * s + i] = w[i].conjugate()
        L[k * s + k] = sqrt(d)
        k += 1
        idx[k] = j
    free(idx)
    free(L)
    free(w)
    return hits, nodes
