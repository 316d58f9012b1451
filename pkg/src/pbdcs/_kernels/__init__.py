"""Search kernels with a compiled core and a numpy fallback.

``max_zeros(m, zero_tol, rank_tol)``
    For an r-by-u complex matrix of full column rank, the largest number of
    zero coordinates of ``m @ c`` over nonzero ``c``.  Every maximal zero set
    spans a hyperplane, so it suffices to visit each (u-1)-subset of rows of
    rank u-1, take its null vector and count the vanishing rows.

``dependent_sets(phi, gram, s, dist_tol, max_hits)``
    Up to ``max_hits`` column subsets of size ``s`` flagged as linearly
    dependent at relative distance ``dist_tol``, in lexicographic order, plus
    the number of subsets visited.  Flags are candidates: callers confirm them.

The compiled backend is used when importable; set ``PBDCS_PURE_PYTHON=1`` to
force the fallback.
"""
import os

from pbdcs._kernels import _pykernels

BACKEND = "python"
if not os.environ.get("PBDCS_PURE_PYTHON"):
    try:
        from pbdcs._kernels import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

max_zeros = _impl.max_zeros
dependent_sets = _impl.dependent_sets

__all__ = ["BACKEND", "max_zeros", "dependent_sets"]
