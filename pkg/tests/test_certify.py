from itertools import combinations
from math import comb

import numpy as np
import pytest

from conftest import corpus
from pbdcs.certify import (
    CertificationError,
    arc_nullvector,
    brute_spark,
    find_arc3,
    min_replication_points,
    recovery_guarantee_bounds,
    spark_search,
    spark_witness_two_points,
    split_nonrecoverable,
)
from pbdcs.construction import build, build_with_kind
from pbdcs.designs import Design, steiner_triple_system
from pbdcs.hadamard import SearchBudgetExceeded, fourier


def svd_spark(phi, smax):
    """Oracle: batched singular values over every column subset."""
    N = phi.shape[1]
    thr = 1e-9 * np.sqrt(N)
    for s in range(1, smax + 1):
        subsets = np.array(list(combinations(range(N), s)))
        sv = np.linalg.svd(phi[:, subsets].transpose(1, 0, 2), compute_uv=False)
        if s > phi.shape[0] or np.any(sv[:, -1] < thr):
            return s
    return None


def test_fano_spark_matches_oracle(fano):
    assert svd_spark(fano.entries, 6) == 6
    res = spark_search(fano, 6)
    assert res.spark == 6 and str(res) == "spark = 6"
    assert np.linalg.svd(fano.entries[:, list(res.support)], compute_uv=False)[-1] < 1e-9


def test_fano_spark_exceeds_three(fano):
    assert brute_spark(fano, 3) is None
    assert str(spark_search(fano, 3)) == "exceeds smax=3"


def test_single_column_exceeds():
    m = build(Design(1, ((0,),)), [fourier(1)], check=False)
    assert brute_spark(m, 1) is None


def test_budget_is_distinct_from_exceeds(ex8):
    with pytest.raises(SearchBudgetExceeded):
        brute_spark(ex8, 8)


def test_dependent_columns_inside_one_budget():
    # STS(7) with Fourier blocks of order 3: spark is r1 + r2 = 6
    m = build_with_kind(steiner_triple_system(7))
    assert sum(comb(m.N, s) for s in range(1, 7)) < 2e7
    assert brute_spark(m, 6) == 6


@pytest.mark.parametrize("name", ["fano", "pg7_oval", "pg7", "pg11_blocks", "pg11_oval", "sts25_real", "sts25_fourier"])
def test_two_point_witness(name):
    m = corpus(name)
    p1, p2 = min_replication_points(m)
    w = spark_witness_two_points(m, p1, p2)
    assert np.max(np.abs(m.entries @ w)) < 1e-9
    assert np.count_nonzero(w) == m.replication[p1] + m.replication[p2]
    assert np.max(np.abs(m.entries @ (3.7j * w))) < 1e-9
    m1, m2 = split_nonrecoverable(m, w)
    s = np.count_nonzero(w)
    assert np.count_nonzero(m1) == s // 2 and np.count_nonzero(m2) == s - s // 2
    assert np.array_equal(m1 + m2, w)
    assert not np.any((m1 != 0) & (m2 != 0))
    assert np.max(np.abs(m.entries @ m2 - m.entries @ (-m1))) < 1e-9


def test_two_point_requires_distinct(fano):
    with pytest.raises(CertificationError):
        spark_witness_two_points(fano, 1, 1)


def test_arc_nullvector(sts25_real):
    arc = find_arc3(sts25_real)
    assert arc is not None
    w = arc_nullvector(sts25_real, arc)
    assert np.max(np.abs(sts25_real.entries @ w)) < 1e-9
    assert np.count_nonzero(w) == 18
    for p in arc:
        a, b = sts25_real.point_cols[p]
        piece = w[a:b]
        assert np.count_nonzero(piece) == 6
        assert set(np.abs(piece[piece != 0]).tolist()) == {1.0}


def test_arc_preconditions(sts25_real):
    fourier_m = corpus("sts25_fourier")
    arc = find_arc3(sts25_real)
    with pytest.raises(CertificationError, match="real Hadamard"):
        arc_nullvector(fourier_m, arc)
    blk = sts25_real.design.blocks[0]
    with pytest.raises(CertificationError, match="not an arc"):
        arc_nullvector(sts25_real, blk)
    with pytest.raises(CertificationError):
        arc_nullvector(sts25_real, (0, 0, 1))


def test_split_rejects_non_nullvector(fano):
    v = np.zeros(fano.N, dtype=complex)
    v[:2] = 1
    with pytest.raises(CertificationError):
        split_nonrecoverable(fano, v)


def test_split_sparsity_two():
    # two equal columns give a sparsity-2 nullvector
    phi = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    m1, m2 = split_nonrecoverable(phi, np.array([1.0, -1.0, 0.0]))
    assert np.count_nonzero(m1) == 1 and np.count_nonzero(m2) == 1


def test_recovery_bounds():
    assert tuple(recovery_guarantee_bounds(corpus("pg7_oval"))) == (2, 8)
    assert tuple(recovery_guarantee_bounds(corpus("fano"))) == (1, 3)
    b = recovery_guarantee_bounds(corpus("sts25_real"))
    assert b.witnesses == {"two-point": 24, "arc": 18}
    assert tuple(b) == (3, 9)
    single = build(Design(1, ((0,),)), [fourier(1)], check=False)
    assert recovery_guarantee_bounds(single).t_guaranteed == 1
