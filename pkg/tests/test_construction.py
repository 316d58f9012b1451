import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import corpus
from pbdcs.construction import (
    ConstructionError,
    build,
    build_with_kind,
    coherence,
    complex_to_real_vector,
    dumps_matrix,
    dumps_real_matrix,
    gram_structure_deviation,
    invariant_violations,
    loads_matrix,
    loads_real_matrix,
    real_to_complex_vector,
    realify,
    realify_array,
)
from pbdcs.designs import Design, projective_plane, steiner_triple_system
from pbdcs.hadamard import fourier, real_hadamard

SHAPES = {
    "fano": (7, 21),
    "pg7_oval": (57, 392),
    "pg7": (57, 456),
    "pg11_blocks": (131, 1320),
    "pg11_oval": (133, 1452),
    "sts25_real": (100, 300),
    "sts25_fourier": (100, 300),
}


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_shapes_and_realified_shapes(name):
    m = corpus(name)
    n, N = SHAPES[name]
    assert m.entries.shape == (n, N)
    assert realify(m).shape == (2 * n, 2 * N)
    assert sum(m.replication) == N


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_structural_invariants(name):
    m = corpus(name)
    assert invariant_violations(m) == []
    assert gram_structure_deviation(m) < 1e-9


@pytest.mark.parametrize("name,r", [("fano", 3), ("pg7", 8), ("pg7_oval", 8), ("pg11_blocks", 12), ("sts25_real", 12)])
def test_coherence_equireplicate(name, r):
    assert abs(coherence(corpus(name)) - 1 / r) < 1e-9


def test_fano_columns(fano):
    nz = np.count_nonzero(np.abs(fano.entries) > 1e-12, axis=0)
    assert set(nz.tolist()) == {3}
    assert np.allclose(np.abs(fano.entries[np.abs(fano.entries) > 1e-12]), 1 / np.sqrt(3))


def test_rows_assigned_in_block_order(fano):
    d = fano.design
    for x in range(d.v):
        assert fano.point_rows[x] == d.point_blocks()[x]
        assert fano.had_row_at[x] == tuple(range(3))


def test_single_point_has_zero_coherence():
    d = Design(1, ((0,), (0,), (0,), (0,)))
    m = build(d, [fourier(4)], check=False)
    assert coherence(m) < 1e-12


def test_order_mismatch_names_point():
    d = projective_plane(2)
    hs = [fourier(3)] * 6 + [fourier(4)]
    with pytest.raises(ConstructionError, match="point 6"):
        build(d, hs)


def test_invalid_design_rejected():
    d = projective_plane(2)
    bad = Design(d.v, d.blocks + (d.blocks[0],))
    with pytest.raises(ConstructionError):
        build_with_kind(bad)


def test_realify_unit():
    assert np.array_equal(realify_array(np.array([[1j]])), [[0, 1], [-1, 0]])


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.complex128, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)),
       st.integers(0, 2**32 - 1))
def test_realify_is_isometry(a, seed):
    r = realify_array(a)
    s_c = np.linalg.svd(a, compute_uv=False)
    s_r = np.linalg.svd(r, compute_uv=False)
    assert np.allclose(np.sort(np.repeat(s_c, 2)), np.sort(s_r), atol=1e-9 * (1 + s_c.max(initial=0)))
    z = np.random.default_rng(seed).standard_normal(a.shape[1]) * (1 + 1j)
    assert np.allclose(r @ complex_to_real_vector(z), complex_to_real_vector(a @ z), atol=1e-9)
    assert np.allclose(real_to_complex_vector(complex_to_real_vector(z)), z)


@pytest.mark.parametrize("name", ["fano", "sts25_real"])
def test_realify_singular_values_doubled(name):
    m = corpus(name)
    if m.n > 110:
        pytest.skip("dense SVD only on small matrices")
    s_c = np.linalg.svd(m.entries, compute_uv=False)
    s_r = np.linalg.svd(realify(m).entries, compute_uv=False)
    assert np.allclose(np.sort(np.repeat(s_c, 2)), np.sort(s_r)[-2 * len(s_c):], atol=1e-9)


@pytest.mark.parametrize("name", ["fano", "pg7_oval", "sts25_real"])
def test_matrix_file_round_trip(name):
    m = corpus(name)
    text = dumps_matrix(m)
    assert text.startswith(f"csmatrix n={m.n} N={m.N}")
    back = loads_matrix(text)
    assert np.array_equal(back.entries, m.entries)
    assert back.point_cols == m.point_cols and back.point_rows == m.point_rows and back.had_row_at == m.had_row_at
    for h1, h2 in zip(back.hadamards, m.hadamards):
        assert np.allclose(h1.entries, h2.entries, atol=1e-12)
    assert dumps_matrix(back) == text
    rtext = dumps_real_matrix(realify(m))
    assert rtext.startswith(f"csmatrix-real rows={2 * m.n} cols={2 * m.N}")
    assert np.array_equal(loads_real_matrix(rtext).entries, realify(m).entries)


def test_loads_rejects_garbage():
    with pytest.raises(ConstructionError):
        loads_matrix("nonsense\n")
    with pytest.raises(ConstructionError):
        loads_real_matrix("csmatrix n=1 N=1\n")


def test_mixed_hadamard_sources():
    d = steiner_triple_system(9)
    hs = {x: (real_hadamard(4) if x % 2 else fourier(4)) for x in range(d.v)}
    m = build(d, hs)
    assert invariant_violations(m) == []
