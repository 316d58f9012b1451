from itertools import combinations
from math import ceil

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbdcs.designs import is_prime
from pbdcs.hadamard import (
    HadamardError,
    HadamardMatrix,
    SearchBudgetExceeded,
    dumps_hadamard,
    fourier,
    hadamard_of_kind,
    is_optimal,
    loads_hadamard,
    min_support_combination,
    real_hadamard,
)


def zero_pattern_min_support(h, u):
    """Oracle: grow the zero pattern until no u columns admit a combination vanishing on it."""
    r = h.shape[0]
    best = 0
    for z in range(1, r):
        found = False
        for cols in combinations(range(r), u):
            for zs in combinations(range(r), z):
                s = np.linalg.svd(h[np.ix_(zs, cols)], compute_uv=False)
                if len(s) < u or s[-1] < 1e-9:
                    found = True
                    break
            if found:
                break
        if not found:
            break
        best = z
    return r - best


def test_fourier_small_cases():
    assert np.allclose(fourier(1).entries, [[1]])
    assert np.allclose(fourier(2).entries, [[1, 1], [1, -1]], atol=1e-15)
    f3 = fourier(3).entries
    assert abs(f3[1].sum()) < 1e-12 and abs(f3[2].sum()) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40))
def test_fourier_is_hadamard(r):
    h = fourier(r)
    assert h.modulus_error() < 1e-12
    assert h.orthogonality_error() < 1e-9
    sums = np.abs(h.entries.sum(axis=1))
    assert np.all(sums[1:] < 1e-12 * r)


@pytest.mark.parametrize("r,kind", [(1, "sylvester"), (2, "sylvester"), (4, "sylvester"), (8, "sylvester"),
                                    (12, "paley"), (16, "sylvester"), (20, "paley"), (24, "paley")])
def test_real_hadamard(r, kind):
    h = real_hadamard(r)
    assert h.kind == kind and h.is_real
    e = h.entries.real.astype(int)
    assert set(np.unique(e)) <= {-1, 1}
    assert np.array_equal(e @ e.T, r * np.eye(r, dtype=int))


@pytest.mark.parametrize("r", [3, 6, 10, 0])
def test_real_hadamard_rejects_impossible_orders(r):
    with pytest.raises(HadamardError):
        real_hadamard(r)


def test_real_hadamard_unsupported_order_explained():
    with pytest.raises(HadamardError, match="supported orders"):
        real_hadamard(92)  # 91 is composite and 92 is not a multiple of 8


def test_kind_dispatch():
    assert hadamard_of_kind("fourier", 5).kind == "fourier"
    assert hadamard_of_kind("real", 12).kind == "paley"
    with pytest.raises(HadamardError):
        hadamard_of_kind("butson", 4)


def test_construction_guards():
    with pytest.raises(HadamardError):
        HadamardMatrix(np.ones((2, 3)))
    h = HadamardMatrix(np.ones((2, 2)))
    with pytest.raises(HadamardError):
        h.validate()
    with pytest.raises(ValueError):
        h.entries[0, 0] = 2


@pytest.mark.parametrize("r,u,expected", [(6, 2, 3), (5, 2, 4), (4, 2, 2), (8, 4, 2), (7, 3, 5)])
def test_min_support_examples(r, u, expected):
    assert min_support_combination(fourier(r), u) == expected


@pytest.mark.parametrize("r", range(1, 9))
def test_min_support_single_column(r):
    assert min_support_combination(fourier(r), 1) == r


@pytest.mark.parametrize("r", range(2, 7))
def test_min_support_matches_zero_pattern_oracle(r):
    h = fourier(r)
    for u in range(1, r + 1):
        assert min_support_combination(h, u) == zero_pattern_min_support(h.entries, u)


def test_real_order_4_oracle():
    h = real_hadamard(4)
    for u in range(1, 5):
        assert min_support_combination(h, u) == zero_pattern_min_support(h.entries, u)


@pytest.mark.parametrize("r", range(1, 13))
def test_uncertainty_bound_all_u(r):
    h = fourier(r)
    for u in range(1, r + 1):
        s = min_support_combination(h, u)
        assert s >= ceil(r / u)
        if r % u == 0:
            assert s == r // u
        if is_prime(r):
            assert s == r - u + 1


def test_real_12_supports():
    h = real_hadamard(12)
    got = [min_support_combination(h, u) for u in range(1, 13)]
    assert all(s >= ceil(12 / u) for u, s in enumerate(got, 1))
    assert got[:2] == [12, 6]


def test_optimality():
    assert is_optimal(fourier(5), 4)
    assert is_optimal(fourier(7), 6)
    assert not is_optimal(real_hadamard(4), 2)
    assert is_optimal(fourier(1), 1)
    assert not is_optimal(fourier(4), 3)


def test_search_limits():
    with pytest.raises(SearchBudgetExceeded):
        min_support_combination(fourier(13), 2)
    with pytest.raises(SearchBudgetExceeded):
        min_support_combination(fourier(12), 6, budget=10)
    with pytest.raises(HadamardError):
        min_support_combination(fourier(4), 0)


@pytest.mark.parametrize("h", [fourier(6), real_hadamard(12), fourier(1)])
def test_csv_round_trip(h):
    text = dumps_hadamard(h)
    assert text.startswith(f"hadamard r={h.order} kind={h.kind}")
    back = loads_hadamard(text)
    assert np.array_equal(back.entries, h.entries) and back.kind == h.kind
    assert dumps_hadamard(back) == text
