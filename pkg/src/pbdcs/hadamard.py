"""Complex and real Hadamard matrices and the column-combination sparsity search."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil, comb

import numpy as np

from pbdcs import _kernels
from pbdcs.designs import is_prime

KINDS = ("fourier", "sylvester", "paley", "custom")

# zero/rank thresholds for combinations of unimodular columns with unit-norm weights
ZERO_TOL = 1e-9
RANK_TOL = 1e-9
MAX_SEARCH_ORDER = 12
DEFAULT_BUDGET = 5_000_000


class HadamardError(ValueError):
    pass


class SearchBudgetExceeded(RuntimeError):
    """The exhaustive search would exceed its configured budget."""


@dataclass(frozen=True, eq=False)
class HadamardMatrix:
    entries: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise HadamardError(f"Hadamard matrix must be square, got shape {a.shape}")
        if self.kind not in KINDS:
            raise HadamardError(f"unknown kind {self.kind!r}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.entries.imag == 0))

    def orthogonality_error(self) -> float:
        h = self.entries
        return float(np.max(np.abs(h @ h.conj().T - self.order * np.eye(self.order))))

    def modulus_error(self) -> float:
        return float(np.max(np.abs(np.abs(self.entries) - 1.0)))

    def validate(self, tol: float = 1e-9) -> None:
        if self.modulus_error() > 1e-12:
            raise HadamardError("entries are not unimodular")
        if self.orthogonality_error() > tol:
            raise HadamardError("H H* differs from r I")


def fourier(r: int) -> HadamardMatrix:
    r = int(r)
    if r < 1:
        raise HadamardError("order must be >= 1")
    jk = np.outer(np.arange(r), np.arange(r)) % r
    theta = 2.0 * np.pi * jk / r
    return HadamardMatrix(np.cos(theta) + 1j * np.sin(theta), "fourier")


def _sylvester(r: int) -> np.ndarray:
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < r:
        h = np.block([[h, h], [h, -h]])
    return h


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _paley(q: int) -> np.ndarray:
    """Paley type I matrix of order q + 1, for a prime q = 3 (mod 4)."""
    jac = np.array([[_legendre(j - i, q) for j in range(q)] for i in range(q)], dtype=np.int64)
    s = np.zeros((q + 1, q + 1), dtype=np.int64)
    s[0, 1:] = 1
    s[1:, 0] = -1
    s[1:, 1:] = jac
    return np.eye(q + 1, dtype=np.int64) + s


def _integer_hadamard(r: int) -> tuple[np.ndarray, str]:
    if r in (1, 2) or (r & (r - 1)) == 0:
        return _sylvester(r), "sylvester"
    if r % 4 == 0 and is_prime(r - 1) and (r - 1) % 4 == 3:
        return _paley(r - 1), "paley"
    if r % 8 == 0:
        h, kind = _integer_hadamard(r // 2)
        return np.block([[h, h], [h, -h]]), kind
    raise HadamardError(
        f"no real Hadamard matrix of order {r} available: supported orders are powers of two, "
        "q+1 for primes q = 3 (mod 4), and doublings of those"
    )


def real_hadamard(r: int) -> HadamardMatrix:
    r = int(r)
    if r < 1:
        raise HadamardError("order must be >= 1")
    if r > 2 and r % 4:
        raise HadamardError(f"real Hadamard matrices of order {r} do not exist (need r in {{1,2}} or r = 0 mod 4)")
    h, kind = _integer_hadamard(r)
    if not np.array_equal(h @ h.T, r * np.eye(r, dtype=np.int64)):
        raise HadamardError(f"construction of order {r} failed the integer orthogonality check")
    return HadamardMatrix(h.astype(np.float64), kind)


def hadamard_of_kind(kind: str, r: int) -> HadamardMatrix:
    if kind == "fourier":
        return fourier(r)
    if kind in ("real", "sylvester", "paley"):
        return real_hadamard(r)
    raise HadamardError(f"unknown Hadamard kind {kind!r}")


def _check_search(order: int, u: int, budget: int) -> None:
    if order > MAX_SEARCH_ORDER:
        raise SearchBudgetExceeded(f"order {order} exceeds the search limit {MAX_SEARCH_ORDER}")
    cost = comb(order, u) * comb(order, u - 1)
    if cost > budget:
        raise SearchBudgetExceeded(f"search needs {cost} null-vector evaluations, budget is {budget}")


def _max_zeros(h: np.ndarray, u: int) -> int:
    """Largest zero count of a nonzero combination of at most u columns of h."""
    r = h.shape[0]
    if u >= r:
        return r - 1
    target = r - ceil(r / u)  # unreachable beyond this by the uncertainty bound
    best = 0
    for cols in combinations(range(r), u):
        m = np.ascontiguousarray(h[:, cols])
        best = max(best, _kernels.max_zeros(m, ZERO_TOL, RANK_TOL))
        if best >= target:
            break
    return best


def min_support_combination(h: HadamardMatrix, u: int, budget: int = DEFAULT_BUDGET) -> int:
    """Exact minimum number of nonzero entries over nonzero combinations of
    at most ``u`` columns of ``h``."""
    r = h.order
    if not 1 <= u <= r:
        raise HadamardError(f"u must lie in 1..{r}")
    _check_search(r, u, budget)
    return r - _max_zeros(h.entries, u)


def is_optimal(h: HadamardMatrix, kmax: int, budget: int = DEFAULT_BUDGET) -> bool:
    """True iff every nonzero combination of k <= kmax rows has at most k - 1 zeros."""
    r = h.order
    if not 1 <= kmax <= r:
        raise HadamardError(f"kmax must lie in 1..{r}")
    rows = np.ascontiguousarray(h.entries.T)
    for k in range(1, kmax + 1):
        _check_search(r, k, budget)
        if _max_zeros(rows, k) > k - 1:
            return False
    return True


# --- CSV serialization ------------------------------------------------------

def dumps_hadamard(h: HadamardMatrix) -> str:
    lines = [f"hadamard r={h.order} kind={h.kind}"]
    for row in h.entries:
        lines.append(",".join(f"{repr(float(z.real))},{repr(float(z.imag))}" for z in row))
    return "\n".join(lines) + "\n"


def loads_hadamard(text: str) -> HadamardMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("hadamard "):
        raise HadamardError("missing 'hadamard r=<r> kind=<kind>' header")
    fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    r = int(fields["r"])
    vals = np.array([[float(x) for x in ln.split(",")] for ln in lines[1 : r + 1]])
    return HadamardMatrix(vals[:, 0::2] + 1j * vals[:, 1::2], fields.get("kind", "custom"))
