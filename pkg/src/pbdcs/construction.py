"""Sensing matrices from a PBD and per-point Hadamard matrices.

Each point x of the design owns a contiguous block of r_x columns.  The rows
of that block are indexed by blocks of the design: rows of blocks not
containing x are zero, and the k-th block containing x (ascending block
index) carries row k of H_x / sqrt(r_x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from pbdcs.designs import Design, validate_pbd
from pbdcs.hadamard import HadamardMatrix, hadamard_of_kind


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    entries: np.ndarray
    point_cols: tuple[tuple[int, int], ...]
    point_rows: tuple[tuple[int, ...], ...]
    had_row_at: tuple[tuple[int, ...], ...]
    hadamards: tuple[HadamardMatrix, ...]
    design: Design | None = None

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    @property
    def v(self) -> int:
        return len(self.point_cols)

    @property
    def replication(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.point_rows)

    @property
    def equireplicate(self) -> bool:
        return len(set(self.replication)) == 1

    def hadamard_row(self, point: int, row: int) -> int:
        """Which row of H_point sits in matrix row ``row``."""
        k = self.point_rows[point].index(row)
        return self.had_row_at[point][k]

    def columns_of(self, point: int) -> range:
        a, b = self.point_cols[point]
        return range(a, b)

    def column_points(self) -> np.ndarray:
        out = np.empty(self.N, dtype=np.intp)
        for x, (a, b) in enumerate(self.point_cols):
            out[a:b] = x
        return out

    def block_points(self) -> list[list[int]]:
        """Points on each row (block), recovered from the row bookkeeping."""
        rows: list[list[int]] = [[] for _ in range(self.n)]
        for x, pr in enumerate(self.point_rows):
            for b in pr:
                rows[b].append(x)
        return rows

    def shared_row(self, p1: int, p2: int) -> int:
        common = sorted(set(self.point_rows[p1]) & set(self.point_rows[p2]))
        if not common:
            raise ConstructionError(f"points {p1} and {p2} share no block")
        return common[0]


@dataclass(frozen=True, eq=False)
class RealSensingMatrix:
    entries: np.ndarray
    source: SensingMatrix | None = None
    column_pairs: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


HadamardSource = Sequence[HadamardMatrix] | Mapping[int, HadamardMatrix] | Callable[[int], HadamardMatrix]


def build(d: Design, hs: HadamardSource, check: bool = True) -> SensingMatrix:
    """Assemble the n x N matrix of Construction 1.

    ``hs`` gives one Hadamard matrix per point: a sequence or mapping indexed
    by point, or a callable taking the replication number.
    """
    if check:
        rep = validate_pbd(d)
        if rep.pair_violations:
            raise ConstructionError(f"design is not a PBD(v,K,1): {len(rep.pair_violations)} pair violations")
    r = d.replication
    if callable(hs):
        cache: dict[int, HadamardMatrix] = {}
        for rx in set(r):
            cache[rx] = hs(rx)
        had = tuple(cache[rx] for rx in r)
    else:
        had = tuple(hs[x] for x in range(d.v))
    for x, (rx, h) in enumerate(zip(r, had)):
        if h.order != rx:
            raise ConstructionError(f"point {x} has replication {rx} but its Hadamard matrix has order {h.order}")
    pb = d.point_blocks()
    starts = np.concatenate([[0], np.cumsum(r)]).astype(int)
    phi = np.zeros((d.n, int(starts[-1])), dtype=np.complex128)
    for x in range(d.v):
        a, b = starts[x], starts[x + 1]
        if a == b:
            continue
        phi[list(pb[x]), a:b] = had[x].entries / np.sqrt(r[x])
    return SensingMatrix(
        entries=phi,
        point_cols=tuple((int(starts[x]), int(starts[x + 1])) for x in range(d.v)),
        point_rows=pb,
        had_row_at=tuple(tuple(range(rx)) for rx in r),
        hadamards=had,
        design=d,
    )


def build_with_kind(d: Design, kind: str = "fourier") -> SensingMatrix:
    return build(d, lambda rx: hadamard_of_kind(kind, rx))


def realify_array(a: np.ndarray) -> np.ndarray:
    """Entrywise a + ib -> [[a, b], [-b, a]]."""
    n, N = a.shape
    out = np.empty((2 * n, 2 * N))
    out[0::2, 0::2] = a.real
    out[0::2, 1::2] = a.imag
    out[1::2, 0::2] = -a.imag
    out[1::2, 1::2] = a.real
    return out


def realify(m: SensingMatrix) -> RealSensingMatrix:
    return RealSensingMatrix(
        entries=realify_array(m.entries),
        source=m,
        column_pairs=tuple((2 * j, 2 * j + 1) for j in range(m.N)),
    )


def complex_to_real_vector(z: np.ndarray) -> np.ndarray:
    """Real representation compatible with ``realify``:
    realify(A) @ complex_to_real_vector(z) == complex_to_real_vector(A @ z)."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = -z.imag
    return out


def real_to_complex_vector(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[0::2] - 1j * x[1::2]


def dense(m) -> np.ndarray:
    if isinstance(m, (SensingMatrix, RealSensingMatrix)):
        return m.entries
    return np.asarray(m)


def _column_blocks(N: int, size: int = 512):
    for a in range(0, N, size):
        yield a, min(N, a + size)


def coherence(m) -> float:
    """Largest |<phi_i, phi_j>| over distinct columns (columns assumed unit norm)."""
    phi = dense(m)
    N = phi.shape[1]
    best = 0.0
    for a, b in _column_blocks(N):
        g = np.abs(phi[:, a:b].conj().T @ phi)
        g[np.arange(b - a), np.arange(a, b)] = 0.0
        best = max(best, float(g.max(initial=0.0)))
    return best


def expected_gram_magnitudes(m: SensingMatrix) -> Callable[[int, int], np.ndarray]:
    """Gram magnitudes predicted by the construction, for column range a:b."""
    cp = m.column_points()
    r = np.array(m.replication, dtype=float)
    inc = np.zeros((m.n, m.v))
    for x, rows in enumerate(m.point_rows):
        inc[list(rows), x] = 1
    share = (inc.T @ inc) > 0
    inv = 1.0 / np.sqrt(np.where(r > 0, r, 1.0))

    def block(a: int, b: int) -> np.ndarray:
        pa = cp[a:b]
        e = share[np.ix_(pa, cp)] * np.outer(inv[pa], inv[cp])
        e[pa[:, None] == cp[None, :]] = 0.0
        e[np.arange(b - a), np.arange(a, b)] = 1.0
        return e

    return block


def gram_structure_deviation(m: SensingMatrix) -> float:
    """Max |(|G_ij| - predicted_ij)| over all column pairs, diagonal included."""
    expect = expected_gram_magnitudes(m)
    phi = m.entries
    worst = 0.0
    for a, b in _column_blocks(m.N):
        g = np.abs(phi[:, a:b].conj().T @ phi)
        worst = max(worst, float(np.max(np.abs(g - expect(a, b)), initial=0.0)))
    return worst


def invariant_violations(m: SensingMatrix, tol: float = 1e-9) -> list[str]:
    """Structural checks on a built matrix; empty when all hold."""
    out = []
    phi = m.entries
    for x, ((a, b), rows) in enumerate(zip(m.point_cols, m.point_rows)):
        if b - a != len(rows):
            out.append(f"point {x}: column width {b - a} != replication {len(rows)}")
            continue
        nz = np.nonzero(np.any(phi[:, a:b] != 0, axis=1))[0]
        if tuple(nz) != tuple(rows):
            out.append(f"point {x}: nonzero rows differ from recorded rows")
        if len(set(m.had_row_at[x])) != len(rows):
            out.append(f"point {x}: Hadamard rows are not distinct")
        h = m.hadamards[x].entries
        sub = phi[list(rows), a:b] * np.sqrt(len(rows))
        if rows and np.max(np.abs(sub - h[list(m.had_row_at[x])])) > tol:
            out.append(f"point {x}: rows do not match H_x / sqrt(r_x)")
    norms = np.linalg.norm(phi, axis=0)
    if norms.size and np.max(np.abs(norms - 1)) > tol:
        out.append("columns are not unit norm")
    dev = gram_structure_deviation(m)
    if dev > tol:
        out.append(f"Gram structure deviates by {dev:.3e}")
    return out


# --- file formats ------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _complex_rows(a: np.ndarray) -> list[str]:
    return [",".join(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in row) for row in a]


def dumps_matrix(m: SensingMatrix) -> str:
    lines = [f"csmatrix n={m.n} N={m.N}"]
    lines += _complex_rows(m.entries)
    lines.append("metadata")
    for x in range(m.v):
        a, b = m.point_cols[x]
        lines.append(f"pointCols {x} {a} {b}")
        lines.append("pointRows " + " ".join(str(t) for t in (x, *m.point_rows[x])))
        lines.append("hadRowAt " + " ".join(str(t) for t in (x, *m.had_row_at[x])))
        lines.append(f"hadKind {x} {m.hadamards[x].kind}")
    return "\n".join(lines) + "\n"


def loads_matrix(text: str) -> SensingMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("csmatrix "):
        raise ConstructionError("missing 'csmatrix n=<n> N=<N>' header")
    hdr = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    n, N = int(hdr["n"]), int(hdr["N"])
    if N:
        vals = np.array([[float(t) for t in ln.split(",")] for ln in lines[1 : n + 1]]).reshape(n, 2 * N)
        phi = vals[:, 0::2] + 1j * vals[:, 1::2]
    else:
        phi = np.zeros((n, 0), dtype=np.complex128)
    cols: dict[int, tuple[int, int]] = {}
    rows: dict[int, tuple[int, ...]] = {}
    hrow: dict[int, tuple[int, ...]] = {}
    kinds: dict[int, str] = {}
    for ln in lines[n + 2 :]:
        parts = ln.split()
        if not parts:
            continue
        tag, x, rest = parts[0], int(parts[1]), parts[2:]
        if tag == "pointCols":
            cols[x] = (int(rest[0]), int(rest[1]))
        elif tag == "pointRows":
            rows[x] = tuple(int(t) for t in rest)
        elif tag == "hadRowAt":
            hrow[x] = tuple(int(t) for t in rest)
        elif tag == "hadKind":
            kinds[x] = rest[0]
    v = len(cols)
    had = []
    for x in range(v):
        a, b = cols[x]
        r = b - a
        h = np.zeros((r, r), dtype=np.complex128)
        h[list(hrow[x])] = phi[list(rows[x]), a:b] * np.sqrt(r)
        had.append(HadamardMatrix(h, kinds.get(x, "custom")))
    return SensingMatrix(
        entries=phi,
        point_cols=tuple(cols[x] for x in range(v)),
        point_rows=tuple(rows[x] for x in range(v)),
        had_row_at=tuple(hrow[x] for x in range(v)),
        hadamards=tuple(had),
    )


def dumps_real_matrix(m: RealSensingMatrix | np.ndarray) -> str:
    a = dense(m)
    lines = [f"csmatrix-real rows={a.shape[0]} cols={a.shape[1]}"]
    lines += [",".join(_fmt(x) for x in row) for row in a]
    return "\n".join(lines) + "\n"


def loads_real_matrix(text: str) -> RealSensingMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("csmatrix-real "):
        raise ConstructionError("missing 'csmatrix-real rows=<r> cols=<c>' header")
    hdr = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    rows, cols = int(hdr["rows"]), int(hdr["cols"])
    a = np.array([[float(t) for t in ln.split(",")] for ln in lines[1 : rows + 1]]).reshape(rows, cols)
    return RealSensingMatrix(entries=a, column_pairs=tuple((2 * j, 2 * j + 1) for j in range(cols // 2)))
