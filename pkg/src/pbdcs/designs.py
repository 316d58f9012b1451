"""Pairwise balanced designs: construction, point/block removal and validation.

Points and blocks are indexed densely from 0.  Every design produced here has
lambda = 1, i.e. each unordered pair of points lies in exactly one block.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class Design:
    """Point/block incidence structure.

    ``origin`` maps each point index to its index in the parent design the
    points were taken from (identity for freshly constructed designs), and
    ``labels`` optionally carries coordinates (projective planes only).
    """

    v: int
    blocks: tuple[tuple[int, ...], ...]
    lam: int = 1
    origin: tuple[int, ...] = ()
    labels: tuple[tuple[int, ...], ...] | None = None
    q: int | None = None
    discarded_blocks: int = 0

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(p) for p in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not self.origin:
            object.__setattr__(self, "origin", tuple(range(self.v)))
        for b in blocks:
            if len(set(b)) != len(b):
                raise DesignError(f"block {b} repeats a point")
            if b and (b[0] < 0 or b[-1] >= self.v):
                raise DesignError(f"block {b} has a point outside 0..{self.v - 1}")

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def K(self) -> frozenset[int]:
        return frozenset(len(b) for b in self.blocks)

    @property
    def replication(self) -> tuple[int, ...]:
        r = [0] * self.v
        for b in self.blocks:
            for p in b:
                r[p] += 1
        return tuple(r)

    @property
    def N(self) -> int:
        return sum(len(b) for b in self.blocks)

    def old_to_new(self) -> dict[int, int]:
        return {old: new for new, old in enumerate(self.origin)}

    def point_blocks(self) -> tuple[tuple[int, ...], ...]:
        """Ascending block indices containing each point."""
        pb: list[list[int]] = [[] for _ in range(self.v)]
        for i, b in enumerate(self.blocks):
            for p in b:
                pb[p].append(i)
        return tuple(tuple(x) for x in pb)

    def incidence(self) -> np.ndarray:
        """Block-by-point 0/1 matrix (rows are blocks)."""
        a = np.zeros((self.n, self.v), dtype=np.int8)
        for i, b in enumerate(self.blocks):
            a[i, list(b)] = 1
        return a

    def block_through(self, p1: int, p2: int) -> int:
        """Index of the first block containing both points."""
        for i, b in enumerate(self.blocks):
            if p1 in b and p2 in b:
                return i
        raise DesignError(f"no block contains points {p1} and {p2}")


@dataclass(frozen=True)
class PointSet:
    indices: tuple[int, ...]
    v: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise DesignError("point set has repeated indices")
        if any(i < 0 or i >= self.v for i in idx):
            raise DesignError(f"point index outside 0..{self.v - 1}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass
class ValidationReport:
    v: int
    n_blocks: int
    pair_violations: list[tuple[int, int, int]] = field(default_factory=list)
    sum_replication: int = 0
    sum_block_sizes: int = 0
    discarded_blocks: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def counting_identity_holds(self) -> bool:
        return self.sum_replication == self.sum_block_sizes

    @property
    def N(self) -> int:
        return self.sum_block_sizes

    @property
    def blocks_at_least_points(self) -> bool:
        return self.n_blocks >= self.v

    @property
    def valid(self) -> bool:
        return not self.pair_violations and self.counting_identity_holds

    def lines(self) -> list[str]:
        out = [
            f"v={self.v} blocks={self.n_blocks} N={self.N}",
            f"sum r_x={self.sum_replication} sum |B|={self.sum_block_sizes}",
            f"blocks >= points: {self.blocks_at_least_points}",
            f"pair violations: {len(self.pair_violations)}",
        ]
        out += self.notes
        return out


def smallest_factor(n: int) -> int:
    if n < 2:
        return n
    f = 2
    while f * f <= n:
        if n % f == 0:
            return f
        f += 1
    return n


def is_prime(n: int) -> bool:
    return n >= 2 and smallest_factor(n) == n


def _normalize(vec: Sequence[int], q: int) -> tuple[int, ...]:
    """Scale so the first nonzero coordinate is 1."""
    for c in vec:
        if c % q:
            inv = pow(int(c), -1, q)
            return tuple((int(x) * inv) % q for x in vec)
    raise DesignError("zero vector has no projective point")


def _projective_points(q: int) -> list[tuple[int, int, int]]:
    pts = [(1, b, c) for b in range(q) for c in range(q)]
    pts += [(0, 1, c) for c in range(q)]
    pts.append((0, 0, 1))
    return pts


def projective_plane(q: int) -> Design:
    """PG(2, q) for prime q: points are 1-dimensional subspaces of GF(q)^3,
    blocks the 2-dimensional subspaces (given by their normal vectors)."""
    q = int(q)
    if q < 2:
        raise DesignError(f"q={q} is not a prime")
    f = smallest_factor(q)
    if f != q:
        raise DesignError(f"q={q} is not prime (divisible by {f}); only prime q is supported")
    pts = _projective_points(q)
    P = np.array(pts, dtype=np.int64)
    blocks = []
    for line in pts:
        on = np.nonzero((P @ np.array(line, dtype=np.int64)) % q == 0)[0]
        blocks.append(tuple(int(i) for i in on))
    return Design(v=len(pts), blocks=tuple(blocks), labels=tuple(pts), q=q)


def _sts_bose(v: int) -> list[tuple[int, int, int]]:
    m = v // 3  # order of the idempotent commutative quasigroup, odd
    half = (m + 1) // 2

    def op(i, j):
        return ((i + j) * half) % m

    def pt(x, a):
        return (a % 3) * m + x

    triples = [(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(m)]
    for i, j in combinations(range(m), 2):
        for a in range(3):
            triples.append((pt(i, a), pt(j, a), pt(op(i, j), a + 1)))
    return triples


def _sts_skolem(v: int) -> list[tuple[int, int, int]]:
    k = (v - 1) // 6
    m = 2 * k  # half-idempotent commutative quasigroup of order 2k
    relabel = [s // 2 if s % 2 == 0 else k + s // 2 for s in range(m)]

    def op(i, j):
        return relabel[(i + j) % m]

    def pt(x, a):
        return (a % 3) * m + x

    inf = v - 1
    triples = [(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(k)]
    for x in range(k):
        for a in range(3):
            triples.append((inf, pt(k + x, a), pt(x, a + 1)))
    for i, j in combinations(range(m), 2):
        for a in range(3):
            triples.append((pt(i, a), pt(j, a), pt(op(i, j), a + 1)))
    return triples


def steiner_triple_system(v: int) -> Design:
    """STS(v): Bose construction for v = 3 (mod 6), Skolem for v = 1 (mod 6)."""
    v = int(v)
    if v < 3 or v % 6 not in (1, 3):
        raise DesignError(f"no Steiner triple system on v={v} points (need v = 1 or 3 mod 6, v >= 3)")
    triples = _sts_bose(v) if v % 6 == 3 else _sts_skolem(v)
    blocks = sorted(tuple(sorted(t)) for t in triples)
    return Design(v=v, blocks=tuple(blocks))


def find_conic_oval(plane: Design, q: int) -> PointSet:
    """Points of the conic {(t^2, t, 1)} together with (1, 0, 0)."""
    q = int(q)
    if q % 2 == 0:
        raise DesignError(f"q={q} is even; conic ovals are only produced for odd q")
    if plane.labels is None or plane.q != q:
        raise DesignError(f"design is not the projective plane PG(2,{q}) built by projective_plane")
    index = {lab: i for i, lab in enumerate(plane.labels)}
    pts = [index[_normalize((t * t, t, 1), q)] for t in range(q)]
    pts.append(index[(1, 0, 0)])
    return PointSet(tuple(pts), plane.v)


def is_arc(d: Design, points: Iterable[int]) -> bool:
    s = set(points)
    return all(len(s.intersection(b)) <= 2 for b in d.blocks)


def _restrict(d: Design, keep: Sequence[int], blocks: Iterable[tuple[int, ...]]) -> Design:
    new = {old: i for i, old in enumerate(keep)}
    out = []
    dropped = 0
    for b in blocks:
        nb = tuple(new[p] for p in b if p in new)
        if len(nb) >= 2:
            out.append(nb)
        else:
            dropped += 1
    origin = tuple(d.origin[p] for p in keep)
    return Design(v=len(keep), blocks=tuple(out), lam=d.lam, origin=origin,
                  discarded_blocks=d.discarded_blocks + dropped)


def remove_points(d: Design, s: PointSet | Iterable[int]) -> Design:
    """Delete points; truncated blocks of size < 2 are discarded."""
    gone = set(s)
    if any(p < 0 or p >= d.v for p in gone):
        raise DesignError("point set is not a subset of the design's points")
    if not gone:
        return d
    keep = [p for p in range(d.v) if p not in gone]
    return _restrict(d, keep, d.blocks)


def remove_blocks_with_points(d: Design, block_ids: Iterable[int]) -> Design:
    """Delete the named blocks together with every point they contain."""
    ids = sorted(set(int(i) for i in block_ids))
    if any(i < 0 or i >= d.n for i in ids):
        raise DesignError(f"block index outside 0..{d.n - 1}")
    if not ids:
        return d
    gone = set().union(*(d.blocks[i] for i in ids))
    keep = [p for p in range(d.v) if p not in gone]
    drop = set(ids)
    return _restrict(d, keep, (b for i, b in enumerate(d.blocks) if i not in drop))


def pair_coverage(d: Design) -> np.ndarray:
    """v-by-v matrix counting the blocks through each pair of points."""
    a = d.incidence().astype(np.int64)
    return a.T @ a


def validate_pbd(d: Design) -> ValidationReport:
    cover = pair_coverage(d)
    iu, ju = np.triu_indices(d.v, k=1)
    counts = cover[iu, ju]
    bad = np.nonzero(counts != d.lam)[0]
    rep = ValidationReport(
        v=d.v,
        n_blocks=d.n,
        pair_violations=[(int(iu[k]), int(ju[k]), int(counts[k])) for k in bad],
        sum_replication=sum(d.replication),
        sum_block_sizes=sum(len(b) for b in d.blocks),
        discarded_blocks=d.discarded_blocks,
    )
    if d.discarded_blocks:
        rep.notes.append(f"{d.discarded_blocks} block(s) of size < 2 discarded during point removal")
    if not rep.blocks_at_least_points and d.n > 1:
        rep.notes.append("fewer blocks than points")
    return rep


# --- text serialization -----------------------------------------------------

def dumps_design(d: Design) -> str:
    lines = [f"pbd v={d.v} lambda={d.lam}"]
    lines += [" ".join(str(p) for p in b) for b in d.blocks]
    return "\n".join(lines) + "\n"


def loads_design(text: str) -> Design:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("pbd "):
        raise DesignError("missing 'pbd v=<v> lambda=<lambda>' header")
    fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    blocks = tuple(tuple(int(x) for x in ln.split()) for ln in lines[1:] if ln.strip())
    return Design(v=int(fields["v"]), blocks=blocks, lam=int(fields.get("lambda", 1)))
