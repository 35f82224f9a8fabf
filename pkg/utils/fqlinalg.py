"""
Exact linear algebra over prime fields GF(q).

Matrices are small dense numpy integer arrays. GF(2) work goes through a
bit-packed path where each row is a Python int (bit c = column c) and row
operations are single XORs; both paths produce identical results.

Column indices in this module are 0-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime
from sympy.ntheory import n_order


class FieldError(ValueError):
    """Raised for invalid field sizes or non-invertible elements."""


@dataclass(frozen=True)
class FieldSpec:
    """Prime field GF(q)."""

    q: int

    def __post_init__(self):
        if isinstance(self.q, bool) or not isinstance(self.q, (int, np.integer)):
            raise FieldError(f"Field size must be an integer, got {self.q!r}")
        if self.q < 2 or not isprime(int(self.q)):
            raise FieldError(f"Field size must be prime, got q={self.q}")
        object.__setattr__(self, "q", int(self.q))

    @property
    def is_binary(self) -> bool:
        return self.q == 2

    def __str__(self):
        return f"GF({self.q})"


GF2 = FieldSpec(2)


def field_inv(a: int, spec: FieldSpec) -> int:
    """Multiplicative inverse of a in GF(q)."""
    a = int(a) % spec.q
    if a == 0:
        raise FieldError("Zero has no multiplicative inverse")
    return pow(a, -1, spec.q)


@dataclass(frozen=True, eq=False)
class FqMatrix:
    """Immutable dense matrix over GF(q)."""

    data: np.ndarray
    field: FieldSpec

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise FieldError(f"Matrix must be 2-dimensional, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.field.q):
            raise FieldError(f"Entries must lie in [0, {self.field.q - 1}]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    # ---- constructors ----
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], field: FieldSpec, cols: Optional[int] = None) -> "FqMatrix":
        rows = [list(r) for r in rows]
        if not rows:
            return cls(np.zeros((0, cols or 0), dtype=np.int64), field)
        return cls(np.array(rows, dtype=np.int64), field)

    @classmethod
    def zeros(cls, rows: int, cols: int, field: FieldSpec) -> "FqMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), field)

    @classmethod
    def identity(cls, m: int, field: FieldSpec) -> "FqMatrix":
        return cls(np.eye(m, dtype=np.int64), field)

    # ---- shape ----
    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    def tolist(self) -> List[List[int]]:
        return self.data.tolist()

    def transpose(self) -> "FqMatrix":
        return FqMatrix(self.data.T, self.field)

    def vstack(self, other: "FqMatrix") -> "FqMatrix":
        return FqMatrix(np.vstack([self.data, other.data]), self.field)

    def nonzero_rows(self) -> "FqMatrix":
        keep = np.any(self.data != 0, axis=1)
        return FqMatrix(self.data[keep].reshape(-1, self.cols), self.field)

    # ---- identity ----
    def __eq__(self, other):
        if not isinstance(other, FqMatrix):
            return NotImplemented
        return (
            self.field == other.field
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self):
        return hash((self.field.q, self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"FqMatrix(q={self.field.q}, {self.tolist()})"

    # ---- text form: rows joined by ';', digits concatenated (comma-separated when q > 10) ----
    def to_text(self) -> str:
        sep = "" if self.field.q <= 10 else ","
        return ";".join(sep.join(str(int(v)) for v in row) for row in self.data)

    @classmethod
    def from_text(cls, text: str, field: FieldSpec, cols: Optional[int] = None) -> "FqMatrix":
        text = text.strip()
        if not text:
            return cls.zeros(0, cols or 0, field)
        rows = []
        for chunk in text.split(";"):
            chunk = chunk.strip()
            rows.append([int(v) for v in chunk.split(",")] if "," in chunk else [int(ch) for ch in chunk])
        return cls.from_rows(rows, field)


@dataclass(frozen=True)
class RrefResult:
    rref: FqMatrix
    rank: int
    pivot_cols: Tuple[int, ...]


# --------------------------------------------------------------
# GF(2) bit-packed kernels

def pack_rows(data: np.ndarray) -> List[int]:
    """Pack a 0/1 array into one int per row (bit c = column c)."""
    weights = [1 << c for c in range(data.shape[1])]
    return [sum(w for w, v in zip(weights, row) if v) for row in data.tolist()]


def unpack_rows(rows: Sequence[int], n_cols: int) -> np.ndarray:
    out = np.zeros((len(rows), n_cols), dtype=np.int64)
    for r, word in enumerate(rows):
        for c in range(n_cols):
            if (word >> c) & 1:
                out[r, c] = 1
    return out


def rref_bits(rows: Sequence[int], n_cols: int) -> Tuple[List[int], Tuple[int, ...]]:
    """Gauss-Jordan over GF(2) on packed rows; returns (rows, pivot columns)."""
    work = list(rows)
    pivots = []
    row_idx = 0
    for col in range(n_cols):
        if row_idx == len(work):
            break
        bit = 1 << col
        pivot = None
        for r in range(row_idx, len(work)):
            if work[r] & bit:
                pivot = r
                break
        if pivot is None:
            continue
        work[row_idx], work[pivot] = work[pivot], work[row_idx]
        lead = work[row_idx]
        for r in range(len(work)):
            if r != row_idx and work[r] & bit:
                work[r] ^= lead
        pivots.append(col)
        row_idx += 1
    return work, tuple(pivots)


def rank_bits(rows: Sequence[int], n_cols: int) -> int:
    return len(rref_bits(rows, n_cols)[1])


def unit_columns_bits(rows: Sequence[int], keep_mask: int, n_cols: int) -> int:
    """Mask of kept columns c such that e_c lies in the row space of rows restricted to keep_mask."""
    reduced, pivots = rref_bits([w & keep_mask for w in rows], n_cols)
    found = 0
    for r in range(len(pivots)):
        word = reduced[r]
        if word and not word & (word - 1):
            found |= word
    return found


def _rref_gf2(M: FqMatrix) -> RrefResult:
    reduced, pivots = rref_bits(pack_rows(M.data), M.cols)
    return RrefResult(FqMatrix(unpack_rows(reduced, M.cols).reshape(M.rows, M.cols), M.field), len(pivots), pivots)


# --------------------------------------------------------------
# generic prime-field kernels

def _rref_generic(M: FqMatrix) -> RrefResult:
    q = M.field.q
    mat = M.data.copy()
    num_rows, num_cols = mat.shape
    pivots = []
    row = 0
    for col in range(num_cols):
        if row >= num_rows:
            break
        pivot_rows = np.nonzero(mat[row:, col])[0]
        if len(pivot_rows) == 0:
            continue
        pivot_row = int(pivot_rows[0]) + row
        if pivot_row != row:
            mat[[row, pivot_row]] = mat[[pivot_row, row]]
        mat[row] = (mat[row] * field_inv(mat[row, col], M.field)) % q
        factors = mat[:, col].copy()
        factors[row] = 0
        mat = (mat - np.outer(factors, mat[row])) % q
        pivots.append(col)
        row += 1
    return RrefResult(FqMatrix(mat, M.field), len(pivots), tuple(pivots))


def rref(M: FqMatrix, fast_gf2: bool = True) -> RrefResult:
    """Canonical reduced row echelon form of M (same shape, zero rows last)."""
    if fast_gf2 and M.field.is_binary:
        return _rref_gf2(M)
    return _rref_generic(M)


def rank(M: FqMatrix) -> int:
    if M.field.is_binary:
        return rank_bits(pack_rows(M.data), M.cols)
    return rref(M).rank


def matmul(A: FqMatrix, B: FqMatrix) -> FqMatrix:
    if A.field != B.field:
        raise FieldError(f"Field mismatch: {A.field} vs {B.field}")
    return FqMatrix((A.data @ B.data) % A.field.q, A.field)


def remove_columns(M: FqMatrix, cols: Iterable[int]) -> Tuple[FqMatrix, Tuple[int, ...]]:
    """Drop the given columns; returns the submatrix and the original index of each kept column."""
    drop = set(int(c) for c in cols)
    bad = [c for c in drop if c < 0 or c >= M.cols]
    if bad:
        raise IndexError(f"Column indices out of range for {M.cols} columns: {sorted(bad)}")
    kept = tuple(c for c in range(M.cols) if c not in drop)
    return FqMatrix(M.data[:, list(kept)].reshape(M.rows, len(kept)), M.field), kept


def unit_rows(R: RrefResult) -> frozenset:
    """Columns j such that some row of the RREF equals the j-th standard unit vector."""
    data = R.rref.data[: R.rank]
    if data.size == 0:
        return frozenset()
    single = np.count_nonzero(data, axis=1) == 1
    found = set()
    for row in data[single]:
        j = int(np.flatnonzero(row)[0])
        if row[j] == 1:
            found.add(j)
    return frozenset(found)


def vandermonde(points: Sequence[int], k: int, spec: FieldSpec) -> FqMatrix:
    """k x len(points) matrix with entry points[c] ** r in row r."""
    data = np.array([[pow(int(x), r, spec.q) for x in points] for r in range(k)], dtype=np.int64)
    return FqMatrix(data.reshape(k, len(points)), spec)


def mds_points(m: int, spec: FieldSpec) -> Tuple[int, ...]:
    """m distinct evaluation points: powers g^0..g^(m-1) of the smallest g of order >= m, else 0..m-1 when q = m."""
    if m < 1 or m > spec.q:
        raise FieldError(f"Need 1 <= m <= q for {m} distinct points in {spec}")
    for g in range(1, spec.q):
        if n_order(g, spec.q) >= m:
            return tuple(pow(g, c, spec.q) for c in range(m))
    return tuple(range(m))


# --------------------------------------------------------------
# subspace enumeration

def gaussian_binomial(m: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of GF(q)^m."""
    if k < 0 or k > m:
        return 0
    num = prod(q ** (m - i) - 1 for i in range(k))
    den = prod(q ** (i + 1) - 1 for i in range(k))
    return num // den


def _rank_bounds(m: int, rank_range: Optional[Tuple[int, int]]) -> Tuple[int, int]:
    lo, hi = rank_range if rank_range is not None else (1, m)
    if lo < 0 or hi > m or lo > hi:
        raise FieldError(f"Invalid rank range {rank_range} for m={m}")
    return lo, hi


def free_positions(m: int, pivots: Sequence[int]) -> List[Tuple[int, int]]:
    """Row-major (row, col) positions an RREF with these pivots may fill freely."""
    pivot_set = set(pivots)
    return [(r, c) for r, p in enumerate(pivots) for c in range(p + 1, m) if c not in pivot_set]


def rref_blocks(m: int, rank_range: Optional[Tuple[int, int]] = None) -> Iterator[Tuple[int, ...]]:
    """Pivot sets by rank ascending, then lexicographically; each is an independent block."""
    if m < 1:
        raise FieldError(f"m must be at least 1, got {m}")
    lo, hi = _rank_bounds(m, rank_range)
    for k in range(lo, hi + 1):
        yield from itertools.combinations(range(m), k)


def block_size(m: int, pivots: Sequence[int], spec: FieldSpec) -> int:
    return spec.q ** len(free_positions(m, pivots))


def count_rref(m: int, spec: FieldSpec, rank_range: Optional[Tuple[int, int]] = None) -> int:
    lo, hi = _rank_bounds(m, rank_range)
    return sum(gaussian_binomial(m, k, spec.q) for k in range(lo, hi + 1))


def enumerate_block(m: int, spec: FieldSpec, pivots: Sequence[int]) -> Iterator[FqMatrix]:
    """Every m x m RREF with exactly these pivot columns; free entries counted in base q."""
    base = np.zeros((m, m), dtype=np.int64)
    for r, p in enumerate(pivots):
        base[r, p] = 1
    free = free_positions(m, pivots)
    if not free:
        yield FqMatrix(base, spec)
        return
    rows_idx = np.array([r for r, _ in free])
    cols_idx = np.array([c for _, c in free])
    for values in itertools.product(range(spec.q), repeat=len(free)):
        arr = base.copy()
        arr[rows_idx, cols_idx] = values
        yield FqMatrix(arr, spec)


def iter_block_bits(m: int, pivots: Sequence[int]) -> Iterator[List[int]]:
    """GF(2) fast path of enumerate_block: yields the nonzero rows as packed ints, same order."""
    base = [1 << p for p in pivots]
    free = free_positions(m, pivots)
    n_free = len(free)
    for counter in range(1 << n_free):
        rows = list(base)
        for t, (r, c) in enumerate(free):
            if (counter >> (n_free - 1 - t)) & 1:
                rows[r] |= 1 << c
        yield rows


def enumerate_rref(m: int, spec: FieldSpec, rank_range: Optional[Tuple[int, int]] = (1, None)) -> Iterator[FqMatrix]:
    """Each distinct row space of GF(q)^m with rank in rank_range, once, as an m x m RREF."""
    lo, hi = rank_range if rank_range is not None else (1, m)
    hi = m if hi is None else hi
    for pivots in rref_blocks(m, (lo, hi)):
        yield from enumerate_block(m, spec, pivots)
