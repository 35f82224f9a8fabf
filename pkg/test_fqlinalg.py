# test_fqlinalg.py
import itertools

import numpy as np
import pytest

from utils.fqlinalg import (
    GF2,
    FieldError,
    FieldSpec,
    FqMatrix,
    block_size,
    count_rref,
    enumerate_block,
    enumerate_rref,
    field_inv,
    free_positions,
    gaussian_binomial,
    iter_block_bits,
    matmul,
    mds_points,
    pack_rows,
    rank,
    rank_bits,
    remove_columns,
    rref,
    rref_blocks,
    unit_columns_bits,
    unit_rows,
    vandermonde,
)

GF3 = FieldSpec(3)
GF7 = FieldSpec(7)


# ---------------------------------------------------------
# Field
# ---------------------------------------------------------
@pytest.mark.parametrize("q", [0, 1, 4, 9, -3])
def test_non_prime_field_rejected(q):
    with pytest.raises(FieldError):
        FieldSpec(q)


def test_float_field_size_rejected():
    with pytest.raises(FieldError):
        FieldSpec(2.0)


def test_inverses_small_fields():
    for q in (2, 3, 5, 7):
        spec = FieldSpec(q)
        for a in range(1, q):
            assert (a * field_inv(a, spec)) % q == 1
    with pytest.raises(FieldError):
        field_inv(0, GF7)


def test_entries_outside_field_rejected():
    with pytest.raises(FieldError):
        FqMatrix.from_rows([[0, 2]], GF2)


# ---------------------------------------------------------
# RREF and rank
# ---------------------------------------------------------
def test_rref_gf3_known_result():
    res = rref(FqMatrix.from_rows([[1, 2, 0], [2, 1, 1]], GF3))
    assert res.rref.tolist() == [[1, 2, 0], [0, 0, 1]]
    assert res.rank == 2
    assert res.pivot_cols == (0, 2)


def test_rref_is_idempotent_and_canonical():
    rng = np.random.default_rng(3)
    for q in (2, 3, 5):
        spec = FieldSpec(q)
        for _ in range(30):
            M = FqMatrix(rng.integers(0, q, size=(4, 5)), spec)
            R = rref(M).rref
            assert rref(R).rref == R
            # invertible row operations do not change the canonical form
            P = FqMatrix(np.array([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 1, 1]]), spec)
            assert rref(matmul(P, M)).rref == R


def test_gf2_bit_path_matches_generic_path():
    rng = np.random.default_rng(11)
    for _ in range(200):
        M = FqMatrix(rng.integers(0, 2, size=(int(rng.integers(1, 7)), 6)), GF2)
        fast, slow = rref(M), rref(M, fast_gf2=False)
        assert fast.rref == slow.rref
        assert fast.rank == slow.rank == rank(M)
        assert fast.pivot_cols == slow.pivot_cols


def test_rank_of_identity_and_zero():
    assert rank(FqMatrix.identity(6, GF7)) == 6
    assert rank(FqMatrix.zeros(3, 4, GF3)) == 0
    assert rank_bits([0b011, 0b110, 0b101], 3) == 2


def test_remove_columns_reports_kept_indices():
    M = FqMatrix.from_rows([[1, 2, 0, 1]], GF3)
    sub, kept = remove_columns(M, [1, 3])
    assert sub.tolist() == [[1, 0]]
    assert kept == (0, 2)
    with pytest.raises(IndexError):
        remove_columns(M, [4])


def test_unit_rows_finds_only_unit_vectors():
    R = rref(FqMatrix.from_rows([[1, 0, 0], [0, 1, 1]], GF2))
    assert unit_rows(R) == frozenset({0})
    assert unit_rows(rref(FqMatrix.zeros(1, 3, GF2))) == frozenset()


def test_unit_columns_bits_with_column_mask():
    # row X1 + X3; dropping column 0 leaves e_2
    assert unit_columns_bits([0b00101], 0b11110, 5) == 0b00100
    assert unit_columns_bits([0b00101], 0b11111, 5) == 0


def test_text_form():
    M = FqMatrix.from_rows([[1, 0, 1], [0, 1, 1]], GF2)
    assert M.to_text() == "101;011"
    assert FqMatrix.from_text("101;011", GF2) == M
    big = FqMatrix.from_rows([[10, 0], [1, 12]], FieldSpec(13))
    assert big.to_text() == "10,0;1,12"
    assert FqMatrix.from_text(big.to_text(), FieldSpec(13)) == big


# ---------------------------------------------------------
# Vandermonde
# ---------------------------------------------------------
@pytest.mark.parametrize("m,k", [(3, 2), (4, 2), (5, 3), (5, 4)])
def test_vandermonde_every_k_columns_independent(m, k):
    V = vandermonde(range(m), k, GF7)
    assert V.rows == k and V.cols == m
    for cols in itertools.combinations(range(m), k):
        drop = [c for c in range(m) if c not in cols]
        sub, _ = remove_columns(V, drop)
        assert rank(sub) == k


def test_vandermonde_rows():
    assert vandermonde([0, 1, 2], 2, GF7).tolist() == [[1, 1, 1], [0, 1, 2]]


def test_mds_points():
    assert mds_points(3, GF7) == (1, 2, 4)
    assert mds_points(5, GF7) == (1, 3, 2, 6, 4)
    assert mds_points(4, FieldSpec(5)) == (1, 2, 4, 3)
    assert mds_points(3, GF3) == (0, 1, 2)
    assert mds_points(2, GF2) == (0, 1)
    assert mds_points(1, GF2) == (1,)
    with pytest.raises(FieldError):
        mds_points(4, GF3)


@pytest.mark.parametrize("q,m", [(2, 2), (3, 3), (5, 4), (7, 6), (11, 7)])
def test_vandermonde_on_mds_points_is_mds(q, m):
    spec = FieldSpec(q)
    points = mds_points(m, spec)
    assert len(set(points)) == m
    for k in range(1, m + 1):
        V = vandermonde(points, k, spec)
        for cols in itertools.combinations(range(m), k):
            sub, _ = remove_columns(V, [c for c in range(m) if c not in cols])
            assert rank(sub) == k


# ---------------------------------------------------------
# Subspace enumeration
# ---------------------------------------------------------
def test_gaussian_binomial_values():
    assert gaussian_binomial(4, 2, 2) == 35
    assert gaussian_binomial(3, 1, 3) == 13
    assert gaussian_binomial(5, 0, 2) == 1
    assert gaussian_binomial(5, 6, 2) == 0


def test_free_positions_row_major():
    assert free_positions(4, (0, 2)) == [(0, 1), (0, 3), (1, 3)]


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_enumeration_counts_match_gaussian_binomials(m, q):
    spec = FieldSpec(q)
    seen = set()
    for A in enumerate_rref(m, spec):
        assert rref(A).rref == A
        assert rank(A) >= 1
        seen.add(A)
    expected = sum(gaussian_binomial(m, k, q) for k in range(1, m + 1))
    assert len(seen) == expected == count_rref(m, spec)


def test_galois_number_for_m8():
    assert count_rref(8, GF2) == 417198
    assert count_rref(8, GF2, (0, 8)) == 417199


def test_bit_blocks_follow_matrix_block_order():
    for pivots in [(0,), (0, 2), (1, 3), (0, 1, 3)]:
        from_matrices = [pack_rows(A.data)[: len(pivots)] for A in enumerate_block(5, GF2, pivots)]
        from_bits = list(iter_block_bits(5, pivots))
        assert from_bits == from_matrices


def test_enumeration_order_m2():
    emitted = [A.tolist() for A in enumerate_rref(2, GF2)]
    assert emitted == [[[1, 0], [0, 0]], [[1, 1], [0, 0]], [[0, 1], [0, 0]], [[1, 0], [0, 1]]]
    assert len(list(enumerate_rref(2, GF2, (0, 2)))) == 5
    assert len(list(enumerate_rref(3, GF2, (0, 3)))) == 16


@pytest.mark.parametrize("q", [2, 3])
def test_block_sizes_sum_to_gaussian_binomials(q):
    spec = FieldSpec(q)
    for m in range(1, 6):
        for k in range(1, m + 1):
            total = sum(block_size(m, p, spec) for p in rref_blocks(m, (k, k)))
            assert total == gaussian_binomial(m, k, q)
        assert block_size(m, tuple(range(m)), spec) == 1


# ---------------------------------------------------------
# Invariants on random matrices
# ---------------------------------------------------------
def random_invertible(rng, size, spec):
    while True:
        T = FqMatrix(rng.integers(0, spec.q, size=(size, size)), spec)
        if rank(T) == size:
            return T


@pytest.mark.parametrize("q", [2, 3, 5])
def test_rank_equals_rank_of_transpose(q):
    rng = np.random.default_rng(q)
    spec = FieldSpec(q)
    for _ in range(100):
        shape = (int(rng.integers(1, 9)), int(rng.integers(1, 9)))
        M = FqMatrix(rng.integers(0, q, size=shape), spec)
        assert rank(M) == rank(M.transpose())


@pytest.mark.parametrize("q", [2, 3, 5])
def test_unit_rows_invariant_under_row_operations(q):
    rng = np.random.default_rng(40 + q)
    spec = FieldSpec(q)
    for _ in range(60):
        rows, cols = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        # sparse entries so unit rows actually occur
        M = FqMatrix(rng.integers(0, q, size=(rows, cols)) * (rng.random((rows, cols)) < 0.4), spec)
        T = random_invertible(rng, rows, spec)
        assert unit_rows(rref(matmul(T, M))) == unit_rows(rref(M))
        assert rref(matmul(T, M)).rref == rref(M).rref


@pytest.mark.parametrize("q", [2, 3, 5])
def test_zero_row_padding(q):
    rng = np.random.default_rng(70 + q)
    spec = FieldSpec(q)
    for _ in range(60):
        cols = int(rng.integers(1, 7))
        M = FqMatrix(rng.integers(0, q, size=(int(rng.integers(1, 5)), cols)), spec)
        padded = M.vstack(FqMatrix.zeros(int(rng.integers(1, 4)), cols, spec))
        assert rank(padded) == rank(M)
        assert unit_rows(rref(padded)) == unit_rows(rref(M))
