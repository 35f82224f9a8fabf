# test_oracle.py
from fractions import Fraction

import pytest

from conftest import random_small_instances
from services.experiment_service import DEFAULT_ALPHAS, parse_alpha
from services.greedy_service import GreedyParams, postprocess, prgrcov, resolve_eta
from services.instance_service import PpicodInstance, gen_uniform
from services.oracle_service import (
    BudgetExceeded,
    DecodingError,
    OracleService,
    decodability_report,
    decodable_messages,
    enumerate_decoding_choices,
    evaluate_code,
    method1_boundary,
    method2_boundary,
    minrank,
    ratecap_codes,
    satisfaction,
    save_boundary,
)
from utils.fqlinalg import GF2, FieldError, FieldSpec, FqMatrix
from utils.pareto import load_front

GF7 = FieldSpec(7)
EXAMPLE_FRONT = [(1, Fraction(3)), (2, Fraction(2))]


def code(rows, spec=GF2):
    return FqMatrix.from_rows(rows, spec)


# ---------------------------------------------------------
# Decodability
# ---------------------------------------------------------
def test_decodable_messages_examples(example):
    assert decodable_messages(code([[0, 0, 1, 0, 0]]), example, 1) == {3}
    assert decodable_messages(FqMatrix.identity(5, GF2), example, 2) == {2, 3, 4}
    # X2 is known to receiver 1, so X1 = Y - X2
    assert decodable_messages(code([[1, 1, 0, 0, 0]]), example, 1) == {1}


def test_decodable_sets_never_touch_side_information():
    for inst in random_small_instances(20, seed=5):
        A = FqMatrix.identity(inst.m, inst.field)
        report = decodability_report(A, inst)
        for i in inst.receivers():
            assert not report.decodable[i - 1] & inst.side_info(i)


def test_evaluate_code_examples(example):
    assert evaluate_code(code([[0, 0, 1, 0, 0]]), example).coords == (1, 3)
    identity = evaluate_code(FqMatrix.identity(5, GF2), example)
    assert identity.coords == (5, 2)
    # lowest index among rank minimisers
    assert identity.decoding == (3, 2)
    assert evaluate_code(code([[0, 1, 0, 0, 0]]), example) is None


def test_padding_keeps_satisfaction(example):
    padded = code([[0, 0, 1, 0, 0], [0, 0, 0, 0, 0]])
    by_rank = evaluate_code(padded, example)
    by_rows = evaluate_code(padded, example, length_mode="rows")
    assert by_rank.coords == (1, 3)
    assert by_rows.coords == (2, 3)


def test_row_operations_keep_satisfaction(example):
    a = evaluate_code(code([[1, 0, 1, 0, 0], [0, 0, 1, 0, 0]]), example)
    b = evaluate_code(code([[1, 0, 0, 0, 0], [0, 0, 1, 0, 0]]), example)
    assert a.coords == b.coords


def test_evaluate_code_column_mismatch(example):
    with pytest.raises(DecodingError):
        evaluate_code(code([[1, 0, 0]]), example)


def test_satisfaction_examples(example):
    assert satisfaction((3, 3), example) == 3
    assert satisfaction((3, 2), example) == 2
    assert satisfaction((1, 3), example) == 4
    with pytest.raises(DecodingError):
        satisfaction((2, 3), example)
    with pytest.raises(DecodingError):
        satisfaction((3,), example)


# ---------------------------------------------------------
# Decoding-centric search
# ---------------------------------------------------------
def test_decoding_choices_of_example(example):
    choices = list(enumerate_decoding_choices(example))
    assert len(choices) == 9
    assert len({D for D, _ in choices}) == 9
    assert {s for _, s in choices} == {2, 3, 4}


def test_single_choice_instance():
    inst = PpicodInstance.from_rows(2, [[None, 1]])
    assert list(enumerate_decoding_choices(inst)) == [((2,), Fraction(1))]


def test_minrank_examples(example):
    ell, witness = minrank(example, (3, 3))
    assert ell == 1
    assert witness.tolist() == [[0, 0, 1, 0, 0]]
    assert minrank(example, (3, 2))[0] == 2
    assert minrank(PpicodInstance.from_rows(3, [[1, None, 2]]), (3,))[0] == 1


def test_minrank_witness_decodes_every_choice():
    for inst in random_small_instances(10, seed=8):
        for D, _ in enumerate_decoding_choices(inst):
            ell, witness = minrank(inst, D)
            assert witness.rows == ell
            for i, d in enumerate(D, 1):
                assert d in decodable_messages(witness, inst, i)


def test_minrank_budget_refusal(example):
    with pytest.raises(BudgetExceeded) as info:
        minrank(example, (3, 3), budget=10)
    assert info.value.count == 2 ** 4
    assert info.value.budget == 10


# ---------------------------------------------------------
# Boundaries
# ---------------------------------------------------------
def test_example_boundaries(example):
    assert method2_boundary(example).coords() == EXAMPLE_FRONT
    assert method1_boundary(example).coords() == EXAMPLE_FRONT


def test_no_length_one_code_reaches_two_or_four(example):
    run = OracleService().method2(example)
    # 31 + 155 + 155 + 31 + 1 nonzero subspaces of GF(2)^5
    assert run.enumerated == 373
    length_one = {s for ell, s in run.raw if ell == 1}
    assert length_one == {3}


def test_single_receiver_boundaries():
    all_ones = PpicodInstance.from_rows(2, [[1, None, 1]])
    assert method2_boundary(all_ones).coords() == [(1, 1)]
    ranked = PpicodInstance.from_rows(2, [[1, 2, None]])
    assert method1_boundary(ranked).coords() == [(1, 1)]


def test_front_witnesses(example):
    front = OracleService(witness_limit=2).method2(example).front
    top = front.points[0]
    assert top.witnesses[0][0] == "code"
    A = FqMatrix.from_text(top.witnesses[0][1], GF2)
    assert evaluate_code(A, example).coords == top.coords

    dec_front = OracleService().method1(example).front
    assert dec_front.points[0].witnesses == (("decoding", "1,2"),)


def test_methods_agree_on_random_instances():
    for inst in random_small_instances(50, seed=2024):
        m1 = OracleService().method1(inst).front
        m2 = OracleService().method2(inst).front
        assert m1.coords() == m2.coords(), inst
        assert m1.is_valid()


def test_code_centric_budget_refusal(example):
    with pytest.raises(BudgetExceeded) as info:
        OracleService(budget=100).method2(example)
    assert info.value.count == 373


def test_decoding_choice_budget_refusal():
    inst = gen_uniform(6, 8, 1, seed=0)
    with pytest.raises(BudgetExceeded):
        list(enumerate_decoding_choices(inst, budget=1000))


def test_parallel_blocks_give_the_same_front(example):
    serial = OracleService(workers=1).method2(example)
    pooled = OracleService(workers=2).method2(example)
    assert pooled.front.coords() == serial.front.coords()
    assert pooled.raw == serial.raw
    assert pooled.front.points[0].witnesses == serial.front.points[0].witnesses


def test_weighted_chunks_balance_matrix_counts():
    oracle = OracleService(workers=1)
    assert oracle._weighted_chunks(list("abcde"), [1, 1, 1, 1, 4]) == [["a", "b"], ["c", "d"], ["e"]]
    assert oracle._weighted_chunks([], []) == []


def test_uneven_worker_count_gives_the_same_front():
    inst = gen_uniform(5, 4, 1, seed=12)
    serial = OracleService(workers=1).method2(inst)
    pooled = OracleService(workers=3).method2(inst)
    assert pooled.front.coords() == serial.front.coords()
    assert pooled.raw == serial.raw
    assert pooled.enumerated == serial.enumerated == 373


def test_boundary_csv_round_trip(tmp_path, example):
    front = method2_boundary(example)
    path = tmp_path / "front.csv"
    save_boundary(front, path)
    assert path.read_text().splitlines()[0] == "ell,s_num,s_den,witness_kind,witness"
    assert load_front(path).coords() == EXAMPLE_FRONT


@pytest.mark.slow
def test_m8_code_centric_boundary():
    inst = gen_uniform(8, 20, 3, seed=7)
    run = OracleService().method2(inst)
    assert run.enumerated == 417198
    assert run.front.is_valid()
    assert run.front.min_satisfaction == 20

    eta = resolve_eta("3", inst)
    for alpha in DEFAULT_ALPHAS:
        for seed in range(3):
            point = postprocess(prgrcov(inst, GreedyParams(parse_alpha(alpha), eta, seed)), inst).point
            assert run.front.violated_by(point) == [], (alpha, seed, point)
            assert point.ell <= min(inst.n, inst.m)


# ---------------------------------------------------------
# Rate-cap codes
# ---------------------------------------------------------
def test_ratecap_codes_on_example(example):
    codes = ratecap_codes(example, (3, 2))
    assert [c.label for c in codes] == ["uncoded", "identity"]
    uncoded, identity = codes
    assert uncoded.matrix.tolist() == [[0, 0, 1, 0, 0], [0, 1, 0, 0, 0]]
    assert evaluate_code(identity.matrix, example).s == 2
    assert evaluate_code(uncoded.matrix, example).s == satisfaction((3, 2), example)


def test_mds_requires_large_field(example):
    with pytest.raises(FieldError):
        ratecap_codes(example, (3, 2), mds=True)


def test_mds_three_messages():
    inst = PpicodInstance(GF7, ((None, 1, 2), (1, None, 2), (1, 2, None)))
    mds = [c for c in ratecap_codes(inst, (2, 1, 1)) if c.label == "mds"][0]
    assert mds.matrix.tolist() == [[1, 1, 1], [1, 2, 4]]
    for i in inst.receivers():
        assert decodable_messages(mds.matrix, inst, i) == {1, 2, 3} - inst.side_info(i)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_mds_lets_everyone_decode_everything(m):
    inst = gen_uniform(m, 4, 1, GF7, seed=m)
    D = tuple(inst.unknown(i)[0] for i in inst.receivers())
    codes = ratecap_codes(inst, D, mds=True)
    mds = codes[-1]
    assert mds.length == m - 1 <= min(inst.n, inst.m)
    for i in inst.receivers():
        assert decodable_messages(mds.matrix, inst, i) == set(inst.unknown(i))
    for c in codes:
        assert evaluate_code(c.matrix, inst).s <= satisfaction(D, inst)
