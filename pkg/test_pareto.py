# test_pareto.py
from fractions import Fraction

import numpy as np
import pandas as pd

from utils.pareto import LengthSatisfactionPoint as Pt
from utils.pareto import ParetoFront, dominates, load_front, merge, pareto_front, save_front


def random_points(rng, count):
    return [Pt(int(rng.integers(1, 9)), Fraction(int(rng.integers(1, 40)), int(rng.integers(1, 4)))) for _ in range(count)]


def test_dominance():
    assert dominates(Pt(1, 2), Pt(1, 3))
    assert dominates(Pt(1, 2), Pt(2, 2))
    assert not dominates(Pt(1, 2), Pt(1, 2))
    assert not dominates(Pt(1, 3), Pt(2, 2))


def test_front_of_example_pairs():
    pts = [Pt(1, 3), Pt(2, 2), Pt(1, 4), Pt(2, 3), Pt(5, 2), Pt(3, 2)]
    front = pareto_front(pts)
    assert front.coords() == [(1, Fraction(3)), (2, Fraction(2))]
    assert front.min_length == 1 and front.min_satisfaction == 2


def test_equal_points_collapse_with_witnesses():
    pts = [Pt(1, 3, (("code", "00100"),)), Pt(1, 3, (("decoding", "3,3"),)), Pt(1, 3, (("code", "00100"),))]
    front = pareto_front(pts)
    assert len(front) == 1
    assert front.points[0].witnesses == (("code", "00100"), ("decoding", "3,3"))
    assert pareto_front(pts, witness_limit=1).points[0].witnesses == (("code", "00100"),)


def test_empty_front():
    front = pareto_front([])
    assert not front and front.min_length is None and front.is_valid()


def test_fronts_are_strictly_monotone():
    rng = np.random.default_rng(0)
    for _ in range(300):
        pts = random_points(rng, int(rng.integers(1, 25)))
        front = pareto_front(pts)
        assert front.is_valid()
        for p in pts:
            assert front.violated_by(p) == []
            assert any(f.coords == p.coords or dominates(f, p) for f in front)


def test_front_is_idempotent():
    rng = np.random.default_rng(4)
    for _ in range(300):
        front = pareto_front(random_points(rng, int(rng.integers(0, 25))))
        again = pareto_front(front.points)
        assert again.coords() == front.coords()
        assert merge(front, front).coords() == front.coords()


def test_front_survives_subsets_that_keep_it():
    rng = np.random.default_rng(6)
    for _ in range(300):
        pts = random_points(rng, int(rng.integers(1, 30)))
        front = pareto_front(pts)
        # any subset still containing the front has the same front
        extra = [p for p in pts if rng.random() < 0.5]
        assert pareto_front(list(front.points) + extra).coords() == front.coords()


def test_merge_associative_and_commutative():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        a, b, c = (pareto_front(random_points(rng, int(rng.integers(0, 8)))) for _ in range(3))
        left = merge(merge(a, b), c)
        right = merge(a, merge(b, c))
        assert left.coords() == right.coords()
        assert merge(a, b).coords() == merge(b, a).coords()


def test_violated_by_flags_better_point():
    front = ParetoFront((Pt(1, 3), Pt(2, 2)))
    assert front.violated_by(Pt(1, 2)) == [Pt(1, 3), Pt(2, 2)]


def test_front_csv_round_trip(tmp_path):
    front = pareto_front([Pt(1, Fraction(7, 2), (("code", "00100"),)), Pt(3, 2, (("decoding", "3,2"),))])
    path = tmp_path / "front.csv"
    save_front(front, path)
    df = pd.read_csv(path)
    assert list(df.columns) == ["ell", "s_num", "s_den", "witness_id"]
    loaded = load_front(path)
    assert loaded.coords() == front.coords()
    assert loaded.points[0].witnesses == (("code", "00100"),)


def test_load_boundary_layout(tmp_path):
    path = tmp_path / "boundary.csv"
    path.write_text("ell,s_num,s_den,witness_kind,witness\n1,3,1,code,00100\n2,2,1,decoding,\"3,2\"\n")
    loaded = load_front(path)
    assert loaded.coords() == [(1, Fraction(3)), (2, Fraction(2))]
    assert loaded.points[1].witnesses == (("decoding", "3,2"),)
