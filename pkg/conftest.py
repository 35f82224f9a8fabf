# conftest.py
import json

import numpy as np
import pytest

from services.instance_service import PpicodInstance, gen_uniform, save_instance, two_receiver_example
from utils.fqlinalg import FieldSpec


@pytest.fixture
def example() -> PpicodInstance:
    """P = [[2, inf, 1, inf, 2], [inf, 1, 2, 1, inf]] over GF(2)."""
    return two_receiver_example()


@pytest.fixture
def example_file(tmp_path, example):
    path = tmp_path / "example.json"
    save_instance(example, path)
    return path


@pytest.fixture
def code_file(tmp_path):
    def write(rows, q=2, name="code.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"q": q, "A": rows}), encoding="utf-8")
        return path

    return write


def random_small_instances(count: int, seed: int, max_m: int = 4, max_n: int = 3, max_h: int = 2, fields=(2, 3)):
    """Seeded random uniform instances with small m, n and |H_i|."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        m = int(rng.integers(2, max_m + 1))
        n = int(rng.integers(1, max_n + 1))
        h = int(rng.integers(0, min(max_h, m - 1) + 1))
        q = int(rng.choice(fields))
        out.append(gen_uniform(m, n, h, FieldSpec(q), seed=k))
    return out
