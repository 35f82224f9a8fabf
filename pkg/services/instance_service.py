# services/instance_service.py
"""
PPICOD problem model: preference matrix, side information, bipartite graph,
random generators and the JSON instance file format.

Receivers and messages are numbered from 1 everywhere in this module.
"""
import sys
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

sys.path.append(str(Path(__file__).resolve().parents[1]))

import networkx as nx
import numpy as np

from utils.fqlinalg import FieldSpec, GF2
from utils.logger import logger

# None encodes an infinite rank, i.e. a side-information message
Rank = Optional[Fraction]


class InstanceError(ValueError):
    """Raised for malformed or invalid instances; carries the violation list."""

    def __init__(self, message: str, violations: Iterable["Violation"] = ()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class Violation:
    receiver: Optional[int]
    reason: str

    def __str__(self):
        where = f"receiver {self.receiver}" if self.receiver is not None else "instance"
        return f"{where}: {self.reason}"


def parse_rank(raw) -> Rank:
    """Accepts None (infinite), ints, decimal floats, Fractions and 'num/den' strings."""
    if raw is None:
        return None
    if isinstance(raw, bool):
        raise InstanceError(f"Boolean is not a preference rank: {raw!r}")
    if isinstance(raw, Fraction):
        return raw
    if isinstance(raw, (int, np.integer)):
        return Fraction(int(raw))
    if isinstance(raw, float):
        return Fraction(str(raw))
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except ValueError:
            raise InstanceError(f"Unparseable preference rank: {raw!r}")
    raise InstanceError(f"Unsupported preference rank type: {type(raw).__name__}")


def format_rank(rank: Rank) -> Union[None, int, str]:
    if rank is None:
        return None
    if rank.denominator == 1:
        return rank.numerator
    return f"{rank.numerator}/{rank.denominator}"


@dataclass(frozen=True)
class PpicodInstance:
    """Field size plus the n x m preference matrix."""

    field: FieldSpec
    prefs: Tuple[Tuple[Rank, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(parse_rank(v) for v in row) for row in self.prefs)
        if not rows or not rows[0]:
            raise InstanceError("Preference matrix must have at least one receiver and one message")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise InstanceError(f"Preference matrix rows have differing lengths: {sorted(widths)}")
        object.__setattr__(self, "prefs", rows)

    @classmethod
    def from_rows(cls, q: int, rows: Sequence[Sequence]) -> "PpicodInstance":
        return cls(FieldSpec(q), tuple(tuple(r) for r in rows))

    @property
    def n(self) -> int:
        return len(self.prefs)

    @property
    def m(self) -> int:
        return len(self.prefs[0])

    @property
    def q(self) -> int:
        return self.field.q

    def rank(self, i: int, j: int) -> Rank:
        return self.prefs[i - 1][j - 1]

    def side_info(self, i: int) -> FrozenSet[int]:
        return side_info(self, i)

    def unknown(self, i: int) -> Tuple[int, ...]:
        """Messages receiver i does not have, ascending."""
        return tuple(j for j, r in enumerate(self.prefs[i - 1], 1) if r is not None)

    def row_min(self, i: int) -> Fraction:
        return min(r for r in self.prefs[i - 1] if r is not None)

    def row_max(self, i: int) -> Fraction:
        return max(r for r in self.prefs[i - 1] if r is not None)

    def receivers(self) -> range:
        return range(1, self.n + 1)


def validate(inst: PpicodInstance) -> List[Violation]:
    """Every violated invariant; an empty list means the instance is valid."""
    violations = []
    for i, row in enumerate(inst.prefs, 1):
        finite = [r for r in row if r is not None]
        if not finite:
            violations.append(Violation(i, "H_i = [1:m] (no unknown message)"))
        bad = [j for j, r in enumerate(row, 1) if r is not None and r <= 0]
        if bad:
            violations.append(Violation(i, f"non-positive rank at messages {bad}"))
    return violations


def ensure_valid(inst: PpicodInstance) -> PpicodInstance:
    violations = validate(inst)
    if violations:
        for v in violations:
            logger.error(f"Invalid instance - {v}")
        raise InstanceError(f"Instance has {len(violations)} violation(s)", violations)
    return inst


def side_info(inst: PpicodInstance, i: int) -> FrozenSet[int]:
    if not 1 <= i <= inst.n:
        raise IndexError(f"Receiver {i} out of range [1:{inst.n}]")
    return frozenset(j for j, r in enumerate(inst.prefs[i - 1], 1) if r is None)


def summary(inst: PpicodInstance) -> Dict[str, object]:
    sizes = sorted({len(side_info(inst, i)) for i in inst.receivers()})
    h = sizes[0] if len(sizes) == 1 else f"{sizes[0]}-{sizes[-1]}"
    return {"n": inst.n, "m": inst.m, "q": inst.q, "h": h}


# --------------------------------------------------------------
# Generators

def _sample_side_info(rng: np.random.Generator, m: int, h: int) -> FrozenSet[int]:
    return frozenset(int(x) + 1 for x in rng.choice(m, size=h, replace=False))


def _check_sizes(m: int, n: int, h: int):
    if m < 1 or n < 1:
        raise InstanceError(f"Need m >= 1 and n >= 1, got m={m}, n={n}")
    if not 0 <= h < m:
        raise InstanceError(f"Side-information size must satisfy 0 <= h < m, got h={h}, m={m}")


def gen_uniform(m: int, n: int, h: int, spec: FieldSpec = GF2, seed: int = 0) -> PpicodInstance:
    """Uniform h-subset side information; ranks a uniform permutation of 1..m-h."""
    _check_sizes(m, n, h)
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        known = _sample_side_info(rng, m, h)
        ranks = rng.permutation(m - h) + 1
        unknown = [j for j in range(1, m + 1) if j not in known]
        row: List[Rank] = [None] * m
        for j, r in zip(unknown, ranks):
            row[j - 1] = Fraction(int(r))
        rows.append(tuple(row))
    return PpicodInstance(spec, tuple(rows))


BIASED_M = 8
GROUP2_SHIFT = 3


def biased_row(known: Iterable[int], group: int, m: int = BIASED_M) -> Tuple[Rank, ...]:
    """Preference vector ranking unknown messages by index (group 1) or by (index + 3) mod 8 (group 2)."""
    if group not in (1, 2):
        raise InstanceError(f"Group must be 1 or 2, got {group}")
    known = set(known)
    unknown = [j for j in range(1, m + 1) if j not in known]
    if group == 1:
        order = sorted(unknown)
    else:
        order = sorted(unknown, key=lambda j: (j + GROUP2_SHIFT) % m)
    row: List[Rank] = [None] * m
    for r, j in enumerate(order, 1):
        row[j - 1] = Fraction(r)
    return tuple(row)


def gen_group_biased(m: int = BIASED_M, n: int = 20, h: int = 3, spec: FieldSpec = GF2, seed: int = 0) -> PpicodInstance:
    """Two preference groups: receivers 1..n/2 prefer low indices, the rest prefer messages 5..8."""
    if m != BIASED_M:
        raise InstanceError(f"Group-biased instances are defined for m={BIASED_M}, got m={m}")
    if n < 2 or n % 2:
        raise InstanceError(f"Group-biased instances need an even n >= 2, got n={n}")
    _check_sizes(m, n, h)
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(n):
        known = _sample_side_info(rng, m, h)
        rows.append(biased_row(known, 1 if k < n // 2 else 2, m))
    return PpicodInstance(spec, tuple(rows))


def pliable_instance(known_sets: Sequence[Iterable[int]], m: int, spec: FieldSpec = GF2) -> PpicodInstance:
    """Plain pliable index coding: every unknown message has rank 1."""
    rows = []
    for known in known_sets:
        known = set(known)
        rows.append(tuple(None if j in known else Fraction(1) for j in range(1, m + 1)))
    return ensure_valid(PpicodInstance(spec, tuple(rows)))


def index_coding_instance(known_sets: Sequence[Iterable[int]], demands: Sequence[int], m: int, spec: FieldSpec = GF2) -> PpicodInstance:
    """Index coding as PPICOD: rank 1 on the demanded message, n + 1 on every other unknown one."""
    n = len(known_sets)
    if len(demands) != n:
        raise InstanceError(f"Need one demand per receiver, got {len(demands)} for {n}")
    rows = []
    for known, d in zip(known_sets, demands):
        known = set(known)
        if d in known:
            raise InstanceError(f"Demanded message {d} is already in the side information")
        rows.append(tuple(
            None if j in known else Fraction(1 if j == d else n + 1) for j in range(1, m + 1)
        ))
    return ensure_valid(PpicodInstance(spec, tuple(rows)))


def two_receiver_example() -> PpicodInstance:
    """The five-message, two-receiver instance used throughout the docs and tests."""
    return PpicodInstance.from_rows(2, [
        [2, None, 1, None, 2],
        [None, 1, 2, 1, None],
    ])


# --------------------------------------------------------------
# Bipartite view

def receiver_node(i: int) -> str:
    return f"r{i}"


@dataclass(frozen=True)
class BipartiteView:
    """Receivers r_1..r_n and messages 1..m; one weighted edge per finite preference."""

    graph: nx.Graph
    n: int
    m: int

    def edges(self) -> List[Tuple[int, int, Fraction]]:
        out = []
        for a, b, w in self.graph.edges(data="weight"):
            r, msg = (a, b) if isinstance(a, str) else (b, a)
            out.append((int(r[1:]), int(msg), w))
        return sorted(out)

    def adjacency(self) -> Dict[int, Dict[int, Fraction]]:
        """receiver -> {message: weight}"""
        adj: Dict[int, Dict[int, Fraction]] = {i: {} for i in range(1, self.n + 1)}
        for i, j, w in self.edges():
            adj[i][j] = w
        return adj


def to_bipartite(inst: PpicodInstance) -> BipartiteView:
    G = nx.Graph()
    G.add_nodes_from((receiver_node(i) for i in inst.receivers()), bipartite=0)
    G.add_nodes_from(range(1, inst.m + 1), bipartite=1)
    for i in inst.receivers():
        for j, r in enumerate(inst.prefs[i - 1], 1):
            if r is not None:
                G.add_edge(receiver_node(i), j, weight=r)
    return BipartiteView(G, inst.n, inst.m)


# --------------------------------------------------------------
# File format: {"q": 2, "P": [[2, null, 1, null, 2], ...]}

def instance_to_json(inst: PpicodInstance) -> str:
    doc = {"q": inst.q, "P": [[format_rank(r) for r in row] for row in inst.prefs]}
    return json.dumps(doc, separators=(",", ":"))


def instance_from_json(text: str) -> PpicodInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceError(f"Instance file is not valid JSON: {e}")
    if not isinstance(doc, dict) or "q" not in doc or "P" not in doc:
        raise InstanceError("Instance file must be an object with fields 'q' and 'P'")
    P = doc["P"]
    if not isinstance(P, list) or not all(isinstance(row, list) for row in P):
        raise InstanceError("Field 'P' must be a list of rows, each a list of ranks")
    inst = PpicodInstance(FieldSpec(doc["q"]), tuple(tuple(row) for row in doc["P"]))
    return ensure_valid(inst)


def save_instance(inst: PpicodInstance, path: Union[str, Path]):
    Path(path).write_text(instance_to_json(inst) + "\n", encoding="utf-8")


def load_instance(path: Union[str, Path]) -> PpicodInstance:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Instance file not found: {path}")
    return instance_from_json(path.read_text(encoding="utf-8"))
