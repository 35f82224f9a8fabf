# services/greedy_service.py
"""
Greedy cover coding for PPICOD.

prgrcov grows message sets S one element at a time, scoring each candidate
by a weighted sum of how many receivers S satisfies and their average rank.
Every S becomes one transmitted row sum_{j in S} X_j. grcov is the
rank-blind original, run on the same engine.
"""
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

sys.path.append(str(Path(__file__).resolve().parents[1]))

import numpy as np

from services.instance_service import PpicodInstance, parse_rank, to_bipartite
from services.oracle_service import LinearCode, decodability_report, decodable_messages, decoding_text
from utils.fqlinalg import FqMatrix, rref
from utils.logger import logger
from utils.pareto import LengthSatisfactionPoint

LiveEdges = Mapping[int, Mapping[int, Fraction]]
Satisfied = Tuple[int, int, Fraction]


class InfeasibleThresholdError(ValueError):
    """Raised when some receiver has no edge within its rank threshold."""

    def __init__(self, receivers: Sequence[int]):
        super().__init__(f"No unknown message within eta for receiver(s) {list(receivers)}")
        self.receivers = list(receivers)


@dataclass(frozen=True)
class GreedyParams:
    alpha: Fraction
    eta: Tuple[Fraction, ...]
    seed: int = 0

    def __post_init__(self):
        alpha = Fraction(str(self.alpha)) if isinstance(self.alpha, float) else Fraction(self.alpha)
        if not 0 <= alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        eta = tuple(parse_rank(e) for e in self.eta)
        if not eta or any(e is None or e <= 0 for e in eta):
            raise ValueError(f"eta entries must be positive, got {self.eta}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def eta_max(self) -> Fraction:
        return max(self.eta)


@dataclass(frozen=True)
class SubcodeSelection:
    S: FrozenSet[int]
    satisfied: Tuple[Satisfied, ...]
    fitness_value: Fraction

    def row(self, m: int) -> List[int]:
        return [1 if j in self.S else 0 for j in range(1, m + 1)]


@dataclass(frozen=True)
class GreedyResult:
    subcodes: Tuple[SubcodeSelection, ...]
    code: LinearCode
    point: LengthSatisfactionPoint
    postprocessed: bool = False

    @property
    def iterations(self) -> int:
        return len(self.subcodes)

    @property
    def decoding(self) -> Tuple[int, ...]:
        return self.code.decoding_choice

    def trace(self) -> Tuple[FrozenSet[int], ...]:
        return tuple(sc.S for sc in self.subcodes)


# --------------------------------------------------------------
# Thresholds

def resolve_eta(spec: Union[str, int, Fraction, Sequence], inst: PpicodInstance) -> Tuple[Fraction, ...]:
    """Scalar (broadcast), per-receiver list, 'min' (row minimum) or 'rowmax' (row maximum)."""
    if isinstance(spec, str):
        text = spec.strip().lower()
        if text == "min":
            return tuple(inst.row_min(i) for i in inst.receivers())
        if text == "rowmax":
            return tuple(inst.row_max(i) for i in inst.receivers())
        spec = [t for t in text.split(",")] if "," in text else text
    if isinstance(spec, (list, tuple)):
        if len(spec) != inst.n:
            raise ValueError(f"eta list has {len(spec)} entries, instance has n={inst.n}")
        values = tuple(parse_rank(v) for v in spec)
    else:
        values = (parse_rank(spec),) * inst.n
    if any(v is None or v <= 0 for v in values):
        raise ValueError(f"eta entries must be positive, got {spec!r}")
    return values


def check_feasible(live: LiveEdges, eta: Sequence[Fraction]):
    bad = [u for u, edges in sorted(live.items()) if not any(w <= eta[u - 1] for w in edges.values())]
    if bad:
        logger.error(f"Infeasible eta: receivers {bad} have no edge within threshold")
        raise InfeasibleThresholdError(bad)


# --------------------------------------------------------------
# W1 and fitness

def satisfied_set(S: FrozenSet[int], live_edges: LiveEdges, eta: Sequence[Fraction]) -> FrozenSet[Satisfied]:
    """Receivers with exactly one live edge into S, of weight at most their threshold."""
    out = set()
    for u, edges in live_edges.items():
        hits = [(v, w) for v, w in edges.items() if v in S]
        if len(hits) == 1 and hits[0][1] <= eta[u - 1]:
            out.add((u, hits[0][0], hits[0][1]))
    return frozenset(out)


def _weighted_score(params: GreedyParams) -> Callable[[int, Fraction], Fraction]:
    empty = -(params.eta_max + 1)
    alpha = params.alpha

    def score(size: int, total: Fraction) -> Fraction:
        if size == 0:
            return empty
        return alpha * size - (1 - alpha) * total / size

    return score


def _cover_score(size: int, total: Fraction) -> Fraction:
    return Fraction(size)


def fitness(S: FrozenSet[int], live_edges: LiveEdges, params: GreedyParams) -> Fraction:
    sat = satisfied_set(S, live_edges, params.eta)
    return _weighted_score(params)(len(sat), sum((w for _, _, w in sat), Fraction(0)))


# --------------------------------------------------------------
# Engine

def _grow_cover(
    inst: PpicodInstance,
    eta: Sequence[Fraction],
    score: Callable[[int, Fraction], Fraction],
    rng: np.random.Generator,
) -> List[SubcodeSelection]:
    live: Dict[int, Dict[int, Fraction]] = to_bipartite(inst).adjacency()
    check_feasible(live, eta)
    by_msg: Dict[int, Dict[int, Fraction]] = {j: {} for j in range(1, inst.m + 1)}
    for u, edges in live.items():
        for j, w in edges.items():
            by_msg[j][u] = w

    subcodes = []
    remaining = set(inst.receivers())
    while remaining:
        chosen: List[int] = []
        count: Dict[int, int] = {}
        witness: Dict[int, Tuple[int, Fraction]] = {}
        in_w1 = set()
        size, total = 0, Fraction(0)
        current = score(0, total)

        while True:
            candidates = [j for j in range(1, inst.m + 1) if j not in chosen]
            if not candidates:
                break
            best, argmax = None, []
            for j in candidates:
                s2, t2 = size, total
                for u, w in by_msg[j].items():
                    c = count.get(u, 0)
                    if c == 0 and w <= eta[u - 1]:
                        s2, t2 = s2 + 1, t2 + w
                    elif c == 1 and u in in_w1:
                        s2, t2 = s2 - 1, t2 - witness[u][1]
                val = score(s2, t2)
                if best is None or val > best:
                    best, argmax = val, [j]
                elif val == best:
                    argmax.append(j)
            pick = argmax[int(rng.integers(len(argmax)))]
            if best <= current:
                break
            chosen.append(pick)
            current = best
            for u, w in by_msg[pick].items():
                c = count.get(u, 0)
                if c == 0:
                    witness[u] = (pick, w)
                    if w <= eta[u - 1]:
                        in_w1.add(u)
                        size, total = size + 1, total + w
                elif u in in_w1:
                    in_w1.discard(u)
                    size, total = size - 1, total - witness[u][1]
                count[u] = c + 1

        if not in_w1:
            raise RuntimeError("Greedy iteration satisfied no receiver")
        satisfied = tuple(sorted((u, witness[u][0], witness[u][1]) for u in in_w1))
        subcodes.append(SubcodeSelection(frozenset(chosen), satisfied, current))
        logger.debug(f"Subcode {len(subcodes)}: S={sorted(chosen)} satisfies {[u for u, _, _ in satisfied]} f={current}")

        for u in in_w1:
            for j in live[u]:
                del by_msg[j][u]
            live[u] = {}
        remaining -= in_w1
    return subcodes


def _assemble(inst: PpicodInstance, subcodes: List[SubcodeSelection], verify: bool) -> GreedyResult:
    matrix = FqMatrix.from_rows([sc.row(inst.m) for sc in subcodes], inst.field)
    D = [0] * inst.n
    s = Fraction(0)
    for sc in subcodes:
        for u, b, w in sc.satisfied:
            D[u - 1] = b
            s += w
    D = tuple(D)
    code = LinearCode(matrix, D, "greedy")
    if verify:
        audit(code, inst)
    point = LengthSatisfactionPoint(matrix.rows, s, (("decoding", decoding_text(D)),))
    return GreedyResult(tuple(subcodes), code, point)


def audit(code: LinearCode, inst: PpicodInstance):
    """Raise unless every receiver i can decode X_D(i) from the code and its side information."""
    code.check_against(inst)
    for i, d in enumerate(code.decoding_choice, 1):
        if d not in decodable_messages(code.matrix, inst, i):
            logger.error(f"Receiver {i} cannot decode its assigned message {d}")
            raise RuntimeError(f"Decode audit failed: receiver {i} cannot recover X_{d}")


def prgrcov(inst: PpicodInstance, params: GreedyParams, verify: bool = True) -> GreedyResult:
    if len(params.eta) != inst.n:
        raise ValueError(f"eta has {len(params.eta)} entries, instance has n={inst.n}")
    rng = np.random.default_rng(params.seed)
    subcodes = _grow_cover(inst, params.eta, _weighted_score(params), rng)
    result = _assemble(inst, subcodes, verify)
    logger.debug(f"prgrcov alpha={params.alpha} seed={params.seed} -> {result.point}")

    mins = tuple(inst.row_min(i) for i in inst.receivers())
    if params.eta == mins and sum(mins) > inst.m:
        logger.warning(f"Minimum-threshold run has sum of row minima {sum(mins)} > m={inst.m}: s={result.point.s}")
    return result


def grcov(inst: PpicodInstance, seed: int = 0, verify: bool = True) -> GreedyResult:
    """Rank-blind greedy cover: counts satisfied receivers only, every unknown message acceptable."""
    rng = np.random.default_rng(seed)
    eta = tuple(inst.row_max(i) for i in inst.receivers())
    return _assemble(inst, _grow_cover(inst, eta, _cover_score, rng), verify)


def postprocess(result: GreedyResult, inst: PpicodInstance) -> GreedyResult:
    """Keep a basis of the code's row space and let each receiver decode its best available message."""
    basis = rref(result.code.matrix).rref.nonzero_rows()
    report = decodability_report(basis, inst)
    if not report.satisfied:
        raise RuntimeError(f"Row-space basis leaves receivers {report.unsatisfied()} unsatisfied")
    D = tuple(report.best_message)
    s = sum(report.best_rank, Fraction(0))
    point = LengthSatisfactionPoint(basis.rows, s, (("decoding", decoding_text(D)),))
    if point.ell > result.point.ell or point.s > result.point.s:
        raise RuntimeError(f"Post-processing worsened {result.point} to {point}")
    return GreedyResult(result.subcodes, LinearCode(basis, D, "postprocessed"), point, postprocessed=True)
