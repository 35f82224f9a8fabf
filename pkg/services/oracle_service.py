# services/oracle_service.py
"""
Oracle Service - exact decodability and brute-force Pareto boundaries

- decodability of a linear code per receiver (RREF of A with the side
  information columns removed must contain the unit row of the message)
- code-centric boundary: evaluate every RREF of rank 1..m
- decoding-centric boundary: minrank of every decoding choice
- the short rate-cap codes (uncoded demands, identity, Vandermonde MDS)
"""
import sys
import itertools
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm, prod
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

sys.path.append(str(Path(__file__).resolve().parents[1]))

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import Config
from services.instance_service import PpicodInstance, Rank
from utils.fqlinalg import (
    FieldError,
    FqMatrix,
    _rref_generic,
    block_size,
    count_rref,
    enumerate_block,
    iter_block_bits,
    mds_points,
    rank,
    rank_bits,
    rref,
    rref_bits,
    rref_blocks,
    remove_columns,
    unit_columns_bits,
    unit_rows,
    unpack_rows,
    vandermonde,
)
from utils.logger import logger
from utils.pareto import LengthSatisfactionPoint, ParetoFront, merge, pareto_front

BOUNDARY_COLUMNS = ["ell", "s_num", "s_den", "witness_kind", "witness"]

DecodingChoice = Tuple[int, ...]


class BudgetExceeded(RuntimeError):
    """Raised before an exhaustive search whose size exceeds the configured budget."""

    def __init__(self, what: str, count: int, budget: int):
        super().__init__(f"{what}: search space of {count:,} exceeds budget {budget:,}")
        self.what = what
        self.count = count
        self.budget = budget


class DecodingError(ValueError):
    """Raised for decoding choices that pick a side-information message."""


@dataclass(frozen=True)
class LinearCode:
    matrix: FqMatrix
    decoding_choice: Optional[DecodingChoice] = None
    label: str = ""

    @property
    def length(self) -> int:
        return self.matrix.rows

    def check_against(self, inst: PpicodInstance):
        if self.matrix.cols != inst.m:
            raise DecodingError(f"Code has {self.matrix.cols} columns, instance has m={inst.m}")
        if self.decoding_choice is not None:
            check_decoding_choice(self.decoding_choice, inst)


@dataclass(frozen=True)
class DecodabilityReport:
    decodable: Tuple[FrozenSet[int], ...]
    best_rank: Tuple[Rank, ...]
    best_message: Tuple[Optional[int], ...]

    @property
    def satisfied(self) -> bool:
        return all(b is not None for b in self.best_message)

    def unsatisfied(self) -> List[int]:
        return [i for i, b in enumerate(self.best_message, 1) if b is None]


@dataclass(frozen=True)
class CodePoint(LengthSatisfactionPoint):
    """An achievable point together with the decoding choice that realises it."""

    decoding: DecodingChoice = field(default=(), compare=False)


@dataclass(frozen=True)
class BoundaryRun:
    method: int
    front: ParetoFront
    raw: Tuple[Tuple[int, Fraction], ...]
    enumerated: int


# --------------------------------------------------------------
# Decodability

def check_decoding_choice(D: Sequence[int], inst: PpicodInstance):
    if len(D) != inst.n:
        raise DecodingError(f"Decoding choice has {len(D)} entries, instance has n={inst.n}")
    for i, d in enumerate(D, 1):
        if not 1 <= d <= inst.m:
            raise DecodingError(f"Receiver {i}: message {d} out of range [1:{inst.m}]")
        if inst.rank(i, d) is None:
            raise DecodingError(f"Receiver {i}: D(i)={d} lies in its side information")


def decodable_messages(A: FqMatrix, inst: PpicodInstance, i: int) -> FrozenSet[int]:
    """Messages receiver i recovers from A X and its side information."""
    known = inst.side_info(i)
    sub, kept = remove_columns(A, [j - 1 for j in known])
    return frozenset(kept[c] + 1 for c in unit_rows(rref(sub)))


def decodability_report(A: FqMatrix, inst: PpicodInstance) -> DecodabilityReport:
    if A.cols != inst.m:
        raise DecodingError(f"Code has {A.cols} columns, instance has m={inst.m}")
    decodable, best_rank, best_msg = [], [], []
    for i in inst.receivers():
        dec = decodable_messages(A, inst, i)
        decodable.append(dec)
        if dec:
            # lowest index among rank minimisers
            r, j = min((inst.rank(i, j), j) for j in dec)
            best_rank.append(r)
            best_msg.append(j)
        else:
            best_rank.append(None)
            best_msg.append(None)
    return DecodabilityReport(tuple(decodable), tuple(best_rank), tuple(best_msg))


def evaluate_code(A: FqMatrix, inst: PpicodInstance, length_mode: str = "rank") -> Optional[CodePoint]:
    """(ell, s) of code A with each receiver decoding its best message; None if someone decodes nothing."""
    if length_mode not in ("rank", "rows"):
        raise ValueError(f"length_mode must be 'rank' or 'rows', got {length_mode!r}")
    report = decodability_report(A, inst)
    if not report.satisfied:
        return None
    ell = rank(A) if length_mode == "rank" else A.rows
    s = sum(report.best_rank, Fraction(0))
    basis = rref(A).rref.nonzero_rows()
    return CodePoint(ell, s, (("code", basis.to_text()),), tuple(report.best_message))


def satisfaction(D: Sequence[int], inst: PpicodInstance) -> Fraction:
    check_decoding_choice(D, inst)
    return sum((inst.rank(i, d) for i, d in enumerate(D, 1)), Fraction(0))


def decoding_text(D: Sequence[int]) -> str:
    return ",".join(str(d) for d in D)


# --------------------------------------------------------------
# Code-centric search workers

def _receiver_tables(inst: PpicodInstance):
    """Per receiver: (mask of unknown columns, [(scaled rank, bit), ...] by rank) plus the rank scale."""
    scale = lcm(*(r.denominator for row in inst.prefs for r in row if r is not None))
    full = (1 << inst.m) - 1
    tables = []
    for i in inst.receivers():
        known = sum(1 << (j - 1) for j in inst.side_info(i))
        prefs = sorted((inst.rank(i, j) * scale, j) for j in inst.unknown(i))
        tables.append((full ^ known, [(int(r), 1 << (j - 1)) for r, j in prefs]))
    return tables, scale


def _bits_text(rows: Sequence[int], m: int) -> str:
    return ";".join("".join("1" if (w >> c) & 1 else "0" for c in range(m)) for w in rows)


def _scan_block_gf2(inst: PpicodInstance, pivots: Tuple[int, ...]):
    m = inst.m
    ell = len(pivots)
    tables, scale = _receiver_tables(inst)
    seen: Dict[int, str] = {}
    count = 0
    for rows in iter_block_bits(m, pivots):
        count += 1
        total = 0
        for keep, prefs in tables:
            found = unit_columns_bits(rows, keep, m)
            if not found:
                break
            for r, bit in prefs:
                if found & bit:
                    total += r
                    break
        else:
            if total not in seen:
                seen[total] = _bits_text(rows, m)
    return count, {(ell, Fraction(t, scale)): text for t, text in seen.items()}


def _scan_block_generic(inst: PpicodInstance, pivots: Tuple[int, ...]):
    seen: Dict[Tuple[int, Fraction], str] = {}
    count = 0
    for A in enumerate_block(inst.m, inst.field, pivots):
        count += 1
        point = evaluate_code(A, inst)
        if point is not None and point.coords not in seen:
            seen[point.coords] = point.witnesses[0][1]
    return count, seen


def _scan_block(inst: PpicodInstance, pivots: Tuple[int, ...]):
    if inst.field.is_binary:
        return _scan_block_gf2(inst, pivots)
    return _scan_block_generic(inst, pivots)


def _scan_blocks(inst: PpicodInstance, blocks: List[Tuple[int, ...]]):
    count = 0
    seen: Dict[Tuple[int, Fraction], str] = {}
    for pivots in blocks:
        c, s = _scan_block(inst, pivots)
        count += c
        for key, text in s.items():
            if key not in seen or text < seen[key]:
                seen[key] = text
    return count, seen


# --------------------------------------------------------------
# Decoding-centric search

def decoding_choice_count(inst: PpicodInstance) -> int:
    return prod(len(inst.unknown(i)) for i in inst.receivers())


def enumerate_decoding_choices(inst: PpicodInstance, budget: Optional[int] = None) -> Iterator[Tuple[DecodingChoice, Fraction]]:
    """Every decoding choice with its satisfaction."""
    budget = Config.ENUMERATION_BUDGET if budget is None else budget
    count = decoding_choice_count(inst)
    if count > budget:
        logger.warning(f"Refusing decoding-choice enumeration: {count:,} > {budget:,}")
        raise BudgetExceeded("decoding choices", count, budget)
    options = [inst.unknown(i) for i in inst.receivers()]
    for D in itertools.product(*options):
        yield D, sum((inst.rank(i, d) for i, d in enumerate(D, 1)), Fraction(0))


def minrank_count(inst: PpicodInstance) -> int:
    return inst.q ** sum(len(inst.side_info(i)) for i in inst.receivers())


def _submasks(mask: int) -> List[int]:
    bits = [1 << c for c in range(mask.bit_length()) if (mask >> c) & 1]
    return [sum(b for b, keep in zip(bits, sel) if keep) for sel in itertools.product((0, 1), repeat=len(bits))]


def _minrank_gf2(inst: PpicodInstance, D: DecodingChoice) -> Tuple[int, List[int]]:
    options = []
    for i, d in enumerate(D, 1):
        known = sum(1 << (j - 1) for j in inst.side_info(i))
        options.append([(1 << (d - 1)) | sub for sub in _submasks(known)])
    best, best_rows = None, None
    for rows in itertools.product(*options):
        r = rank_bits(rows, inst.m)
        if best is None or r < best:
            best, best_rows = r, rows
            if best == 1:
                break
    reduced, pivots = rref_bits(best_rows, inst.m)
    return best, reduced[: len(pivots)]


def _minrank_generic(inst: PpicodInstance, D: DecodingChoice) -> Tuple[int, np.ndarray]:
    q, m = inst.q, inst.m
    options = []
    for i, d in enumerate(D, 1):
        known = sorted(inst.side_info(i))
        row_opts = []
        for values in itertools.product(range(q), repeat=len(known)):
            row = [0] * m
            row[d - 1] = 1
            for j, v in zip(known, values):
                row[j - 1] = v
            row_opts.append(row)
        options.append(row_opts)
    best, best_basis = None, None
    for rows in itertools.product(*options):
        res = _rref_generic(FqMatrix(np.array(rows, dtype=np.int64), inst.field))
        if best is None or res.rank < best:
            best, best_basis = res.rank, res.rref.data[: res.rank]
            if best == 1:
                break
    return best, best_basis


def minrank(inst: PpicodInstance, D: Sequence[int], budget: Optional[int] = None) -> Tuple[int, FqMatrix]:
    """Shortest linear code letting every receiver i decode X_D(i), with an RREF basis as witness."""
    D = tuple(int(d) for d in D)
    check_decoding_choice(D, inst)
    budget = Config.ENUMERATION_BUDGET if budget is None else budget
    count = minrank_count(inst)
    if count > budget:
        logger.warning(f"Refusing minrank search: {count:,} fitting matrices > {budget:,}")
        raise BudgetExceeded("minrank fitting matrices", count, budget)

    if inst.field.is_binary:
        ell, rows = _minrank_gf2(inst, D)
        witness = FqMatrix(unpack_rows(rows, inst.m).reshape(len(rows), inst.m), inst.field)
    else:
        ell, basis = _minrank_generic(inst, D)
        witness = FqMatrix(basis.reshape(ell, inst.m), inst.field)

    for i, d in enumerate(D, 1):
        if d not in decodable_messages(witness, inst, i):
            logger.error(f"minrank witness fails receiver {i} for D={decoding_text(D)}")
            raise RuntimeError(f"minrank witness does not let receiver {i} decode X_{d}")
    return ell, witness


def _method1_chunk(inst: PpicodInstance, choices: List[Tuple[DecodingChoice, Fraction]], budget: int):
    return [(D, s, minrank(inst, D, budget)[0]) for D, s in choices]


# --------------------------------------------------------------
# Rate-cap codes

def ratecap_codes(inst: PpicodInstance, D: Sequence[int], mds: Optional[bool] = None) -> List[LinearCode]:
    """Uncoded demands (length n), identity (length m) and, when q >= m, an MDS code of length m - min|H_i|.

    mds=None adds the MDS code whenever the field is large enough; mds=True requires it.
    """
    D = tuple(int(d) for d in D)
    check_decoding_choice(D, inst)
    m, spec = inst.m, inst.field

    uncoded = np.zeros((inst.n, m), dtype=np.int64)
    for r, d in enumerate(D):
        uncoded[r, d - 1] = 1
    codes = [
        LinearCode(FqMatrix(uncoded, spec), D, "uncoded"),
        LinearCode(FqMatrix.identity(m, spec), D, "identity"),
    ]

    if mds and spec.q < m:
        raise FieldError(f"MDS construction needs q >= m, got q={spec.q}, m={m}")
    if mds is not False and spec.q >= m:
        k = m - min(len(inst.side_info(i)) for i in inst.receivers())
        codes.append(LinearCode(vandermonde(mds_points(m, spec), k, spec), D, "mds"))

    for code in codes:
        for i, d in enumerate(D, 1):
            if d not in decodable_messages(code.matrix, inst, i):
                logger.error(f"{code.label} code fails receiver {i} for D={decoding_text(D)}")
                raise RuntimeError(f"{code.label} code does not let receiver {i} decode X_{d}")
    return codes


# --------------------------------------------------------------
# Service

class OracleService:
    """Exhaustive boundary computations with explicit budgets and an optional process pool."""

    def __init__(
        self,
        budget: Optional[int] = None,
        workers: Optional[int] = None,
        witness_limit: Optional[int] = None,
        show_progress: Optional[bool] = None,
    ):
        self.budget = Config.ENUMERATION_BUDGET if budget is None else budget
        self.workers = Config.WORKERS if workers is None else workers
        self.witness_limit = Config.WITNESS_LIMIT if witness_limit is None else witness_limit
        self.show_progress = Config.SHOW_PROGRESS if show_progress is None else show_progress

    def _executor(self) -> Optional[ProcessPoolExecutor]:
        if self.workers <= 1:
            return None
        ctx = mp.get_context("spawn")
        try:
            return ProcessPoolExecutor(max_workers=self.workers, mp_context=ctx)
        except (NotImplementedError, PermissionError, OSError) as exc:
            logger.warning(f"Parallel workers unavailable; falling back to serial ({exc})")
            return None

    def _chunks(self, items: list) -> List[list]:
        size = max(1, -(-len(items) // (self.workers * 4)))
        return [items[i:i + size] for i in range(0, len(items), size)]

    def _weighted_chunks(self, items: list, weights: List[int]) -> List[list]:
        """Consecutive runs of items with roughly equal total weight."""
        target = max(1, -(-sum(weights) // (self.workers * 4)))
        chunks, current, load = [], [], 0
        for item, w in zip(items, weights):
            current.append(item)
            load += w
            if load >= target:
                chunks.append(current)
                current, load = [], 0
        if current:
            chunks.append(current)
        return chunks

    def _map(self, fn, inst: PpicodInstance, chunks: List[list], *extra, desc: str = ""):
        """Yield fn(inst, chunk, *extra) for every chunk, in chunk order."""
        executor = self._executor()
        bar = tqdm(total=len(chunks), desc=desc, disable=not self.show_progress)
        try:
            if executor is None:
                for chunk in chunks:
                    yield fn(inst, chunk, *extra)
                    bar.update(1)
            else:
                futures = [executor.submit(fn, inst, chunk, *extra) for chunk in chunks]
                for fut in futures:
                    yield fut.result()
                    bar.update(1)
        finally:
            bar.close()
            if executor is not None:
                executor.shutdown()

    # ---- code-centric ----
    def method2(self, inst: PpicodInstance) -> BoundaryRun:
        count = count_rref(inst.m, inst.field)
        if count > self.budget:
            logger.warning(f"Refusing code-centric search: {count:,} subspaces > {self.budget:,}")
            raise BudgetExceeded("RREF matrices", count, self.budget)
        logger.info(f"Code-centric search over {count:,} nonzero subspaces of GF({inst.q})^{inst.m}")

        blocks = list(rref_blocks(inst.m))
        # chunks of roughly equal matrix count
        chunks = self._weighted_chunks(blocks, [block_size(inst.m, p, inst.field) for p in blocks])
        enumerated = 0
        raw: Dict[Tuple[int, Fraction], str] = {}
        front = ParetoFront()
        for c, seen in self._map(_scan_blocks, inst, chunks, desc="method2"):
            enumerated += c
            for key, text in seen.items():
                if key not in raw or text < raw[key]:
                    raw[key] = text
            partial = pareto_front(
                (LengthSatisfactionPoint(ell, s, (("code", text),)) for (ell, s), text in seen.items()),
                self.witness_limit,
            )
            front = merge(front, partial, self.witness_limit)

        if enumerated != count:
            raise RuntimeError(f"Enumerated {enumerated:,} matrices, expected {count:,}")
        logger.info(f"Code-centric front: {[str(p) for p in front]} from {len(raw)} distinct achievable pairs")
        logger.debug(f"Code-centric raw set: {sorted(raw)}")
        return BoundaryRun(2, front, tuple(sorted(raw)), enumerated)

    def method2_boundary(self, inst: PpicodInstance) -> ParetoFront:
        return self.method2(inst).front

    # ---- decoding-centric ----
    def method1(self, inst: PpicodInstance) -> BoundaryRun:
        per_choice = minrank_count(inst)
        if per_choice > self.budget:
            logger.warning(f"Refusing minrank search: {per_choice:,} fitting matrices > {self.budget:,}")
            raise BudgetExceeded("minrank fitting matrices", per_choice, self.budget)
        choices = list(enumerate_decoding_choices(inst, self.budget))
        logger.info(f"Decoding-centric search over {len(choices):,} decoding choices, {per_choice:,} fitting matrices each")

        points = []
        for results in self._map(_method1_chunk, inst, self._chunks(choices), self.budget, desc="method1"):
            for D, s, ell in results:
                points.append(LengthSatisfactionPoint(ell, s, (("decoding", decoding_text(D)),)))

        front = pareto_front(points, self.witness_limit)
        raw = tuple(sorted({p.coords for p in points}))
        logger.info(f"Decoding-centric front: {[str(p) for p in front]} from {len(raw)} distinct achievable pairs")
        logger.debug(f"Decoding-centric raw set: {list(raw)}")
        return BoundaryRun(1, front, raw, len(choices))

    def method1_boundary(self, inst: PpicodInstance) -> ParetoFront:
        return self.method1(inst).front


def method1_boundary(inst: PpicodInstance, budget: Optional[int] = None) -> ParetoFront:
    return OracleService(budget=budget).method1_boundary(inst)


def method2_boundary(inst: PpicodInstance, budget: Optional[int] = None) -> ParetoFront:
    return OracleService(budget=budget).method2_boundary(inst)


# --------------------------------------------------------------
# Boundary CSV: ell,s_num,s_den,witness_kind,witness

def boundary_to_frame(front: ParetoFront) -> pd.DataFrame:
    rows = []
    for p in front:
        kind, text = p.witnesses[0] if p.witnesses else ("", "")
        rows.append({"ell": p.ell, "s_num": p.s.numerator, "s_den": p.s.denominator, "witness_kind": kind, "witness": text})
    return pd.DataFrame(rows, columns=BOUNDARY_COLUMNS)


def save_boundary(front: ParetoFront, path: Union[str, Path]):
    boundary_to_frame(front).to_csv(path, index=False)
