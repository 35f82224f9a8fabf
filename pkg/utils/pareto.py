"""
Dominance and Pareto boundaries of (code length, satisfaction) pairs.

Both coordinates are minimised. Satisfaction values are exact Fractions so
ties and dominance are decided without tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import pandas as pd

# (kind, text), e.g. ("code", "00100") or ("decoding", "3,3")
Witness = Tuple[str, str]

FRONT_COLUMNS = ["ell", "s_num", "s_den", "witness_id"]


@dataclass(frozen=True)
class LengthSatisfactionPoint:
    ell: int
    s: Fraction
    witnesses: Tuple[Witness, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError(f"Code length must be non-negative, got {self.ell}")
        object.__setattr__(self, "s", Fraction(self.s))

    @property
    def coords(self) -> Tuple[int, Fraction]:
        return self.ell, self.s

    def __str__(self):
        return f"({self.ell}, {self.s})"


def dominates(p1: LengthSatisfactionPoint, p2: LengthSatisfactionPoint) -> bool:
    """True iff p1 is no worse in both coordinates and strictly better in one."""
    return p1.ell <= p2.ell and p1.s <= p2.s and (p1.ell < p2.ell or p1.s < p2.s)


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated points sorted by ell ascending (so s strictly descending)."""

    points: Tuple[LengthSatisfactionPoint, ...] = ()

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __bool__(self):
        return bool(self.points)

    def coords(self) -> List[Tuple[int, Fraction]]:
        return [p.coords for p in self.points]

    @property
    def min_length(self) -> Optional[int]:
        return self.points[0].ell if self.points else None

    @property
    def min_satisfaction(self) -> Optional[Fraction]:
        return self.points[-1].s if self.points else None

    def is_valid(self) -> bool:
        pts = self.points
        return all(a.ell < b.ell and a.s > b.s for a, b in zip(pts, pts[1:]))

    def violated_by(self, point: LengthSatisfactionPoint) -> List[LengthSatisfactionPoint]:
        """Front points that `point` strictly dominates (empty for a correct front)."""
        return [p for p in self.points if dominates(point, p)]


def _collapse(points: Iterable[LengthSatisfactionPoint], witness_limit: Optional[int]) -> List[LengthSatisfactionPoint]:
    merged = {}
    for p in points:
        merged.setdefault(p.coords, set()).update(p.witnesses)
    out = []
    for (ell, s), wits in merged.items():
        wits = sorted(wits)
        if witness_limit is not None:
            wits = wits[:witness_limit]
        out.append(LengthSatisfactionPoint(ell, s, tuple(wits)))
    return out


def pareto_front(points: Iterable[LengthSatisfactionPoint], witness_limit: Optional[int] = None) -> ParetoFront:
    """Exactly the non-dominated points; equal coordinates collapse with witnesses concatenated."""
    unique = _collapse(points, witness_limit)
    # fronts hold at most min(n, m) points, a quadratic filter is enough
    keep = [p for p in unique if not any(dominates(o, p) for o in unique)]
    keep.sort(key=lambda p: p.ell)
    return ParetoFront(tuple(keep))


def merge(f1: ParetoFront, f2: ParetoFront, witness_limit: Optional[int] = None) -> ParetoFront:
    return pareto_front(list(f1.points) + list(f2.points), witness_limit)


# --------------------------------------------------------------
# CSV

def _witness_id(p: LengthSatisfactionPoint) -> str:
    return "|".join(f"{kind}:{text}" for kind, text in p.witnesses)


def _parse_witness_id(raw) -> Tuple[Witness, ...]:
    if not isinstance(raw, str) or not raw:
        return ()
    out = []
    for part in raw.split("|"):
        kind, _, text = part.partition(":")
        out.append((kind, text))
    return tuple(out)


def front_to_frame(front: ParetoFront) -> pd.DataFrame:
    rows = [
        {"ell": p.ell, "s_num": p.s.numerator, "s_den": p.s.denominator, "witness_id": _witness_id(p)}
        for p in front
    ]
    return pd.DataFrame(rows, columns=FRONT_COLUMNS)


def save_front(front: ParetoFront, path: Union[str, Path]):
    front_to_frame(front).to_csv(path, index=False)


def load_front(path: Union[str, Path]) -> ParetoFront:
    """Read a front CSV; also accepts the boundary layout with witness_kind/witness columns."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    points = []
    for _, row in df.iterrows():
        if "witness_kind" in df.columns:
            wits = ((row["witness_kind"], row["witness"]),) if row["witness_kind"] else ()
        else:
            wits = _parse_witness_id(row.get("witness_id", ""))
        points.append(LengthSatisfactionPoint(int(row["ell"]), Fraction(int(row["s_num"]), int(row["s_den"])), wits))
    return pareto_front(points)
