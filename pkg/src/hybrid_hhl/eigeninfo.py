"""Binary matrices of eigenvalue estimates and what they tell the HHL builder.

Columns and positions are 1-based: column ``k`` of the matrix is bit ``k`` of
each estimate and corresponds to qubit ``k`` of the phase register.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .statevector import SimulationError


class ClassificationError(SimulationError):
    pass


@dataclass(frozen=True)
class BinaryMatrix:
    rows: tuple[str, ...]

    def __post_init__(self):
        rows = tuple(str(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise SimulationError("binary matrix needs at least one row")
        if len({len(r) for r in rows}) != 1 or not rows[0]:
            raise SimulationError("rows must be non-empty and of equal length")
        if any(set(r) - {"0", "1"} for r in rows):
            raise SimulationError("entries must be 0 or 1")
        if len(set(rows)) != len(rows):
            raise SimulationError("rows must be pairwise distinct")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    def column(self, k: int) -> str:
        return "".join(r[k - 1] for r in self.rows)

    def restrict(self, columns: Iterable[int]) -> list[str]:
        cols = list(columns)
        return ["".join(r[k - 1] for k in cols) for r in self.rows]

    def to_text(self) -> str:
        return "\n".join(self.rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BinaryMatrix":
        rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
        return cls(tuple(rows))

    @classmethod
    def from_outcomes(cls, outcomes: Iterable[str]) -> "BinaryMatrix":
        """Deduplicated rows, sorted in descending binary order."""
        return cls(tuple(sorted(set(outcomes), reverse=True)))


def collect_binary_matrix(
    qpe_runner: Callable[[int, int], dict],
    batch_shots: int = 1024,
    stall_batches: int = 3,
    seed: int = 0,
    max_batches: int = 10_000,
) -> BinaryMatrix:
    """Collect distinct estimates until ``stall_batches`` batches in a row add nothing new.

    ``qpe_runner(shots, seed)`` returns a histogram over the phase register.
    Batch ``i`` uses seed ``seed + i``.
    """
    if batch_shots < 1 or stall_batches < 1:
        raise SimulationError("batch_shots and stall_batches must be >= 1")
    seen: set[str] = set()
    stall = 0
    for i in range(max_batches):
        hist = qpe_runner(batch_shots, seed + i)
        new = set(hist) - seen
        seen |= new
        stall = 0 if new else stall + 1
        if stall >= stall_batches:
            break
    return BinaryMatrix.from_outcomes(seen)


def is_distinguishing(B: BinaryMatrix, columns: Iterable[int]) -> bool:
    sub = B.restrict(columns)
    return len(set(sub)) == len(sub)


def all_minimal_distinguishing_sets(B: BinaryMatrix) -> list[tuple[int, ...]]:
    """Every minimum-cardinality distinguishing set, in lexicographic order."""
    if B.m == 1:
        return [()]
    for size in range(1, B.n + 1):
        found = [c for c in combinations(range(1, B.n + 1), size) if is_distinguishing(B, c)]
        if found:
            return found
    raise AssertionError("distinct rows are always distinguished by all columns")


def min_distinguishing_set_exact(B: BinaryMatrix, candidates: Sequence[int] | None = None) -> tuple[int, ...]:
    """Smallest distinguishing set; ties go to the lexicographically smallest.

    ``candidates`` restricts the search to a subset of columns.
    """
    cols = sorted(candidates) if candidates is not None else list(range(1, B.n + 1))
    if B.m == 1:
        return ()
    for size in range(1, len(cols) + 1):
        for c in combinations(cols, size):
            if is_distinguishing(B, c):
                return c
    raise SimulationError("candidate columns cannot distinguish all rows")


def distinguishing_set_greedy(B: BinaryMatrix) -> tuple[int, ...]:
    """Greedy set cover over row pairs: take the column separating the most open pairs."""
    pairs = {(i, j) for i, j in combinations(range(B.m), 2)}
    cols = {k: B.column(k) for k in range(1, B.n + 1)}
    chosen = []
    while pairs:
        best, best_cover = None, set()
        for k, col in cols.items():
            cover = {(i, j) for i, j in pairs if col[i] != col[j]}
            if len(cover) > len(best_cover):
                best, best_cover = k, cover
        chosen.append(best)
        pairs -= best_cover
        del cols[best]
    return tuple(sorted(chosen))


class QubitTag(str, enum.Enum):
    LEADING = "leading"
    DISTINGUISHING = "distinguishing"
    CONSTANT_AFTER_LEADING = "constant-after-leading"
    NON_CONSTANT_AFTER_LEADING = "non-constant-after-leading"
    BEFORE_LEADING = "before-leading"


@dataclass(frozen=True)
class QubitClassification:
    """Per-position tags relative to the leading distinguishing column.

    With a single row there is no distinguishing column; every position is
    then tagged ``BEFORE_LEADING``, ``leading`` is ``None`` and ``degenerate``
    is set. ``s`` is the number of positions before the leading one.
    """

    tags: dict[int, QubitTag]
    leading: int | None
    distinguishing: tuple[int, ...]
    constant_values: dict[int, int]
    n: int
    degenerate: bool = False

    @property
    def s(self) -> int:
        return self.n if self.leading is None else self.leading - 1

    @property
    def f(self) -> int:
        return sum(1 for t in self.tags.values() if t is QubitTag.NON_CONSTANT_AFTER_LEADING)

    def positions(self, *tags: QubitTag) -> list[int]:
        return [p for p in range(1, self.n + 1) if self.tags[p] in tags]

    def as_dict(self) -> dict:
        return {
            "tags": {str(p): t.value for p, t in sorted(self.tags.items())},
            "leading": self.leading,
            "s": self.s,
            "f": self.f,
            "distinguishing": list(self.distinguishing),
            "constant_values": {str(p): b for p, b in sorted(self.constant_values.items())},
            "degenerate": self.degenerate,
        }


def classify(B: BinaryMatrix, D: Iterable[int]) -> QubitClassification:
    D = tuple(sorted(set(D)))
    if any(not 1 <= k <= B.n for k in D):
        raise ClassificationError("distinguishing set refers to a column outside the matrix")
    if not is_distinguishing(B, D):
        raise ClassificationError(f"columns {list(D)} do not distinguish all rows")
    constants = {}
    for k in range(1, B.n + 1):
        col = B.column(k)
        if len(set(col)) == 1:
            constants[k] = int(col[0])
    if not D:
        tags = {k: QubitTag.BEFORE_LEADING for k in range(1, B.n + 1)}
        return QubitClassification(tags, None, D, constants, B.n, degenerate=True)
    lead = D[0]
    tags = {}
    for k in range(1, B.n + 1):
        if k == lead:
            tags[k] = QubitTag.LEADING
        elif k in D:
            tags[k] = QubitTag.DISTINGUISHING
        elif k < lead:
            tags[k] = QubitTag.BEFORE_LEADING
        elif k in constants:
            tags[k] = QubitTag.CONSTANT_AFTER_LEADING
        else:
            tags[k] = QubitTag.NON_CONSTANT_AFTER_LEADING
    return QubitClassification(tags, lead, D, constants, B.n)


@dataclass(frozen=True)
class StepPlan:
    pe_keep: frozenset[int]
    cr_controls: frozenset[int]
    removable: frozenset[int]

    def as_dict(self) -> dict:
        return {
            "pe_keep": sorted(self.pe_keep),
            "cr_controls": sorted(self.cr_controls),
            "removable": sorted(self.removable),
        }


def step_plan(c: QubitClassification) -> StepPlan:
    """Keep/omit/remove decision for every position of the phase register."""
    T = QubitTag
    controls = frozenset(c.positions(T.LEADING, T.DISTINGUISHING))
    keep = controls | frozenset(c.positions(T.NON_CONSTANT_AFTER_LEADING))
    removable = frozenset(c.positions(T.BEFORE_LEADING, T.CONSTANT_AFTER_LEADING))
    return StepPlan(keep, controls, removable)


def row_value(row: str) -> float:
    """Eigenvalue estimate 0.b1 b2 ... bn encoded by a matrix row."""
    return sum(int(b) * 2.0 ** -(k + 1) for k, b in enumerate(row))


def random_matrix(rng: np.random.Generator, m: int, n: int) -> BinaryMatrix:
    """Random matrix with ``m`` distinct rows of width ``n`` (needs m <= 2^n)."""
    picks = rng.choice(2**n, size=m, replace=False)
    return BinaryMatrix(tuple(format(int(p), f"0{n}b") for p in picks))
