"""Edit-distance alignment of MT output against a (pseudo-)post-edit.

The aligner matches tokens case-sensitively and exactly. By default it is
purely monotone (no block moves): a reordered constituent therefore shows up
as substitutions or insert/delete pairs and gets tagged BAD, which is the
annotation behavior this package is built to study. The classical greedy
block-shift heuristic is available behind a flag for scoring use cases.

Tagging rules: Match leaves the MT token OK; Substitute and Insert mark it
BAD; a Delete (a post-edit token with no MT counterpart) marks BAD on the gap
where the missing token would sit. Consecutive deletions fall into the same
gap and mark it once.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .corpus import Tag, TagSeq

__all__ = [
    "OpKind",
    "EditOp",
    "Shift",
    "EditScript",
    "levenshtein_align",
    "greedy_shift_align",
    "ter_tags",
    "ter_score",
]

DEFAULT_MAX_SHIFT_DIST = 10


class OpKind(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class EditOp:
    """One edit step.

    Match/Substitute consume an MT token and a PE token; Insert consumes an
    MT token only (spurious token); Delete consumes a PE token only (missing
    token).
    """

    kind: OpKind
    mt_index: Optional[int] = None
    pe_index: Optional[int] = None

    def __post_init__(self) -> None:
        both = self.kind in (OpKind.MATCH, OpKind.SUBSTITUTE)
        if both and (self.mt_index is None or self.pe_index is None):
            raise ValueError(f"{self.kind.value} op requires both indices")
        if self.kind is OpKind.INSERT and (
            self.mt_index is None or self.pe_index is not None
        ):
            raise ValueError("insert op carries only an mt_index")
        if self.kind is OpKind.DELETE and (
            self.pe_index is None or self.mt_index is not None
        ):
            raise ValueError("delete op carries only a pe_index")


@dataclass(frozen=True)
class Shift:
    """Move ``length`` tokens starting at ``start`` so the block begins at
    position ``destination`` of the sequence with the block removed."""

    start: int
    length: int
    destination: int


@dataclass(frozen=True)
class EditScript:
    """Result of aligning MT to PE.

    ``cost`` counts one per non-Match op plus one per shift. ``ops`` index
    into the *shifted* MT order; ``mt_order[k]`` gives the original MT index
    of shifted position ``k`` (identity when no shifts were applied, encoded
    as ``None``).
    """

    ops: tuple[EditOp, ...]
    cost: int
    shifts: tuple[Shift, ...] = ()
    mt_order: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "shifts", tuple(self.shifts))
        if self.mt_order is not None:
            object.__setattr__(self, "mt_order", tuple(self.mt_order))


def _edit_dp(mt: Sequence[str], pe: Sequence[str]) -> list[list[int]]:
    n, m = len(mt), len(pe)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev = dist[i], dist[i - 1]
        tok = mt[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if tok == pe[j - 1] else 1)
            row[j] = min(diag, row[j - 1] + 1, prev[j] + 1)
    return dist


def _check_nonempty(mt: Sequence[str], pe: Sequence[str]) -> None:
    if not mt or not pe:
        raise ValueError("both sentences must be non-empty")


def levenshtein_align(mt: Sequence[str], pe: Sequence[str]) -> EditScript:
    """Minimal-cost monotone alignment (match 0; sub/ins/del 1 each).

    The backtrace breaks ties preferring Match, then Substitute, then
    Delete, then Insert, so output is deterministic and aligning a token
    always beats treating it as spurious.
    """
    _check_nonempty(mt, pe)
    dist = _edit_dp(mt, pe)
    ops: list[EditOp] = []
    i, j = len(mt), len(pe)
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and mt[i - 1] == pe[j - 1] and dist[i - 1][j - 1] == here:
            ops.append(EditOp(OpKind.MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i - 1][j - 1] + 1 == here:
            ops.append(EditOp(OpKind.SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif j > 0 and dist[i][j - 1] + 1 == here:
            ops.append(EditOp(OpKind.DELETE, pe_index=j - 1))
            j -= 1
        else:
            ops.append(EditOp(OpKind.INSERT, mt_index=i - 1))
            i -= 1
    ops.reverse()
    return EditScript(tuple(ops), cost=dist[len(mt)][len(pe)])


def _apply_shift(seq: list, shift: Shift) -> list:
    block = seq[shift.start : shift.start + shift.length]
    rest = seq[: shift.start] + seq[shift.start + shift.length :]
    return rest[: shift.destination] + block + rest[shift.destination :]


def greedy_shift_align(
    mt: Sequence[str],
    pe: Sequence[str],
    max_shift_dist: int = DEFAULT_MAX_SHIFT_DIST,
) -> EditScript:
    """Block-shift alignment: greedily move the one block that lowers the
    remaining monotone cost the most (each move itself costing 1), then run
    :func:`levenshtein_align` on the reordered MT.

    Candidate moves are scanned in (start, length, destination) order and
    the first one achieving the round's best cost wins, so the procedure is
    deterministic. A move is applied only while it strictly reduces total
    cost. ``max_shift_dist`` caps ``|destination - start|``.
    """
    _check_nonempty(mt, pe)
    current = list(mt)
    order = list(range(len(mt)))
    shifts: list[Shift] = []
    cur_cost = _edit_dp(current, pe)[len(current)][len(pe)]
    while True:
        best: Optional[Shift] = None
        best_cost = cur_cost  # a move must beat this net of its own cost
        n = len(current)
        for start in range(n):
            for length in range(1, n - start + 1):
                for dest in range(n - length + 1):
                    if dest == start or abs(dest - start) > max_shift_dist:
                        continue
                    cand = _apply_shift(current, Shift(start, length, dest))
                    cost = _edit_dp(cand, pe)[n][len(pe)] + 1
                    if cost < best_cost:
                        best_cost = cost
                        best = Shift(start, length, dest)
        if best is None:
            break
        current = _apply_shift(current, best)
        order = _apply_shift(order, best)
        shifts.append(best)
        cur_cost = best_cost
    base = levenshtein_align(current, pe)
    return EditScript(
        base.ops,
        cost=base.cost + len(shifts),
        shifts=tuple(shifts),
        mt_order=tuple(order) if shifts else None,
    )


def ter_tags(
    mt: Sequence[str],
    pe: Sequence[str],
    use_shifts: bool = False,
    max_shift_dist: int = DEFAULT_MAX_SHIFT_DIST,
) -> TagSeq:
    """Tag MT tokens and gaps by aligning against the post-edit.

    With ``use_shifts`` a moved block still counts as correctly translated
    (its tokens Match after the move); without it, reordering surfaces as
    BAD tags, mirroring exact-match tag generation.
    """
    script = (
        greedy_shift_align(mt, pe, max_shift_dist)
        if use_shifts
        else levenshtein_align(mt, pe)
    )
    n = len(mt)
    perm = script.mt_order if script.mt_order is not None else tuple(range(n))
    token_tags = [Tag.OK] * n
    gap_tags = [Tag.OK] * (n + 1)
    for pos, op in enumerate(script.ops):
        if op.kind in (OpKind.SUBSTITUTE, OpKind.INSERT):
            token_tags[perm[op.mt_index]] = Tag.BAD
        elif op.kind is OpKind.DELETE:
            gap = n  # falls at the end unless some later op consumes MT
            for nxt in script.ops[pos + 1 :]:
                if nxt.mt_index is not None:
                    gap = perm[nxt.mt_index]
                    break
            gap_tags[gap] = Tag.BAD
    return TagSeq(tuple(token_tags), tuple(gap_tags))


def ter_score(
    mt: Sequence[str],
    pe: Sequence[str],
    use_shifts: bool = False,
    max_shift_dist: int = DEFAULT_MAX_SHIFT_DIST,
) -> float:
    """Edit cost (including shifts) divided by post-edit length."""
    _check_nonempty(mt, pe)
    script = (
        greedy_shift_align(mt, pe, max_shift_dist)
        if use_shifts
        else levenshtein_align(mt, pe)
    )
    return script.cost / len(pe)
