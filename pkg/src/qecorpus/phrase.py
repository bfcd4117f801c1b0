"""Consistent phrase-pair extraction and MT-to-PE span projection.

A phrase pair (S, T) over an aligned sentence pair is *consistent* when at
least one link lands in S x T, no link maps a token of S outside T, and no
link maps a token of T outside S. Extraction enumerates every consistent
pair up to a length cap, growing the PE side over unaligned boundary words
exactly as the classic phrase-based extraction algorithm does.

Projection is the restricted form substitution needs: the minimal PE span
covering everything a given MT span links to, accepted only when that cover
is itself consistent with the span.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .align import Alignment

__all__ = [
    "Span",
    "PhrasePair",
    "extract_phrases",
    "project_span",
    "format_phrase_pair",
    "parse_phrase_pair",
]

DEFAULT_MAX_PHRASE_LEN = 7


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token index range [l, r]."""

    l: int
    r: int

    def __post_init__(self) -> None:
        if not 0 <= self.l <= self.r:
            raise ValueError(f"invalid span [{self.l}, {self.r}]")

    def __len__(self) -> int:
        return self.r - self.l + 1

    def __contains__(self, index: int) -> bool:
        return self.l <= index <= self.r

    def overlaps(self, other: "Span") -> bool:
        return self.l <= other.r and other.l <= self.r


@dataclass(frozen=True, order=True)
class PhrasePair:
    mt_span: Span
    pe_span: Span


def _check_links(mt_len: int, pe_len: int, align: Alignment) -> None:
    for i, j in align.links:
        if not (0 <= i < mt_len and 0 <= j < pe_len):
            raise ValueError(f"link ({i}, {j}) out of range for {mt_len}x{pe_len}")


def extract_phrases(
    mt_len: int,
    pe_len: int,
    align: Alignment,
    max_len: Optional[int] = DEFAULT_MAX_PHRASE_LEN,
) -> set[PhrasePair]:
    """All consistent phrase pairs with both sides at most ``max_len`` long.

    ``max_len=None`` lifts the cap.
    """
    _check_links(mt_len, pe_len, align)
    if max_len is not None and max_len < 1:
        raise ValueError("max_len must be >= 1")
    cap = max_len if max_len is not None else max(mt_len, pe_len)
    links = sorted(align.links)
    pe_aligned = [False] * pe_len
    for _, j in links:
        pe_aligned[j] = True
    pairs: set[PhrasePair] = set()
    for i1 in range(mt_len):
        for i2 in range(i1, min(i1 + cap, mt_len)):
            linked = [j for i, j in links if i1 <= i <= i2]
            if not linked:
                continue
            j1, j2 = min(linked), max(linked)
            if any(j1 <= j <= j2 and not i1 <= i <= i2 for i, j in links):
                continue
            js = j1
            while js >= 0 and (js == j1 or not pe_aligned[js]):
                je = j2
                while je < pe_len and (je == j2 or not pe_aligned[je]):
                    if je - js + 1 <= cap:
                        pairs.add(PhrasePair(Span(i1, i2), Span(js, je)))
                    je += 1
                js -= 1
    return pairs


def project_span(align: Alignment, mt_span: Span, pe_len: int) -> Optional[Span]:
    """Minimal consistent PE cover of an MT span, or None.

    Returns None when the span is wholly unaligned, or when some PE token
    inside the cover links back outside the span (the cover would then drag
    in unrelated MT content, so substitution must not use it).
    """
    linked = [j for i, j in align.links if i in mt_span]
    if not linked:
        return None
    cover = Span(min(linked), max(linked))
    for i, j in align.links:
        if j in cover and i not in mt_span:
            return None
    if not all(0 <= j < pe_len for j in (cover.l, cover.r)):
        raise ValueError(f"alignment exceeds PE length {pe_len}")
    return cover


def format_phrase_pair(pair: PhrasePair) -> str:
    return (
        f"{pair.mt_span.l}-{pair.mt_span.r}"
        f" ||| {pair.pe_span.l}-{pair.pe_span.r}"
    )


def parse_phrase_pair(text: str) -> PhrasePair:
    left, sep, right = text.partition(" ||| ")
    if not sep:
        raise ValueError(f"bad phrase pair {text!r}")

    def parse_span(part: str) -> Span:
        l, s, r = part.partition("-")
        if not s or not l.isdigit() or not r.isdigit():
            raise ValueError(f"bad span {part!r}")
        return Span(int(l), int(r))

    return PhrasePair(parse_span(left), parse_span(right))
