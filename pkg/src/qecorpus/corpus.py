"""Data model and file I/O for parallel corpora, MT output, and tagged QE samples.

File conventions:

* sentence files: UTF-8, one sentence per line, tokens separated by single
  spaces (pre-tokenized input; this package never re-tokenizes);
* tag files: space-separated ``OK``/``BAD`` literals, either ``n`` tags
  (token tags only) or ``2n + 1`` tags (gap/token interleaved, gaps at the
  even positions) for an MT sentence of ``n`` tokens;
* dataset directories: ``src.txt``, ``mt.txt``, optional ``pe.txt``,
  ``tags.txt`` and ``meta.jsonl`` (a header record followed by one
  ``{"id": ...}`` record per sample).

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

__all__ = [
    "Tag",
    "TagSeq",
    "QeSample",
    "Dataset",
    "read_plain",
    "read_tags",
    "write_plain",
    "write_tags",
    "format_tags",
    "read_dataset",
    "write_dataset",
]


class Tag(str, Enum):
    """Word-level quality label: the token (or gap) is fine, or it is not."""

    OK = "OK"
    BAD = "BAD"

    def __str__(self) -> str:  # serialize as the bare literal
        return self.value


def check_tokens(tokens: Sequence[str], what: str = "sentence") -> None:
    """Validate that every token is non-empty and whitespace-free."""
    for tok in tokens:
        if not tok:
            raise ValueError(f"empty token in {what}")
        if any(ch.isspace() for ch in tok):
            raise ValueError(f"token contains whitespace in {what}: {tok!r}")


@dataclass(frozen=True)
class TagSeq:
    """Token tags for one MT sentence, plus optional gap tags.

    ``gap_tags[g]`` labels the position before token ``g``; the final entry
    labels the position after the last token, so there are always exactly
    ``len(token_tags) + 1`` gap entries when gaps are present.
    """

    token_tags: tuple[Tag, ...]
    gap_tags: Optional[tuple[Tag, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "token_tags", tuple(self.token_tags))
        if self.gap_tags is not None:
            object.__setattr__(self, "gap_tags", tuple(self.gap_tags))
            if len(self.gap_tags) != len(self.token_tags) + 1:
                raise ValueError(
                    f"expected {len(self.token_tags) + 1} gap tags, "
                    f"got {len(self.gap_tags)}"
                )

    def __len__(self) -> int:
        return len(self.token_tags)

    @property
    def bad_token_count(self) -> int:
        return sum(1 for t in self.token_tags if t is Tag.BAD)

    @property
    def bad_gap_count(self) -> int:
        if self.gap_tags is None:
            return 0
        return sum(1 for t in self.gap_tags if t is Tag.BAD)

    def all_ok(self) -> bool:
        """True when no token tag is BAD (gap tags are not considered)."""
        return all(t is Tag.OK for t in self.token_tags)


@dataclass(frozen=True)
class QeSample:
    """One QE instance: source, MT output, optional pseudo-PE and tags."""

    sample_id: int
    src: tuple[str, ...]
    mt: tuple[str, ...]
    pe: Optional[tuple[str, ...]] = None
    tags: Optional[TagSeq] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "src", tuple(self.src))
        object.__setattr__(self, "mt", tuple(self.mt))
        if self.pe is not None:
            object.__setattr__(self, "pe", tuple(self.pe))
        if self.tags is not None and len(self.tags) != len(self.mt):
            raise ValueError(
                f"sample {self.sample_id}: {len(self.tags)} token tags "
                f"for {len(self.mt)} MT tokens"
            )

    def with_tags(self, tags: TagSeq) -> "QeSample":
        return replace(self, tags=tags)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of QE samples for one language pair."""

    samples: tuple[QeSample, ...]
    language_pair: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        ids = [s.sample_id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids in dataset")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def read_plain(path: str | Path) -> list[list[str]]:
    """Read a one-sentence-per-line token file.

    Lines are split on single spaces; an empty line yields an empty sentence
    (callers filter those out before tagging or scoring). A doubled space or
    stray whitespace inside a token is a format error.
    """
    sentences: list[list[str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.endswith("\r"):
                line = line[:-1]
            if not line:
                sentences.append([])
                continue
            tokens = line.split(" ")
            try:
                check_tokens(tokens)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            sentences.append(tokens)
    return sentences


def write_plain(sentences: Iterable[Sequence[str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(" ".join(sent) + "\n")


def _parse_tag(literal: str, where: str) -> Tag:
    try:
        return Tag(literal)
    except ValueError:
        raise ValueError(f"{where}: unknown tag literal {literal!r}") from None


def read_tags(path: str | Path, mt_lengths: Sequence[int]) -> list[TagSeq]:
    """Read a tags file, one line per sample.

    The layout of each line is detected from its tag count: ``n`` tags are
    token tags only, ``2n + 1`` tags are gap/token interleaved with gaps at
    positions 0, 2, 4, ... Anything else is an error. ``mt_lengths`` gives
    ``n`` per line.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != len(mt_lengths):
        raise ValueError(
            f"{path}: {len(lines)} tag lines for {len(mt_lengths)} sentences"
        )
    seqs: list[TagSeq] = []
    for lineno, (line, n) in enumerate(zip(lines, mt_lengths), 1):
        where = f"{path}:{lineno}"
        parts = line.split(" ") if line else []
        tags = [_parse_tag(p, where) for p in parts]
        if len(tags) == n:
            seqs.append(TagSeq(tuple(tags)))
        elif len(tags) == 2 * n + 1:
            seqs.append(TagSeq(tuple(tags[1::2]), tuple(tags[0::2])))
        else:
            raise ValueError(
                f"{where}: expected {n} or {2 * n + 1} tags, got {len(tags)}"
            )
    return seqs


def format_tags(seq: TagSeq) -> str:
    """Render one tag line; interleaved ``2n + 1`` layout when gaps exist."""
    if seq.gap_tags is None:
        return " ".join(t.value for t in seq.token_tags)
    out: list[str] = []
    for gap, tok in zip(seq.gap_tags, seq.token_tags):
        out.append(gap.value)
        out.append(tok.value)
    out.append(seq.gap_tags[-1].value)
    return " ".join(out)


def write_tags(seqs: Iterable[TagSeq], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in seqs:
            fh.write(format_tags(seq) + "\n")


_SRC_FILE = "src.txt"
_MT_FILE = "mt.txt"
_PE_FILE = "pe.txt"
_TAGS_FILE = "tags.txt"
_META_FILE = "meta.jsonl"


def write_dataset(dataset: Dataset, directory: str | Path) -> None:
    """Write a fully tagged dataset as plain-text files plus metadata.

    Emits ``src.txt``, ``mt.txt``, ``tags.txt``, ``meta.jsonl`` and, when
    the samples carry pseudo-PE sentences, ``pe.txt``. The result round-trips
    losslessly through :func:`read_dataset`. Samples must either all carry a
    PE or none of them.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for sample in dataset.samples:
        if sample.tags is None:
            raise ValueError(f"sample {sample.sample_id} is untagged")
    with_pe = [s for s in dataset.samples if s.pe is not None]
    if with_pe and len(with_pe) != len(dataset.samples):
        raise ValueError("dataset mixes samples with and without PE")
    write_plain((s.src for s in dataset.samples), directory / _SRC_FILE)
    write_plain((s.mt for s in dataset.samples), directory / _MT_FILE)
    if with_pe:
        write_plain((s.pe for s in dataset.samples), directory / _PE_FILE)
    write_tags((s.tags for s in dataset.samples), directory / _TAGS_FILE)
    with open(directory / _META_FILE, "w", encoding="utf-8") as fh:
        header = {"language_pair": dataset.language_pair, "samples": len(dataset)}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for sample in dataset.samples:
            fh.write(json.dumps({"id": sample.sample_id}) + "\n")


def read_dataset(directory: str | Path) -> Dataset:
    """Read a dataset directory written by :func:`write_dataset`."""
    directory = Path(directory)
    src = read_plain(directory / _SRC_FILE)
    mt = read_plain(directory / _MT_FILE)
    pe_path = directory / _PE_FILE
    pe = read_plain(pe_path) if pe_path.exists() else None
    tags = read_tags(directory / _TAGS_FILE, [len(s) for s in mt])
    with open(directory / _META_FILE, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records or "language_pair" not in records[0]:
        raise ValueError(f"{directory / _META_FILE}: missing header record")
    header, id_records = records[0], records[1:]
    if not (len(src) == len(mt) == len(tags) == len(id_records)):
        raise ValueError(f"{directory}: file lengths disagree")
    if pe is not None and len(pe) != len(mt):
        raise ValueError(f"{directory}: pe.txt length disagrees")
    samples = []
    for k, rec in enumerate(id_records):
        samples.append(
            QeSample(
                sample_id=rec["id"],
                src=tuple(src[k]),
                mt=tuple(mt[k]),
                pe=tuple(pe[k]) if pe is not None else None,
                tags=tags[k],
            )
        )
    return Dataset(tuple(samples), language_pair=header["language_pair"])
