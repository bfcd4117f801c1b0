"""Evaluation metrics and dataset diagnostics for word-level QE tags.

BAD is the positive class everywhere. Metrics are pooled over the corpus
(one confusion for all samples), not macro-averaged. Span F1 requires exact
boundary matches between maximal BAD runs; there is no partial credit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .corpus import Dataset, Tag, TagSeq
from .correct import extract_bad_spans

__all__ = [
    "Confusion",
    "StatsReport",
    "confusion",
    "mcc",
    "f1",
    "span_f1",
    "dataset_stats",
]


@dataclass(frozen=True)
class Confusion:
    """Binary confusion counts with BAD as the positive class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )


def _paired_tags(
    gold: Sequence[TagSeq], pred: Sequence[TagSeq], include_gaps: bool
):
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold samples vs {len(pred)} predicted")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sample {k}: {len(g)} gold tags vs {len(p)}")
        yield from zip(g.token_tags, p.token_tags)
        if include_gaps:
            if g.gap_tags is None or p.gap_tags is None:
                raise ValueError(f"sample {k}: gap tags required but missing")
            yield from zip(g.gap_tags, p.gap_tags)


def confusion(
    gold: Sequence[TagSeq], pred: Sequence[TagSeq], include_gaps: bool = False
) -> Confusion:
    """Pool token-tag decisions; with ``include_gaps`` the gap tags join the
    compared stream (2n + 1 positions per sample instead of n)."""
    tp = fp = fn = tn = 0
    for g, p in _paired_tags(gold, pred, include_gaps):
        if g is Tag.BAD:
            if p is Tag.BAD:
                tp += 1
            else:
                fn += 1
        else:
            if p is Tag.BAD:
                fp += 1
            else:
                tn += 1
    return Confusion(tp, fp, fn, tn)


def mcc(c: Confusion) -> float:
    """Matthews correlation; 0 whenever a denominator factor is zero."""
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def f1(c: Confusion, positive: Tag = Tag.BAD) -> float:
    """Per-class F1; 0 when precision or recall is undefined."""
    if positive is Tag.BAD:
        tp, pred_pos, gold_pos = c.tp, c.tp + c.fp, c.tp + c.fn
    else:
        tp, pred_pos, gold_pos = c.tn, c.tn + c.fn, c.tn + c.fp
    if pred_pos == 0 or gold_pos == 0:
        return 0.0
    precision = tp / pred_pos
    recall = tp / gold_pos
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def span_f1(gold: Sequence[TagSeq], pred: Sequence[TagSeq]) -> float:
    """Exact-boundary F1 over maximal BAD spans, pooled over the corpus."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold samples vs {len(pred)} predicted")
    matches = n_gold = n_pred = 0
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sample {k}: {len(g)} gold tags vs {len(p)}")
        gold_spans = set(extract_bad_spans(g))
        pred_spans = set(extract_bad_spans(p))
        matches += len(gold_spans & pred_spans)
        n_gold += len(gold_spans)
        n_pred += len(pred_spans)
    if n_gold == 0 or n_pred == 0:
        return 0.0
    precision = matches / n_pred
    recall = matches / n_gold
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class StatsReport:
    """Raw dataset counts; percentages derive from these and are rounded
    only at display time."""

    samples: int
    tokens: int
    bad_tokens: int
    gap_positions: int
    bad_gaps: int
    span_length_hist: dict[int, int]
    spans_per_sample_hist: dict[int, int]
    all_ok_samples: int

    @property
    def bad_token_pct(self) -> float:
        return 100.0 * self.bad_tokens / self.tokens if self.tokens else 0.0

    @property
    def bad_gap_pct(self) -> float:
        if not self.gap_positions:
            return 0.0
        return 100.0 * self.bad_gaps / self.gap_positions

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "tokens": self.tokens,
            "bad_tokens": self.bad_tokens,
            "bad_token_pct": round(self.bad_token_pct, 2),
            "gap_positions": self.gap_positions,
            "bad_gaps": self.bad_gaps,
            "bad_gap_pct": round(self.bad_gap_pct, 2),
            "span_length_hist": {
                str(k): v for k, v in sorted(self.span_length_hist.items())
            },
            "spans_per_sample_hist": {
                str(k): v for k, v in sorted(self.spans_per_sample_hist.items())
            },
            "all_ok_samples": self.all_ok_samples,
        }


def dataset_stats(dataset: Dataset) -> StatsReport:
    """Counts, percentages and histograms describing a tagged dataset.

    Gap statistics cover only samples that carry gap tags; a sample of n
    tokens contributes n + 1 gap positions.
    """
    tokens = bad_tokens = gap_positions = bad_gaps = all_ok = 0
    span_length_hist: dict[int, int] = {}
    spans_per_sample_hist: dict[int, int] = {}
    for sample in dataset:
        tags = sample.tags
        if tags is None:
            raise ValueError(f"sample {sample.sample_id} is untagged")
        tokens += len(tags)
        bad_tokens += tags.bad_token_count
        if tags.gap_tags is not None:
            gap_positions += len(tags.gap_tags)
            bad_gaps += tags.bad_gap_count
        if tags.all_ok():
            all_ok += 1
        spans = extract_bad_spans(tags)
        spans_per_sample_hist[len(spans)] = (
            spans_per_sample_hist.get(len(spans), 0) + 1
        )
        for span in spans:
            span_length_hist[len(span)] = span_length_hist.get(len(span), 0) + 1
    return StatsReport(
        samples=len(dataset),
        tokens=tokens,
        bad_tokens=bad_tokens,
        gap_positions=gap_positions,
        bad_gaps=bad_gaps,
        span_length_hist=span_length_hist,
        spans_per_sample_hist=spans_per_sample_hist,
        all_ok_samples=all_ok,
    )
