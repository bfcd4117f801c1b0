"""Tag-correcting strategies and the artificial-corpus builder.

TER-based tags treat every divergence from the pseudo-post-edit as an error,
which overproduces BAD. Two strategies pull the tags toward
human-judgment semantics, both scoring candidate substitutions with a
language model:

* *refinement* keeps the TER tags but flips a whole BAD span back to OK when
  replacing it with its aligned pseudo-PE phrase barely moves sentence
  perplexity (the MT phrasing is an acceptable paraphrase);
* *tree annotation* discards the TER tags, scores every constituent node by
  the normalized perplexity drop its aligned substitution yields, and marks
  the best-improving non-overlapping constituents BAD (a strongly improving
  substitution means the original constituent was wrong).

Thresholds follow the after-minus-before delta convention throughout:
negative delta means the substitution improved fluency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .align import Alignment, BidirectionalAligner
from .corpus import Dataset, QeSample, Tag, TagSeq
from .lm import NGramLanguageModel
from .phrase import Span, project_span
from .ter import ter_tags
from .tree import ConstituentTree, TreeNode, candidate_nodes, flat_tree

__all__ = [
    "Strategy",
    "CorrectionParams",
    "ScoredNode",
    "extract_bad_spans",
    "refine_tags",
    "tree_annotate",
    "length_filter",
    "build_artificial_corpus",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "DEFAULT_MIN_TOKENS",
    "DEFAULT_MAX_TOKENS",
]

DEFAULT_ALPHA = 1.0
DEFAULT_BETA = -3.0
DEFAULT_MIN_TOKENS = 10
DEFAULT_MAX_TOKENS = 100


class Strategy(str, Enum):
    TER_ONLY = "ter-only"
    REFINE = "refine"
    TREE_ANNOTATE = "tree-annotate"


@dataclass(frozen=True)
class CorrectionParams:
    """Thresholds and strategy choice for corpus construction.

    ``alpha`` bounds |delta-ppl| under which a refined BAD span flips to OK;
    ``beta`` is the signed delta-ppl-per-token below which a constituent is
    annotated BAD.
    """

    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    strategy: Strategy = Strategy.TER_ONLY

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


@dataclass(frozen=True)
class ScoredNode:
    """A constituent with its aligned PE span and substitution scores."""

    node: TreeNode
    pe_span: Span
    delta_ppl: float
    delta_ppl_norm: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "delta_ppl_norm", self.delta_ppl / len(self.node.span)
        )


def extract_bad_spans(tags: TagSeq) -> list[Span]:
    """Maximal runs of BAD token tags, left to right."""
    spans: list[Span] = []
    start: Optional[int] = None
    for k, tag in enumerate(tags.token_tags):
        if tag is Tag.BAD:
            if start is None:
                start = k
        elif start is not None:
            spans.append(Span(start, k - 1))
            start = None
    if start is not None:
        spans.append(Span(start, len(tags.token_tags) - 1))
    return spans


def _require_pe_and_tags(sample: QeSample) -> None:
    if sample.pe is None:
        raise ValueError(f"sample {sample.sample_id} has no pseudo-PE")
    if sample.tags is None:
        raise ValueError(f"sample {sample.sample_id} has no tags")


def refine_tags(
    sample: QeSample,
    align: Alignment,
    lm: NGramLanguageModel,
    alpha: float = DEFAULT_ALPHA,
    audit: Optional[list[dict]] = None,
) -> TagSeq:
    """Flip BAD spans to OK when their aligned PE substitution is fluency
    neutral (|delta| < alpha). OK tags and gap tags are never touched.

    Spans without a consistent PE projection stay as they are. When
    ``audit`` is given, one record is appended per flipped span.
    """
    _require_pe_and_tags(sample)
    tags = sample.tags
    token_tags = list(tags.token_tags)
    for span in extract_bad_spans(tags):
        pe_span = project_span(align, span, len(sample.pe))
        if pe_span is None:
            continue
        replacement = sample.pe[pe_span.l : pe_span.r + 1]
        delta = lm.delta_ppl(sample.mt, span, replacement).delta
        if abs(delta) < alpha:
            for k in range(span.l, span.r + 1):
                token_tags[k] = Tag.OK
            if audit is not None:
                audit.append(
                    {
                        "id": sample.sample_id,
                        "span": [span.l, span.r],
                        "delta_ppl": delta,
                        "decision": "flipped_ok",
                    }
                )
    return TagSeq(tuple(token_tags), tags.gap_tags)


def score_nodes(
    sample: QeSample,
    tree: ConstituentTree,
    align: Alignment,
    lm: NGramLanguageModel,
) -> list[ScoredNode]:
    """Score every projectable candidate constituent by substitution."""
    if sample.pe is None:
        raise ValueError(f"sample {sample.sample_id} has no pseudo-PE")
    scored = []
    for node in candidate_nodes(tree):
        pe_span = project_span(align, node.span, len(sample.pe))
        if pe_span is None:
            continue
        replacement = sample.pe[pe_span.l : pe_span.r + 1]
        delta = lm.delta_ppl(sample.mt, node.span, replacement).delta
        scored.append(ScoredNode(node, pe_span, delta))
    return scored


def tree_annotate(
    sample: QeSample,
    tree: ConstituentTree,
    align: Alignment,
    lm: NGramLanguageModel,
    beta: float = DEFAULT_BETA,
    audit: Optional[list[dict]] = None,
) -> TagSeq:
    """Re-annotate from scratch using constituent substitutions.

    Candidates are ranked by delta-ppl-per-token ascending (ties: wider
    span, then leftmost). Walking down the ranking, a node is selected when
    its score is below ``beta`` and its span does not overlap an already
    selected one. Selected spans become BAD; everything else, gaps
    included, is OK. Input tags play no role.
    """
    if list(tree.tokens()) != list(sample.mt):
        raise ValueError(
            f"sample {sample.sample_id}: tree leaves do not match MT tokens"
        )
    scored = score_nodes(sample, tree, align, lm)
    scored.sort(key=lambda sn: (sn.delta_ppl_norm, -len(sn.node.span), sn.node.span.l))
    selected: list[Span] = []
    for sn in scored:
        if sn.delta_ppl_norm >= beta:
            break  # sorted ascending: nothing further can pass
        span = sn.node.span
        if any(span.overlaps(prev) for prev in selected):
            continue
        selected.append(span)
        if audit is not None:
            audit.append(
                {
                    "id": sample.sample_id,
                    "span": [span.l, span.r],
                    "delta_ppl": sn.delta_ppl,
                    "decision": "selected_bad",
                }
            )
    n = len(sample.mt)
    token_tags = [Tag.OK] * n
    for span in selected:
        for k in range(span.l, span.r + 1):
            token_tags[k] = Tag.BAD
    return TagSeq(tuple(token_tags), tuple([Tag.OK] * (n + 1)))


def length_filter(
    parallel: Sequence[tuple[Sequence[str], Sequence[str]]],
    mt_outputs: Sequence[Sequence[str]],
    min_tokens: int = DEFAULT_MIN_TOKENS,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> tuple[
    list[tuple[tuple[str, ...], tuple[str, ...]]],
    list[tuple[str, ...]],
    list[int],
]:
    """Keep samples whose source and target both have min..max tokens.

    Samples with an empty MT output are dropped as well (they cannot be
    tagged). Returns the kept pairs, kept MT sentences, and the original
    indices of the kept samples.
    """
    if len(parallel) != len(mt_outputs):
        raise ValueError("parallel corpus and MT outputs differ in length")
    kept_pairs, kept_mt, kept_indices = [], [], []
    for k, ((src, tgt), mt) in enumerate(zip(parallel, mt_outputs)):
        if not mt:
            continue
        if min_tokens <= len(src) <= max_tokens and (
            min_tokens <= len(tgt) <= max_tokens
        ):
            kept_pairs.append((tuple(src), tuple(tgt)))
            kept_mt.append(tuple(mt))
            kept_indices.append(k)
    return kept_pairs, kept_mt, kept_indices


def build_artificial_corpus(
    parallel: Sequence[tuple[Sequence[str], Sequence[str]]],
    mt_outputs: Sequence[Sequence[str]],
    params: CorrectionParams,
    aligner: Optional[BidirectionalAligner] = None,
    lm: Optional[NGramLanguageModel] = None,
    trees: Optional[Sequence[Optional[ConstituentTree]]] = None,
    language_pair: str = "",
    use_shifts: bool = False,
    audit: Optional[list[dict]] = None,
) -> Dataset:
    """Tag every sample against its pseudo-PE, then apply the strategy.

    The target side of each parallel pair is taken as the pseudo-PE. Inputs
    are expected aligned 1:1 and already length-filtered (see
    :func:`length_filter`). ``trees`` entries may be None; the flat fallback
    tree is used there. ``aligner`` and ``lm`` are required for the two
    correcting strategies, unused otherwise.
    """
    if len(parallel) != len(mt_outputs):
        raise ValueError("parallel corpus and MT outputs differ in length")
    if trees is not None and len(trees) != len(mt_outputs):
        raise ValueError("trees and MT outputs differ in length")
    if params.strategy is not Strategy.TER_ONLY and (aligner is None or lm is None):
        raise ValueError(f"strategy {params.strategy.value} needs aligner and lm")
    samples = []
    for k, ((src, tgt), mt) in enumerate(zip(parallel, mt_outputs)):
        pe = tuple(tgt)
        mt = tuple(mt)
        sample = QeSample(
            sample_id=k,
            src=tuple(src),
            mt=mt,
            pe=pe,
            tags=ter_tags(mt, pe, use_shifts=use_shifts),
        )
        if params.strategy is not Strategy.TER_ONLY:
            align = aligner.align(mt, pe)
            if params.strategy is Strategy.REFINE:
                tags = refine_tags(sample, align, lm, params.alpha, audit)
            else:
                tree = trees[k] if trees is not None and trees[k] else flat_tree(mt)
                tags = tree_annotate(sample, tree, align, lm, params.beta, audit)
            sample = sample.with_tags(tags)
        samples.append(sample)
    return Dataset(tuple(samples), language_pair=language_pair)
