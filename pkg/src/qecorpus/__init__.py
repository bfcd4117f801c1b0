"""Construct and correct word-level MT quality-estimation corpora.

The pipeline tags machine-translation output OK/BAD by edit-distance
alignment against a pseudo-post-edit (the target side of a parallel
corpus), then optionally corrects those tags toward human-judgment
semantics using perplexity-scored phrase substitution, either to refine
existing BAD spans or to re-annotate constituent spans from scratch.
"""

from .align import Alignment, BidirectionalAligner, WordAligner, symmetrize
from .corpus import Dataset, QeSample, Tag, TagSeq, read_dataset, write_dataset
from .correct import (
    CorrectionParams,
    Strategy,
    build_artificial_corpus,
    extract_bad_spans,
    length_filter,
    refine_tags,
    tree_annotate,
)
from .lm import NGramLanguageModel, PplDelta
from .metrics import Confusion, StatsReport, confusion, dataset_stats, f1, mcc, span_f1
from .phrase import PhrasePair, Span, extract_phrases, project_span
from .ter import EditOp, EditScript, greedy_shift_align, levenshtein_align, ter_score, ter_tags
from .tree import ConstituentTree, TreeNode, candidate_nodes, flat_tree, parse_bracketed

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "BidirectionalAligner",
    "WordAligner",
    "symmetrize",
    "Dataset",
    "QeSample",
    "Tag",
    "TagSeq",
    "read_dataset",
    "write_dataset",
    "CorrectionParams",
    "Strategy",
    "build_artificial_corpus",
    "extract_bad_spans",
    "length_filter",
    "refine_tags",
    "tree_annotate",
    "NGramLanguageModel",
    "PplDelta",
    "Confusion",
    "StatsReport",
    "confusion",
    "dataset_stats",
    "f1",
    "mcc",
    "span_f1",
    "PhrasePair",
    "Span",
    "extract_phrases",
    "project_span",
    "EditOp",
    "EditScript",
    "greedy_shift_align",
    "levenshtein_align",
    "ter_score",
    "ter_tags",
    "ConstituentTree",
    "TreeNode",
    "candidate_nodes",
    "flat_tree",
    "parse_bracketed",
    "__version__",
]
