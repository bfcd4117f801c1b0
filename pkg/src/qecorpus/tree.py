"""Bracketed constituency trees over MT sentences.

Trees are input, not computed here: one Penn-Treebank-style s-expression per
MT line, e.g. ``(S (NP (DT the) (NN cat)) (VP (VBD slept)))``. Parsing
computes token spans by leaf counting, strips function annotations from
labels (``NP-SBJ`` becomes ``NP``) and drops trace subtrees (``-NONE-``).
For sentences without a parse, :func:`flat_tree` builds the degenerate
root-over-preterminals tree so downstream span annotation still runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .phrase import Span

__all__ = [
    "TreeNode",
    "ConstituentTree",
    "parse_bracketed",
    "serialize",
    "candidate_nodes",
    "flat_tree",
]

TRACE_LABEL = "-NONE-"


@dataclass(frozen=True)
class TreeNode:
    """A constituent (internal node) or a single token (leaf)."""

    label: str
    span: Span
    children: tuple["TreeNode", ...] = ()
    leaf_token: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if self.is_leaf:
            if self.children:
                raise ValueError("leaf node cannot have children")
            if len(self.span) != 1:
                raise ValueError("leaf must cover exactly one token")
        else:
            if not self.children:
                raise ValueError("internal node needs children")
            if self.span.l != self.children[0].span.l or (
                self.span.r != self.children[-1].span.r
            ):
                raise ValueError("node span must equal the union of child spans")
            for left, right in zip(self.children, self.children[1:]):
                if right.span.l != left.span.r + 1:
                    raise ValueError("child spans must be adjacent and ordered")

    @property
    def is_leaf(self) -> bool:
        return self.leaf_token is not None

    def leaves(self) -> Iterator["TreeNode"]:
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def preorder(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.children:
            yield from child.preorder()


@dataclass(frozen=True)
class ConstituentTree:
    root: TreeNode
    token_count: int

    def __post_init__(self) -> None:
        if self.root.span != Span(0, self.token_count - 1):
            raise ValueError("root span must cover the whole sentence")

    def tokens(self) -> list[str]:
        return [leaf.leaf_token for leaf in self.root.leaves()]


def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    atom = []
    for ch in text:
        if ch in "()":
            if atom:
                out.append("".join(atom))
                atom = []
            out.append(ch)
        elif ch.isspace():
            if atom:
                out.append("".join(atom))
                atom = []
        else:
            atom.append(ch)
    if atom:
        out.append("".join(atom))
    return out


def _strip_label(label: str) -> str:
    # drop function tags and coindexing: NP-SBJ-1 -> NP, S=2 -> S; leave
    # labels that *start* with a marker (-LRB-, -NONE-) intact
    for sep in "-=":
        head = label.split(sep, 1)[0]
        if head:
            label = head
    return label


# raw parse tree before trace removal and span assignment
_RawNode = tuple  # (label, children) where children mix _RawNode and str


def _parse_node(tokens: list[str], pos: int) -> tuple[_RawNode, int]:
    if pos >= len(tokens) or tokens[pos] != "(":
        raise ValueError("expected '('")
    pos += 1
    if pos >= len(tokens) or tokens[pos] in "()":
        raise ValueError("empty constituent: missing label")
    label = tokens[pos]
    pos += 1
    children: list = []
    while True:
        if pos >= len(tokens):
            raise ValueError("unbalanced parentheses")
        tok = tokens[pos]
        if tok == ")":
            if not children:
                raise ValueError(f"empty constituent ({label})")
            return (label, children), pos + 1
        if tok == "(":
            child, pos = _parse_node(tokens, pos)
            children.append(child)
        else:
            children.append(tok)
            pos += 1


def _drop_traces(raw: _RawNode) -> Optional[_RawNode]:
    label, children = raw
    if label == TRACE_LABEL:
        return None
    kept = []
    for child in children:
        if isinstance(child, str):
            kept.append(child)
        else:
            sub = _drop_traces(child)
            if sub is not None:
                kept.append(sub)
    if not kept:
        return None
    return (label, kept)


def _build(raw: _RawNode, next_index: int) -> tuple[TreeNode, int]:
    label, children = raw
    built: list[TreeNode] = []
    for child in children:
        if isinstance(child, str):
            built.append(
                TreeNode("", Span(next_index, next_index), leaf_token=child)
            )
            next_index += 1
        else:
            node, next_index = _build(child, next_index)
            built.append(node)
    span = Span(built[0].span.l, built[-1].span.r)
    return TreeNode(_strip_label(label), span, tuple(built)), next_index


def parse_bracketed(
    text: str, tokens: Optional[Sequence[str]] = None
) -> ConstituentTree:
    """Parse one bracketed tree; optionally check leaves against the MT
    sentence it is supposed to cover."""
    stream = _tokenize(text)
    if not stream:
        raise ValueError("empty tree")
    raw, pos = _parse_node(stream, 0)
    if pos != len(stream):
        raise ValueError("trailing content after tree")
    raw = _drop_traces(raw)
    if raw is None:
        raise ValueError("tree contains no tokens after trace removal")
    root, count = _build(raw, 0)
    tree = ConstituentTree(root, count)
    if tokens is not None:
        leaves = tree.tokens()
        if list(tokens) != leaves:
            raise ValueError(
                f"tree leaves {leaves!r} do not match sentence {list(tokens)!r}"
            )
    return tree


def serialize(tree: ConstituentTree) -> str:
    """Canonical single-space bracketed form of the tree."""

    def render(node: TreeNode) -> str:
        if node.is_leaf:
            return node.leaf_token
        inner = " ".join(render(c) for c in node.children)
        return f"({node.label} {inner})"

    return render(tree.root)


def candidate_nodes(
    tree: ConstituentTree, min_span: int = 1, max_span: Optional[int] = None
) -> list[TreeNode]:
    """Internal nodes (preterminals included) with span length in range,
    in pre-order."""
    out = []
    for node in tree.root.preorder():
        if node.is_leaf:
            continue
        width = len(node.span)
        if width < min_span:
            continue
        if max_span is not None and width > max_span:
            continue
        out.append(node)
    return out


def flat_tree(tokens: Sequence[str]) -> ConstituentTree:
    """Fallback tree: one preterminal per token under a single root."""
    if not tokens:
        raise ValueError("cannot build a tree over an empty sentence")
    preterminals = tuple(
        TreeNode(
            "X",
            Span(k, k),
            (TreeNode("", Span(k, k), leaf_token=tok),),
        )
        for k, tok in enumerate(tokens)
    )
    root = TreeNode("TOP", Span(0, len(tokens) - 1), preterminals)
    return ConstituentTree(root, len(tokens))
