"""EM-trained word alignment with a diagonal position prior.

The model is IBM Model 1 extended with a reparameterized diagonal prior: the
probability that target position j (1-based, length n) aligns to source
position i (1-based, length m) is proportional to exp(-tension * |i/m - j/n|),
with a fixed share ``null_prob`` of the mass reserved for the null source
word. Training is plain EM from a uniform initialization, so results are
fully deterministic for a given corpus and iteration count.

Estimators follow the scikit-learn convention: hyperparameters in
``__init__``, learned state in trailing-underscore attributes set by
``fit``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "Alignment",
    "WordAligner",
    "BidirectionalAligner",
    "symmetrize",
    "parse_alignment",
    "format_alignment",
]

# Key used for the null source word in translation tables.
NULL_TOKEN: Optional[str] = None

SentencePair = tuple[Sequence[str], Sequence[str]]


@dataclass(frozen=True)
class Alignment:
    """A set of (source index, target index) links for one sentence pair."""

    links: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", frozenset(self.links))

    def __iter__(self):
        return iter(sorted(self.links))

    def __len__(self) -> int:
        return len(self.links)

    def __contains__(self, link: tuple[int, int]) -> bool:
        return link in self.links


def format_alignment(alignment: Alignment) -> str:
    """Render links as space-separated "i-j" pairs, sorted."""
    return " ".join(f"{i}-{j}" for i, j in alignment)


def parse_alignment(line: str) -> Alignment:
    """Parse a space-separated "i-j" pair line (empty line: no links)."""
    links = set()
    for part in line.split():
        left, sep, right = part.partition("-")
        if not sep or not left.isdigit() or not right.isdigit():
            raise ValueError(f"bad alignment link {part!r}")
        links.add((int(left), int(right)))
    return Alignment(frozenset(links))


def _diagonal_weights(m: int, n: int, j: int, tension: float) -> list[float]:
    # prior over source positions i (0-based here, 1-based in the formula)
    return [
        math.exp(-tension * abs((i + 1) / m - (j + 1) / n)) for i in range(m)
    ]


def _collect_counts(
    pairs: Sequence[SentencePair],
    table: dict[Optional[str], dict[str, float]],
    uniform: Optional[float],
    tension: float,
    null_prob: float,
) -> tuple[dict[Optional[str], dict[str, float]], float]:
    """E-step over one chunk: expected counts and the chunk log-likelihood."""

    def prob(s: Optional[str], t: str) -> float:
        if uniform is not None:
            return uniform
        return table.get(s, {}).get(t, 0.0)

    counts: dict[Optional[str], dict[str, float]] = {}
    loglik = 0.0
    for src, tgt in pairs:
        m, n = len(src), len(tgt)
        for j, t in enumerate(tgt):
            weights = _diagonal_weights(m, n, j, tension)
            z = sum(weights)
            posts = [
                (1.0 - null_prob) * (w / z) * prob(src[i], t)
                for i, w in enumerate(weights)
            ]
            null_post = null_prob * prob(NULL_TOKEN, t)
            total = null_post + sum(posts)
            if total <= 0.0:
                raise ValueError(f"token {t!r} has zero probability mass")
            loglik += math.log(total)
            counts.setdefault(NULL_TOKEN, {})
            counts[NULL_TOKEN][t] = counts[NULL_TOKEN].get(t, 0.0) + null_post / total
            for i, p in enumerate(posts):
                if p > 0.0:
                    row = counts.setdefault(src[i], {})
                    row[t] = row.get(t, 0.0) + p / total
    return counts, loglik


class WordAligner(BaseEstimator):
    """Directional word aligner trained by EM.

    Parameters
    ----------
    iterations : int, default=5
        Number of EM iterations.
    diagonal_tension : float, default=4.0
        Strength of the diagonal prior; must be positive. As it approaches
        zero the prior becomes position-uniform.
    null_prob : float, default=0.08
        Probability mass reserved for the null source word, in [0, 1).
    n_jobs : int, default=1
        Worker threads for the E-step. Counts are merged in chunk order, so
        the result does not depend on scheduling.

    Attributes
    ----------
    table_ : dict
        Sparse translation probabilities ``table_[source][target]``; the
        null word is keyed by ``None``. Every row sums to 1.
    log_likelihoods_ : list of float
        Corpus log-likelihood at each E-step, non-decreasing.
    """

    def __init__(
        self,
        iterations: int = 5,
        diagonal_tension: float = 4.0,
        null_prob: float = 0.08,
        n_jobs: int = 1,
    ):
        self.iterations = iterations
        self.diagonal_tension = diagonal_tension
        self.null_prob = null_prob
        self.n_jobs = n_jobs

    def _validate(self, pairs: Sequence[SentencePair]) -> None:
        if not pairs:
            raise ValueError("training corpus is empty")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.diagonal_tension <= 0:
            raise ValueError("diagonal_tension must be positive")
        if not 0.0 <= self.null_prob < 1.0:
            raise ValueError("null_prob must be in [0, 1)")
        for src, tgt in pairs:
            if not src or not tgt:
                raise ValueError("empty sentence in training corpus")

    def fit(self, pairs: Sequence[SentencePair], y=None) -> "WordAligner":
        """Estimate the translation table from (source, target) pairs."""
        pairs = [(tuple(s), tuple(t)) for s, t in pairs]
        self._validate(pairs)
        vocab = {t for _, tgt in pairs for t in tgt}
        uniform: Optional[float] = 1.0 / len(vocab)
        table: dict[Optional[str], dict[str, float]] = {}
        self.log_likelihoods_ = []
        for _ in range(self.iterations):
            counts, loglik = self._e_step(pairs, table, uniform)
            uniform = None
            table = {
                s: {t: c / total for t, c in row.items()}
                for s, row in counts.items()
                if (total := sum(row.values())) > 0.0
            }
            self.log_likelihoods_.append(loglik)
        self.table_ = table
        return self

    def _e_step(self, pairs, table, uniform):
        if self.n_jobs <= 1 or len(pairs) < 2 * self.n_jobs:
            return _collect_counts(
                pairs, table, uniform, self.diagonal_tension, self.null_prob
            )
        size = (len(pairs) + self.n_jobs - 1) // self.n_jobs
        chunks = [pairs[k : k + size] for k in range(0, len(pairs), size)]
        with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
            parts = list(
                pool.map(
                    lambda chunk: _collect_counts(
                        chunk, table, uniform, self.diagonal_tension, self.null_prob
                    ),
                    chunks,
                )
            )
        counts: dict[Optional[str], dict[str, float]] = {}
        loglik = 0.0
        for part, ll in parts:  # merged in chunk order: deterministic
            loglik += ll
            for s, row in part.items():
                dst = counts.setdefault(s, {})
                for t, c in row.items():
                    dst[t] = dst.get(t, 0.0) + c
        return counts, loglik

    def viterbi(self, src: Sequence[str], tgt: Sequence[str]) -> Alignment:
        """Best link per target position; null absorbs ties and unknowns."""
        check_is_fitted(self, "table_")
        if not src or not tgt:
            raise ValueError("both sentences must be non-empty")
        m, n = len(src), len(tgt)
        links = set()
        for j, t in enumerate(tgt):
            weights = _diagonal_weights(m, n, j, self.diagonal_tension)
            z = sum(weights)
            null_score = self.null_prob * self.table_.get(NULL_TOKEN, {}).get(t, 0.0)
            best_i, best_score = None, null_score
            for i, w in enumerate(weights):
                score = (
                    (1.0 - self.null_prob)
                    * (w / z)
                    * self.table_.get(src[i], {}).get(t, 0.0)
                )
                if score > best_score:
                    best_i, best_score = i, score
            if best_i is not None:
                links.add((best_i, j))
        return Alignment(frozenset(links))

    def predict(self, pairs: Iterable[SentencePair]) -> list[Alignment]:
        return [self.viterbi(src, tgt) for src, tgt in pairs]


def _grow_diag_final_and(
    inter: frozenset, union: frozenset
) -> frozenset[tuple[int, int]]:
    links = set(inter)
    covered_src = {i for i, _ in links}
    covered_tgt = {j for _, j in links}
    grew = True
    while grew:
        grew = False
        for i, j in sorted(links):
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    cand = (i + di, j + dj)
                    if cand in links or cand not in union:
                        continue
                    if cand[0] not in covered_src or cand[1] not in covered_tgt:
                        links.add(cand)
                        covered_src.add(cand[0])
                        covered_tgt.add(cand[1])
                        grew = True
    for i, j in sorted(union):
        if i not in covered_src and j not in covered_tgt:
            links.add((i, j))
            covered_src.add(i)
            covered_tgt.add(j)
    return frozenset(links)


def symmetrize(
    forward: Alignment, reverse: Alignment, heuristic: str = "grow-diag-final-and"
) -> Alignment:
    """Combine src->tgt and tgt->src alignments over the same sentence pair.

    ``reverse`` must already be expressed in (source index, target index)
    orientation, i.e. its links are comparable with ``forward``'s.
    """
    inter = forward.links & reverse.links
    union = forward.links | reverse.links
    if heuristic == "intersection":
        return Alignment(inter)
    if heuristic == "union":
        return Alignment(union)
    if heuristic == "grow-diag-final-and":
        return Alignment(_grow_diag_final_and(frozenset(inter), frozenset(union)))
    raise ValueError(f"unknown symmetrization heuristic {heuristic!r}")


class BidirectionalAligner(BaseEstimator):
    """Train one aligner per direction and symmetrize their decisions.

    Parameters mirror :class:`WordAligner`, plus the symmetrization
    ``heuristic`` (``intersection``, ``union`` or ``grow-diag-final-and``).
    """

    def __init__(
        self,
        iterations: int = 5,
        diagonal_tension: float = 4.0,
        null_prob: float = 0.08,
        heuristic: str = "grow-diag-final-and",
        n_jobs: int = 1,
    ):
        self.iterations = iterations
        self.diagonal_tension = diagonal_tension
        self.null_prob = null_prob
        self.heuristic = heuristic
        self.n_jobs = n_jobs

    def fit(self, pairs: Sequence[SentencePair], y=None) -> "BidirectionalAligner":
        pairs = [(tuple(s), tuple(t)) for s, t in pairs]
        kwargs = dict(
            iterations=self.iterations,
            diagonal_tension=self.diagonal_tension,
            null_prob=self.null_prob,
            n_jobs=self.n_jobs,
        )
        self.forward_ = WordAligner(**kwargs).fit(pairs)
        self.reverse_ = WordAligner(**kwargs).fit([(t, s) for s, t in pairs])
        return self

    def align(self, src: Sequence[str], tgt: Sequence[str]) -> Alignment:
        check_is_fitted(self, "forward_")
        fwd = self.forward_.viterbi(src, tgt)
        rev = self.reverse_.viterbi(tgt, src)
        rev_links = Alignment(frozenset((i, j) for j, i in rev.links))
        return symmetrize(fwd, rev_links, self.heuristic)

    def predict(self, pairs: Iterable[SentencePair]) -> list[Alignment]:
        return [self.align(src, tgt) for src, tgt in pairs]
