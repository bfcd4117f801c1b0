"""Interpolated Kneser-Ney n-gram language model.

Counts use the standard construction: raw counts at the top order,
continuation counts (number of distinct one-token left extensions) at every
lower order, and a fixed discount of 0.75 throughout. The unigram level is
interpolated with a uniform distribution over the vocabulary plus an
unknown-word entry, so no token ever scores zero. Sentences may be padded
with start/end symbols; n-grams ending in the start symbol are never counted
or predicted.

A separate MLE mode (no smoothing, relative frequencies only) exists so that
small worked examples have exact, hand-checkable probabilities. MLE models
cannot be serialized.

Perplexity is exp of the negative mean log-probability, so its value does
not depend on the logarithm base used internally (tables store log10, like
the usual text format for back-off models).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .phrase import Span

__all__ = [
    "NGramLanguageModel",
    "PplDelta",
    "KN_DISCOUNT",
    "BOS",
    "EOS",
    "UNK",
]

KN_DISCOUNT = 0.75
BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

# placeholder logprob for backoff-only entries in the serialized format
_NO_PROB = -99.0

NGram = tuple[str, ...]


@dataclass(frozen=True)
class PplDelta:
    """Perplexity before and after a substitution; negative delta means the
    substitution made the sentence more fluent under the model."""

    before: float
    after: float
    delta: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.before > 0 and self.after > 0):
            raise ValueError("perplexities must be positive")
        object.__setattr__(self, "delta", self.after - self.before)


def _count_ngrams(
    sentences: Sequence[Sequence[str]], order: int, use_boundaries: bool
) -> list[dict[NGram, int]]:
    """Raw window counts for every length 1..order, skipping windows that
    end in the start symbol (it is context only, never an event)."""
    counts: list[dict[NGram, int]] = [{} for _ in range(order + 1)]
    for sent in sentences:
        seq = list(sent)
        if use_boundaries:
            seq = [BOS] * (order - 1) + seq + [EOS]
        for k in range(1, order + 1):
            table = counts[k]
            for start in range(len(seq) - k + 1):
                gram = tuple(seq[start : start + k])
                if gram[-1] == BOS:
                    continue
                table[gram] = table.get(gram, 0) + 1
    return counts


class NGramLanguageModel(BaseEstimator):
    """Kneser-Ney smoothed n-gram model over tokenized sentences.

    Parameters
    ----------
    order : int, default=3
        Maximum n-gram length, between 1 and 5.
    use_boundaries : bool, default=True
        Pad each sentence with ``order - 1`` start symbols and one end
        symbol, for training and scoring alike. The end symbol is a scored
        event.
    mle : bool, default=False
        Relative-frequency mode without smoothing or backoff. Unseen events
        score zero and perplexity becomes infinite.

    Attributes
    ----------
    vocab_ : frozenset of str
        Predictable token types seen in training (includes the end symbol
        when boundaries are on; never the start symbol).
    prob_ : dict
        log10 conditional probability per counted n-gram, plus the
        unknown-word unigram.
    backoff_ : dict
        log10 backoff weight per observed context.
    """

    def __init__(self, order: int = 3, use_boundaries: bool = True, mle: bool = False):
        self.order = order
        self.use_boundaries = use_boundaries
        self.mle = mle

    # ------------------------------------------------------------ training

    def fit(self, corpus: Sequence[Sequence[str]], y=None) -> "NGramLanguageModel":
        if not corpus:
            raise ValueError("training corpus is empty")
        if not 1 <= self.order <= 5:
            raise ValueError("order must be between 1 and 5")
        raw = _count_ngrams(corpus, self.order, self.use_boundaries)
        self.vocab_ = frozenset(g[0] for g in raw[1])
        if not self.vocab_:
            raise ValueError("training corpus has no tokens")
        if self.mle:
            self._tables = raw
            self._totals = [
                _context_totals(table) for table in self._tables
            ]
            return self
        # event tables per level: raw at the top, continuation below
        tables: list[dict[NGram, int]] = [{} for _ in range(self.order + 1)]
        tables[self.order] = raw[self.order]
        for k in range(1, self.order):
            cont: dict[NGram, int] = {}
            seen: set[NGram] = set()
            for gram in raw[k + 1]:
                key = gram[1:]
                pair = gram[:1] + key
                if pair not in seen:
                    seen.add(pair)
                    cont[key] = cont.get(key, 0) + 1
            tables[k] = cont
        self._tables = tables
        self._totals = [_context_totals(table) for table in tables]
        self._build_arpa()
        return self

    def _interp_prob(self, gram: NGram) -> float:
        """Interpolated KN probability of gram[-1] given gram[:-1], linear."""
        uniform = 1.0 / (len(self.vocab_) + 1)
        if not gram[:-1]:
            table, totals = self._tables[1], self._totals[1]
            denom = totals.get((), 0)
            if denom == 0:
                # no unigram evidence at all (e.g. order > 1 without
                # boundaries on single-token sentences): all mass uniform
                return uniform
            count = table.get(gram, 0)
            types = len(table)
            return (
                max(count - KN_DISCOUNT, 0.0) / denom
                + KN_DISCOUNT * types / denom * uniform
            )
        k = len(gram)
        table, totals = self._tables[k], self._totals[k]
        context = gram[:-1]
        denom = totals.get(context, 0)
        lower = self._interp_prob(gram[1:])
        if denom == 0:
            return lower
        count = table.get(gram, 0)
        distinct = self._distinct[k][context]
        return (
            max(count - KN_DISCOUNT, 0.0) / denom
            + KN_DISCOUNT * distinct / denom * lower
        )

    def _build_arpa(self) -> None:
        self._distinct: list[dict[NGram, int]] = [{} for _ in range(self.order + 1)]
        for k in range(2, self.order + 1):
            for gram in self._tables[k]:
                ctx = gram[:-1]
                self._distinct[k][ctx] = self._distinct[k].get(ctx, 0) + 1
        prob: dict[NGram, float] = {}
        backoff: dict[NGram, float] = {}
        for k in range(1, self.order + 1):
            for gram in self._tables[k]:
                prob[gram] = math.log10(self._interp_prob(gram))
        uniform = 1.0 / (len(self.vocab_) + 1)
        denom1 = self._totals[1].get((), 0)
        prob[(UNK,)] = math.log10(
            KN_DISCOUNT * len(self._tables[1]) / denom1 * uniform
            if denom1
            else uniform
        )
        for k in range(1, self.order):
            for context, denom in self._totals[k + 1].items():
                if denom > 0:
                    distinct = self._distinct[k + 1][context]
                    backoff[context] = math.log10(KN_DISCOUNT * distinct / denom)
        self.prob_ = prob
        self.backoff_ = backoff

    # ------------------------------------------------------------- scoring

    def _normalize(self, token: str) -> str:
        return token if token in self.vocab_ or token == BOS else UNK

    def _logprob10(self, history: NGram, word: str) -> float:
        gram = history + (word,)
        if gram in self.prob_:
            return self.prob_[gram]
        if history:
            bo = self.backoff_.get(history, 0.0)
            return bo + self._logprob10(history[1:], word)
        return self.prob_[(UNK,)]

    def _mle_prob(self, history: NGram, word: str) -> float:
        k = len(history) + 1
        denom = self._totals[k].get(history, 0)
        if denom == 0:
            return 0.0
        return self._tables[k].get(history + (word,), 0) / denom

    def token_logprobs(self, sentence: Sequence[str]) -> list[float]:
        """log10 probability of each scored event, end symbol included when
        boundaries are on."""
        check_is_fitted(self, "vocab_")
        if not sentence:
            raise ValueError("cannot score an empty sentence")
        if self.mle:
            seq = list(sentence)
            if self.use_boundaries:
                seq = [BOS] * (self.order - 1) + seq + [EOS]
                events = range(self.order - 1, len(seq))
            else:
                events = range(len(seq))
            out = []
            for pos in events:
                history = tuple(seq[max(0, pos - self.order + 1) : pos])
                p = self._mle_prob(history, seq[pos])
                out.append(math.log10(p) if p > 0 else -math.inf)
            return out
        seq = [self._normalize(t) for t in sentence]
        if self.use_boundaries:
            seq = [BOS] * (self.order - 1) + seq + [EOS]
            events = range(self.order - 1, len(seq))
        else:
            events = range(len(seq))
        return [
            self._logprob10(
                tuple(seq[max(0, pos - self.order + 1) : pos]), seq[pos]
            )
            for pos in events
        ]

    def perplexity(self, sentence: Sequence[str]) -> float:
        """exp of the negative mean natural-log probability per event."""
        logs = self.token_logprobs(sentence)
        if any(math.isinf(lp) for lp in logs):
            return math.inf
        mean_ln = sum(logs) / len(logs) * math.log(10.0)
        return math.exp(-mean_ln)

    def delta_ppl(
        self, sentence: Sequence[str], span: Span, replacement: Sequence[str]
    ) -> PplDelta:
        """Perplexity change from splicing ``replacement`` over ``span``."""
        if span.r >= len(sentence):
            raise ValueError(f"span {span} out of range")
        substituted = list(sentence[: span.l]) + list(replacement) + list(
            sentence[span.r + 1 :]
        )
        if not substituted:
            raise ValueError("substitution yields an empty sentence")
        return PplDelta(
            before=self.perplexity(sentence), after=self.perplexity(substituted)
        )

    # ------------------------------------------------------- serialization

    def save(self, path: str | Path) -> None:
        """Write the model as sorted "logprob<TAB>ngram<TAB>backoff" lines.

        Contexts that are never events themselves (start-symbol prefixes)
        get a ``-99`` placeholder in the logprob column so their backoff
        weight survives the round trip.
        """
        check_is_fitted(self, "vocab_")
        if self.mle:
            raise ValueError("MLE mode models cannot be serialized")
        n_unigrams = sum(1 for g in self.prob_ if len(g) == 1)
        entries = set(self.prob_) | set(self.backoff_)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                f"order\t{self.order}\tvocab\t{n_unigrams}"
                f"\tboundaries\t{int(self.use_boundaries)}\n"
            )
            for k in range(1, self.order + 1):
                for gram in sorted(g for g in entries if len(g) == k):
                    lp = self.prob_[gram] if gram in self.prob_ else _NO_PROB
                    bo = self.backoff_.get(gram, 0.0)
                    fh.write(f"{lp!r}\t{' '.join(gram)}\t{bo!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "NGramLanguageModel":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if len(header) != 6 or header[0] != "order":
                raise ValueError(f"{path}: not a serialized n-gram model")
            model = cls(order=int(header[1]), use_boundaries=bool(int(header[5])))
            prob: dict[NGram, float] = {}
            backoff: dict[NGram, float] = {}
            for line in fh:
                lp, gram_text, bo = line.rstrip("\n").split("\t")
                gram = tuple(gram_text.split(" "))
                if float(lp) != _NO_PROB:
                    prob[gram] = float(lp)
                if float(bo) != 0.0:
                    backoff[gram] = float(bo)
        model.prob_ = prob
        model.backoff_ = backoff
        model.vocab_ = frozenset(g[0] for g in prob if len(g) == 1 and g[0] != UNK)
        return model


def _context_totals(table: dict[NGram, int]) -> dict[NGram, int]:
    totals: dict[NGram, int] = {}
    for gram, count in table.items():
        ctx = gram[:-1]
        totals[ctx] = totals.get(ctx, 0) + count
    return totals
