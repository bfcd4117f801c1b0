import math
import random

import pytest
from sklearn.exceptions import NotFittedError

from qecorpus.lm import BOS, EOS, UNK, NGramLanguageModel, PplDelta
from qecorpus.phrase import Span


def mle_unigram_model():
    # counts: a x3, b x1
    return NGramLanguageModel(order=1, use_boundaries=False, mle=True).fit(
        [["a", "a", "a", "b"]]
    )


def kn_bigram_model():
    return NGramLanguageModel(order=2).fit([["a", "b"], ["a", "b"]])


def random_corpus(rng, vocab="abc", n_sentences=8, max_len=5):
    return [
        [rng.choice(vocab) for _ in range(rng.randint(1, max_len))]
        for _ in range(n_sentences)
    ]


def distribution_sum(model, history):
    """Total probability mass the model assigns over vocab + unknown."""
    words = set(model.vocab_) | {UNK}
    return sum(10.0 ** model._logprob10(history, w) for w in words)


class TestPplDelta:
    def test_delta_is_after_minus_before(self):
        d = PplDelta(before=4.0, after=1.5)
        assert d.delta == -2.5

    def test_requires_positive_perplexities(self):
        with pytest.raises(ValueError):
            PplDelta(before=0.0, after=1.0)
        with pytest.raises(ValueError):
            PplDelta(before=1.0, after=-2.0)


class TestMleMode:
    def test_relative_frequencies(self):
        model = mle_unigram_model()
        lp_a, lp_b = model.token_logprobs(["a", "b"])
        assert 10.0 ** lp_a == pytest.approx(0.75)
        assert 10.0 ** lp_b == pytest.approx(0.25)

    def test_perplexity_hand_value(self):
        model = mle_unigram_model()
        assert model.perplexity(["a", "b"]) == pytest.approx(2.3094, abs=1e-4)

    def test_certain_event_has_perplexity_one(self):
        model = NGramLanguageModel(order=1, use_boundaries=False, mle=True).fit(
            [["a"]]
        )
        assert model.perplexity(["a"]) == 1.0

    def test_unseen_token_is_impossible(self):
        model = mle_unigram_model()
        assert model.perplexity(["z"]) == math.inf

    def test_delta_hand_value(self):
        model = mle_unigram_model()
        d = model.delta_ppl(["b", "b"], Span(0, 0), ["a"])
        assert d.before == pytest.approx(4.0)
        assert d.after == pytest.approx(2.3094, abs=1e-4)
        assert d.delta == pytest.approx(-1.6906, abs=1e-4)

    def test_refuses_serialization(self, tmp_path):
        with pytest.raises(ValueError, match="MLE"):
            mle_unigram_model().save(tmp_path / "model.txt")


class TestKneserNeyValues:
    """Hand-derived probabilities for order 2 on two copies of "a b".

    With boundaries, the raw bigrams are (<s>,a), (a,b), (b,</s>), each seen
    twice; the continuation counts make every unigram equally likely before
    the uniform share is mixed in.
    """

    def test_unigram_probability(self):
        model = kn_bigram_model()
        # (1 - 0.75)/3 + 0.75 * (3/3) * 1/4
        assert 10.0 ** model.prob_[("a",)] == pytest.approx(0.25 / 3 + 0.1875)

    def test_unknown_probability(self):
        model = kn_bigram_model()
        assert 10.0 ** model.prob_[(UNK,)] == pytest.approx(0.1875)

    def test_bigram_probability(self):
        model = kn_bigram_model()
        # (2 - 0.75)/2 + (0.75 * 1/2) * p(b)
        expected = 0.625 + 0.375 * (0.25 / 3 + 0.1875)
        assert 10.0 ** model.prob_[("a", "b")] == pytest.approx(expected)
        assert expected == pytest.approx(0.7265625)

    def test_seen_bigram_is_the_mode(self):
        model = kn_bigram_model()
        top = model.prob_[("a", "b")]
        assert all(
            model.prob_[g] <= top + 1e-12 for g in model.prob_ if len(g) == 2
        )


class TestNormalization:
    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    @pytest.mark.parametrize("use_boundaries", [True, False])
    def test_every_history_sums_to_one(self, order, use_boundaries):
        rng = random.Random(order * 10 + use_boundaries)
        corpus = random_corpus(rng)
        model = NGramLanguageModel(order=order, use_boundaries=use_boundaries)
        model.fit(corpus)
        histories = {g[:-1] for g in model.prob_} | set(model.backoff_) | {()}
        vocab = sorted(model.vocab_)
        for _ in range(5):  # unseen in-vocabulary histories too
            length = rng.randint(1, max(1, order - 1))
            histories.add(tuple(rng.choice(vocab) for _ in range(length)))
        for history in histories:
            assert distribution_sum(model, history) == pytest.approx(
                1.0, abs=1e-6
            ), history

    def test_probabilities_in_unit_interval(self):
        model = NGramLanguageModel(order=3).fit(
            random_corpus(random.Random(99), n_sentences=12)
        )
        for lp in model.prob_.values():
            assert 0.0 < 10.0 ** lp <= 1.0

    def test_no_bigram_evidence_degenerates_to_uniform(self):
        # single-token sentences without boundary padding produce no
        # bigrams, so the unigram level has no continuation evidence and
        # every outcome must get the uniform 1/(V+1) share
        model = NGramLanguageModel(order=2, use_boundaries=False)
        model.fit([["a"], ["b"], ["a"]])
        for history in [(), ("a",), ("b", "a")]:
            assert distribution_sum(model, history) == pytest.approx(1.0, abs=1e-12)
            for word in ["a", "b", "zzz"]:
                assert 10.0 ** model._logprob10(history, word) == pytest.approx(
                    1.0 / 3.0
                )


class TestKneserNeyProperties:
    def test_more_evidence_never_lowers_conditional(self):
        probs = []
        for copies in range(1, 6):
            corpus = [["a", "b"]] * copies + [["c", "d"]]
            model = NGramLanguageModel(order=2).fit(corpus)
            probs.append(model.prob_[("a", "b")])
        assert probs == sorted(probs)

    def test_unseen_words_stay_finite(self):
        model = kn_bigram_model()
        assert math.isfinite(model.perplexity(["martian", "b"]))

    def test_perplexity_consistent_with_token_logprobs(self):
        model = NGramLanguageModel(order=3).fit(
            random_corpus(random.Random(3), n_sentences=10)
        )
        sent = ["a", "z", "b"]
        logs = model.token_logprobs(sent)
        mean_ln = sum(logs) / len(logs) * math.log(10)
        assert model.perplexity(sent) == pytest.approx(math.exp(-mean_ln))

    def test_boundary_flag_controls_event_count(self):
        corpus = [["a", "b", "c"]]
        with_bounds = NGramLanguageModel(order=2).fit(corpus)
        without = NGramLanguageModel(order=2, use_boundaries=False).fit(corpus)
        assert len(with_bounds.token_logprobs(["a", "b"])) == 3
        assert len(without.token_logprobs(["a", "b"])) == 2


class TestDeltaPpl:
    def test_identity_substitution_is_zero(self):
        model = kn_bigram_model()
        assert model.delta_ppl(["a", "b"], Span(0, 0), ["a"]).delta == 0.0

    def test_antisymmetric_between_spliced_sentences(self):
        model = NGramLanguageModel(order=2).fit(
            [["a", "b"], ["c", "b"], ["a", "c"]]
        )
        forward = model.delta_ppl(["a", "b"], Span(0, 0), ["c"])
        backward = model.delta_ppl(["c", "b"], Span(0, 0), ["a"])
        assert forward.delta == -backward.delta

    def test_replacement_can_change_length(self):
        model = kn_bigram_model()
        d = model.delta_ppl(["a", "b"], Span(1, 1), ["x", "y", "z"])
        assert math.isfinite(d.delta)

    def test_span_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            kn_bigram_model().delta_ppl(["a"], Span(0, 1), ["x"])

    def test_empty_result_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            kn_bigram_model().delta_ppl(["a", "b"], Span(0, 1), [])


class TestSerialization:
    def fit_model(self):
        corpus = [["a", "b", "c"], ["b", "c", "a"], ["a", "c"]]
        return NGramLanguageModel(order=3).fit(corpus)

    def test_exact_round_trip(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.txt"
        model.save(path)
        loaded = NGramLanguageModel.load(path)
        assert loaded.order == model.order
        assert loaded.use_boundaries == model.use_boundaries
        assert loaded.vocab_ == model.vocab_
        probes = [
            ["a", "b", "c"],
            ["c", "a", "b"],  # backoff through start-symbol contexts
            ["zzz", "a"],  # unknown-word path
            ["b"],
        ]
        for sent in probes:
            assert loaded.token_logprobs(sent) == model.token_logprobs(sent)
            assert loaded.perplexity(sent) == model.perplexity(sent)

    def test_loaded_model_still_normalizes(self, tmp_path):
        model = self.fit_model()
        model.save(tmp_path / "model.txt")
        loaded = NGramLanguageModel.load(tmp_path / "model.txt")
        for history in [(), (BOS,), (BOS, BOS), ("a",), (BOS, "a"), ("q", "q")]:
            assert distribution_sum(loaded, history) == pytest.approx(
                1.0, abs=1e-6
            )

    def test_header_is_validated(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("not a model\n")
        with pytest.raises(ValueError, match="not a serialized"):
            NGramLanguageModel.load(path)

    def test_file_is_sorted_and_grouped(self, tmp_path):
        model = self.fit_model()
        path = tmp_path / "model.txt"
        model.save(path)
        lines = path.read_text().splitlines()[1:]
        grams = [tuple(line.split("\t")[1].split(" ")) for line in lines]
        assert grams == sorted(grams, key=lambda g: (len(g), g))


class TestValidation:
    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty"):
            NGramLanguageModel().fit([])

    @pytest.mark.parametrize("order", [0, 6])
    def test_order_bounds(self, order):
        with pytest.raises(ValueError, match="order"):
            NGramLanguageModel(order=order).fit([["a"]])

    def test_empty_sentence_not_scorable(self):
        with pytest.raises(ValueError, match="empty"):
            kn_bigram_model().token_logprobs([])

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            NGramLanguageModel().perplexity(["a"])

    def test_get_params(self):
        model = NGramLanguageModel(order=4, use_boundaries=False)
        assert model.get_params() == {
            "order": 4,
            "use_boundaries": False,
            "mle": False,
        }
