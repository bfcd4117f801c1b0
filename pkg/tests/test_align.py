import math
import random

import pytest
from sklearn.exceptions import NotFittedError

from qecorpus.align import (
    NULL_TOKEN,
    Alignment,
    BidirectionalAligner,
    WordAligner,
    format_alignment,
    parse_alignment,
    symmetrize,
)


def oracle_em(pairs, iterations=5, tension=4.0, p0=0.08):
    """Dense EM reference: same model, independent bookkeeping.

    Probabilities live in one flat ``{(source, target): p}`` map over the
    full vocabulary product, updated with explicit loops. Returns the final
    table and the per-iteration corpus log-likelihoods.
    """
    tgt_vocab = sorted({t for _, tgt in pairs for t in tgt})
    src_vocab = sorted({s for src, _ in pairs for s in src}) + [NULL_TOKEN]
    prob = {(s, t): 1.0 / len(tgt_vocab) for s in src_vocab for t in tgt_vocab}
    likelihoods = []
    for _ in range(iterations):
        counts = {key: 0.0 for key in prob}
        loglik = 0.0
        for src, tgt in pairs:
            m, n = len(src), len(tgt)
            for j, t in enumerate(tgt):
                prior = [
                    math.exp(-tension * abs((i + 1) / m - (j + 1) / n))
                    for i in range(m)
                ]
                z = sum(prior)
                scores = [(1 - p0) * (prior[i] / z) * prob[src[i], t] for i in range(m)]
                null_score = p0 * prob[NULL_TOKEN, t]
                total = null_score + sum(scores)
                loglik += math.log(total)
                counts[NULL_TOKEN, t] += null_score / total
                for i in range(m):
                    counts[src[i], t] += scores[i] / total
        likelihoods.append(loglik)
        prob = {}
        for s in src_vocab:
            row_total = sum(counts[s, t] for t in tgt_vocab)
            for t in tgt_vocab:
                prob[s, t] = counts[s, t] / row_total if row_total > 0 else 0.0
    return prob, likelihoods


def random_corpus(rng, n_pairs=30, src_vocab="abcd", tgt_vocab="wxyz", max_len=4):
    return [
        (
            [rng.choice(src_vocab) for _ in range(rng.randint(1, max_len))],
            [rng.choice(tgt_vocab) for _ in range(rng.randint(1, max_len))],
        )
        for _ in range(n_pairs)
    ]


BIJECTIVE_CORPUS = (
    [(["a", "b"], ["x", "y"])] * 100
    + [(["a"], ["x"])] * 10
    + [(["b"], ["y"])] * 10
)


class TestWordAlignerFit:
    def test_single_pair_probability_one(self):
        aligner = WordAligner(iterations=1).fit([(["a"], ["x"])])
        assert aligner.table_["a"]["x"] == pytest.approx(1.0)
        assert aligner.table_[NULL_TOKEN]["x"] == pytest.approx(1.0)

    def test_matches_dense_oracle(self):
        rng = random.Random(11)
        pairs = random_corpus(rng)
        aligner = WordAligner().fit(pairs)
        oracle, oracle_ll = oracle_em([(tuple(s), tuple(t)) for s, t in pairs])
        for s, row in aligner.table_.items():
            for t, p in row.items():
                assert p == pytest.approx(oracle[s, t], abs=1e-10)
        assert aligner.log_likelihoods_ == pytest.approx(oracle_ll, rel=1e-9)

    def test_rows_normalize(self):
        rng = random.Random(5)
        aligner = WordAligner().fit(random_corpus(rng))
        for s, row in aligner.table_.items():
            assert sum(row.values()) == pytest.approx(1.0, abs=1e-6)
            assert all(0.0 <= p <= 1.0 for p in row.values())

    def test_log_likelihood_non_decreasing(self):
        rng = random.Random(17)
        aligner = WordAligner(iterations=8).fit(random_corpus(rng))
        lls = aligner.log_likelihoods_
        assert len(lls) == 8
        for before, after in zip(lls, lls[1:]):
            assert after >= before - 1e-9

    def test_deterministic_across_fits(self):
        rng = random.Random(23)
        pairs = random_corpus(rng)
        a = WordAligner().fit(pairs)
        b = WordAligner().fit(pairs)
        assert a.table_ == b.table_
        assert a.log_likelihoods_ == b.log_likelihoods_

    def test_thread_chunks_match_single_thread(self):
        rng = random.Random(29)
        pairs = random_corpus(rng, n_pairs=40)
        serial = WordAligner(n_jobs=1).fit(pairs)
        threaded = WordAligner(n_jobs=3).fit(pairs)
        again = WordAligner(n_jobs=3).fit(pairs)
        # same job count twice: bitwise identical (chunk merge order is fixed)
        assert threaded.table_ == again.table_
        assert threaded.log_likelihoods_ == again.log_likelihoods_
        for s, row in serial.table_.items():
            for t, p in row.items():
                assert threaded.table_[s][t] == pytest.approx(p, rel=1e-12)

    def test_validation_errors(self):
        with pytest.raises(ValueError, match="empty"):
            WordAligner().fit([])
        with pytest.raises(ValueError, match="empty sentence"):
            WordAligner().fit([(["a"], [])])
        with pytest.raises(ValueError, match="iterations"):
            WordAligner(iterations=0).fit([(["a"], ["x"])])
        with pytest.raises(ValueError, match="diagonal_tension"):
            WordAligner(diagonal_tension=0.0).fit([(["a"], ["x"])])
        with pytest.raises(ValueError, match="null_prob"):
            WordAligner(null_prob=1.0).fit([(["a"], ["x"])])

    def test_get_params_round_trip(self):
        aligner = WordAligner(iterations=2, diagonal_tension=1.5)
        params = aligner.get_params()
        assert params["iterations"] == 2
        clone = WordAligner(**params)
        assert clone.get_params() == params


class TestViterbi:
    def test_bijective_corpus_gives_identity(self):
        aligner = WordAligner().fit(BIJECTIVE_CORPUS)
        assert aligner.viterbi(["a", "b"], ["x", "y"]).links == {(0, 0), (1, 1)}

    def test_single_pair_links(self):
        aligner = WordAligner(iterations=1).fit([(["a"], ["x"])])
        assert aligner.viterbi(["a"], ["x"]).links == {(0, 0)}

    def test_unseen_target_gets_no_link(self):
        aligner = WordAligner().fit(BIJECTIVE_CORPUS)
        assert aligner.viterbi(["a"], ["unseen"]).links == set()

    def test_position_tie_prefers_smaller_source_index(self):
        # source positions 1/4 and 3/4 sit at exactly equal distance from
        # target position 1/2 (all binary-exact), so their scores tie and
        # the earlier occurrence of "a" must win
        aligner = WordAligner()
        aligner.table_ = {"a": {"x": 1.0}, NULL_TOKEN: {}}
        links = aligner.viterbi(["a", "b", "a", "c"], ["x", "y"]).links
        assert links == {(0, 0)}

    def test_exact_tie_with_null_prefers_null(self):
        aligner = WordAligner(null_prob=0.5)
        aligner.table_ = {"a": {"x": 0.4}, NULL_TOKEN: {"x": 0.4}}
        assert aligner.viterbi(["a"], ["x"]).links == set()

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            WordAligner().viterbi(["a"], ["x"])

    def test_predict_preserves_order(self):
        aligner = WordAligner().fit(BIJECTIVE_CORPUS)
        out = aligner.predict([(["a"], ["x"]), (["b"], ["y"])])
        assert [a.links for a in out] == [{(0, 0)}, {(0, 0)}]


class TestTinyTensionPrior:
    def test_prior_becomes_position_uniform(self):
        from qecorpus.align import _diagonal_weights

        weights = _diagonal_weights(5, 3, 1, tension=1e-12)
        assert all(w == pytest.approx(weights[0], rel=1e-9) for w in weights)


class TestSymmetrize:
    def test_intersection(self):
        fwd = Alignment(frozenset({(0, 0), (1, 1)}))
        rev = Alignment(frozenset({(0, 0)}))
        assert symmetrize(fwd, rev, "intersection").links == {(0, 0)}

    @pytest.mark.parametrize(
        "heuristic", ["intersection", "union", "grow-diag-final-and"]
    )
    def test_idempotent_when_equal(self, heuristic):
        links = frozenset({(0, 0), (1, 2), (2, 1)})
        a = Alignment(links)
        assert symmetrize(a, a, heuristic).links == links

    def test_grow_adds_adjacent_uncovered_link(self):
        fwd = Alignment(frozenset({(0, 0)}))
        rev = Alignment(frozenset({(0, 0), (1, 1)}))
        result = symmetrize(fwd, rev, "grow-diag-final-and")
        assert result.links == {(0, 0), (1, 1)}

    def test_final_pass_covers_isolated_links(self):
        # (5, 5) is nowhere near the intersection but both its endpoints
        # are uncovered, so the final pass admits it.
        fwd = Alignment(frozenset({(0, 0), (5, 5)}))
        rev = Alignment(frozenset({(0, 0)}))
        result = symmetrize(fwd, rev, "grow-diag-final-and")
        assert result.links == {(0, 0), (5, 5)}

    def test_grow_skips_union_link_with_both_endpoints_covered(self):
        fwd = Alignment(frozenset({(0, 0), (1, 1)}))
        rev = Alignment(frozenset({(0, 0), (1, 1), (0, 1)}))
        result = symmetrize(fwd, rev, "grow-diag-final-and")
        assert result.links == {(0, 0), (1, 1)}

    def test_nesting_property_on_random_links(self):
        rng = random.Random(41)
        for _ in range(200):
            universe = [(i, j) for i in range(4) for j in range(4)]
            fwd = Alignment(frozenset(rng.sample(universe, rng.randint(0, 6))))
            rev = Alignment(frozenset(rng.sample(universe, rng.randint(0, 6))))
            inter = symmetrize(fwd, rev, "intersection").links
            grown = symmetrize(fwd, rev, "grow-diag-final-and").links
            union = symmetrize(fwd, rev, "union").links
            assert inter <= grown <= union

    def test_unknown_heuristic_rejected(self):
        a = Alignment(frozenset())
        with pytest.raises(ValueError, match="heuristic"):
            symmetrize(a, a, "mystery")


class TestPharaohFormat:
    def test_round_trip(self):
        a = Alignment(frozenset({(2, 1), (0, 0)}))
        assert format_alignment(a) == "0-0 2-1"
        assert parse_alignment("0-0 2-1") == a

    def test_empty_line_is_empty_alignment(self):
        assert parse_alignment("").links == set()

    @pytest.mark.parametrize("bad", ["0-", "-1", "a-b", "0_1", "1-2-3"])
    def test_malformed_links_rejected(self, bad):
        with pytest.raises(ValueError, match="bad alignment link"):
            parse_alignment(bad)


class TestBidirectionalAligner:
    def test_bijective_corpus_identity(self):
        aligner = BidirectionalAligner().fit(BIJECTIVE_CORPUS)
        assert aligner.align(["a", "b"], ["x", "y"]).links == {(0, 0), (1, 1)}

    def test_reverse_links_are_flipped_into_source_orientation(self):
        aligner = BidirectionalAligner(heuristic="union").fit(BIJECTIVE_CORPUS)
        links = aligner.align(["a", "b"], ["x", "y"]).links
        assert links and all(i < 2 and j < 2 for i, j in links)
        assert {(0, 0), (1, 1)} <= links

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            BidirectionalAligner().align(["a"], ["x"])

    def test_predict_matches_align(self):
        aligner = BidirectionalAligner().fit(BIJECTIVE_CORPUS)
        pair = (["a", "b"], ["x", "y"])
        assert aligner.predict([pair]) == [aligner.align(*pair)]
