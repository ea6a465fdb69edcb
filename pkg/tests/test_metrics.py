import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import hand_bleu2, hand_cider, hand_lcs, hand_rouge
from refgen.embeddings import TableEmbeddingProvider
from refgen.metrics import (accuracy_mrr, aggregate_runs, bleu, bleu2, cider, corpus_embedding_f1, embedding_f1,
                            format_mean_sd, generation_report, lcs_length, merge_reports, render_table,
                            repetition_and_vocab, rouge, target_rank, verbatim_baseline)

HYPS = [["the", "guy", "with", "the", "camera"], ["a", "red", "cake", "on", "a", "table"], ["blue", "bowl"]]
REFS = [[["guy", "with", "camera"], ["the", "camera", "guy", "again"]],
        [["red", "cake", "on", "the", "table"]],
        [["the", "blue", "bowl", "of", "rice"], ["bowl", "blue"]]]

words = st.lists(st.sampled_from("a b c d e f g".split()), min_size=1, max_size=8)


class TestBleu:
    def test_toy_corpus_matches_longhand(self):
        assert bleu2(HYPS, REFS) == pytest.approx(hand_bleu2(HYPS, REFS), abs=1e-4)

    def test_toy_corpus_value(self):
        # clipped unigrams 4+4+2 of 13, bigrams 2+2+1 of 10; c = 13 > r = 4+5+2, so no penalty
        assert bleu2(HYPS, REFS) == pytest.approx(100 * math.sqrt(10 / 13 * 5 / 10), abs=1e-4)

    def test_identity(self):
        assert bleu2([["a", "b", "c"]], [[["a", "b", "c"]]]) == 100.0

    def test_no_bigram_overlap(self):
        assert bleu2([["a", "b"]], [[["b", "a"]]]) == 0.0

    def test_brevity_penalty(self):
        assert bleu2([["a", "b"]], [[["a", "b", "c", "d"]]]) == pytest.approx(100 * math.exp(1 - 2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            bleu2(HYPS, REFS[:2])

    @given(st.lists(st.tuples(words, st.lists(words, min_size=1, max_size=3)), min_size=1, max_size=4))
    def test_matches_oracle(self, pairs):
        hyps, refs = [p[0] for p in pairs], [p[1] for p in pairs]
        assert bleu2(hyps, refs) == pytest.approx(hand_bleu2(hyps, refs), abs=1e-9)

    def test_unigram_only(self):
        assert bleu([["a", "x"]], [[["a", "b"]]], max_n=1) == pytest.approx(50.0)


class TestRouge:
    def test_lcs(self):
        assert lcs_length("abcbdab", "bdcaba") == 4 == hand_lcs("abcbdab", "bdcaba")

    def test_toy_corpus(self):
        assert rouge(HYPS, REFS) == pytest.approx(hand_rouge(HYPS, REFS), abs=1e-4)

    def test_identity_and_disjoint(self):
        assert rouge([["a", "b"]], [[["a", "b"]]]) == pytest.approx(100.0)
        assert rouge([["a", "b"]], [[["c"]]]) == 0.0

    @given(st.lists(st.tuples(words, st.lists(words, min_size=1, max_size=3)), min_size=1, max_size=4))
    def test_matches_oracle(self, pairs):
        hyps, refs = [p[0] for p in pairs], [p[1] for p in pairs]
        assert rouge(hyps, refs) == pytest.approx(hand_rouge(hyps, refs), abs=1e-9)


class TestCider:
    def test_toy_corpus(self):
        assert cider(HYPS, REFS) == pytest.approx(hand_cider(HYPS, REFS), abs=1e-4)

    def test_identity_reaches_ten(self):
        corpus = [["a", "b", "c", "d"], ["e", "f", "g", "h"], ["i", "j", "k", "l"]]
        assert cider(corpus, [[c] for c in corpus]) == pytest.approx(10.0)

    def test_disjoint_is_zero(self):
        assert cider([["x", "y"], ["z"]], [[["a", "b"]], [["c"]]]) == 0.0

    @given(st.lists(st.tuples(words, st.lists(words, min_size=1, max_size=3)), min_size=1, max_size=4))
    def test_matches_oracle(self, pairs):
        hyps, refs = [p[0] for p in pairs], [p[1] for p in pairs]
        assert cider(hyps, refs) == pytest.approx(hand_cider(hyps, refs), abs=1e-9)


class TestEmbeddingScore:
    prov = TableEmbeddingProvider({"a": [1, 0, 0], "b": [0, 1, 0], "c": [0, 0, 1], "d": [1, 1, 0]})

    def test_identity(self):
        assert embedding_f1(["a", "b"], [["c"], ["a", "b"]], self.prov) == pytest.approx(1.0)

    def test_hand_similarity_matrix(self):
        # sims of a,c vs d: a·d = 1/sqrt2, c·d = 0 -> P = (1/sqrt2 + 0)/2, R = 1/sqrt2
        p, r = 1 / (2 * math.sqrt(2)), 1 / math.sqrt(2)
        assert embedding_f1(["a", "c"], [["d"]], self.prov) == pytest.approx(2 * p * r / (p + r))

    def test_corpus_scale(self):
        assert corpus_embedding_f1([["a"], ["b"]], [[["a"]], [["c"]]], self.prov) == pytest.approx(50.0)

    def test_empty_references(self):
        with pytest.raises(ValueError):
            embedding_f1(["a"], [], self.prov)


class TestRanking:
    def test_all_first(self):
        assert accuracy_mrr([1, 1, 1]) == (100.0, 100.0)

    def test_hand_pair(self):
        assert accuracy_mrr([1, 2]) == pytest.approx((50.0, 75.0))

    def test_target_rank_ties_favour_lower_index(self):
        assert target_rank([0.5, 0.9, 0.5], 2) == 3 and target_rank([0.5, 0.9, 0.5], 0) == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            accuracy_mrr([])

    @given(st.lists(st.integers(1, 6), min_size=1))
    def test_accuracy_never_exceeds_mrr(self, ranks):
        acc, mrr = accuracy_mrr(ranks)
        assert acc <= mrr + 1e-9

    @given(st.lists(st.integers(1, 6), min_size=1), st.randoms())
    def test_permutation_invariant(self, ranks, rnd):
        shuffled = list(ranks)
        rnd.shuffle(shuffled)
        assert accuracy_mrr(shuffled) == pytest.approx(accuracy_mrr(ranks))


class TestBaselinesAndCounts:
    def test_verbatim_reuses_first(self):
        out = verbatim_baseline({"g:i": {1: ["u1"], 2: ["u2"], 3: ["u3"]}, "g:j": {1: ["v"]}})
        assert out == {("g:i", 2): ["u1"], ("g:i", 3): ["u1"]}

    def test_verbatim_without_first_warns(self):
        with pytest.warns(RuntimeWarning):
            assert verbatim_baseline({"g:i": {2: ["u2"]}}) == {}

    def test_repeated_content_word(self):
        rate, vocab = repetition_and_vocab([["the", "runway", "runway", "woman"]])
        assert rate == 1.0 and vocab == 3

    def test_function_word_repeats_do_not_count(self):
        assert repetition_and_vocab([["the", "dog", "and", "the", "cat"]])[0] == 0.0

    def test_hand_fixture(self):
        utts = [["dog", "dog"], ["cat", "hat", "cat"], ["red", "red", "bowl"]] + [["w%d" % i] for i in range(7)]
        assert repetition_and_vocab(utts)[0] == pytest.approx(0.3)


class TestReports:
    def test_partition_by_position(self):
        rep = generation_report(HYPS, REFS, [1, 2, 3], ranks=[1, 2, 1])
        assert rep.counts == {"first": 1, "later": 2, "overall": 3}
        assert rep.values["later"]["acc"] == 50.0
        assert rep.values["overall"]["bleu2"] == pytest.approx(bleu2(HYPS, REFS))
        assert rep.values["overall"]["cider"] == pytest.approx(100 * cider(HYPS, REFS))

    def test_empty_subset_is_omitted(self):
        rep = generation_report(HYPS, REFS, [1, 1, 1])
        assert "later" not in rep.values and rep.counts["later"] == 0

    def test_render(self):
        table = render_table({"ReRef": generation_report(HYPS, REFS, [1, 2, 2])})
        lines = table.splitlines()
        assert lines[0].split()[:2] == ["model", "subset"] and len(lines) == 4
        assert "-" in lines[1].split()  # no embedding score without a provider

    def test_mean_sd(self):
        assert aggregate_runs([1, 2, 3]) == (2.0, 1.0)
        assert aggregate_runs([4.0]) == (4.0, 0.0)
        assert format_mean_sd([85.1, 85.5]) == "85.30 (0.28)"

    def test_merge(self):
        a = generation_report(HYPS, REFS, [1, 2, 2], ranks=[1, 1, 1])
        b = generation_report(HYPS, REFS, [1, 2, 2], ranks=[2, 2, 2])
        merged = merge_reports([a, b])
        assert merged["overall"]["acc"] == format_mean_sd([100.0, 0.0])

    @given(st.permutations(list(range(3))))
    def test_reports_are_order_invariant(self, perm):
        a = generation_report(HYPS, REFS, [1, 2, 3])
        b = generation_report([HYPS[i] for i in perm], [REFS[i] for i in perm], [[1, 2, 3][i] for i in perm])
        for subset, vals in a.values.items():
            for k, v in vals.items():
                assert b.values[subset][k] == pytest.approx(v)


def test_scores_are_finite_on_empty_hypothesis():
    assert np.isfinite([bleu2([[]], [[["a"]]]), rouge([[]], [[["a"]]]), cider([[]], [[["a"]]])]).all()
