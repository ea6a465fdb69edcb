from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from refgen.textprep import (EOS_IDX, NOHS, NOHS_IDX, PAD_IDX, SOS_IDX, UNK_IDX, SPECIALS, Vocabulary,
                             apply_permutation, build_vocab, detokenize, encode_instance, extend_for_copy,
                             shuffle_contexts, tokenize)

CTX = [f"img_{i}" for i in range(6)]


class TestTokenize:
    def test_plain_sentence(self):
        assert tokenize("I see the wine glass dog") == ["i", "see", "the", "wine", "glass", "dog"]

    def test_trailing_question_mark(self):
        assert tokenize("guy with camera?") == ["guy", "with", "camera", "?"]

    def test_empty(self):
        assert tokenize("") == []

    def test_contractions_and_emoticons_stay_whole(self):
        assert tokenize("I don't see it :D") == ["i", "don't", "see", "it", ":D"]

    def test_word_followed_by_colon_is_not_an_emoticon(self):
        assert tokenize("do: this") == ["do", ":", "this"]

    @given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=60))
    def test_detokenize_round_trip_keeps_tokens(self, text):
        toks = tokenize(text)
        assert Counter(tokenize(detokenize(toks))) == Counter(toks)


class TestVocabulary:
    def test_specials_have_fixed_indices(self):
        v = Vocabulary(["dog"])
        assert [v.index(s) for s in SPECIALS] == [PAD_IDX, UNK_IDX, SOS_IDX, EOS_IDX, NOHS_IDX]
        assert v.index("dog") == 5 and v.index("cat") == UNK_IDX

    def test_hapax_words_map_to_unk(self):
        v = build_vocab([["a", "a", "b"]])
        assert "a" in v and "b" not in v
        assert v.size == len(SPECIALS) + 1

    def test_all_unique_corpus_gives_specials_only(self):
        assert build_vocab([["x", "y", "z"]]).size == len(SPECIALS)

    def test_empty_corpus(self):
        assert build_vocab([]).size == len(SPECIALS)

    def test_min_count_is_configurable(self):
        assert "b" in build_vocab([["a", "a", "b"]], min_count=1)

    @given(st.lists(st.lists(st.sampled_from(list("abcdefgh")), max_size=6), max_size=20))
    def test_indices_are_a_bijection(self, corpus):
        v = build_vocab(corpus, min_count=1)
        assert sorted(v.index(t) for t in v.itos) == list(range(v.size))

    def test_save_load_round_trip(self, tmp_path):
        v = build_vocab([["a", "a", "b", "b", "c"]])
        v.save(tmp_path / "vocab.txt")
        w = Vocabulary.load(tmp_path / "vocab.txt")
        assert w.itos == v.itos and w.hash() == v.hash()


class TestExtendedVocabulary:
    def test_oov_word_gets_temporary_index(self):
        v = Vocabulary(["runway"])
        ext, idx = extend_for_copy(["runway", "lady"], v)
        assert ext.extra == ("lady",)
        assert idx == [v.index("runway"), v.size]

    def test_nohs_source_has_no_extras(self):
        ext, idx = extend_for_copy([NOHS], Vocabulary(["runway"]))
        assert ext.extra == () and idx == [NOHS_IDX]

    def test_repeated_oov_shares_one_index(self):
        v = Vocabulary([])
        ext, idx = extend_for_copy(["zzz", "zzz"], v)
        assert ext.extra == ("zzz",) and idx == [v.size, v.size]

    def test_target_extended_differs_only_at_copied_oov(self):
        v = Vocabulary(["the", "guy"])
        inst = encode_instance(["the", "zebra", "guy"], ["the", "zebra", "cat"], v, CTX, 0)
        assert inst.target[0] == SOS_IDX and inst.target[-1] == EOS_IDX
        diff = [i for i, (a, b) in enumerate(zip(inst.target, inst.target_ext)) if a != b]
        assert diff == [2]
        assert inst.target[2] == UNK_IDX and inst.target_ext[2] == v.size
        assert inst.target_ext[3] == UNK_IDX  # 'cat' is not in the source

    def test_first_mention_source_is_nohs(self):
        inst = encode_instance(None, ["a", "dog"], Vocabulary(["dog"]), CTX, 3)
        assert inst.source == [NOHS_IDX] and inst.extra == ()
        assert inst.target_image == "img_3"


class TestShuffle:
    def test_hand_permutation(self):
        ctx, pos = apply_permutation(CTX, 0, [2, 0, 1, 3, 4, 5])
        assert pos == 1 and ctx[pos] == "img_0"

    def test_identity_keeps_target(self):
        assert apply_permutation(CTX, 4, range(6)) == (CTX, 4)

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            apply_permutation(CTX, 0, [0, 0, 1, 2, 3, 4])

    @given(st.integers(0, 5), st.integers(0, 10_000), st.sampled_from(["once", "per_epoch"]), st.integers(0, 5))
    def test_shuffle_preserves_candidates_and_target(self, pos, seed, mode, epoch):
        inst = encode_instance(None, ["dog"], Vocabulary(["dog"]), CTX, pos)
        out = shuffle_contexts([inst], mode, seed, epoch)[0]
        assert sorted(out.context) == sorted(CTX)
        assert out.target_image == inst.target_image

    def test_seeded_and_epoch_dependent(self):
        data = [encode_instance(None, ["dog"], Vocabulary(["dog"]), CTX, 0)] * 20
        a = shuffle_contexts(data, "per_epoch", 3, 0)
        assert [x.context for x in a] == [x.context for x in shuffle_contexts(data, "per_epoch", 3, 0)]
        assert [x.context for x in a] != [x.context for x in shuffle_contexts(data, "per_epoch", 3, 1)]
        assert [x.context for x in shuffle_contexts(data, "once", 3, 0)] == \
               [x.context for x in shuffle_contexts(data, "once", 3, 7)]

    def test_target_position_is_uniform(self):
        """60k shuffles: chi-square goodness of fit against the uniform distribution."""
        data = [encode_instance(None, ["dog"], Vocabulary(["dog"]), CTX, 0)] * 60_000
        counts = np.bincount([x.target_pos for x in shuffle_contexts(data, "once", 11)], minlength=6)
        expected = 10_000
        assert np.all(np.abs(counts - expected) < 3 * np.sqrt(60_000 * (1 / 6) * (5 / 6)))
        assert stats.chisquare(counts).pvalue > 0.001
