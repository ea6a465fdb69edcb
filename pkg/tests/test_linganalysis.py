import pytest
from hypothesis import given, strategies as st

import ling_fixture as fx
from refgen.linganalysis import (MEASURES, cohens_d, compare, nn_bigram_prop, nn_compounds, profile,
                                 profile_report, profiles_as_records, reuse, significance_stars)
from refgen.postag import lexicon_tagger

VOCAB = "the a an one same again also before dog cat red big guy camera runs sees left with on".split()
utterances = st.lists(st.sampled_from(VOCAB), min_size=1, max_size=12)


def approx_or_none(x):
    return None if x is None else pytest.approx(float(x))


class TestProfile:
    def test_givenness_example(self):
        assert profile(["the", "same", "dog", "again"]).givenness_prop == 0.75

    def test_ttr_example(self):
        assert profile(["the", "dog", "the", "dog"]).ttr == 0.5

    def test_empty_is_flagged(self):
        p = profile([])
        assert p.empty and p.length_tokens == 0 and p.givenness_prop == 0

    def test_tag_length_checked(self):
        with pytest.raises(ValueError):
            profile(["a", "dog"], ["DET"])

    @pytest.mark.parametrize("chain", range(10))
    def test_fixture_hand_counts(self, chain):
        for utt, counts in zip(fx.CHAINS[chain], fx.PROFILE_COUNTS[chain]):
            toks, tags = fx.split(utt)
            p = profile(toks, tags)
            giv, definite, seen, indef, n, content, types, nouns, adjs, verbs = counts
            assert (p.length_tokens, p.length_content) == (n, content)
            got = [p.givenness_prop, p.definite_prop, p.seen_prop, p.indefinite_prop, p.content_prop, p.ttr,
                   p.noun_prop, p.adj_prop, p.verb_prop]
            want = [giv / n, definite / n, seen / n, indef / n, content / n, types / n, nouns / n, adjs / n, verbs / n]
            assert got == pytest.approx(want)

    @given(utterances)
    def test_proportions_in_unit_interval(self, toks):
        p = profile(toks)
        for m in MEASURES:
            if m.endswith("_prop"):
                assert 0.0 <= getattr(p, m) <= 1.0
        assert 0.0 < p.ttr <= 1.0


class TestReuse:
    def test_reordered_content_is_fully_reused(self):
        assert reuse(["guy", "with", "camera"], ["camera", "guy"]).reuse_c == 1.0

    def test_disjoint(self):
        assert reuse(["red", "dog"], ["blue", "cat"]).reuse_c == 0.0

    def test_duplicates_count_once_per_source_occurrence(self):
        assert reuse(["dog"], ["dog", "dog"]).reuse_c == 0.5

    def test_no_content_is_undefined(self):
        assert reuse(["dog"], ["the", "a"]).reuse_c is None

    @pytest.mark.parametrize("chain", range(10))
    def test_fixture_hand_counts(self, chain):
        first, later = fx.CHAINS[chain]
        f_tok, f_tags = fx.split(first)
        l_tok, l_tags = fx.split(later)
        r = reuse(f_tok, l_tok, l_tags, f_tags)
        got = (r.reuse_c, r.reuse_bigrams_c, r.noun, r.adj, r.verb, r.nn_bigrams)
        assert got == tuple(approx_or_none(x) for x in fx.REUSE[chain])

    @given(utterances)
    def test_self_reuse_is_total(self, toks):
        r = reuse(toks, toks)
        if r.n_content:
            assert r.reuse_c == 1.0

    @given(utterances, utterances)
    def test_pos_shares_bounded(self, prev, cur):
        r = reuse(prev, cur)
        shares = [x for x in (r.noun, r.adj, r.verb) if x is not None]
        assert sum(shares) <= 1.0 + 1e-12
        for x in (r.reuse_c, r.reuse_bigrams_c, r.nn_bigrams):
            assert x is None or 0.0 <= x <= 1.0


class TestCompounds:
    def test_reuse_compound(self):
        _, cands = nn_compounds([["camera", "guy"]], [["guy", "with", "camera"]])
        assert [(c.compound, c.kind) for c in cands] == [(("camera", "guy"), "reuse")]

    def test_non_reuse_compound(self):
        _, cands = nn_compounds([["tattoo", "guy", "?"]], [["headband", "guy"]])
        assert [(c.compound, c.kind) for c in cands] == [(("tattoo", "guy"), "non-reuse")]

    def test_no_noun_pairs(self):
        props, cands = nn_compounds([["the", "red", "dog"]])
        assert props == [0.0] and cands == []

    def test_long_utterances_are_not_flagged(self):
        utt = "i think it is the camera guy".split()
        props, cands = nn_compounds([utt], [["camera", "guy"]], max_len=5)
        assert cands == [] and props[0] > 0

    def test_bigram_proportion(self):
        assert nn_bigram_prop(["a", "b", "c"], ["NOUN", "NOUN", "NOUN"]) == 1.0
        assert nn_bigram_prop(["a"], ["NOUN"]) == 0.0


class TestStatistics:
    def test_cohens_d_hand_value(self):
        assert cohens_d([1, 2, 3], [2, 3, 4]) == pytest.approx(-1.0)

    def test_identical_groups(self):
        res = compare([1, 2, 3], [1, 2, 3])
        assert res.d == 0.0 and res.p == pytest.approx(1.0)

    def test_constant_groups(self):
        assert compare([2, 2], [2, 2]).d is None and compare([2, 2], [2, 2]).p == 1.0

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            compare([1], [1, 2])

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=10),
           st.lists(st.floats(-100, 100), min_size=2, max_size=10))
    def test_swap_antisymmetry(self, a, b):
        ab, ba = compare(a, b), compare(b, a)
        if ab.d is None:
            assert ba.d is None
        else:
            assert ab.d == pytest.approx(-ba.d, abs=1e-9)
            assert ab.p == pytest.approx(ba.p, abs=1e-9)

    def test_stars(self):
        assert [significance_stars(p) for p in (0.0005, 0.004, 0.008, 0.03, None)] == ["***", "**", "*", "", ""]


class TestReport:
    def test_fixture_report_matches_hand_counts(self):
        rep = profile_report({"human": fx.records()}, tagger=fx.table_tagger())
        reuse_c = [float(r[0]) for r in fx.REUSE]
        assert rep["reuse"]["human"]["reuse_c"]["mean"] == pytest.approx(sum(reuse_c) / len(reuse_c))
        giv_first = [c[0][0] / c[0][4] for c in fx.PROFILE_COUNTS]
        giv_later = [c[1][0] / c[1][4] for c in fx.PROFILE_COUNTS]
        trend = rep["trends"]["human"]["givenness_prop"]
        assert trend["first"] == pytest.approx(sum(giv_first) / 10)
        assert trend["later"] == pytest.approx(sum(giv_later) / 10)
        assert trend["d"] == pytest.approx(cohens_d(giv_first, giv_later))

    def test_single_system_has_no_comparison_columns(self):
        rep = profile_report({"human": fx.records()}, tagger=fx.table_tagger())
        header = rep["text"].splitlines()[0].split()
        assert header == ["measure", "human:first", "human:later", "human:d"]
        assert rep["reuse"]["human"]["reuse_c"]["d"] is None

    def test_model_compared_against_human(self):
        model = [dict(r, tokens=list(r["tokens"]) + (["again"] if r["chain_position"] > 1 else []))
                 for r in fx.records()]
        rep = profile_report({"human": fx.records(), "ReRef": model})
        assert rep["reuse"]["ReRef"]["reuse_c"]["d"] is not None
        assert rep["trends"]["ReRef"]["seen_prop"]["later"] > rep["trends"]["human"]["seen_prop"]["later"]

    def test_record_dump(self):
        dump = profiles_as_records(fx.records()[:2], tagger=fx.table_tagger())
        assert dump[0]["length_tokens"] == 5 and dump[1]["chain_position"] == 2


def test_default_tagger_handles_fixture_words():
    assert lexicon_tagger(["the", "red", "dog", "sitting", "tiny"]) == ["DET", "ADJ", "NOUN", "VERB", "ADJ"]
