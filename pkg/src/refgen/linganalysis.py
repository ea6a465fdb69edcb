"""Givenness, compression and entrainment measures for referring utterances."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .corpus.scoring import load_stopwords
from .postag import Tagger, lexicon_tagger

GIVENNESS = frozenset({"the", "one", "same", "again", "also", "before"})
DEFINITE = frozenset({"the"})
SEEN = frozenset({"again", "before", "one", "same", "also"})
INDEFINITE = frozenset({"some", "a", "an"})

NOUN, ADJ, VERB = "NOUN", "ADJ", "VERB"


def content_mask(tokens: Sequence[str], stopwords: frozenset[str] | None = None) -> list[bool]:
    stop = load_stopwords("content") if stopwords is None else stopwords
    return [t not in stop and any(ch.isalnum() for ch in t) for t in tokens]


@dataclass
class LinguisticProfile:
    givenness_prop: float
    definite_prop: float
    seen_prop: float
    indefinite_prop: float
    length_tokens: int
    length_content: int
    content_prop: float
    noun_prop: float
    adj_prop: float
    verb_prop: float
    ttr: float
    chain_position: int = 1
    empty: bool = False


MEASURES = [f.name for f in fields(LinguisticProfile) if f.name not in ("chain_position", "empty")]


def profile(tokens: Sequence[str], tags: Sequence[str] | None = None, chain_position: int = 1,
            tagger: Tagger = lexicon_tagger) -> LinguisticProfile:
    """Per-utterance proportions, all over the utterance's token count."""
    n = len(tokens)
    if n == 0:
        return LinguisticProfile(0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, chain_position, empty=True)
    tags = list(tags) if tags is not None else tagger(tokens)
    if len(tags) != n:
        raise ValueError("one tag per token required")
    content = sum(content_mask(tokens))

    def share(words: frozenset[str]) -> float:
        return sum(t in words for t in tokens) / n

    return LinguisticProfile(
        givenness_prop=share(GIVENNESS),
        definite_prop=share(DEFINITE),
        seen_prop=share(SEEN),
        indefinite_prop=share(INDEFINITE),
        length_tokens=n,
        length_content=content,
        content_prop=content / n,
        noun_prop=tags.count(NOUN) / n,
        adj_prop=tags.count(ADJ) / n,
        verb_prop=tags.count(VERB) / n,
        ttr=len(set(tokens)) / n,
        chain_position=chain_position,
    )


@dataclass
class ReuseProfile:
    reuse_c: float | None
    reuse_bigrams_c: float | None
    noun: float | None
    adj: float | None
    verb: float | None
    nn_bigrams: float | None
    n_content: int
    n_reused: int


def _content_pairs(tokens: Sequence[str], tags: Sequence[str]) -> list[tuple[str, str]]:
    return [(t, g) for t, g, keep in zip(tokens, tags, content_mask(tokens)) if keep]


def reuse(prev: Sequence[str], current: Sequence[str], current_tags: Sequence[str] | None = None,
          prev_tags: Sequence[str] | None = None, tagger: Tagger = lexicon_tagger) -> ReuseProfile:
    """Share of the current mention's content made of material from the previous mention.

    Unigram reuse is a multiset intersection over content tokens.  Bigrams
    are formed over the content-token subsequence.  The PoS shares are taken
    within the reused unigrams (noun/adj/verb) and reused bigrams (noun-noun).
    Undefined ratios are ``None``.
    """
    current_tags = list(current_tags) if current_tags is not None else tagger(current)
    prev_tags = list(prev_tags) if prev_tags is not None else tagger(prev)
    cur = _content_pairs(current, current_tags)
    prv = [t for t, _ in _content_pairs(prev, prev_tags)]

    available = Counter(prv)
    reused_tags = []
    for tok, tag in cur:
        if available[tok] > 0:
            available[tok] -= 1
            reused_tags.append(tag)

    cur_bigrams = list(zip(cur, cur[1:]))
    prev_bigrams = Counter(zip(prv, prv[1:]))
    reused_bigrams = []
    for (a, ta), (b, tb) in cur_bigrams:
        if prev_bigrams[(a, b)] > 0:
            prev_bigrams[(a, b)] -= 1
            reused_bigrams.append((ta, tb))

    def frac(num: int, den: int) -> float | None:
        return num / den if den else None

    n_reused = len(reused_tags)
    return ReuseProfile(
        reuse_c=frac(n_reused, len(cur)),
        reuse_bigrams_c=frac(len(reused_bigrams), len(cur_bigrams)),
        noun=frac(reused_tags.count(NOUN), n_reused),
        adj=frac(reused_tags.count(ADJ), n_reused),
        verb=frac(reused_tags.count(VERB), n_reused),
        nn_bigrams=frac(sum(ta == NOUN and tb == NOUN for ta, tb in reused_bigrams), len(reused_bigrams)),
        n_content=len(cur),
        n_reused=n_reused,
    )


@dataclass
class CompoundCandidate:
    tokens: list[str]
    compound: tuple[str, str]
    kind: str  # "reuse" or "non-reuse"


def nn_bigram_prop(tokens: Sequence[str], tags: Sequence[str]) -> float:
    pairs = list(zip(tags, tags[1:]))
    if not pairs:
        return 0.0
    return sum(a == NOUN and b == NOUN for a, b in pairs) / len(pairs)


def nn_compounds(
    utterances: Sequence[Sequence[str]],
    previous: Sequence[Sequence[str] | None] | None = None,
    tags: Sequence[Sequence[str]] | None = None,
    max_len: int = 5,
    tagger: Tagger = lexicon_tagger,
) -> tuple[list[float], list[CompoundCandidate]]:
    """Noun-noun bigram proportion per utterance, plus flagged compound candidates.

    A short utterance (at most ``max_len`` tokens) containing adjacent nouns
    is flagged; it is a ``reuse`` compound when both nouns occur in the
    previous mention and ``non-reuse`` otherwise.  Utterances without a
    previous mention are not flagged.
    """
    props, candidates = [], []
    previous = previous if previous is not None else [None] * len(utterances)
    for k, utt in enumerate(utterances):
        utt_tags = list(tags[k]) if tags is not None else tagger(utt)
        props.append(nn_bigram_prop(utt, utt_tags))
        prev = previous[k]
        if prev is None or len(utt) > max_len:
            continue
        prev_set = set(prev)
        for i in range(len(utt) - 1):
            if utt_tags[i] == NOUN and utt_tags[i + 1] == NOUN:
                pair = (utt[i], utt[i + 1])
                kind = "reuse" if set(pair) <= prev_set else "non-reuse"
                candidates.append(CompoundCandidate(list(utt), pair, kind))
    return props, candidates


@dataclass
class StatResult:
    mean_a: float
    mean_b: float
    d: float | None
    p: float | None
    stars: str
    n_a: int
    n_b: int


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float | None:
    """(mean_a - mean_b) / pooled sample sd; None when the pooled sd is 0."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    na, nb = len(a), len(b)
    pooled = math.sqrt(((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2))
    if pooled == 0:
        return None
    return float((a.mean() - b.mean()) / pooled)


def significance_stars(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.001:
        return "***"
    if p < 0.005:
        return "**"
    if p < 0.01:
        return "*"
    return ""


def compare(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Student's two-sample t-test (equal variances) and Cohen's d for group A vs B."""
    a = [x for x in a if x is not None]
    b = [x for x in b if x is not None]
    if len(a) < 2 or len(b) < 2:
        raise ValueError("compare needs at least 2 samples per group")
    d = cohens_d(a, b)
    p: float | None
    if d is None:
        p = 1.0 if np.mean(a) == np.mean(b) else None
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # near-constant groups
            p = float(stats.ttest_ind(a, b, equal_var=True).pvalue)
    return StatResult(float(np.mean(a)), float(np.mean(b)), d, p, significance_stars(p), len(a), len(b))


# --- reports -------------------------------------------------------------------

Utterance = Mapping  # {"tokens": [...], "chain_position": int, "prev": [...] | None}

REUSE_MEASURES = ("reuse_c", "reuse_bigrams_c", "noun", "adj", "verb", "nn_bigrams")


def _profiles(utts: Sequence[Utterance], tagger: Tagger) -> list[LinguisticProfile]:
    return [profile(u["tokens"], chain_position=u["chain_position"], tagger=tagger) for u in utts]


def _reuses(utts: Sequence[Utterance], tagger: Tagger) -> list[ReuseProfile]:
    return [reuse(u["prev"], u["tokens"], tagger=tagger) for u in utts if u["chain_position"] > 1 and u.get("prev")]


def _fmt(x: float | None, digits: int = 2) -> str:
    return "-" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}f}"


def profile_report(systems: Mapping[str, Sequence[Utterance]], human: str = "human",
                   tagger: Tagger = lexicon_tagger) -> dict:
    """First-vs-later trends per system and reuse comparison against the human data.

    ``systems`` maps a name (one of them ``human``) to utterance records.
    Returns a JSON-ready dict with ``trends``, ``reuse`` and ``vocab`` tables
    and their plain-text renderings under ``text``.
    """
    trends: dict[str, dict] = {}
    vocab: dict[str, dict] = {}
    reuse_vals: dict[str, dict[str, list]] = {}
    for name, utts in systems.items():
        profs = _profiles(utts, tagger)
        first = [p for p in profs if p.chain_position == 1 and not p.empty]
        later = [p for p in profs if p.chain_position > 1 and not p.empty]
        trends[name] = {}
        for m in MEASURES:
            a = [getattr(p, m) for p in first]
            b = [getattr(p, m) for p in later]
            if len(a) >= 2 and len(b) >= 2:
                res = compare(a, b)
                trends[name][m] = {"first": res.mean_a, "later": res.mean_b, "d": res.d, "p": res.p, "stars": res.stars}
            else:
                trends[name][m] = {"first": float(np.mean(a)) if a else None,
                                   "later": float(np.mean(b)) if b else None, "d": None, "p": None, "stars": ""}
        vocab[name] = {
            "first": len({t for u in utts if u["chain_position"] == 1 for t in u["tokens"]}),
            "later": len({t for u in utts if u["chain_position"] > 1 for t in u["tokens"]}),
        }
        reuses = _reuses(utts, tagger)
        reuse_vals[name] = {m: [getattr(r, m) for r in reuses if getattr(r, m) is not None] for m in REUSE_MEASURES}

    reuse_table: dict[str, dict] = {}
    for name, vals in reuse_vals.items():
        reuse_table[name] = {}
        for m in REUSE_MEASURES:
            entry = {"mean": float(np.mean(vals[m])) if vals[m] else None, "d": None, "p": None, "stars": ""}
            if name != human and human in reuse_vals:
                h = reuse_vals[human][m]
                if len(h) >= 2 and len(vals[m]) >= 2:
                    res = compare(h, vals[m])
                    entry.update(d=res.d, p=res.p, stars=res.stars)
            reuse_table[name][m] = entry

    report = {"trends": trends, "reuse": reuse_table, "vocab": vocab}
    report["text"] = render_trends(trends) + "\n" + render_reuse(reuse_table, human)
    return report


def render_trends(trends: Mapping[str, Mapping[str, Mapping]]) -> str:
    names = list(trends)
    header = ["measure"] + [f"{n}:{c}" for n in names for c in ("first", "later", "d")]
    rows = [header]
    for m in MEASURES:
        row = [m]
        for n in names:
            e = trends[n][m]
            row += [_fmt(e["first"]), _fmt(e["later"]), _fmt(e["d"]) + e["stars"]]
        rows.append(row)
    return _layout(rows)


def render_reuse(table: Mapping[str, Mapping[str, Mapping]], human: str = "human") -> str:
    names = list(table)
    header = ["measure"]
    for n in names:
        header += [f"{n}:mean"] if n == human else [f"{n}:mean", f"{n}:d", f"{n}:p"]
    rows = [header]
    for m in REUSE_MEASURES:
        row = [m]
        for n in names:
            e = table[n][m]
            row += [_fmt(e["mean"], 3)] if n == human else [_fmt(e["mean"], 3), _fmt(e["d"], 3), e["stars"] or _fmt(e["p"], 3)]
        rows.append(row)
    return _layout(rows)


def _layout(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def profiles_as_records(utts: Sequence[Utterance], tagger: Tagger = lexicon_tagger) -> list[dict]:
    """Per-utterance profile dump for plotting."""
    return [asdict(p) for p in _profiles(utts, tagger)]
