"""Scoring candidate referring utterances against an image's reference set."""

from __future__ import annotations

from collections import Counter
from functools import lru_cache
from importlib import resources
from typing import Iterable, Protocol, Sequence

from ..embeddings import EmbeddingProvider, greedy_match_prf
from ..textprep import tokenize
from .schema import ReferenceSet

METEOR_ALPHA = 0.9


@lru_cache(maxsize=None)
def load_stopwords(name: str = "scoring") -> frozenset[str]:
    """Bundled stopword list: ``"scoring"`` for extraction, ``"content"`` for analysis."""
    text = resources.files("refgen.data").joinpath(f"{name}_stopwords.txt").read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#"))


def filter_tokens(tokens: Iterable[str], stopwords: frozenset[str] | None = None) -> list[str]:
    """Drop stopwords and tokens without any alphanumeric character."""
    stop = load_stopwords() if stopwords is None else stopwords
    return [t for t in tokens if t not in stop and any(ch.isalnum() for ch in t)]


def prepare(text: str) -> list[str]:
    return filter_tokens(tokenize(text))


class CaptionSimilarity(Protocol):
    def f1(self, candidate: Sequence[str], reference: Sequence[str]) -> float: ...


class EmbeddingSimilarity:
    """Greedy-matching F1 over token embeddings from any provider."""

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider

    def f1(self, candidate: Sequence[str], reference: Sequence[str]) -> float:
        if not candidate or not reference:
            return 0.0
        return greedy_match_prf(self.provider.embed(candidate), self.provider.embed(reference))[2]


def caption_similarity(tokens: Sequence[str], captions: Sequence[Sequence[str]], sim: CaptionSimilarity) -> float:
    """Best F1 of ``tokens`` against any single caption; 0 for an empty utterance."""
    if not tokens:
        return 0.0
    return max((sim.f1(tokens, cap) for cap in captions if cap), default=0.0)


def meteor_fmean(hypothesis: Sequence[str], reference: Iterable[str], alpha: float = METEOR_ALPHA) -> float:
    """Unigram METEOR with exact matching and the fragmentation penalty at 0.

    Matches are one-to-one, so repeated hypothesis tokens can only match as
    many reference tokens as exist.  With the default ``alpha`` this is
    ``10PR / (R + 9P)``.
    """
    hyp = Counter(hypothesis)
    ref = Counter(reference)
    matches = sum((hyp & ref).values())
    if matches == 0:
        return 0.0
    p = matches / sum(hyp.values())
    r = matches / sum(ref.values())
    return p * r / (alpha * p + (1 - alpha) * r)


def distinctive_vg_tokens(target: frozenset[str], distractors: Iterable[frozenset[str]]) -> frozenset[str]:
    others = frozenset().union(*distractors)
    return target - others


def score_components(
    tokens: Sequence[str],
    refset: ReferenceSet,
    distractor_vg: Iterable[frozenset[str]],
    sim: CaptionSimilarity,
) -> tuple[float, float]:
    """(caption similarity, METEOR component) for stopword-filtered ``tokens``."""
    captions = [prepare(c) for c in refset.all_captions]
    cap = caption_similarity(tokens, captions, sim)
    if not refset.vg_tokens:
        return cap, 0.0
    reference = sorted(distinctive_vg_tokens(refset.vg_tokens, distractor_vg))
    return cap, meteor_fmean(tokens, reference)


def score_utterance(
    tokens: Sequence[str],
    refset: ReferenceSet,
    distractor_vg: Iterable[frozenset[str]],
    sim: CaptionSimilarity,
) -> float:
    cap, met = score_components(tokens, refset, distractor_vg, sim)
    return cap + met
