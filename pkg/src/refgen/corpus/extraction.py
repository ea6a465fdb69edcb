"""Reference-chain extraction from game logs.

Three steps per game: collect candidate utterances preceding each
``common`` selection (segments), score every candidate against the image's
reference set, then pick at most one utterance per image and round while
resolving utterances claimed by several images.  The winning utterance joins
the image's reference set as an extra caption for later rounds.
"""

from __future__ import annotations

import logging
import statistics
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ..textprep import tokenize
from .schema import (
    ChainEntry,
    CorpusError,
    GameLog,
    Message,
    ReferenceChain,
    ReferenceSet,
    VisualGenomeTokens,
)
from .scoring import CaptionSimilarity, prepare, score_utterance

log = logging.getLogger(__name__)

DEFAULT_TOP_N = 4


def first_covisible_round(game: GameLog, image_id: str) -> int | None:
    for r in game.rounds:
        if r.covisible(image_id):
            return r.round_index
    return None


def extract_segments(game: GameLog, image_id: str) -> list[tuple[int, list[Message]]]:
    """Candidate utterances for ``image_id``, per round.

    A round contributes when someone marks the image ``common`` in it; the
    candidates are the messages up to that first selection, from speakers who
    have the image in view.  Rounds before both players first see the image
    are skipped.
    """
    if image_id not in game.images:
        raise CorpusError(f"image {image_id} does not appear in game {game.game_id}")
    start = first_covisible_round(game, image_id)
    if start is None:
        return []
    segments = []
    for rnd in game.rounds[start - 1:]:
        picks = [s for s in rnd.selections if s.image_id == image_id and s.label == "common"]
        if not picks:
            continue
        cutoff = picks[0].position
        if cutoff is None:
            continue
        candidates = [
            m for m in rnd.messages if m.message_id <= cutoff and rnd.sees(m.speaker, image_id)
        ]
        if candidates:
            segments.append((rnd.round_index, candidates))
    return segments


@dataclass(frozen=True)
class Scored:
    message: Message
    score: float

    @property
    def rank_key(self) -> tuple[float, int]:
        return (-self.score, self.message.message_id)


def select_chain_utterances(scored: Mapping[str, Sequence[Scored]], n: int = DEFAULT_TOP_N) -> dict[str, Scored]:
    """Assign at most one utterance to each image of a round.

    Each image keeps its ``n`` best candidates.  A candidate (u, i) is dropped
    when u scores higher for another image j among j's kept candidates (equal
    scores go to the image with the smaller id).  Each image then takes its
    best surviving candidate, earlier message first on ties.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    top = {img: sorted(cands, key=lambda s: s.rank_key)[:n] for img, cands in scored.items()}
    claims: dict[int, list[tuple[float, str]]] = {}
    for img, cands in top.items():
        for s in cands:
            claims.setdefault(s.message.message_id, []).append((s.score, img))

    def owner(mid: int) -> str:
        return min(claims[mid], key=lambda c: (-c[0], c[1]))[1]

    chosen = {}
    for img in sorted(top):
        remaining = [s for s in top[img] if owner(s.message.message_id) == img]
        if remaining:
            chosen[img] = remaining[0]
        elif top[img]:
            log.debug("all candidates for %s claimed by other images", img)
    return chosen


def build_reference_sets(
    images: Iterable[str],
    captions: Mapping[str, Sequence[str]],
    vg: Mapping[str, VisualGenomeTokens],
) -> dict[str, ReferenceSet]:
    out = {}
    for img in sorted(images):
        if img not in captions:
            raise CorpusError(f"no captions for image {img}")
        tokens = vg[img].retained if img in vg else frozenset()
        out[img] = ReferenceSet(img, list(captions[img]), tokens)
    return out


def extract_game_chains(
    game: GameLog,
    captions: Mapping[str, Sequence[str]],
    vg: Mapping[str, VisualGenomeTokens],
    sim: CaptionSimilarity,
    top_n: int = DEFAULT_TOP_N,
) -> list[ReferenceChain]:
    refsets = build_reference_sets(game.images, captions, vg)
    segments = {img: dict(extract_segments(game, img)) for img in sorted(game.images)}
    picked: dict[str, list[ChainEntry]] = {img: [] for img in refsets}

    for rnd in game.rounds:
        scored: dict[str, list[Scored]] = {}
        for img, segs in segments.items():
            if rnd.round_index not in segs:
                continue
            distractors = [refsets[o].vg_tokens for o in sorted(rnd.images) if o != img]
            scored[img] = [
                Scored(m, score_utterance(prepare(m.text), refsets[img], distractors, sim))
                for m in segs[rnd.round_index]
            ]
        # reference sets are only updated once the whole round is scored
        for img, s in select_chain_utterances(scored, top_n).items():
            picked[img].append(ChainEntry(rnd.round_index, s.message.message_id, s.message.speaker, s.message.text, s.score))
            refsets[img].dynamic_captions.append(s.message.text)

    return [ReferenceChain(game.game_id, img, entries) for img, entries in picked.items() if entries]


def extract_chains(
    games: Iterable[GameLog],
    captions: Mapping[str, Sequence[str]],
    vg: Mapping[str, VisualGenomeTokens],
    sim: CaptionSimilarity,
    top_n: int = DEFAULT_TOP_N,
) -> list[ReferenceChain]:
    chains = []
    for game in games:
        chains.extend(extract_game_chains(game, captions, vg, sim, top_n))
    return chains


Link = tuple[str, int, int, str]


def chain_links(chains: Iterable[ReferenceChain]) -> set[Link]:
    return {(c.game_id, e.round_index, e.message_id, c.image_id) for c in chains for e in c.entries}


def evaluate_extraction(extracted: Iterable[ReferenceChain] | set, gold: Iterable[Link]) -> tuple[float | None, float | None]:
    """Precision and recall of extracted (utterance, image) links against gold links.

    ``extracted`` may be chains or a set of links ``(game_id, round, message_id, image_id)``.
    """
    ext = extracted if isinstance(extracted, set) else chain_links(extracted)
    gold = set(gold)
    correct = len(ext & gold)
    if not ext:
        warnings.warn("no extracted links; precision undefined", RuntimeWarning, stacklevel=2)
        precision = None
    else:
        precision = correct / len(ext)
    recall = correct / len(gold) if gold else None
    return precision, recall


def _mean_sd(values: Sequence[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return statistics.fmean(values), sd


def chain_statistics(chains: Sequence[ReferenceChain]) -> dict:
    """Utterance counts and token lengths (first vs later) and chain-length summary."""
    if not chains:
        raise ValueError("chain_statistics needs at least one chain")
    first = [len(tokenize(c.entries[0].text)) for c in chains]
    later = [len(tokenize(e.text)) for c in chains for e in c.entries[1:]]
    lengths = [len(c) for c in chains]
    f_mean, f_sd = _mean_sd(first)
    l_mean, l_sd = _mean_sd(later)
    c_mean, c_sd = _mean_sd(lengths)
    return {
        "chains": len(chains),
        "games": len({c.game_id for c in chains}),
        "utterances": len(first) + len(later),
        "first": {"n": len(first), "length_mean": f_mean, "length_sd": f_sd},
        "later": {"n": len(later), "length_mean": l_mean, "length_sd": l_sd},
        "chain_length": {
            "mean": c_mean,
            "sd": c_sd,
            "median": statistics.median(lengths),
            "distribution": dict(sorted(Counter(lengths).items())),
        },
    }
