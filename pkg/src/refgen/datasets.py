"""Turn extracted chains into model-ready examples.

Every chain entry yields one generation example (previous mention of the
same image, or none, to the current mention) and one resolution example
(the current mention against the speaker's six-image view, with each
candidate's latest earlier mention as its history).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus.schema import CorpusError, GameLog, ReferenceChain
from .resolver import ResolutionInstance, candidate_histories
from .textprep import EncodedInstance, Vocabulary, encode_instance, tokenize


def chain_key(game_id: str, image_id: str) -> str:
    return f"{game_id}:{image_id}"


def utterance_key(game_id: str, round_index: int, message_id: int) -> str:
    return f"{game_id}/{round_index}/{message_id}"


@dataclass
class ChainExample:
    """A chain entry with everything both model families need, as plain data."""

    game_id: str
    image_id: str
    split: str
    round_index: int
    message_id: int
    chain_position: int
    speaker: str
    text: str
    tokens: list[str]
    prev_tokens: list[str] | None
    context: list[str]
    target_pos: int
    references: list[list[str]] = field(default_factory=list)

    @property
    def key(self) -> str:
        return utterance_key(self.game_id, self.round_index, self.message_id)

    @property
    def chain_key(self) -> str:
        return chain_key(self.game_id, self.image_id)


def speaker_context(game: GameLog, round_index: int, speaker: str, image_id: str) -> tuple[list[str], int]:
    view = list(game.round(round_index).views.get(speaker, ()))
    if image_id not in view:
        raise CorpusError(f"{game.game_id} round {round_index}: {speaker} does not see {image_id}")
    return view, view.index(image_id)


def chain_examples(chains: Iterable[ReferenceChain], games: Iterable[GameLog]) -> list[ChainExample]:
    by_id = {g.game_id: g for g in games}
    out = []
    for chain in chains:
        game = by_id.get(chain.game_id)
        if game is None:
            raise CorpusError(f"chain refers to unknown game {chain.game_id}")
        refs = [tokenize(e.text) for e in chain.entries]
        prev = None
        for pos, entry in enumerate(chain.entries, 1):
            context, target_pos = speaker_context(game, entry.round_index, entry.speaker, chain.image_id)
            toks = tokenize(entry.text)
            out.append(ChainExample(
                game_id=chain.game_id, image_id=chain.image_id, split=game.split_tag,
                round_index=entry.round_index, message_id=entry.message_id, chain_position=pos,
                speaker=entry.speaker, text=entry.text, tokens=toks, prev_tokens=prev,
                context=context, target_pos=target_pos, references=refs,
            ))
            prev = toks
    out.sort(key=lambda e: (e.game_id, e.round_index, e.message_id, e.image_id))
    return out


def by_split(examples: Iterable[ChainExample]) -> dict[str, list[ChainExample]]:
    out: dict[str, list[ChainExample]] = {}
    for ex in examples:
        out.setdefault(ex.split, []).append(ex)
    return out


def encode_generation(examples: Sequence[ChainExample], vocab: Vocabulary) -> list[EncodedInstance]:
    return [
        encode_instance(
            ex.prev_tokens, ex.tokens, vocab, ex.context, ex.target_pos,
            game_id=ex.game_id, image_id=ex.image_id, round_index=ex.round_index,
            message_id=ex.message_id, chain_position=ex.chain_position, chain_key=ex.chain_key,
            target_text=ex.text, prev_text=" ".join(ex.prev_tokens) if ex.prev_tokens else None,
            references=[" ".join(r) for r in ex.references],
        )
        for ex in examples
    ]


def resolution_instances(examples: Sequence[ChainExample],
                         all_examples: Sequence[ChainExample] | None = None) -> list[ResolutionInstance]:
    """Resolution examples whose candidate histories come only from earlier mentions."""
    pool = all_examples if all_examples is not None else examples
    mentions: dict[str, list[tuple[str, int, int, str]]] = {}
    for ex in pool:
        mentions.setdefault(ex.game_id, []).append((ex.image_id, ex.round_index, ex.message_id, ex.key))
    return [
        ResolutionInstance(
            utterance_key=ex.key, context=list(ex.context), target_pos=ex.target_pos,
            histories=candidate_histories(mentions[ex.game_id], ex.context, (ex.round_index, ex.message_id)),
            chain_position=ex.chain_position, game_id=ex.game_id, round_index=ex.round_index,
            message_id=ex.message_id, text=ex.text,
        )
        for ex in examples
    ]


def utterance_tokens(examples: Iterable[ChainExample]) -> dict[str, list[str]]:
    return {ex.key: ex.tokens for ex in examples}


def example_to_dict(ex: ChainExample) -> dict:
    return dict(ex.__dict__)


def example_from_dict(d: Mapping) -> ChainExample:
    return ChainExample(**d)
