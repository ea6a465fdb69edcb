"""Game-log, reference-set and chain records, with their file formats.

Game logs are JSON Lines, one game per line::

    {"game_id": "g001", "split": "train",
     "rounds": [{"round_index": 1,
                 "views": {"A": [six image ids], "B": [six image ids]},
                 "messages": [{"message_id": 0, "speaker": "A", "text": "..."}],
                 "selections": [{"speaker": "A", "image_id": "...",
                                 "label": "common", "position": 3}]},
                ...]}

``position`` is the ``message_id`` after which the selection happened, or
``null`` when it happened before any message of the round.

Captions are a JSON object ``{image_id: [caption, ...]}``.  Scene-graph
tokens are ``{image_id: {"attributes": [...], "relations": [...]}}``; entries
may be multi-word and are split on whitespace.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

SPLITS = ("train", "val", "test", "annotated")
LABELS = ("common", "different")


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Message:
    message_id: int
    speaker: str
    text: str


@dataclass(frozen=True)
class SelectionEvent:
    speaker: str
    image_id: str
    label: str
    position: int | None

    def __post_init__(self):
        if self.label not in LABELS:
            raise CorpusError(f"selection label must be one of {LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class RoundLog:
    round_index: int
    messages: tuple[Message, ...]
    selections: tuple[SelectionEvent, ...]
    views: dict[str, tuple[str, ...]]

    def __post_init__(self):
        for speaker, view in self.views.items():
            if len(view) != 6:
                raise CorpusError(f"round {self.round_index}: view of {speaker} has {len(view)} images, expected 6")
        ids = {m.message_id for m in self.messages}
        for sel in self.selections:
            if sel.image_id not in self.views.get(sel.speaker, ()):
                raise CorpusError(
                    f"round {self.round_index}: {sel.speaker} selected {sel.image_id} outside their view"
                )
            if sel.position is not None and sel.position not in ids:
                raise CorpusError(f"round {self.round_index}: selection after unknown message {sel.position}")

    def sees(self, speaker: str, image_id: str) -> bool:
        return image_id in self.views.get(speaker, ())

    def covisible(self, image_id: str) -> bool:
        return len(self.views) >= 2 and all(image_id in v for v in self.views.values())

    @property
    def images(self) -> set[str]:
        return {img for view in self.views.values() for img in view}


@dataclass(frozen=True)
class GameLog:
    game_id: str
    rounds: tuple[RoundLog, ...]
    split_tag: str = "train"

    def __post_init__(self):
        if len(self.rounds) != 5:
            raise CorpusError(f"game {self.game_id}: {len(self.rounds)} rounds, expected 5")
        idx = [r.round_index for r in self.rounds]
        if idx != [1, 2, 3, 4, 5]:
            raise CorpusError(f"game {self.game_id}: round indices {idx}, expected 1..5")
        seen: set[int] = set()
        for r in self.rounds:
            for m in r.messages:
                if m.message_id in seen:
                    raise CorpusError(f"game {self.game_id}: duplicate message id {m.message_id}")
                seen.add(m.message_id)
        if self.split_tag not in SPLITS:
            raise CorpusError(f"game {self.game_id}: unknown split {self.split_tag!r}")

    @property
    def images(self) -> set[str]:
        return set().union(*(r.images for r in self.rounds))

    def round(self, index: int) -> RoundLog:
        return self.rounds[index - 1]

    def message(self, message_id: int) -> Message:
        for r in self.rounds:
            for m in r.messages:
                if m.message_id == message_id:
                    return m
        raise KeyError(message_id)


@dataclass(frozen=True)
class VisualGenomeTokens:
    attribute_tokens: frozenset[str]
    relationship_tokens: frozenset[str]

    @property
    def retained(self) -> frozenset[str]:
        return self.attribute_tokens & self.relationship_tokens


@dataclass
class ReferenceSet:
    image_id: str
    captions: list[str]
    vg_tokens: frozenset[str] = frozenset()
    dynamic_captions: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.captions:
            raise CorpusError(f"image {self.image_id}: no captions")

    @property
    def all_captions(self) -> list[str]:
        return self.captions + self.dynamic_captions


@dataclass(frozen=True)
class ChainEntry:
    round_index: int
    message_id: int
    speaker: str
    text: str
    score: float


@dataclass
class ReferenceChain:
    game_id: str
    image_id: str
    entries: list[ChainEntry]

    def __post_init__(self):
        rounds = [e.round_index for e in self.entries]
        if not 1 <= len(rounds) <= 5:
            raise CorpusError(f"chain {self.game_id}/{self.image_id}: length {len(rounds)} outside 1..5")
        if any(b <= a for a, b in zip(rounds, rounds[1:])):
            raise CorpusError(f"chain {self.game_id}/{self.image_id}: rounds {rounds} not strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    def records(self) -> list[dict]:
        return [
            {
                "game_id": self.game_id,
                "round_index": e.round_index,
                "message_id": e.message_id,
                "image_id": self.image_id,
                "speaker": e.speaker,
                "text": e.text,
                "chain_position": pos,
                "score": e.score,
            }
            for pos, e in enumerate(self.entries, start=1)
        ]


# --- parsing -----------------------------------------------------------------


def game_from_dict(d: dict) -> GameLog:
    try:
        rounds = tuple(
            RoundLog(
                round_index=int(r["round_index"]),
                messages=tuple(Message(int(m["message_id"]), str(m["speaker"]), str(m["text"])) for m in r["messages"]),
                selections=tuple(
                    SelectionEvent(
                        str(s["speaker"]),
                        str(s["image_id"]),
                        str(s["label"]),
                        None if s.get("position") is None else int(s["position"]),
                    )
                    for s in r.get("selections", [])
                ),
                views={str(k): tuple(map(str, v)) for k, v in r["views"].items()},
            )
            for r in d["rounds"]
        )
        return GameLog(str(d["game_id"]), rounds, str(d.get("split", "train")))
    except KeyError as exc:
        raise CorpusError(f"game record missing field {exc}") from None


def game_to_dict(game: GameLog) -> dict:
    return {
        "game_id": game.game_id,
        "split": game.split_tag,
        "rounds": [
            {
                "round_index": r.round_index,
                "views": {k: list(v) for k, v in sorted(r.views.items())},
                "messages": [asdict(m) for m in r.messages],
                "selections": [asdict(s) for s in r.selections],
            }
            for r in game.rounds
        ],
    }


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def load_games(path: str | Path) -> list[GameLog]:
    return [game_from_dict(d) for d in read_jsonl(path)]


def save_games(path: str | Path, games: Iterable[GameLog]) -> None:
    write_jsonl(path, (game_to_dict(g) for g in games))


def load_captions(path: str | Path) -> dict[str, list[str]]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return {str(k): [str(c) for c in v] for k, v in data.items()}


def _split_tokens(entries: Iterable[str]) -> frozenset[str]:
    return frozenset(tok for e in entries for tok in str(e).lower().split())


def load_vg(path: str | Path) -> dict[str, VisualGenomeTokens]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return {
        str(k): VisualGenomeTokens(_split_tokens(v.get("attributes", [])), _split_tokens(v.get("relations", [])))
        for k, v in data.items()
    }


def load_chains(path: str | Path) -> list[ReferenceChain]:
    """Regroup a per-utterance chain file into chains."""
    grouped: dict[tuple[str, str], list[dict]] = {}
    for rec in read_jsonl(path):
        grouped.setdefault((rec["game_id"], rec["image_id"]), []).append(rec)
    chains = []
    for (game_id, image_id), recs in sorted(grouped.items()):
        recs.sort(key=lambda r: r["chain_position"])
        entries = [
            ChainEntry(int(r["round_index"]), int(r["message_id"]), str(r.get("speaker", "")), r["text"], float(r["score"]))
            for r in recs
        ]
        chains.append(ReferenceChain(game_id, image_id, entries))
    return chains


def save_chains(path: str | Path, chains: Iterable[ReferenceChain]) -> None:
    write_jsonl(path, (rec for c in chains for rec in c.records()))
