"""Tokenisation, vocabularies and instance encoding for the generation models."""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, SOS, EOS, NOHS = "<pad>", "<unk>", "<sos>", "<eos>", "<nohs>"
SPECIALS = (PAD, UNK, SOS, EOS, NOHS)
PAD_IDX, UNK_IDX, SOS_IDX, EOS_IDX, NOHS_IDX = range(5)

# Rule table, tried in order at each position.  Patterned on the usual
# tweet-style tokenisers: emoticons and URLs survive intact, internal
# apostrophes and hyphens stay inside words, punctuation is split off.
_RULES = [
    ("url", r"https?://[^\s<>\"]+|www\.[^\s<>\"]+"),
    ("emoticon", r"(?<!\w)(?:[<>]?[:;=][\-o\*']?[\)\]\(\[dDpP/\\\}\{@\|]|[\)\]\(\[/\\\}\{@\|][\-o\*']?[:;=][<>]?|<3)(?!\w)"),
    ("number", r"[+\-]?\d+(?:[,/.:\-]\d+)*[+\-]?"),
    ("word", r"[^\W\d_](?:[^\W\d_]|['\-_])*[^\W\d_]|[^\W\d_]+"),
    ("alnum", r"[\w_]+"),
    ("ellipsis", r"\.(?:\s*\.){1,}"),
    ("other", r"\S"),
]
_TOKEN_RE = re.compile("|".join(f"(?:{pattern})" for _, pattern in _RULES), re.UNICODE)
_EMOTICON_RE = re.compile(_RULES[1][1])


def tokenize(text: str) -> list[str]:
    """Split ``text`` into lowercased tokens.

    Emoticons keep their case (``:D`` and ``:d`` differ), everything else is
    lowercased.  Ellipses written with spaces are normalised to ``...``.
    """
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        tok = match.group(0)
        if _EMOTICON_RE.fullmatch(tok):
            tokens.append(tok)
        elif tok.startswith(".") and len(tok) > 1 and set(tok) <= {".", " ", "\t"}:
            tokens.append(re.sub(r"\s+", "", tok))
        else:
            tokens.append(tok.lower())
    return tokens


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


class Vocabulary:
    """Dense token <-> index map with the five special tokens at 0..4."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: list[str] = list(SPECIALS)
        self.stoi: dict[str, int] = {tok: i for i, tok in enumerate(SPECIALS)}
        for tok in tokens:
            if tok in self.stoi:
                if tok in SPECIALS:
                    continue
                raise ValueError(f"duplicate token {tok!r}")
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    def __len__(self) -> int:
        return len(self.itos)

    @property
    def size(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def index(self, tok: str) -> int:
        return self.stoi.get(tok, UNK_IDX)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    def decode(self, indices: Sequence[int], extra: Sequence[str] = ()) -> list[str]:
        out = []
        for i in indices:
            i = int(i)
            out.append(self.itos[i] if i < len(self.itos) else extra[i - len(self.itos)])
        return out

    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.itos) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if tuple(lines[: len(SPECIALS)]) != SPECIALS:
            raise ValueError(f"{path}: vocabulary must start with {SPECIALS}")
        return cls(lines[len(SPECIALS):])


def build_vocab(utterances: Iterable[Sequence[str]], min_count: int = 2) -> Vocabulary:
    """Vocabulary over tokenised training utterances.

    Tokens seen fewer than ``min_count`` times map to UNK.  Order is by
    descending frequency, then alphabetical, so the result is independent of
    corpus order.
    """
    counts = Counter(tok for utt in utterances for tok in utt)
    kept = [t for t, c in counts.items() if c >= min_count and t not in SPECIALS]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(kept)


@dataclass(frozen=True)
class ExtendedVocabulary:
    base: Vocabulary
    extra: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return self.base.size + len(self.extra)

    def index(self, tok: str) -> int:
        if tok in self.base:
            return self.base.stoi[tok]
        try:
            return self.base.size + self.extra.index(tok)
        except ValueError:
            return UNK_IDX


def extend_for_copy(source: Sequence[str], vocab: Vocabulary) -> tuple[ExtendedVocabulary, list[int]]:
    """Give every out-of-vocabulary source form a temporary index past the base vocabulary."""
    extra: list[str] = []
    indices = []
    for tok in source:
        if tok in vocab.stoi:
            indices.append(vocab.stoi[tok])
            continue
        if tok not in extra:
            extra.append(tok)
        indices.append(vocab.size + extra.index(tok))
    return ExtendedVocabulary(vocab, tuple(extra)), indices


@dataclass
class EncodedInstance:
    """One generation example: previous mention -> next mention in a chain."""

    source: list[int]
    target: list[int]
    target_ext: list[int]
    source_ext: list[int]
    extra: tuple[str, ...]
    context: list[str]
    target_pos: int
    game_id: str = ""
    image_id: str = ""
    round_index: int = 0
    message_id: int = 0
    chain_position: int = 1
    chain_key: str = ""
    target_text: str = ""
    prev_text: str | None = None
    references: list[str] = field(default_factory=list)

    @property
    def target_image(self) -> str:
        return self.context[self.target_pos]


def encode_instance(
    prev_tokens: Sequence[str] | None,
    target_tokens: Sequence[str],
    vocab: Vocabulary,
    context: Sequence[str],
    target_pos: int,
    **meta,
) -> EncodedInstance:
    if len(context) != 6:
        raise ValueError(f"context must hold 6 images, got {len(context)}")
    if not 0 <= target_pos < 6:
        raise ValueError(f"target position {target_pos} out of range")
    src_tokens = list(prev_tokens) if prev_tokens else [NOHS]
    if src_tokens == [NOHS]:
        ext, src_ext = ExtendedVocabulary(vocab), [NOHS_IDX]
    else:
        ext, src_ext = extend_for_copy(src_tokens, vocab)
    target = [SOS_IDX] + vocab.encode(target_tokens) + [EOS_IDX]
    target_ext = [SOS_IDX] + [ext.index(t) for t in target_tokens] + [EOS_IDX]
    return EncodedInstance(
        source=vocab.encode(src_tokens),
        target=target,
        target_ext=target_ext,
        source_ext=src_ext,
        extra=ext.extra,
        context=list(context),
        target_pos=target_pos,
        **meta,
    )


def apply_permutation(context: Sequence, target_pos: int, perm: Sequence[int]) -> tuple[list, int]:
    """Reorder ``context`` so that slot j holds old slot ``perm[j]``."""
    perm = list(perm)
    if sorted(perm) != list(range(len(context))):
        raise ValueError(f"{perm} is not a permutation of {len(context)} slots")
    return [context[p] for p in perm], perm.index(target_pos)


def shuffle_contexts(dataset: Sequence, mode: str = "once", seed: int = 0, epoch: int = 0) -> list:
    """Permute candidate order in every instance, tracking the target slot.

    ``mode="once"`` draws one permutation stream per seed (generation data);
    ``mode="per_epoch"`` also keys the stream on ``epoch`` (resolution data).
    Instances need ``context`` and ``target_pos`` fields; any ``histories``
    field is permuted alongside.
    """
    if mode not in ("once", "per_epoch"):
        raise ValueError(f"unknown shuffle mode {mode!r}")
    rng = np.random.default_rng([seed, epoch] if mode == "per_epoch" else [seed])
    out = []
    for inst in dataset:
        perm = rng.permutation(len(inst.context))
        context, pos = apply_permutation(inst.context, inst.target_pos, perm)
        changes = {"context": context, "target_pos": pos}
        if getattr(inst, "histories", None) is not None:
            changes["histories"] = [inst.histories[p] for p in perm]
        out.append(replace(inst, **changes))
    return out
