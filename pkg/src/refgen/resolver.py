"""Reference resolution: pick the target image for an utterance among six candidates.

The utterance side fuses each contextual token vector with the six-image
context and pools the fused vectors with self-attention.  Each candidate is
its projected visual feature, plus (when the image was mentioned earlier in
the game) a projection of the averaged token vectors of its latest mention.
Candidates are scored by dot product with the pooled utterance vector.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .embeddings import EmbeddingCache
from .genmodels import init_uniform

log = logging.getLogger(__name__)

RESOLVER_VARIANTS = ("resolver", "resolver-ablated", "baseline-onehot")


@dataclass
class ResolutionInstance:
    utterance_key: str
    context: list[str]
    target_pos: int
    histories: list[str | None]           # per candidate: cache key of its latest earlier mention
    chain_position: int = 1
    game_id: str = ""
    round_index: int = 0
    message_id: int = 0
    text: str = ""

    @property
    def target_image(self) -> str:
        return self.context[self.target_pos]


def candidate_histories(
    mentions: Sequence[tuple[str, int, int, str]],
    context: Sequence[str],
    before: tuple[int, int],
) -> list[str | None]:
    """Latest mention key per candidate, restricted to mentions strictly before ``before``.

    ``mentions`` holds ``(image_id, round_index, message_id, key)`` for one game.
    """
    latest: dict[str, tuple[tuple[int, int], str]] = {}
    for image_id, rnd, msg, key in mentions:
        when = (rnd, msg)
        if when < before and (image_id not in latest or latest[image_id][0] < when):
            latest[image_id] = (when, key)
    return [latest[c][1] if c in latest else None for c in context]


def check_causal(instance: ResolutionInstance, when: Mapping[str, tuple[int, int]]) -> None:
    """Raise if any history was uttered at or after the utterance being resolved."""
    now = (instance.round_index, instance.message_id)
    for key in instance.histories:
        if key is not None and when[key] >= now:
            raise ValueError(f"history {key} at {when[key]} is not before {now}")


# --- batching --------------------------------------------------------------------


@dataclass
class ResolverBatch:
    tokens: torch.Tensor         # (B, T, D) contextual token vectors
    mask: torch.Tensor           # (B, T)
    context: torch.Tensor        # (B, 6, F)
    history: torch.Tensor        # (B, 6, D) mean token vector of each candidate's latest mention
    has_history: torch.Tensor    # (B, 6)
    target: torch.Tensor         # (B,)

    def __len__(self) -> int:
        return self.tokens.shape[0]

    def without_history(self) -> "ResolverBatch":
        return ResolverBatch(self.tokens, self.mask, self.context, torch.zeros_like(self.history),
                             torch.zeros_like(self.has_history), self.target)


def make_resolver_batch(instances: Sequence[ResolutionInstance], cache: EmbeddingCache,
                        features: Mapping[str, np.ndarray]) -> ResolverBatch:
    if not instances:
        raise ValueError("empty batch")
    seqs = [cache.get(inst.utterance_key) for inst in instances]
    dim = seqs[0].shape[1]
    width = max(max(len(s) for s in seqs), 1)
    tokens = np.zeros((len(seqs), width, dim), dtype=np.float32)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for i, s in enumerate(seqs):
        if len(s) == 0:
            raise ValueError(f"utterance {instances[i].utterance_key} has no tokens")
        tokens[i, : len(s)] = s
        mask[i, : len(s)] = True
    history = np.zeros((len(seqs), 6, dim), dtype=np.float32)
    has_history = np.zeros((len(seqs), 6), dtype=bool)
    for i, inst in enumerate(instances):
        for j, key in enumerate(inst.histories):
            if key is not None:
                vecs = cache.get(key)
                if len(vecs):
                    history[i, j] = vecs.mean(axis=0)
                    has_history[i, j] = True
    context = np.stack([np.stack([features[c] for c in inst.context]) for inst in instances]).astype(np.float32)
    return ResolverBatch(torch.as_tensor(tokens), torch.as_tensor(mask), torch.as_tensor(context),
                         torch.as_tensor(history), torch.as_tensor(has_history),
                         torch.as_tensor([inst.target_pos for inst in instances], dtype=torch.long))


# --- model -----------------------------------------------------------------------


@dataclass
class ResolverConfig:
    variant: str = "resolver"
    token_dim: int = 768
    feature_dim: int = 2048
    hidden_dim: int = 512
    attn_dim: int = 512
    dropout: float = 0.5
    n_images: int = 0            # one-hot baseline only
    image_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.variant not in RESOLVER_VARIANTS:
            raise ValueError(f"unknown resolver variant {self.variant!r}")


@dataclass
class EncodedUtterance:
    fused: torch.Tensor      # (B, T, H) multimodal token vectors
    scores: torch.Tensor     # (B, T) attention logits (-inf on padding)
    weights: torch.Tensor    # (B, T)
    pooled: torch.Tensor     # (B, H)


@dataclass
class Resolution:
    prediction: int
    scores: list[float]
    ranking: list[int]
    tie: bool


class ResolverModel(nn.Module):
    def __init__(self, config: ResolverConfig):
        super().__init__()
        c = config
        self.config = config
        self.drop = nn.Dropout(c.dropout)
        self.token_proj = nn.Linear(c.token_dim, c.hidden_dim)
        self.context_proj = nn.Linear(6 * c.feature_dim, c.hidden_dim)
        self.fuse = nn.Linear(2 * c.hidden_dim, c.hidden_dim)
        self.W_e = nn.Linear(c.hidden_dim, c.attn_dim)
        self.v_a = nn.Linear(c.attn_dim, 1)
        self.image_proj = nn.Linear(c.feature_dim, c.hidden_dim)
        self.history_proj = nn.Linear(c.token_dim, c.hidden_dim)
        init_uniform(self)

    @property
    def variant(self) -> str:
        return self.config.variant

    def encode_utterance(self, tokens: torch.Tensor, mask: torch.Tensor, context: torch.Tensor) -> EncodedUtterance:
        if tokens.shape[-1] != self.config.token_dim:
            raise ValueError(f"token vectors have dim {tokens.shape[-1]}, expected {self.config.token_dim}")
        if context.shape[1:] != (6, self.config.feature_dim):
            raise ValueError(f"context must be (B, 6, {self.config.feature_dim}), got {tuple(context.shape)}")
        tok = F.relu(self.token_proj(self.drop(tokens)))
        ctx = F.relu(self.context_proj(self.drop(context.flatten(1))))
        fused = F.relu(self.fuse(torch.cat([tok, ctx.unsqueeze(1).expand_as(tok)], dim=-1)))
        scores = self.v_a(torch.tanh(self.W_e(fused))).squeeze(-1).masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        return EncodedUtterance(fused, scores, weights, torch.bmm(weights.unsqueeze(1), fused).squeeze(1))

    def build_candidates(self, context: torch.Tensor, history: torch.Tensor | None,
                         has_history: torch.Tensor | None) -> torch.Tensor:
        """(B, 6, H) unit-norm candidate vectors; histories are added where present."""
        visual = F.normalize(F.relu(self.image_proj(self.drop(context))), dim=-1)
        if history is None or self.variant == "resolver-ablated":
            return visual
        hist = F.relu(self.history_proj(self.drop(history)))
        # history-free candidates stay bit-identical to the ablated model's
        return torch.where(has_history.unsqueeze(-1), F.normalize(visual + hist, dim=-1), visual)

    def forward(self, batch: ResolverBatch) -> torch.Tensor:
        """(B, 6) candidate scores."""
        pooled = self.encode_utterance(batch.tokens, batch.mask, batch.context).pooled
        cands = self.build_candidates(batch.context, batch.history, batch.has_history)
        return torch.bmm(cands, pooled.unsqueeze(-1)).squeeze(-1)

    def loss(self, batch: ResolverBatch) -> torch.Tensor:
        return F.cross_entropy(self(batch), batch.target, reduction="sum")


class OneHotBaseline(nn.Module):
    """Scores each candidate from a one-hot encoding of its image id alone."""

    def __init__(self, config: ResolverConfig):
        super().__init__()
        if not config.image_ids:
            raise ValueError("one-hot baseline needs the image-id universe")
        self.config = config
        self.index = {img: i for i, img in enumerate(config.image_ids)}
        self.score = nn.Linear(len(config.image_ids), 1)
        init_uniform(self)

    variant = "baseline-onehot"

    def encode_ids(self, context: Sequence[Sequence[str]]) -> torch.Tensor:
        try:
            idx = torch.as_tensor([[self.index[c] for c in ctx] for ctx in context], dtype=torch.long)
        except KeyError as exc:
            raise ValueError(f"unknown image id {exc.args[0]}") from None
        return F.one_hot(idx, len(self.index)).float()

    def forward(self, context: Sequence[Sequence[str]]) -> torch.Tensor:
        return self.score(self.encode_ids(context)).squeeze(-1)

    def loss(self, context: Sequence[Sequence[str]], target: torch.Tensor) -> torch.Tensor:
        return F.cross_entropy(self(context), target, reduction="sum")


def build_resolver(config: ResolverConfig) -> nn.Module:
    return OneHotBaseline(config) if config.variant == "baseline-onehot" else ResolverModel(config)


def rank_scores(scores: Sequence[float]) -> Resolution:
    """Argmax with ties to the lowest index (flagged and logged) plus the full ranking."""
    scores = [float(s) for s in scores]
    ranking = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    best = ranking[0]
    tie = sum(s == scores[best] for s in scores) > 1
    if tie:
        log.info("score tie among candidates; choosing index %d", best)
    return Resolution(best, scores, ranking, tie)


def resolve(pooled: torch.Tensor, candidates: torch.Tensor) -> Resolution:
    """Resolve one utterance: ``pooled`` (H,) against ``candidates`` (6, H)."""
    if pooled.shape[-1] != candidates.shape[-1]:
        raise ValueError("utterance and candidate dimensions differ")
    return rank_scores((candidates @ pooled).tolist())


@torch.no_grad()
def predict(model: nn.Module, batch: ResolverBatch) -> list[Resolution]:
    model.eval()
    return [rank_scores(row) for row in model(batch).tolist()]


def random_policy(n: int, rng: np.random.Generator, n_candidates: int = 6) -> np.ndarray:
    """Uniformly random candidate choices."""
    return rng.integers(0, n_candidates, size=n)


def config_dict(config: ResolverConfig) -> dict:
    return asdict(config)
