"""Referring-utterance generators: Ref, ReRef and Copy.

All three share a visual encoder that fuses the six-image context with the
target image.  Ref decodes from that vector alone.  ReRef additionally
encodes the previous mention of the target (or ``<nohs>``) with a BiLSTM and
attends over it while decoding.  Copy adds a pointer gate that mixes the
decoder's vocabulary distribution with the attention over source tokens,
which lets it reproduce out-of-vocabulary words from the previous mention.

The output layer covers the vocabulary minus ``<nohs>``; full-vocabulary
distributions carry an exact zero at the ``<nohs>`` index.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Mapping, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .textprep import EOS_IDX, NOHS_IDX, PAD_IDX, SOS_IDX, UNK_IDX, EncodedInstance

VARIANTS = ("ref", "reref", "copy")


@dataclass
class GenConfig:
    variant: str
    vocab_size: int
    feature_dim: int = 2048
    embed_dim: int = 1024
    hidden_dim: int = 512
    attn_dim: int = 512
    dropout: float = 0.3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown generator variant {self.variant!r}")


def init_uniform(module: nn.Module, scale: float = 0.1) -> None:
    """Weights ~ U(-scale, scale), biases zero, for every linear, embedding and LSTM."""
    for name, param in module.named_parameters():
        if "bias" in name:
            nn.init.zeros_(param)
        else:
            nn.init.uniform_(param, -scale, scale)


def insert_nohs(logits: torch.Tensor) -> torch.Tensor:
    """Map ``|V|-1`` output logits onto the full vocabulary with -inf at ``<nohs>``."""
    blocked = torch.full_like(logits[..., :1], float("-inf"))
    return torch.cat([logits[..., :NOHS_IDX], blocked, logits[..., NOHS_IDX:]], dim=-1)


def additive_attention(enc_proj: torch.Tensor, dec_proj: torch.Tensor, v_a: nn.Linear,
                       mask: torch.Tensor) -> torch.Tensor:
    """Softmax over ``v_a(tanh(enc_proj + dec_proj))`` restricted to ``mask``.

    ``enc_proj``: (B, S, A); ``dec_proj``: (B, A); ``mask``: (B, S) bool.
    """
    scores = v_a(torch.tanh(enc_proj + dec_proj.unsqueeze(1))).squeeze(-1)
    scores = scores.masked_fill(~mask, float("-inf"))
    return torch.softmax(scores, dim=-1)


# --- batching --------------------------------------------------------------------


@dataclass
class GenBatch:
    context: torch.Tensor        # (B, 6, F)
    target_feat: torch.Tensor    # (B, F)
    source: torch.Tensor         # (B, S) base-vocabulary ids, PAD-padded
    source_ext: torch.Tensor     # (B, S) extended ids
    source_len: torch.Tensor     # (B,)
    target: torch.Tensor         # (B, T)
    target_ext: torch.Tensor     # (B, T)
    n_extra: int

    @property
    def source_mask(self) -> torch.Tensor:
        return self.source != PAD_IDX

    def __len__(self) -> int:
        return self.source.shape[0]

    def index(self, idx) -> "GenBatch":
        idx = torch.as_tensor(idx, dtype=torch.long)
        return GenBatch(self.context[idx], self.target_feat[idx], self.source[idx], self.source_ext[idx],
                        self.source_len[idx], self.target[idx], self.target_ext[idx], self.n_extra)


def _pad(seqs: Sequence[Sequence[int]], value: int = PAD_IDX) -> torch.Tensor:
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), value, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.as_tensor(list(s), dtype=torch.long)
    return out


def make_batch(instances: Sequence[EncodedInstance], features: Mapping[str, np.ndarray]) -> GenBatch:
    if not instances:
        raise ValueError("empty batch")
    context = torch.as_tensor(np.stack([np.stack([features[i] for i in inst.context]) for inst in instances]),
                              dtype=torch.float32)
    target_feat = torch.as_tensor(np.stack([features[inst.target_image] for inst in instances]), dtype=torch.float32)
    return GenBatch(
        context=context,
        target_feat=target_feat,
        source=_pad([inst.source for inst in instances]),
        source_ext=_pad([inst.source_ext for inst in instances]),
        source_len=torch.as_tensor([len(inst.source) for inst in instances], dtype=torch.long),
        target=_pad([inst.target for inst in instances]),
        target_ext=_pad([inst.target_ext for inst in instances]),
        n_extra=max(len(inst.extra) for inst in instances),
    )


# --- model pieces ----------------------------------------------------------------


class VisualEncoder(nn.Module):
    """Six-image context and target image -> one conditioning vector."""

    def __init__(self, feature_dim: int, hidden_dim: int, dropout: float):
        super().__init__()
        self.feature_dim = feature_dim
        self.drop = nn.Dropout(dropout)
        self.context_proj = nn.Linear(6 * feature_dim, hidden_dim)
        self.target_proj = nn.Linear(feature_dim, hidden_dim)
        self.fuse = nn.Linear(2 * hidden_dim, hidden_dim)

    def forward(self, context: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
        if context.dim() != 3 or context.shape[1:] != (6, self.feature_dim):
            raise ValueError(f"context must be (B, 6, {self.feature_dim}), got {tuple(context.shape)}")
        if target.dim() != 2 or target.shape[1] != self.feature_dim:
            raise ValueError(f"target must be (B, {self.feature_dim}), got {tuple(target.shape)}")
        ctx = F.relu(self.context_proj(self.drop(context.flatten(1))))
        tgt = F.relu(self.target_proj(self.drop(target)))
        return self.fuse(torch.cat([ctx, tgt], dim=-1))


@dataclass
class EncoderState:
    outputs: torch.Tensor   # (B, S, 2H)
    proj: torch.Tensor      # (B, S, A)
    mask: torch.Tensor      # (B, S)
    final: torch.Tensor     # (B, H)

    def index(self, idx: torch.Tensor) -> "EncoderState":
        return EncoderState(self.outputs[idx], self.proj[idx], self.mask[idx], self.final[idx])


@dataclass
class DecoderState:
    h: torch.Tensor
    c: torch.Tensor
    cond: torch.Tensor                          # visual conditioning vector h_d
    enc: EncoderState | None = None
    source_ext: torch.Tensor | None = None
    n_extra: int = 0

    def index(self, idx) -> "DecoderState":
        idx = torch.as_tensor(idx, dtype=torch.long)
        return DecoderState(
            self.h[idx], self.c[idx], self.cond[idx],
            self.enc.index(idx) if self.enc is not None else None,
            self.source_ext[idx] if self.source_ext is not None else None,
            self.n_extra,
        )


@dataclass
class StepOutput:
    log_probs: torch.Tensor             # (B, V [+ extra])
    logits: torch.Tensor                # (B, V-1), generator branch
    attention: torch.Tensor | None = None
    p_gen: torch.Tensor | None = None
    probs: torch.Tensor | None = None   # Copy only; used for the loss


class Generator(nn.Module):
    """Shared decoder machinery; subclasses differ in encoding and output."""

    def __init__(self, config: GenConfig):
        super().__init__()
        self.config = config
        c = config
        self.embedding = nn.Embedding(c.vocab_size, c.embed_dim)
        self.visual = VisualEncoder(c.feature_dim, c.hidden_dim, c.dropout)
        self.decoder = nn.LSTMCell(c.embed_dim + c.hidden_dim, c.hidden_dim)

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def vocab_size(self) -> int:
        return self.config.vocab_size

    def decoder_input(self, state: DecoderState, tokens: torch.Tensor) -> torch.Tensor:
        tokens = torch.where(tokens >= self.vocab_size, torch.full_like(tokens, UNK_IDX), tokens)
        return torch.cat([self.embedding(tokens), state.cond], dim=-1)

    def start(self, batch: GenBatch) -> DecoderState:
        raise NotImplementedError

    def step(self, state: DecoderState, tokens: torch.Tensor) -> tuple[StepOutput, DecoderState]:
        raise NotImplementedError

    def forward(self, batch: GenBatch) -> list[StepOutput]:
        """Teacher-forced pass: one output per target position after ``<sos>``."""
        state = self.start(batch)
        target = batch.target
        outputs = []
        for t in range(target.shape[1] - 1):
            out, state = self.step(state, target[:, t])
            outputs.append(out)
        return outputs

    def loss(self, batch: GenBatch, outputs: list[StepOutput] | None = None) -> torch.Tensor:
        """Summed negative log-likelihood of the gold next tokens."""
        outputs = self.forward(batch) if outputs is None else outputs
        gold = self.gold(batch)[:, 1:]
        mask = batch.target[:, 1:] != PAD_IDX
        total = torch.zeros((), dtype=torch.float32)
        for t, out in enumerate(outputs):
            g = gold[:, t].unsqueeze(1)
            if out.probs is not None:
                nll = -torch.log(out.probs.gather(1, g).squeeze(1).clamp_min(1e-30))
            else:
                nll = -out.log_probs.gather(1, g).squeeze(1)
            total = total + nll.masked_fill(~mask[:, t], 0.0).sum()
        return total

    def gold(self, batch: GenBatch) -> torch.Tensor:
        return batch.target

    @torch.no_grad()
    def token_accuracy(self, batch: GenBatch) -> tuple[int, int]:
        """(correct, total) teacher-forced argmax predictions over non-pad targets."""
        outputs = self.forward(batch)
        gold = self.gold(batch)[:, 1:]
        mask = batch.target[:, 1:] != PAD_IDX
        correct = total = 0
        for t, out in enumerate(outputs):
            pred = out.log_probs.argmax(dim=-1)
            correct += int(((pred == gold[:, t]) & mask[:, t]).sum())
            total += int(mask[:, t].sum())
        return correct, total


class RefGenerator(Generator):
    """Decoder conditioned on the visual context only; the source field is ignored."""

    def __init__(self, config: GenConfig):
        super().__init__(config)
        self.out = nn.Linear(config.hidden_dim, config.vocab_size - 1)
        init_uniform(self)

    def start(self, batch: GenBatch) -> DecoderState:
        h_d = self.visual(batch.context, batch.target_feat)
        return DecoderState(h_d, h_d, h_d)

    def step(self, state, tokens):
        h, c = self.decoder(self.decoder_input(state, tokens), (state.h, state.c))
        logits = self.out(h)
        log_probs = F.log_softmax(insert_nohs(logits), dim=-1)
        return StepOutput(log_probs, logits), replace(state, h=h, c=c)


class ReRefGenerator(Generator):
    """Adds a BiLSTM over the previous mention and additive attention while decoding."""

    def __init__(self, config: GenConfig):
        super().__init__(config)
        c = config
        self.embed_drop = nn.Dropout(c.dropout)
        self.encoder = nn.LSTM(c.embed_dim, c.hidden_dim, batch_first=True, bidirectional=True)
        self.bridge = nn.Linear(2 * c.hidden_dim, c.hidden_dim)
        self.W_e = nn.Linear(2 * c.hidden_dim, c.attn_dim)
        self.W_d = nn.Linear(c.hidden_dim, c.attn_dim)
        self.v_a = nn.Linear(c.attn_dim, 1)
        self.out = nn.Linear(3 * c.hidden_dim, c.vocab_size - 1)
        init_uniform(self)

    def encode(self, source: torch.Tensor, lengths: torch.Tensor, h_d: torch.Tensor) -> EncoderState:
        if (lengths < 1).any():
            raise ValueError("empty source; use the <nohs> token for first mentions")
        emb = self.embed_drop(self.embedding(source))
        h0 = h_d.unsqueeze(0).expand(2, -1, -1).contiguous()
        packed = pack_padded_sequence(emb, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, (h_n, _) = self.encoder(packed, (h0, h0))
        outputs, _ = pad_packed_sequence(out, batch_first=True, total_length=source.shape[1])
        final = self.bridge(torch.cat([h_n[0], h_n[1]], dim=-1))
        return EncoderState(outputs, self.W_e(outputs), source != PAD_IDX, final)

    def start(self, batch: GenBatch) -> DecoderState:
        h_d = self.visual(batch.context, batch.target_feat)
        enc = self.encode(batch.source, batch.source_len, h_d)
        return DecoderState(enc.final, enc.final, h_d, enc, batch.source_ext, batch.n_extra)

    def attend(self, enc: EncoderState, h: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        a = additive_attention(enc.proj, self.W_d(h), self.v_a, enc.mask)
        return a, torch.bmm(a.unsqueeze(1), enc.outputs).squeeze(1)

    def _advance(self, state: DecoderState, tokens: torch.Tensor):
        x = self.decoder_input(state, tokens)
        h, c = self.decoder(x, (state.h, state.c))
        a, context = self.attend(state.enc, h)
        logits = self.out(torch.cat([h, context], dim=-1))
        return x, h, c, a, context, logits

    def step(self, state, tokens):
        _, h, c, a, _, logits = self._advance(state, tokens)
        log_probs = F.log_softmax(insert_nohs(logits), dim=-1)
        return StepOutput(log_probs, logits, attention=a), replace(state, h=h, c=c)


class CopyGenerator(ReRefGenerator):
    """ReRef plus a copy gate over an extended vocabulary."""

    def __init__(self, config: GenConfig):
        super().__init__(config)
        c = config
        self.w_context = nn.Linear(2 * c.hidden_dim, 1, bias=False)
        self.w_state = nn.Linear(c.hidden_dim, 1, bias=False)
        self.w_input = nn.Linear(c.embed_dim + c.hidden_dim, 1, bias=False)
        init_uniform(self)

    def gold(self, batch: GenBatch) -> torch.Tensor:
        return batch.target_ext

    def p_gen(self, context: torch.Tensor, h: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(
            torch.tanh(self.w_context(context)) + torch.tanh(self.w_state(h)) + torch.tanh(self.w_input(x))
        ).squeeze(-1)

    def step(self, state, tokens):
        x, h, c, a, context, logits = self._advance(state, tokens)
        p_gen = self.p_gen(context, h, x)
        probs = copy_distribution(torch.softmax(insert_nohs(logits), dim=-1), a, p_gen,
                                  state.source_ext, state.enc.mask, state.n_extra)
        return StepOutput(torch.log(probs), logits, attention=a, p_gen=p_gen, probs=probs), replace(state, h=h, c=c)


def copy_distribution(vocab_probs: torch.Tensor, attention: torch.Tensor, p_gen: torch.Tensor,
                      source_ext: torch.Tensor, mask: torch.Tensor, n_extra: int) -> torch.Tensor:
    """``p_gen * P_vocab + (1 - p_gen) * attention scattered onto source ids``.

    Positions holding ``<nohs>`` or padding cannot be copied, so the copy
    branch renormalises attention over the remaining positions.  An instance
    with nothing copyable falls back to the generator distribution alone.
    """
    copyable = mask & (source_ext != NOHS_IDX)
    has_copy = copyable.any(dim=1)
    gate = torch.where(has_copy, p_gen, torch.ones_like(p_gen)).unsqueeze(1)
    dist = torch.cat([vocab_probs, vocab_probs.new_zeros(vocab_probs.shape[0], n_extra)], dim=1) * gate
    copy_att = attention.masked_fill(~copyable, 0.0)
    copy_att = copy_att / copy_att.sum(dim=1, keepdim=True).clamp_min(1e-30)
    copy_mass = (1 - gate) * copy_att
    return dist.scatter_add(1, source_ext.masked_fill(~copyable, 0), copy_mass)


def build_generator(config: GenConfig) -> Generator:
    return {"ref": RefGenerator, "reref": ReRefGenerator, "copy": CopyGenerator}[config.variant](config)


def training_step(model: Generator, batch: GenBatch, optimizer: torch.optim.Optimizer,
                  clip: float | None = None) -> float:
    model.train()
    optimizer.zero_grad()
    loss = model.loss(batch)
    if not torch.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss.item()} in {model.variant} training step")
    loss.backward()
    if clip:
        nn.utils.clip_grad_norm_(model.parameters(), clip)
    optimizer.step()
    return loss.item()


# --- decoding --------------------------------------------------------------------


@dataclass
class Hypothesis:
    tokens: list[int]
    log_prob: float
    finished: bool

    def score(self, length_norm: bool = True) -> float:
        return self.log_prob / max(len(self.tokens), 1) if length_norm else self.log_prob


class ModelDecoder:
    """Adapter exposing a generator and one instance to :func:`beam_search`."""

    def __init__(self, model: Generator, batch: GenBatch):
        self.model = model
        self.batch = batch

    def initial(self) -> DecoderState:
        return self.model.start(self.batch.index([0]))

    def step(self, state: DecoderState, tokens: torch.Tensor) -> tuple[np.ndarray, DecoderState]:
        out, state = self.model.step(state, tokens)
        return out.log_probs.detach().double().numpy(), state

    def reorder(self, state: DecoderState, idx: np.ndarray) -> DecoderState:
        return state.index(idx)


@torch.no_grad()
def beam_search(decoder, width: int = 3, max_len: int = 30, length_norm: bool = True,
                sos: int = SOS_IDX, eos: int = EOS_IDX) -> Hypothesis:
    """Beam search with a shrinking beam and a pool of finished hypotheses.

    ``decoder`` provides ``initial()``, ``step(state, tokens) -> (log_probs, state)``
    and ``reorder(state, idx)``.  At every step the ``k`` best expansions (by
    summed log-probability) are kept; those ending in ``eos`` move to the
    pool and ``k`` shrinks accordingly.  The answer is the pooled hypothesis
    with the best length-normalised score, or the best unfinished one when
    nothing reached ``eos`` within ``max_len`` tokens (``finished=False``).
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    state = decoder.initial()
    seqs: list[list[int]] = [[]]
    scores = np.zeros(1)
    last = np.array([sos])
    finished: list[Hypothesis] = []
    k = width
    for _ in range(max_len):
        log_probs, state = decoder.step(state, torch.as_tensor(last, dtype=torch.long))
        cand = scores[:, None] + np.asarray(log_probs, dtype=np.float64)
        flat = cand.ravel()
        order = np.argsort(-flat, kind="stable")
        order = order[np.isfinite(flat[order])][:k]
        vocab = cand.shape[1]
        alive_rows, alive_seqs, alive_scores, alive_last = [], [], [], []
        for flat_idx in order:
            row, tok = divmod(int(flat_idx), vocab)
            seq = seqs[row] + [tok]
            if tok == eos:
                finished.append(Hypothesis(seq, float(flat[flat_idx]), True))
            else:
                alive_rows.append(row)
                alive_seqs.append(seq)
                alive_scores.append(float(flat[flat_idx]))
                alive_last.append(tok)
        k -= len(order) - len(alive_rows)
        if not alive_rows or k <= 0:
            seqs, scores = alive_seqs, np.array(alive_scores)
            break
        state = decoder.reorder(state, np.array(alive_rows))
        seqs, scores, last = alive_seqs, np.array(alive_scores), np.array(alive_last)
    if finished:
        return max(finished, key=lambda h: h.score(length_norm))
    partial = [Hypothesis(s, float(sc), False) for s, sc in zip(seqs, scores)]
    return max(partial, key=lambda h: h.score(length_norm))


@torch.no_grad()
def greedy_decode(model: Generator, batch: GenBatch, max_len: int = 30) -> list[list[int]]:
    """Batched argmax decoding; sequences are cut after ``<eos>`` (kept)."""
    model.eval()
    state = model.start(batch)
    tokens = torch.full((len(batch),), SOS_IDX, dtype=torch.long)
    out: list[list[int]] = [[] for _ in range(len(batch))]
    done = torch.zeros(len(batch), dtype=torch.bool)
    for _ in range(max_len):
        step, state = model.step(state, tokens)
        tokens = step.log_probs.argmax(dim=-1)
        for i in range(len(batch)):
            if not done[i]:
                out[i].append(int(tokens[i]))
        done |= tokens == EOS_IDX
        if done.all():
            break
    return out


@torch.no_grad()
def generate(model: Generator, batch: GenBatch, width: int = 3, max_len: int = 30,
             length_norm: bool = True) -> list[Hypothesis]:
    """Beam-search every instance of ``batch`` separately."""
    model.eval()
    return [beam_search(ModelDecoder(model, batch.index([i])), width, max_len, length_norm) for i in range(len(batch))]


def strip_special(tokens: Sequence[int]) -> list[int]:
    return [t for t in tokens if t not in (SOS_IDX, EOS_IDX, PAD_IDX)]


def config_dict(config: GenConfig) -> dict:
    return asdict(config)
