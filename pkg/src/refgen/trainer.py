"""Training loops, configs, model selection and checkpoints for both model families."""

from __future__ import annotations

import copy
import json
import math
import random
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import torch

from .embeddings import EmbeddingCache, EmbeddingProvider
from .genmodels import GenConfig, Generator, build_generator, greedy_decode, make_batch, training_step
from .metrics import accuracy_mrr, aggregate_runs, corpus_embedding_f1, target_rank
from .resolver import (ResolutionInstance, ResolverConfig, build_resolver, make_resolver_batch)
from .textprep import EOS_IDX, EncodedInstance, Vocabulary, shuffle_contexts

GEN_VARIANTS = ("ref", "reref", "copy")
RES_VARIANTS = ("resolver", "resolver-ablated", "baseline-onehot")


@dataclass
class TrainConfig:
    variant: str
    batch_size: int = 32
    lr: float = 1e-4
    embed_dim: int = 1024
    hidden_dim: int = 512
    attn_dim: int = 512
    dropout: float = 0.3
    max_epochs: int = 100
    patience: int = 50
    seed: int = 0
    selection: str = "embedding_f1"
    clip: float | None = None
    val_width: int = 1
    max_len: int = 30
    feature_dim: int = 2048
    token_dim: int = 768
    target_metric: float | None = None   # stop once validation reaches this value

    def __post_init__(self):
        if self.variant not in GEN_VARIANTS + RES_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def family(self) -> str:
        return "generation" if self.variant in GEN_VARIANTS else "resolution"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def default_config(variant: str, **overrides) -> TrainConfig:
    """Published hyperparameters per variant, with optional overrides."""
    base: dict = {"variant": variant}
    if variant in GEN_VARIANTS:
        base.update(batch_size=16 if variant == "reref" else 32,
                    dropout=0.0 if variant == "copy" else 0.3, selection="embedding_f1")
    else:
        base.update(batch_size=32, dropout=0.5, selection="accuracy")
    base.update(overrides)
    return TrainConfig(**base)


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_metric: float


@dataclass
class RunRecord:
    variant: str
    seed: int
    epochs: list[EpochLog] = field(default_factory=list)
    best_epoch: int = -1
    best_metric: float = -math.inf
    stopped: str = ""
    wall_clock: float = 0.0

    def to_dict(self, include_time: bool = False) -> dict:
        d = asdict(self)
        if not include_time:
            d.pop("wall_clock")
        return d


class TrainingDiverged(FloatingPointError):
    def __init__(self, message: str, record: RunRecord):
        super().__init__(message)
        self.record = record


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


def _batches(n: int, size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i:i + size] for i in range(0, n, size)]


def _fit(config: TrainConfig, model: torch.nn.Module, epoch_fn: Callable[[int], float],
         validate: Callable[[], float]) -> RunRecord:
    """Shared epoch loop: early stopping on the validation metric, best-state snapshot."""
    record = RunRecord(config.variant, config.seed)
    best_state = copy.deepcopy(model.state_dict())
    since_best = 0
    start = time.perf_counter()
    for epoch in range(config.max_epochs):
        try:
            loss = epoch_fn(epoch)
        except FloatingPointError as exc:
            model.load_state_dict(best_state)
            record.stopped = f"diverged at epoch {epoch}: {exc}"
            record.wall_clock = time.perf_counter() - start
            raise TrainingDiverged(record.stopped, record) from exc
        metric = validate()
        record.epochs.append(EpochLog(epoch, loss, metric))
        if metric > record.best_metric:
            record.best_metric, record.best_epoch = metric, epoch
            best_state = copy.deepcopy(model.state_dict())
            since_best = 0
        else:
            since_best += 1
        if config.target_metric is not None and metric >= config.target_metric:
            record.stopped = "target reached"
            break
        if since_best > config.patience:
            record.stopped = "patience"
            break
    else:
        record.stopped = "max epochs"
    model.load_state_dict(best_state)
    model.eval()
    record.wall_clock = time.perf_counter() - start
    return record


# --- generation ------------------------------------------------------------------


def generator_for(config: TrainConfig, vocab_size: int) -> Generator:
    return build_generator(GenConfig(config.variant, vocab_size, config.feature_dim, config.embed_dim,
                                     config.hidden_dim, config.attn_dim, config.dropout))


def token_accuracy(model: Generator, data: Sequence[EncodedInstance], features, batch_size: int = 64) -> float:
    correct = total = 0
    model.eval()
    for i in range(0, len(data), batch_size):
        c, t = model.token_accuracy(make_batch(data[i:i + batch_size], features))
        correct, total = correct + c, total + t
    return 100.0 * correct / max(total, 1)


def generation_validator(model: Generator, data: Sequence[EncodedInstance], features, vocab: Vocabulary,
                         config: TrainConfig, provider: EmbeddingProvider | None) -> Callable[[], float]:
    """Validation metric: embedding F1 of greedy outputs, or teacher-forced token accuracy."""
    if config.selection == "token_accuracy":
        return lambda: token_accuracy(model, data, features)
    if config.selection != "embedding_f1" or provider is None:
        raise ValueError("generation selection needs 'token_accuracy' or 'embedding_f1' with a provider")

    def run() -> float:
        hyps, refs = [], []
        for i in range(0, len(data), 64):
            chunk = data[i:i + 64]
            for inst, out in zip(chunk, greedy_decode(model, make_batch(chunk, features), config.max_len)):
                hyps.append(vocab.decode([t for t in out if t != EOS_IDX], inst.extra))
                refs.append([r.split() for r in inst.references] or [inst.target_text.split()])
        return corpus_embedding_f1(hyps, refs, provider)

    return run


def train_generator(config: TrainConfig, train: Sequence[EncodedInstance], val: Sequence[EncodedInstance],
                    features: Mapping[str, np.ndarray], vocab: Vocabulary,
                    provider: EmbeddingProvider | None = None) -> tuple[Generator, RunRecord]:
    if config.family != "generation":
        raise ValueError(f"{config.variant} is not a generation variant")
    seed_everything(config.seed)
    model = generator_for(config, vocab.size)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    train = shuffle_contexts(train, "once", config.seed)
    val = shuffle_contexts(val, "once", config.seed + 1)
    rng = np.random.default_rng(config.seed)

    def epoch_fn(epoch: int) -> float:
        total = 0.0
        for idx in _batches(len(train), config.batch_size, rng):
            total += training_step(model, make_batch([train[i] for i in idx], features), optimizer, config.clip)
        return total

    record = _fit(config, model, epoch_fn, generation_validator(model, val, features, vocab, config, provider))
    return model, record


# --- resolution ------------------------------------------------------------------


def resolver_for(config: TrainConfig, image_ids: Sequence[str] = ()) -> torch.nn.Module:
    return build_resolver(ResolverConfig(config.variant, config.token_dim, config.feature_dim, config.hidden_dim,
                                         config.attn_dim, config.dropout, len(image_ids), list(image_ids)))


def resolver_scores(model: torch.nn.Module, data: Sequence[ResolutionInstance], cache: EmbeddingCache | None,
                    features, batch_size: int = 64) -> list[list[float]]:
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(data), batch_size):
            chunk = data[i:i + batch_size]
            if model.variant == "baseline-onehot":
                out.extend(model([inst.context for inst in chunk]).tolist())
            else:
                out.extend(model(make_resolver_batch(chunk, cache, features)).tolist())
    return out


def evaluate_resolver(model, data, cache, features) -> tuple[float, float, list[int]]:
    ranks = [target_rank(s, inst.target_pos) for s, inst in zip(resolver_scores(model, data, cache, features), data)]
    acc, mrr = accuracy_mrr(ranks)
    return acc, mrr, ranks


def train_resolver(config: TrainConfig, train: Sequence[ResolutionInstance], val: Sequence[ResolutionInstance],
                   cache: EmbeddingCache | None, features: Mapping[str, np.ndarray],
                   image_ids: Sequence[str] = ()) -> tuple[torch.nn.Module, RunRecord]:
    """Train a resolver or baseline; candidate order is reshuffled every epoch."""
    if config.family != "resolution":
        raise ValueError(f"{config.variant} is not a resolution variant")
    seed_everything(config.seed)
    model = resolver_for(config, image_ids)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    onehot = config.variant == "baseline-onehot"

    def epoch_fn(epoch: int) -> float:
        model.train()
        data = shuffle_contexts(train, "per_epoch", config.seed, epoch)
        total = 0.0
        for idx in _batches(len(data), config.batch_size, rng):
            chunk = [data[i] for i in idx]
            optimizer.zero_grad()
            if onehot:
                loss = model.loss([c.context for c in chunk], torch.as_tensor([c.target_pos for c in chunk]))
            else:
                loss = model.loss(make_resolver_batch(chunk, cache, features))
            if not torch.isfinite(loss):
                raise FloatingPointError(f"non-finite loss {loss.item()}")
            loss.backward()
            if config.clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip)
            optimizer.step()
            total += loss.item()
        return total

    def validate() -> float:
        return evaluate_resolver(model, val, cache, features)[0]

    record = _fit(config, model, epoch_fn, validate)
    return model, record


# --- checkpoints and multi-seed --------------------------------------------------


def save_checkpoint(path: str | Path, model: torch.nn.Module, config: TrainConfig, vocab_hash: str | None,
                    record: RunRecord | None = None, image_ids: Sequence[str] = ()) -> None:
    torch.save({
        "variant": config.variant,
        "config": config.to_dict(),
        "vocab_hash": vocab_hash,
        "seed": config.seed,
        "image_ids": list(image_ids),
        "record": record.to_dict() if record else None,
        "state_dict": model.state_dict(),
    }, path)


def load_checkpoint(path: str | Path, vocab: Vocabulary | None = None) -> tuple[torch.nn.Module, dict]:
    """Rebuild a model from a checkpoint; refuses a vocabulary whose hash differs."""
    blob = torch.load(path, map_location="cpu", weights_only=False)
    config = TrainConfig.from_dict(blob["config"])
    if config.family == "generation":
        if vocab is None:
            raise ValueError("generation checkpoints need the vocabulary they were trained with")
        if blob["vocab_hash"] != vocab.hash():
            raise ValueError(f"vocabulary hash {vocab.hash()} does not match checkpoint {blob['vocab_hash']}")
        model = generator_for(config, vocab.size)
    else:
        model = resolver_for(config, blob["image_ids"])
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, blob


def multiseed(run: Callable[[int], Mapping[str, float]], seeds: Sequence[int]) -> dict[str, tuple[float, float]]:
    """Run once per seed; per-metric mean and sample standard deviation."""
    if len(seeds) < 2:
        raise ValueError("multi-seed reporting needs at least two seeds")
    results = [dict(run(s)) for s in seeds]
    return {m: aggregate_runs([r[m] for r in results]) for m in sorted(results[0])}


def save_run(run_dir: str | Path, config: TrainConfig, record: RunRecord) -> None:
    """Run directory layout: config.json, log.json, checkpoints/."""
    run_dir = Path(run_dir)
    (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    (run_dir / "log.json").write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n")
