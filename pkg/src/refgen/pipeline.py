"""End-to-end experiment runner behind the command line.

A manifest (JSON) names the inputs and settings; every stage writes into
the manifest's output directory and records a fingerprint of its inputs in
``state.json``, so reruns with unchanged inputs are skipped and a failed run
resumes at the failing stage.

Output layout::

    chains.jsonl                 extracted chains, one record per utterance
    prep/examples.jsonl          chain examples for every split
    prep/vocab.txt               generation vocabulary (train split)
    runs/<variant>-s<seed>/      config.json, log.json, checkpoints/best.pt
    generations/<variant>-s<seed>.jsonl
    reports/*.json, reports/*.txt
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import linganalysis
from .corpus import scoring
from .corpus.extraction import chain_statistics, evaluate_extraction, extract_chains
from .corpus.schema import load_captions, load_chains, load_games, load_vg, read_jsonl, save_chains, write_jsonl
from .datasets import (ChainExample, by_split, chain_examples, encode_generation, example_from_dict, example_to_dict,
                       resolution_instances, utterance_tokens)
from .embeddings import EmbeddingCache, HashEmbeddingProvider
from .fixtures import load_features, load_gold
from .genmodels import generate, make_batch, strip_special
from .metrics import accuracy_mrr, generation_report, render_table, verbatim_baseline
from .textprep import Vocabulary, build_vocab, shuffle_contexts
from .trainer import (GEN_VARIANTS, RES_VARIANTS, default_config, evaluate_resolver, load_checkpoint,
                      save_checkpoint, save_run, train_generator, train_resolver)

STAGES = ("extract", "prep", "train-gen", "train-res", "generate", "evaluate", "analyze")
CACHE_ENV = "REFGEN_CACHE_DIR"


class PipelineError(RuntimeError):
    """A user-correctable problem: bad manifest, missing input or upstream artifact."""


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def dump_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class Manifest:
    games: Path
    captions: Path
    vg: Path
    features: Path
    output_dir: Path
    gold: Path | None = None
    embedding_cache: Path | None = None
    embedding: dict = field(default_factory=lambda: {"dim": 768, "seed": 0})
    seeds: list[int] = field(default_factory=lambda: [0])
    top_n: int = 4
    min_count: int = 2
    train: dict = field(default_factory=dict)
    generate: dict = field(default_factory=lambda: {"width": 3, "max_len": 30, "split": "test"})
    raw: dict = field(default_factory=dict)
    _digest: str | None = field(default=None, repr=False)

    PATH_KEYS = ("games", "captions", "vg", "features", "gold", "embedding_cache")

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise PipelineError(f"manifest {path} not found") from None
        except json.JSONDecodeError as exc:
            raise PipelineError(f"manifest {path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw, path.parent)

    @classmethod
    def from_dict(cls, raw: Mapping, base: Path = Path(".")) -> "Manifest":
        missing = [k for k in ("games", "captions", "vg", "features", "output_dir") if k not in raw]
        if missing:
            raise PipelineError(f"manifest lacks {', '.join(missing)}")
        known = set(cls.__dataclass_fields__) - {"raw", "_digest"}
        unknown = set(raw) - known
        if unknown:
            raise PipelineError(f"unknown manifest keys: {sorted(unknown)}")
        kwargs = dict(raw)
        for key in cls.PATH_KEYS + ("output_dir",):
            if kwargs.get(key) is not None:
                p = Path(kwargs[key])
                kwargs[key] = p if p.is_absolute() else (base / p)
        for variant in kwargs.get("train", {}):
            if variant not in GEN_VARIANTS + RES_VARIANTS:
                raise PipelineError(f"unknown variant {variant!r} in manifest 'train'")
        m = cls(**kwargs, raw=dict(raw))
        if len(m.seeds) < 1:
            raise PipelineError("manifest needs at least one seed")
        return m

    def check_inputs(self) -> None:
        for key in self.PATH_KEYS:
            p = getattr(self, key)
            if p is not None and not p.exists():
                raise PipelineError(f"manifest path {key}={p} does not exist")

    def digest(self) -> str:
        """Provenance hash over settings and input file contents (not their locations)."""
        if self._digest is None:
            content = {k: v for k, v in self.raw.items() if k != "output_dir"}
            for key in self.PATH_KEYS:
                path = getattr(self, key)
                if path is not None:
                    content[key] = file_digest(path) if path.exists() else "absent"
            self._digest = hashlib.sha256(canonical(content).encode()).hexdigest()[:16]
        return self._digest

    def gen_variants(self) -> list[str]:
        return [v for v in self.train if v in GEN_VARIANTS]

    def res_variants(self) -> list[str]:
        return [v for v in self.train if v in RES_VARIANTS]


class Pipeline:
    def __init__(self, manifest: Manifest, log: Callable[[str], None] = lambda s: None):
        self.m = manifest
        self.out = manifest.output_dir
        self.log = log
        self.state_path = self.out / "state.json"
        self._features: dict | None = None
        self._cache: EmbeddingCache | None = None

    # --- bookkeeping ---------------------------------------------------------

    def state(self) -> dict:
        if self.state_path.exists():
            return json.loads(self.state_path.read_text(encoding="utf-8"))
        return {}

    def _save_state(self, state: dict) -> None:
        dump_json(self.state_path, state)

    def need(self, path: Path, stage: str) -> Path:
        if not path.exists():
            raise PipelineError(f"missing {path.relative_to(self.out)}; run stage '{stage}' first")
        return path

    def fingerprint(self, stage: str) -> str:
        """Hash of the manifest and of every file the stage reads."""
        h = hashlib.sha256(self.m.digest().encode())
        h.update(stage.encode())
        for p in self.inputs(stage):
            h.update(str(p.name).encode())
            h.update(file_digest(p).encode() if p.exists() else b"absent")
        return h.hexdigest()[:16]

    def inputs(self, stage: str) -> list[Path]:
        m, out = self.m, self.out
        raw = [m.games, m.captions, m.vg] + ([m.gold] if m.gold else [])
        prep = [out / "prep" / "examples.jsonl", out / "prep" / "vocab.txt"]
        if stage == "extract":
            return raw
        if stage == "prep":
            return [out / "chains.jsonl", m.games] + ([m.embedding_cache] if m.embedding_cache else [])
        if stage in ("train-gen", "train-res"):
            return prep + [m.features, self.cache_path()]
        ckpts = sorted((out / "runs").glob("*/checkpoints/best.pt")) if (out / "runs").exists() else []
        if stage == "generate":
            return prep + [m.features] + ckpts
        gens = sorted((out / "generations").glob("*.jsonl")) if (out / "generations").exists() else []
        if stage == "evaluate":
            return prep + [m.features, self.cache_path()] + ckpts + gens
        return prep + gens

    def run(self, stages: Iterable[str] = STAGES, force: bool = False) -> list[str]:
        """Run ``stages`` in pipeline order; returns the stages actually executed."""
        stages = list(stages)
        bad = [s for s in stages if s not in STAGES]
        if bad:
            raise PipelineError(f"unknown stage(s) {bad}; choose from {', '.join(STAGES)}")
        self.m.check_inputs()
        self.out.mkdir(parents=True, exist_ok=True)
        ran = []
        for stage in [s for s in STAGES if s in stages]:
            state = self.state()
            fp = self.fingerprint(stage)
            if not force and state.get(stage, {}).get("fingerprint") == fp and state[stage].get("status") == "done":
                self.log(f"[skip] {stage}: inputs unchanged")
                continue
            self.log(f"[run] {stage}")
            state[stage] = {"fingerprint": fp, "status": "running"}
            self._save_state(state)
            try:
                getattr(self, "stage_" + stage.replace("-", "_"))()
            except Exception as exc:
                state[stage] = {"fingerprint": fp, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
                self._save_state(state)
                raise
            state[stage] = {"fingerprint": self.fingerprint(stage), "status": "done"}
            self._save_state(state)
            ran.append(stage)
        return ran

    # --- shared resources ----------------------------------------------------

    def provider(self) -> HashEmbeddingProvider:
        return HashEmbeddingProvider(dim=int(self.m.embedding.get("dim", 768)), seed=int(self.m.embedding.get("seed", 0)))

    def cache_dir(self) -> Path:
        env = os.environ.get(CACHE_ENV)
        return Path(env) if env else self.out / "cache"

    def cache_path(self) -> Path:
        return self.cache_dir() / "embeddings.npz"

    def features(self) -> dict[str, np.ndarray]:
        if self._features is None:
            self._features = load_features(self.m.features)
        return self._features

    def embedding_cache(self) -> EmbeddingCache:
        if self._cache is None:
            self._cache = EmbeddingCache.load(self.need(self.cache_path(), "prep"))
        return self._cache

    def examples(self) -> list[ChainExample]:
        path = self.need(self.out / "prep" / "examples.jsonl", "prep")
        return [example_from_dict(r) for r in read_jsonl(path)]

    def vocab(self) -> Vocabulary:
        return Vocabulary.load(self.need(self.out / "prep" / "vocab.txt", "prep"))

    def splits(self) -> dict[str, list[ChainExample]]:
        return by_split(self.examples())

    def run_dir(self, variant: str, seed: int) -> Path:
        return self.out / "runs" / f"{variant}-s{seed}"

    def train_config(self, variant: str, seed: int):
        overrides = dict(self.m.train.get(variant) or {})
        return default_config(variant, seed=seed, **overrides)

    # --- stages --------------------------------------------------------------

    def stage_extract(self) -> None:
        games = load_games(self.m.games)
        sim = scoring.EmbeddingSimilarity(self.provider())
        chains = extract_chains(games, load_captions(self.m.captions), load_vg(self.m.vg), sim, self.m.top_n)
        save_chains(self.out / "chains.jsonl", chains)
        report: dict = {"manifest": self.m.digest(), "statistics": chain_statistics(chains) if chains else None}
        if self.m.gold:
            annotated = {g.game_id for g in games if g.split_tag == "annotated"} or {g.game_id for g in games}
            gold = {link for link in load_gold(self.m.gold) if link[0] in annotated}
            precision, recall = evaluate_extraction([c for c in chains if c.game_id in annotated], gold)
            report["extraction"] = {"precision": precision, "recall": recall, "gold_links": len(gold)}
        dump_json(self.out / "reports" / "extraction.json", report)

    def stage_prep(self) -> None:
        chains = load_chains(self.need(self.out / "chains.jsonl", "extract"))
        examples = chain_examples(chains, load_games(self.m.games))
        write_jsonl(self.out / "prep" / "examples.jsonl", (example_to_dict(e) for e in examples))
        train = [e.tokens for e in examples if e.split == "train"]
        vocab = build_vocab(train, self.m.min_count)
        vocab.save(self.out / "prep" / "vocab.txt")
        utts = utterance_tokens(examples)
        if self.m.embedding_cache:
            cache = EmbeddingCache.load(self.m.embedding_cache)
            absent = sorted(k for k in utts if k not in cache)
            if absent:
                raise PipelineError(f"embedding cache lacks {len(absent)} utterances, e.g. {absent[0]}")
        else:
            cache = EmbeddingCache.build(utts, self.provider())
        self.cache_dir().mkdir(parents=True, exist_ok=True)
        cache.save(self.cache_path())
        dump_json(self.out / "prep" / "summary.json", {
            "manifest": self.m.digest(), "vocab_size": vocab.size, "vocab_hash": vocab.hash(),
            "examples": {s: len(v) for s, v in sorted(by_split(examples).items())},
        })

    def _split(self, name: str, splits: Mapping[str, list]) -> list:
        if not splits.get(name):
            raise PipelineError(f"split '{name}' is empty; the pipeline needs train, val and test games")
        return splits[name]

    def stage_train_gen(self) -> None:
        splits, vocab = self.splits(), self.vocab()
        train = encode_generation(self._split("train", splits), vocab)
        val = encode_generation(self._split("val", splits), vocab)
        for variant in self.m.gen_variants():
            for seed in self.m.seeds:
                cfg = self.train_config(variant, seed)
                model, record = train_generator(cfg, train, val, self.features(), vocab, self.provider())
                run_dir = self.run_dir(variant, seed)
                save_run(run_dir, cfg, record)
                save_checkpoint(run_dir / "checkpoints" / "best.pt", model, cfg, vocab.hash(), record)
                self.log(f"  {variant} seed {seed}: best epoch {record.best_epoch}, metric {record.best_metric:.2f}")

    def stage_train_res(self) -> None:
        splits = self.splits()
        everything = self.examples()
        train = resolution_instances(self._split("train", splits), everything)
        val = resolution_instances(self._split("val", splits), everything)
        image_ids = sorted(self.features())
        for variant in self.m.res_variants():
            for seed in self.m.seeds:
                cfg = self.train_config(variant, seed)
                model, record = train_resolver(cfg, train, val, self.embedding_cache(), self.features(), image_ids)
                run_dir = self.run_dir(variant, seed)
                save_run(run_dir, cfg, record)
                save_checkpoint(run_dir / "checkpoints" / "best.pt", model, cfg, None, record, image_ids)
                self.log(f"  {variant} seed {seed}: best epoch {record.best_epoch}, accuracy {record.best_metric:.2f}")

    def generate_split(self, variant: str, seed: int, width: int | None = None, split: str | None = None) -> list[dict]:
        settings = self.m.generate
        width = int(width or settings.get("width", 3))
        split = split or settings.get("split", "test")
        vocab = self.vocab()
        ckpt = self.need(self.run_dir(variant, seed) / "checkpoints" / "best.pt", "train-gen")
        try:
            model, _ = load_checkpoint(ckpt, vocab)
        except ValueError as exc:
            raise PipelineError(f"{ckpt}: {exc}") from None
        examples = self._split(split, self.splits())
        data = shuffle_contexts(encode_generation(examples, vocab), "once", seed + 2)
        records = []
        max_len = int(settings.get("max_len", 30))
        for ex, inst in zip(examples, data):
            hyp = generate(model, make_batch([inst], self.features()), width, max_len)[0]
            tokens = vocab.decode(strip_special(hyp.tokens), inst.extra)
            records.append({
                "key": ex.key, "game_id": ex.game_id, "image_id": ex.image_id, "chain_key": ex.chain_key,
                "chain_position": ex.chain_position, "round_index": ex.round_index, "message_id": ex.message_id,
                "tokens": tokens, "finished": hyp.finished, "variant": variant, "seed": seed, "width": width,
                "manifest": self.m.digest(),
            })
        return records

    def stage_generate(self) -> None:
        for variant in self.m.gen_variants():
            for seed in self.m.seeds:
                write_jsonl(self.out / "generations" / f"{variant}-s{seed}.jsonl",
                            self.generate_split(variant, seed))

    def resolve_utterances(self, variant: str, seed: int, examples: Sequence[ChainExample],
                           tokens: Mapping[str, list[str]] | None = None) -> tuple[float, float, list[int]]:
        """Resolver accuracy/MRR/ranks on ``examples``, optionally with replaced utterance tokens."""
        ckpt = self.need(self.run_dir(variant, seed) / "checkpoints" / "best.pt", "train-res")
        model, _ = load_checkpoint(ckpt)
        everything = self.examples()
        instances = resolution_instances(examples, everything)
        cache = self.embedding_cache()
        if tokens is not None:
            cache = EmbeddingCache(dict(cache.arrays))
            provider = self.provider()
            for inst in instances:
                inst.utterance_key = "gen:" + inst.utterance_key
                toks = tokens[inst.utterance_key[4:]] or ["<unk>"]
                cache.put(inst.utterance_key, provider.embed(toks))
        return evaluate_resolver(model, instances, cache, self.features())

    def stage_evaluate(self) -> None:
        splits = self.splits()
        split = self.m.generate.get("split", "test")
        examples = self._split(split, splits)
        ex_by_key = {e.key: e for e in examples}
        positions = [e.chain_position for e in examples]
        resolver = "resolver" if "resolver" in self.m.train else None
        report: dict = {"manifest": self.m.digest(), "split": split, "seeds": self.m.seeds,
                        "generation": {}, "resolution": {}}
        text = []
        for variant in self.m.res_variants():
            per_seed = {}
            for seed in self.m.seeds:
                acc, mrr, ranks = self.resolve_utterances(variant, seed, examples)
                later = [r for r, p in zip(ranks, positions) if p > 1]
                first = [r for r, p in zip(ranks, positions) if p == 1]
                entry = {"overall": {"acc": acc, "mrr": mrr}}
                if first:
                    entry["first"] = dict(zip(("acc", "mrr"), accuracy_mrr(first)))
                if later:
                    entry["later"] = dict(zip(("acc", "mrr"), accuracy_mrr(later)))
                per_seed[str(seed)] = entry
            report["resolution"][variant] = per_seed
        provider = self.provider()
        tables = {}
        for variant in self.m.gen_variants():
            per_seed = {}
            for seed in self.m.seeds:
                gens = list(read_jsonl(self.need(self.out / "generations" / f"{variant}-s{seed}.jsonl", "generate")))
                hyps = {g["key"]: g["tokens"] for g in gens}
                refs = [ex_by_key[k].references for k in hyps]
                pos = [ex_by_key[k].chain_position for k in hyps]
                ranks = self.resolve_utterances(resolver, seed, [ex_by_key[k] for k in hyps], hyps)[2] if resolver else None
                rep = generation_report(list(hyps.values()), refs, pos, provider, ranks)
                per_seed[str(seed)] = rep.to_dict()
                tables[f"{variant}-s{seed}"] = rep
                if variant == "reref":
                    chains: dict[str, dict[int, list[str]]] = {}
                    for k, toks in hyps.items():
                        chains.setdefault(ex_by_key[k].chain_key, {})[ex_by_key[k].chain_position] = toks
                    base = verbatim_baseline(chains)
                    if base:
                        later_keys = [k for k in hyps if (ex_by_key[k].chain_key, ex_by_key[k].chain_position) in base]
                        b_hyps = [base[(ex_by_key[k].chain_key, ex_by_key[k].chain_position)] for k in later_keys]
                        b_rep = generation_report(b_hyps, [ex_by_key[k].references for k in later_keys],
                                                  [ex_by_key[k].chain_position for k in later_keys], provider)
                        per_seed[f"{seed}-baseline"] = b_rep.to_dict()
                        tables[f"reref-baseline-s{seed}"] = b_rep
            report["generation"][variant] = per_seed
        if tables:
            text.append(render_table(tables))
        dump_json(self.out / "reports" / "evaluation.json", report)
        (self.out / "reports" / "evaluation.txt").write_text(
            f"manifest {self.m.digest()}  seeds {self.m.seeds}  split {split}\n\n" + "\n".join(text), encoding="utf-8")

    def stage_analyze(self) -> None:
        split = self.m.generate.get("split", "test")
        examples = self._split(split, self.splits())
        previous = {(e.chain_key, e.chain_position): e.key for e in examples}
        systems = {"human": [{"tokens": e.tokens, "chain_position": e.chain_position, "prev": e.prev_tokens}
                             for e in examples]}
        seed = self.m.seeds[0]
        for variant in self.m.gen_variants():
            path = self.need(self.out / "generations" / f"{variant}-s{seed}.jsonl", "generate")
            gens = {g["key"]: g["tokens"] for g in read_jsonl(path)}
            # reuse is measured against the model's own output for the previous mention
            systems[variant] = [
                {"tokens": gens.get(e.key, []), "chain_position": e.chain_position,
                 "prev": gens.get(previous.get((e.chain_key, e.chain_position - 1)))}
                for e in examples
            ]
        report = linganalysis.profile_report(systems)
        text = report.pop("text")
        report["manifest"] = self.m.digest()
        dump_json(self.out / "reports" / "analysis.json", report)
        (self.out / "reports" / "analysis.txt").write_text(f"manifest {self.m.digest()}  split {split}\n\n" + text,
                                                          encoding="utf-8")


def fixture_manifest(data: Mapping[str, str], output_dir: str | Path, quick: bool = True) -> dict:
    """Manifest for the bundled fixture; ``quick`` shrinks models so a full run takes seconds."""
    small = {"embed_dim": 32, "hidden_dim": 32, "attn_dim": 32, "max_epochs": 5, "patience": 5, "lr": 3e-3} if quick else {}
    res_small = {"hidden_dim": 32, "attn_dim": 32, "max_epochs": 5, "patience": 5, "lr": 3e-3} if quick else {}
    return {
        "games": data["games"], "captions": data["captions"], "vg": data["vg"], "features": data["features"],
        "gold": data["gold"], "output_dir": str(output_dir),
        "embedding": {"dim": 768, "seed": 0},
        "seeds": [0, 1],
        "top_n": 4, "min_count": 1,
        "train": {"ref": dict(small), "reref": dict(small), "copy": dict(small),
                  "resolver": dict(res_small), "resolver-ablated": dict(res_small),
                  "baseline-onehot": {"max_epochs": 5, "patience": 5, "lr": 3e-3}},
        "generate": {"width": 3, "max_len": 30, "split": "test"},
    }
