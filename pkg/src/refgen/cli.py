"""Command-line interface: ``refgen <command> ...``.

Commands
--------
extract   extract reference chains from game logs
prep      build examples, vocabulary and embedding cache from chains
train     train generation and/or resolution models listed in the manifest
generate  decode a split with trained generators
resolve   resolve human or generated utterances with a trained resolver
evaluate  compute the generation and resolution metric report
analyze   linguistic profile of human and generated utterances
report    print the rendered reports
run       run several pipeline stages in order
fixture   write the bundled three-game fixture and a matching manifest

Exit status: 0 success, 1 user error (bad input, missing artifact),
2 internal error.  ``REFGEN_CACHE_DIR`` overrides where embedding caches
are stored (default ``<output_dir>/cache``).
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .corpus.extraction import chain_statistics, extract_chains
from .corpus.schema import CorpusError, load_captions, load_games, load_vg, read_jsonl, save_chains, write_jsonl
from .corpus.scoring import EmbeddingSimilarity
from .embeddings import HashEmbeddingProvider
from .fixtures import write_fixture
from .pipeline import STAGES, Manifest, Pipeline, PipelineError, dump_json, fixture_manifest

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


def _pipeline(args) -> Pipeline:
    return Pipeline(Manifest.load(args.manifest), log=lambda s: print(s, file=sys.stderr))


def cmd_extract(args) -> int:
    if args.manifest:
        _pipeline(args).run(["extract"], force=args.force)
        return EXIT_OK
    if not (args.games and args.captions and args.vg and args.out):
        raise PipelineError("extract needs --manifest, or all of --games --captions --vg --out")
    chains = extract_chains(load_games(args.games), load_captions(args.captions), load_vg(args.vg),
                            EmbeddingSimilarity(HashEmbeddingProvider(args.embed_dim)), args.top_n)
    save_chains(args.out, chains)
    stats = chain_statistics(chains) if chains else {}
    print(f"{len(chains)} chains, {stats.get('utterances', 0)} utterances -> {args.out}")
    return EXIT_OK


def cmd_stage(stage: str):
    def run(args) -> int:
        _pipeline(args).run([stage], force=args.force)
        return EXIT_OK
    return run


def cmd_train(args) -> int:
    stages = {"generation": ["train-gen"], "resolution": ["train-res"], "all": ["train-gen", "train-res"]}[args.family]
    _pipeline(args).run(stages, force=args.force)
    return EXIT_OK


def cmd_generate(args) -> int:
    pipe = _pipeline(args)
    if args.variant is None:
        pipe.run(["generate"], force=args.force)
        return EXIT_OK
    records = pipe.generate_split(args.variant, args.seed, args.width, args.split)
    out = Path(args.out) if args.out else pipe.out / "generations" / f"{args.variant}-s{args.seed}-w{args.width}.jsonl"
    write_jsonl(out, records)
    print(f"{len(records)} hypotheses -> {out}")
    return EXIT_OK


def cmd_resolve(args) -> int:
    pipe = _pipeline(args)
    split = args.split or pipe.m.generate.get("split", "test")
    examples = pipe.splits().get(split) or []
    if not examples:
        raise PipelineError(f"split '{split}' is empty")
    tokens = None
    if args.generations:
        tokens = {r["key"]: r["tokens"] for r in read_jsonl(args.generations)}
        examples = [e for e in examples if e.key in tokens]
    acc, mrr, ranks = pipe.resolve_utterances(args.variant, args.seed, examples, tokens)
    result = {"variant": args.variant, "seed": args.seed, "split": split, "manifest": pipe.m.digest(),
              "accuracy": acc, "mrr": mrr, "n": len(ranks),
              "ranks": {e.key: r for e, r in zip(examples, ranks)}}
    if args.out:
        dump_json(Path(args.out), result)
    print(f"accuracy {acc:.2f}  mrr {mrr:.2f}  n {len(ranks)}")
    return EXIT_OK


def cmd_report(args) -> int:
    pipe = _pipeline(args)
    reports = pipe.out / "reports"
    found = False
    for name in ("extraction.json", "evaluation.txt", "analysis.txt"):
        path = reports / name
        if path.exists():
            found = True
            print(f"== {name}")
            print(path.read_text(encoding="utf-8"))
    if not found:
        raise PipelineError(f"no reports under {reports}; run the pipeline first")
    return EXIT_OK


def cmd_run(args) -> int:
    stages = args.stages.split(",") if args.stages else list(STAGES)
    ran = _pipeline(args).run([s.strip() for s in stages], force=args.force)
    print(f"ran: {', '.join(ran) if ran else 'nothing (all stages up to date)'}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    directory = Path(args.directory)
    data = {k: str(Path(v).relative_to(directory)) for k, v in write_fixture(directory / "data").items()}
    manifest = fixture_manifest(data, "out", quick=not args.full_size)
    dump_json(directory / "manifest.json", manifest)
    print(f"fixture written; run: refgen run --manifest {directory / 'manifest.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refgen", description="Reference chains, generation, resolution, analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_manifest(p, required=True):
        p.add_argument("--manifest", required=required, help="experiment manifest (JSON)")
        p.add_argument("--force", action="store_true", help="rerun even if inputs are unchanged")
        return p

    p = with_manifest(sub.add_parser("extract", help="extract reference chains"), required=False)
    p.add_argument("--games")
    p.add_argument("--captions")
    p.add_argument("--vg")
    p.add_argument("--out")
    p.add_argument("--top-n", type=int, default=4)
    p.add_argument("--embed-dim", type=int, default=768)
    p.set_defaults(func=cmd_extract)

    for name, helptext in (("prep", "build examples, vocabulary and embedding cache"),
                           ("evaluate", "metric report for generations and resolvers"),
                           ("analyze", "linguistic profile report")):
        with_manifest(sub.add_parser(name, help=helptext)).set_defaults(func=cmd_stage(name))

    p = with_manifest(sub.add_parser("train", help="train models listed in the manifest"))
    p.add_argument("--family", choices=("generation", "resolution", "all"), default="all")
    p.set_defaults(func=cmd_train)

    p = with_manifest(sub.add_parser("generate", help="decode a split"))
    p.add_argument("--variant", choices=("ref", "reref", "copy"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--split")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = with_manifest(sub.add_parser("resolve", help="resolve utterances with a trained resolver"))
    p.add_argument("--variant", choices=("resolver", "resolver-ablated", "baseline-onehot"), default="resolver")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split")
    p.add_argument("--generations", help="JSONL of generated utterances to resolve instead of human ones")
    p.add_argument("--out")
    p.set_defaults(func=cmd_resolve)

    with_manifest(sub.add_parser("report", help="print rendered reports")).set_defaults(func=cmd_report)

    p = with_manifest(sub.add_parser("run", help="run pipeline stages"))
    p.add_argument("--stages", help=f"comma-separated subset of {','.join(STAGES)}")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fixture", help="write the bundled fixture and manifest")
    p.add_argument("directory")
    p.add_argument("--full-size", action="store_true", help="use published model sizes instead of tiny ones")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USER
    try:
        return args.func(args)
    except (PipelineError, CorpusError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
