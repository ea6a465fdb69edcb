import json
import shutil

import pytest

from refgen import cli
from refgen.corpus.schema import load_chains, read_jsonl
from refgen.pipeline import CACHE_ENV, Manifest, Pipeline, PipelineError


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def done(tmp_path_factory):
    """A fixture directory with every stage completed."""
    root = tmp_path_factory.mktemp("cli") / "fx"
    assert run("fixture", root) == 0
    assert run("run", "--manifest", root / "manifest.json") == 0
    return root


@pytest.fixture
def fresh(tmp_path):
    assert run("fixture", tmp_path / "fx") == 0
    return tmp_path / "fx"


class TestExitCodes:
    def test_missing_manifest(self, tmp_path, capsys):
        assert run("prep", "--manifest", tmp_path / "nope.json") == 1
        assert "not found" in capsys.readouterr().err

    def test_bad_arguments(self):
        assert run("train", "--family", "everything", "--manifest", "x") == 1
        assert run() == 1

    def test_help_is_success(self):
        assert run("--help") == 0

    def test_unknown_stage(self, fresh, capsys):
        assert run("run", "--manifest", fresh / "manifest.json", "--stages", "extract,polish") == 1
        assert "unknown stage" in capsys.readouterr().err

    def test_invalid_manifest_json(self, tmp_path):
        (tmp_path / "m.json").write_text("{not json")
        assert run("extract", "--manifest", tmp_path / "m.json") == 1

    def test_unknown_manifest_key(self, fresh):
        raw = json.loads((fresh / "manifest.json").read_text())
        raw["colour"] = "blue"
        (fresh / "manifest.json").write_text(json.dumps(raw))
        assert run("extract", "--manifest", fresh / "manifest.json") == 1

    def test_internal_error_is_two(self, fresh, monkeypatch, capsys):
        def boom(self):
            raise RuntimeError("kaput")
        monkeypatch.setattr(Pipeline, "stage_extract", boom)
        assert run("extract", "--manifest", fresh / "manifest.json") == 2
        assert "kaput" in capsys.readouterr().err
        state = json.loads((fresh / "out" / "state.json").read_text())
        assert state["extract"]["status"] == "failed"


class TestStages:
    def test_missing_upstream_names_the_stage(self, fresh, capsys):
        assert run("prep", "--manifest", fresh / "manifest.json") == 1
        assert "run stage 'extract' first" in capsys.readouterr().err

    def test_unchanged_inputs_are_skipped(self, done, capsys):
        assert run("run", "--manifest", done / "manifest.json") == 0
        assert "nothing" in capsys.readouterr().out

    def test_changed_input_reruns_stage(self, fresh, capsys):
        m = fresh / "manifest.json"
        assert run("extract", "--manifest", m) == 0
        capsys.readouterr()
        assert run("run", "--manifest", m, "--stages", "extract") == 0
        assert "nothing" in capsys.readouterr().out
        captions = fresh / "data" / "captions.json"
        data = json.loads(captions.read_text())
        data["img_1"] = data["img_1"] + ["an extra caption"]
        captions.write_text(json.dumps(data))
        assert run("run", "--manifest", m, "--stages", "extract") == 0
        assert "ran: extract" in capsys.readouterr().out

    def test_force(self, done, capsys):
        assert run("run", "--manifest", done / "manifest.json", "--stages", "extract", "--force") == 0
        assert "ran: extract" in capsys.readouterr().out

    def test_outputs_exist(self, done):
        out = done / "out"
        for rel in ("chains.jsonl", "prep/examples.jsonl", "prep/vocab.txt", "reports/extraction.json",
                    "reports/evaluation.json", "reports/evaluation.txt", "reports/analysis.txt",
                    "runs/reref-s0/config.json", "runs/reref-s0/log.json", "runs/reref-s0/checkpoints/best.pt",
                    "generations/copy-s1.jsonl"):
            assert (out / rel).exists(), rel

    def test_extraction_report(self, done):
        rep = json.loads((done / "out" / "reports" / "extraction.json").read_text())
        assert rep["extraction"]["precision"] == 1.0
        assert rep["extraction"]["recall"] == pytest.approx(48 / 58)

    def test_report_command(self, done, capsys):
        assert run("report", "--manifest", done / "manifest.json") == 0
        out = capsys.readouterr().out
        assert "== evaluation.txt" in out and "== analysis.txt" in out

    def test_report_before_running(self, fresh):
        assert run("report", "--manifest", fresh / "manifest.json") == 1


class TestCommands:
    def test_extract_with_explicit_paths(self, fresh, tmp_path, capsys):
        d = fresh / "data"
        out = tmp_path / "chains.jsonl"
        assert run("extract", "--games", d / "games.jsonl", "--captions", d / "captions.json",
                   "--vg", d / "vg.json", "--out", out) == 0
        assert load_chains(out) and "chains" in capsys.readouterr().out

    def test_extract_needs_all_paths(self, fresh):
        assert run("extract", "--games", fresh / "data" / "games.jsonl") == 1

    def test_generate_widths(self, done, tmp_path):
        m = done / "manifest.json"
        assert run("generate", "--manifest", m, "--variant", "reref", "--width", 1, "--out", tmp_path / "w1.jsonl") == 0
        assert run("generate", "--manifest", m, "--variant", "reref", "--width", 3, "--out", tmp_path / "w3.jsonl") == 0
        w1, w3 = list(read_jsonl(tmp_path / "w1.jsonl")), list(read_jsonl(tmp_path / "w3.jsonl"))
        assert len(w1) == len(w3) > 0
        assert {r["width"] for r in w1} == {1} and {r["width"] for r in w3} == {3}
        assert [r["key"] for r in w1] == [r["key"] for r in w3]

    def test_generate_is_repeatable(self, done, tmp_path):
        m = done / "manifest.json"
        for name in ("a", "b"):
            assert run("generate", "--manifest", m, "--variant", "copy", "--out", tmp_path / f"{name}.jsonl") == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_vocabulary_mismatch_refused(self, done, tmp_path, capsys):
        copy = tmp_path / "fx"
        shutil.copytree(done, copy)
        vocab = copy / "out" / "prep" / "vocab.txt"
        vocab.write_text(vocab.read_text() + "zzzextra\n")
        assert run("generate", "--manifest", copy / "manifest.json", "--variant", "ref") == 1
        assert "does not match checkpoint" in capsys.readouterr().err

    def test_generate_without_training(self, fresh, capsys):
        m = fresh / "manifest.json"
        assert run("run", "--manifest", m, "--stages", "extract,prep") == 0
        assert run("generate", "--manifest", m, "--variant", "ref") == 1
        assert "train-gen" in capsys.readouterr().err

    def test_resolve_human_and_generated(self, done, tmp_path, capsys):
        m = done / "manifest.json"
        assert run("resolve", "--manifest", m, "--out", tmp_path / "human.json") == 0
        human = json.loads((tmp_path / "human.json").read_text())
        assert human["accuracy"] <= human["mrr"] and human["n"] > 0
        gens = done / "out" / "generations" / "reref-s0.jsonl"
        assert run("resolve", "--manifest", m, "--generations", gens, "--variant", "resolver-ablated") == 0
        assert "accuracy" in capsys.readouterr().out

    def test_cache_dir_override(self, fresh, tmp_path, monkeypatch):
        cache = tmp_path / "shared-cache"
        monkeypatch.setenv(CACHE_ENV, str(cache))
        m = fresh / "manifest.json"
        assert run("run", "--manifest", m, "--stages", "extract,prep") == 0
        assert (cache / "embeddings.npz").exists()
        assert not (fresh / "out" / "cache").exists()


class TestManifest:
    def test_paths_resolve_relative_to_manifest(self, fresh):
        man = Manifest.load(fresh / "manifest.json")
        assert man.games == (fresh / "data" / "games.jsonl").resolve()

    def test_digest_ignores_output_dir(self, fresh):
        raw = json.loads((fresh / "manifest.json").read_text())
        a = Manifest.from_dict(raw, fresh).digest()
        b = Manifest.from_dict(dict(raw, output_dir="elsewhere"), fresh).digest()
        c = Manifest.from_dict(dict(raw, seeds=[3, 4]), fresh).digest()
        assert a == b != c

    def test_needs_seeds(self, fresh):
        raw = json.loads((fresh / "manifest.json").read_text())
        with pytest.raises(PipelineError):
            Manifest.from_dict(dict(raw, seeds=[]), fresh)

    def test_unknown_variant(self, fresh):
        raw = json.loads((fresh / "manifest.json").read_text())
        with pytest.raises(PipelineError):
            Manifest.from_dict(dict(raw, train={"transformer": {}}), fresh)
