"""End-to-end tests for the command-line pipeline driver."""

import json
import subprocess

import numpy as np
import pytest

from defmod.cli import main
from defmod.embeddings import EmbeddingTable, SenseTable
from defmod.lexicon import load_lexicon
from defmod.matcher import load_pairs
from defmod.textprep import TokenizerProfile, Vocabulary, build_vocab

WORDS = ["bird", "cat", "dog", "fish", "mat", "rock", "sky", "sun", "tree", "pond"]

LEXICON = """\
bird\ta flying animal
cat\ta small feline pet
cat\ta unix command
dog\ta loyal animal
fish\tan aquatic animal
mat\ta floor covering
rock\ta solid mineral mass
sky\tthe space above earth
sun\tthe star nearest earth
tree\ta tall plant
pond\ta small body of water
"""


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Shared artifact directory: lexicon, vector tables, splits, pairs."""
    root = tmp_path_factory.mktemp("cli")
    (root / "lex.tsv").write_text(LEXICON, encoding="utf-8")

    # The word table must cover definition tokens too, so that matching can
    # embed every definition.
    def_tokens = sorted({tok for line in LEXICON.splitlines()
                         for tok in line.split("\t")[1].split()})
    all_words = WORDS + [t for t in def_tokens if t not in WORDS]
    rng = np.random.default_rng(42)
    matrix = rng.normal(size=(len(all_words), 6))
    vectors = {w: matrix[i] for i, w in enumerate(all_words)}
    table = EmbeddingTable(6, all_words, matrix)
    table.save(root / "words.tsv")

    senses = SenseTable(dim=6, max_prototypes=3, prune_threshold=0.05)
    for w in WORDS:
        if w == "cat":
            senses.add(w, rng.normal(size=(2, 6)), np.array([0.6, 0.4]))
        else:
            senses.add(w, vectors[w][None, :], np.array([1.0]))
    senses.save(root / "senses.tsv")

    assert main(["split", "--lexicon", str(root / "lex.tsv"),
                 "--output-dir", str(root / "splits"),
                 "--ratios", "0.8,0.1,0.1", "--seed", "7"]) == 0
    assert main(["build-pairs", "--mode", "base",
                 "--lexicon", str(root / "splits" / "train.tsv"),
                 "--embeddings", str(root / "words.tsv"),
                 "--output", str(root / "base_pairs.tsv")]) == 0
    assert main(["build-pairs", "--mode", "d2s",
                 "--lexicon", str(root / "splits" / "train.tsv"),
                 "--senses", str(root / "senses.tsv"),
                 "--embeddings", str(root / "words.tsv"),
                 "--prune-threshold", "0.05",
                 "--output", str(root / "d2s_pairs.tsv")]) == 0
    return root


@pytest.fixture(scope="module")
def trained(work):
    """A tiny trained checkpoint plus its vocabulary files."""
    out = work / "model.bin"
    assert main(["train", "--model", "multisense",
                 "--pairs", str(work / "d2s_pairs.tsv"),
                 "--senses", str(work / "senses.tsv"),
                 "--prune-threshold", "0.05",
                 "--output", str(out),
                 "--hidden", "8", "--token-embedding-dim", "6",
                 "--max-epochs", "2", "--batch-size", "4"]) == 0
    return out


def test_tokenize_writes_tokens_and_manifest(tmp_path):
    src = tmp_path / "corpus.txt"
    src.write_text("The cat sat.\nA dog, a cat!\n", encoding="utf-8")
    out = tmp_path / "tokens.txt"
    assert main(["tokenize", "--input", str(src), "--output", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == (
        "the cat sat .\na dog , a cat !\n")
    manifest = json.loads(
        (tmp_path / "tokens.txt.manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "tokenize"
    assert str(src) in manifest["inputs"]
    assert manifest["inputs"][str(src)].startswith("sha256:")
    assert str(out) in manifest["outputs"]
    assert manifest["config"]["language"] == "en"


def test_tokenize_punctuation_drop(tmp_path):
    src = tmp_path / "c.txt"
    src.write_text("Stop, now!\n", encoding="utf-8")
    out = tmp_path / "t.txt"
    assert main(["tokenize", "--input", str(src), "--output", str(out),
                 "--punctuation", "drop"]) == 0
    assert out.read_text(encoding="utf-8") == "stop now\n"


def test_stats_prints_dataset_json(work, capsys):
    assert main(["stats", "--lexicon", str(work / "lex.tsv")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["word_count"] == 10
    assert payload["definition_count"] == 11
    # One of ten headwords has more than one definition.
    assert payload["ppw"] == pytest.approx(0.1)
    assert payload["mean_defs_per_word"] == pytest.approx(1.1)


def test_stats_output_file_matches_stdout(work, tmp_path, capsys):
    out = tmp_path / "stats.json"
    assert main(["stats", "--lexicon", str(work / "lex.tsv"),
                 "--output", str(out)]) == 0
    printed = capsys.readouterr().out.strip()
    assert out.read_text(encoding="utf-8").strip() == printed
    assert (tmp_path / "stats.json.manifest.json").is_file()


def test_split_reruns_are_byte_identical(work, tmp_path):
    for d in ("a", "b"):
        assert main(["split", "--lexicon", str(work / "lex.tsv"),
                     "--output-dir", str(tmp_path / d),
                     "--ratios", "0.8,0.1,0.1", "--seed", "7"]) == 0
    for name in ("train.tsv", "dev.tsv", "test.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_split_is_headword_disjoint(work):
    profile = TokenizerProfile()
    parts = [load_lexicon(work / "splits" / name, profile)
             for name in ("train.tsv", "dev.tsv", "test.tsv")]
    sets = [set(p.headwords()) for p in parts]
    assert sets[0] & sets[1] == set()
    assert sets[0] & sets[2] == set()
    assert sets[1] & sets[2] == set()
    assert len(sets[0] | sets[1] | sets[2]) == 10


def test_split_seed_changes_assignment(work, tmp_path):
    assert main(["split", "--lexicon", str(work / "lex.tsv"),
                 "--output-dir", str(tmp_path / "other"),
                 "--ratios", "0.8,0.1,0.1", "--seed", "8"]) == 0
    ours = (work / "splits" / "train.tsv").read_bytes()
    theirs = (tmp_path / "other" / "train.tsv").read_bytes()
    assert ours != theirs


def test_base_pairs_cover_every_definition(work):
    table = EmbeddingTable.load(work / "words.tsv")
    pairs = load_pairs(work / "base_pairs.tsv", table)
    train = load_lexicon(work / "splits" / "train.tsv", TokenizerProfile())
    assert len(pairs) == train.definition_count()
    assert all(p.sense_index == 0 for p in pairs)


def test_d2s_pairs_resolve_against_sense_table(work):
    senses = SenseTable.load(work / "senses.tsv", prune_threshold=0.05)
    pairs = load_pairs(work / "d2s_pairs.tsv", senses)
    train = load_lexicon(work / "splits" / "train.tsv", TokenizerProfile())
    assert len(pairs) == train.definition_count()
    for p in pairs:
        retained = senses.senses(p.headword)
        np.testing.assert_allclose(p.sense_vector,
                                   retained[p.sense_index][1])


def test_build_pairs_min_similarity_filters(work, tmp_path):
    out = tmp_path / "filtered.tsv"
    assert main(["build-pairs", "--mode", "d2s",
                 "--lexicon", str(work / "splits" / "train.tsv"),
                 "--senses", str(work / "senses.tsv"),
                 "--embeddings", str(work / "words.tsv"),
                 "--prune-threshold", "0.05",
                 "--min-similarity", "1.1",
                 "--output", str(out)]) == 0
    senses = SenseTable.load(work / "senses.tsv", prune_threshold=0.05)
    assert load_pairs(out, senses) == []


def test_train_writes_checkpoint_vocabs_manifest(work, trained):
    assert trained.is_file()
    vocab = Vocabulary.load(work / "model.bin.vocab")
    chars = Vocabulary.load(work / "model.bin.chars")
    assert "animal" in vocab
    assert "c" in chars
    manifest = json.loads(
        (work / "model.bin.manifest.json").read_text(encoding="utf-8"))
    assert set(manifest["outputs"]) == {
        str(trained), str(work / "model.bin.vocab"),
        str(work / "model.bin.chars")}


def test_generate_writes_one_row_per_retained_sense(work, trained, tmp_path):
    out = tmp_path / "gen.tsv"
    assert main(["generate", "--checkpoint", str(trained),
                 "--vocab", str(work / "model.bin.vocab"),
                 "--chars", str(work / "model.bin.chars"),
                 "--senses", str(work / "senses.tsv"),
                 "--prune-threshold", "0.05",
                 "--words", "cat", "dog",
                 "--output", str(out)]) == 0
    rows = [line.split("\t")
            for line in out.read_text(encoding="utf-8").splitlines()]
    assert [(r[0], r[1]) for r in rows] == [
        ("cat", "0"), ("cat", "1"), ("dog", "0")]


def test_generate_is_seed_deterministic(work, trained, tmp_path):
    outs = []
    for name in ("g1.tsv", "g2.tsv"):
        out = tmp_path / name
        assert main(["generate", "--checkpoint", str(trained),
                     "--vocab", str(work / "model.bin.vocab"),
                     "--chars", str(work / "model.bin.chars"),
                     "--senses", str(work / "senses.tsv"),
                     "--prune-threshold", "0.05",
                     "--words", "cat", "--seed", "3",
                     "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_evaluate_writes_report(work, trained, tmp_path):
    out = tmp_path / "report.json"
    ws = tmp_path / "word_scores.tsv"
    assert main(["evaluate", "--checkpoint", str(trained),
                 "--vocab", str(work / "model.bin.vocab"),
                 "--chars", str(work / "model.bin.chars"),
                 "--senses", str(work / "senses.tsv"),
                 "--prune-threshold", "0.05",
                 "--test", str(work / "splits" / "test.tsv"),
                 "--runs", "2",
                 "--output", str(out), "--word-scores", str(ws)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["runs"] == 2
    assert len(report["bleu"]["per_run"]) == 2
    assert report["scored_words"] >= 1
    rows = [line.split("\t")
            for line in ws.read_text(encoding="utf-8").splitlines()]
    assert len(rows) == report["scored_words"]
    assert all(len(r) == 4 for r in rows)


def test_missing_input_exits_2_naming_path(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    assert main(["stats", "--lexicon", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path):
    src = tmp_path / "t.txt"
    src.write_text("a b c\n", encoding="utf-8")
    assert main(["train-embeddings", "--mode", "sgns",
                 "--tokens", str(src),
                 "--output", str(tmp_path / "v.tsv"),
                 "--dim", "0"]) == 2


def test_unknown_config_key_exits_2(work, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"bogus": 1}', encoding="utf-8")
    assert main(["stats", "--config", str(cfg),
                 "--lexicon", str(work / "lex.tsv")]) == 2
    assert "bogus" in capsys.readouterr().err


def test_config_file_type_check(work, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"seed": "seven"}', encoding="utf-8")
    assert main(["stats", "--config", str(cfg),
                 "--lexicon", str(work / "lex.tsv")]) == 2


def test_config_precedence_defaults_file_flags(work, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"seed": 7, "ratios": "0.6,0.2,0.2"}', encoding="utf-8")
    assert main(["split", "--config", str(cfg),
                 "--lexicon", str(work / "lex.tsv"),
                 "--output-dir", str(tmp_path / "s1")]) == 0
    m1 = json.loads(
        (tmp_path / "s1" / "split.manifest.json").read_text(encoding="utf-8"))
    assert m1["config"]["seed"] == 7
    assert m1["config"]["ratios"] == "0.6,0.2,0.2"
    assert m1["config"]["language"] == "en"

    assert main(["split", "--config", str(cfg), "--seed", "9",
                 "--lexicon", str(work / "lex.tsv"),
                 "--output-dir", str(tmp_path / "s2")]) == 0
    m2 = json.loads(
        (tmp_path / "s2" / "split.manifest.json").read_text(encoding="utf-8"))
    assert m2["config"]["seed"] == 9


def test_missing_required_flag_exits_2(capsys):
    assert main(["split"]) == 2
    assert "--lexicon" in capsys.readouterr().err


def test_vocabulary_digest_mismatch_exits_2(work, trained, tmp_path, capsys):
    other = tmp_path / "other.vocab"
    build_vocab(["totally", "unrelated", "tokens"]).save(other)
    assert main(["evaluate", "--checkpoint", str(trained),
                 "--vocab", str(other),
                 "--chars", str(work / "model.bin.chars"),
                 "--senses", str(work / "senses.tsv"),
                 "--prune-threshold", "0.05",
                 "--test", str(work / "splits" / "test.tsv"),
                 "--output", str(tmp_path / "r.json")]) == 2
    assert "digest mismatch" in capsys.readouterr().err


def test_generate_unknown_word_exits_2(work, trained, tmp_path, capsys):
    assert main(["generate", "--checkpoint", str(trained),
                 "--vocab", str(work / "model.bin.vocab"),
                 "--chars", str(work / "model.bin.chars"),
                 "--senses", str(work / "senses.tsv"),
                 "--prune-threshold", "0.05",
                 "--words", "zebra",
                 "--output", str(tmp_path / "g.tsv")]) == 2
    assert "zebra" in capsys.readouterr().err


def test_internal_failure_exits_1(work, monkeypatch):
    import defmod.cli as cli

    def boom(args, command):
        raise RuntimeError("unexpected")

    # Every command resolves its config first; a blowup there stands in for
    # any unclassified failure and must hit the exit-1 barrier.
    monkeypatch.setattr(cli, "_resolve", boom)
    assert cli.main(["stats", "--lexicon", str(work / "lex.tsv")]) == 1


def test_console_entry_point_runs(work):
    result = subprocess.run(
        ["defmod", "stats", "--lexicon", str(work / "lex.tsv")],
        capture_output=True, text=True, check=False)
    assert result.returncode == 0
    assert json.loads(result.stdout)["word_count"] == 10


def test_no_command_mutates_inputs(work, tmp_path):
    lex = work / "lex.tsv"
    before = lex.read_bytes()
    assert main(["stats", "--lexicon", str(lex)]) == 0
    assert main(["split", "--lexicon", str(lex),
                 "--output-dir", str(tmp_path / "s")]) == 0
    assert lex.read_bytes() == before
