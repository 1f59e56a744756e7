"""Command-line surface checks: subcommand behavior, exit codes, and the
environment-variable override path."""

import pytest

from bfamr.cli import EXIT_IO, EXIT_OK, EXIT_USER, main
from bfamr.toy import toy_corpus_path

TOY = str(toy_corpus_path())


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def tiny_checkpoint(tmp_path_factory):
    # One short training run shared by the parse/score/inspect tests.
    out = tmp_path_factory.mktemp("run")
    cfg = out / "run.cfg"
    cfg.write_text(
        "\n".join(
            [
                "graph_hidden=16",
                "refinement_emb=8",
                "contextual_dim=8",
                "sentence_layers=1",
                "graph_layers=1",
                "interactive_layers=1",
                "ffn_hidden=24",
                "heads=4",
                "dropout=0.0",
                "batch_size=8",
                "epochs=1",
                "warmup_steps=20",
                "seed=0",
                "dev_beam=1",
                "eval_every_epochs=1",
                f"corpus={TOY}",
                f"out_dir={out}",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    assert main(["train", "--config", str(cfg)]) == EXIT_OK
    return out / "checkpoint"


class TestOracleCheck:
    def test_bundled_corpus_clean(self, capsys):
        code, out, _ = run(capsys, "oracle-check")
        assert code == EXIT_OK
        assert "0 failures, 100% breadth-first" in out

    def test_seed_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("BFAMR_SEED", "7")
        code, out, _ = run(capsys, "oracle-check")
        assert code == EXIT_OK
        assert "seed 7" in out

    def test_flag_beats_env(self, capsys, monkeypatch):
        monkeypatch.setenv("BFAMR_SEED", "7")
        code, out, _ = run(capsys, "oracle-check", "--seed", "3")
        assert code == EXIT_OK
        assert "seed 3" in out


class TestPreprocess:
    def test_writes_vocab_and_stats(self, capsys, tmp_path):
        vocab_out = tmp_path / "vocab.json"
        code, out, _ = run(
            capsys, "preprocess", "--corpus", TOY, "--vocab-out", str(vocab_out)
        )
        assert code == EXIT_OK
        assert vocab_out.exists()
        assert "examples            50" in out

    def test_missing_corpus_is_io_error(self, capsys, tmp_path):
        code, _, err = run(
            capsys,
            "preprocess",
            "--corpus",
            str(tmp_path / "nope.jsonl"),
            "--vocab-out",
            str(tmp_path / "v.json"),
        )
        assert code == EXIT_IO
        assert "nope.jsonl" in err


class TestScore:
    def test_file_against_itself_is_one(self, capsys, tmp_path):
        pred = tmp_path / "pred.txt"
        pred.write_text(
            '(w / want-01 :ARG0 (b / boy))\n\n(s / sing-01 :ARG0 (p / person))\n',
            encoding="utf-8",
        )
        code, out, _ = run(capsys, "score", "--pred", str(pred), "--gold", str(pred))
        assert code == EXIT_OK
        assert "F1 1.0000" in out
        assert "P  1.0000" in out and "R  1.0000" in out

    def test_count_mismatch_is_user_error(self, capsys, tmp_path):
        pred = tmp_path / "pred.txt"
        gold = tmp_path / "gold.txt"
        pred.write_text("(b / boy)\n", encoding="utf-8")
        gold.write_text("(b / boy)\n\n(g / girl)\n", encoding="utf-8")
        code, _, err = run(capsys, "score", "--pred", str(pred), "--gold", str(gold))
        assert code == EXIT_USER
        assert "mismatch" in err

    def test_bad_penman_is_user_error(self, capsys, tmp_path):
        pred = tmp_path / "pred.txt"
        pred.write_text("(b / boy\n", encoding="utf-8")
        code, _, _ = run(capsys, "score", "--pred", str(pred), "--gold", str(pred))
        assert code == EXIT_USER

    def test_missing_file_is_io_error(self, capsys, tmp_path):
        pred = tmp_path / "pred.txt"
        pred.write_text("(b / boy)\n", encoding="utf-8")
        code, _, err = run(
            capsys, "score", "--pred", str(pred), "--gold", str(tmp_path / "missing.txt")
        )
        assert code == EXIT_IO
        assert "missing.txt" in err


class TestTrainCommand:
    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("graph_hidden=16\nbogus_key=3\n", encoding="utf-8")
        code, _, err = run(capsys, "train", "--config", str(cfg))
        assert code == EXIT_USER
        assert "bogus_key" in err

    def test_missing_paths_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("graph_hidden=16\nheads=4\n", encoding="utf-8")
        code, _, err = run(capsys, "train", "--config", str(cfg))
        assert code == EXIT_USER
        assert "corpus" in err


class TestParseAndInspect:
    def test_checkpoint_directory_contents(self, tiny_checkpoint):
        names = sorted(p.name for p in tiny_checkpoint.iterdir())
        assert names == ["config.txt", "manifest.json", "tensors.bin", "vocab.json"]
        assert "embedder_seed=" in (tiny_checkpoint / "config.txt").read_text(encoding="utf-8")

    def test_parse_emits_penman(self, capsys, tiny_checkpoint, tmp_path):
        inp = tmp_path / "in.txt"
        inp.write_text("the boy sleeps\n", encoding="utf-8")
        code, out, _ = run(
            capsys,
            "parse",
            "--checkpoint",
            str(tiny_checkpoint),
            "--input",
            str(inp),
            "--beam",
            "1",
        )
        assert code == EXIT_OK
        assert out.lstrip().startswith("# snt: the boy sleeps")
        assert "(" in out and "/" in out

    def test_trace_flag_adds_steps(self, capsys, tiny_checkpoint, tmp_path):
        inp = tmp_path / "in.txt"
        inp.write_text("Mary sings\n", encoding="utf-8")
        code, out, _ = run(
            capsys,
            "parse",
            "--checkpoint",
            str(tiny_checkpoint),
            "--input",
            str(inp),
            "--beam",
            "1",
            "--trace",
        )
        assert code == EXIT_OK
        assert "# step focused=0" in out
        assert "# log_prob:" in out

    def test_missing_checkpoint_names_path(self, capsys, tmp_path):
        inp = tmp_path / "in.txt"
        inp.write_text("the boy sleeps\n", encoding="utf-8")
        code, _, err = run(
            capsys, "parse", "--checkpoint", "/no/such/ckpt", "--input", str(inp)
        )
        assert code == EXIT_IO
        assert "/no/such/ckpt" in err

    def test_parse_output_scores_against_itself(self, capsys, tiny_checkpoint, tmp_path):
        inp = tmp_path / "in.txt"
        inp.write_text("the boy sleeps\nMary sings\n", encoding="utf-8")
        pred = tmp_path / "pred.txt"
        code = main(
            [
                "parse",
                "--checkpoint",
                str(tiny_checkpoint),
                "--input",
                str(inp),
                "--beam",
                "1",
                "--output",
                str(pred),
            ]
        )
        assert code == EXIT_OK
        capsys.readouterr()
        code, out, _ = run(capsys, "score", "--pred", str(pred), "--gold", str(pred))
        assert code == EXIT_OK
        assert "F1 1.0000" in out

    def test_inspect_lists_parameters(self, capsys, tiny_checkpoint):
        code, out, _ = run(capsys, "inspect", "--checkpoint", str(tiny_checkpoint))
        assert code == EXIT_OK
        assert "total parameters:" in out
        assert "refine/emb" in out


class TestTopLevel:
    def test_no_subcommand_is_user_error(self, capsys):
        assert main([]) == EXIT_USER
        capsys.readouterr()

    def test_deterministic_given_seed(self, capsys, tiny_checkpoint, tmp_path):
        inp = tmp_path / "in.txt"
        inp.write_text("the girl runs\n", encoding="utf-8")
        outs = []
        for _ in range(2):
            code, out, _ = run(
                capsys,
                "parse",
                "--checkpoint",
                str(tiny_checkpoint),
                "--input",
                str(inp),
                "--beam",
                "4",
                "--seed",
                "5",
            )
            assert code == EXIT_OK
            outs.append(out)
        assert outs[0] == outs[1]
