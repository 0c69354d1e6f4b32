import json

import pytest

from pairrank.cli import main
from pairrank.corpus import write_canonical

from conftest import make_separable_corpus

TRAIN_CONFIG = {
    "model": {"hidden_size": 16, "num_layers": 1, "num_heads": 2, "ffn_size": 32,
              "max_len": 16, "dropout_rate": 0.0, "seed": 1},
    "loss": {"lambda1": 0.5, "lambda2": 0.5, "margin": 0.2, "epsilon": 1e-7},
    "sampling": {"strategy": "cross_product", "seed": 1},
    "optimizer": "adam",
    "learning_rate": 0.003,
    "batch_size": 8,
    "num_epochs": 3,
    "base_seed": 1,
}


@pytest.fixture
def workspace(tmp_path):
    train_path = tmp_path / "train.jsonl"
    dev_path = tmp_path / "dev.jsonl"
    with open(train_path, "w") as f:
        write_canonical(make_separable_corpus(8, num_neg=2, seed=1), f)
    with open(dev_path, "w") as f:
        write_canonical(make_separable_corpus(4, num_neg=2, seed=2, split="dev"), f)
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(TRAIN_CONFIG))
    return tmp_path


def run_training(workspace, out_name="run"):
    out_dir = workspace / out_name
    code = main(["train", "--train", str(workspace / "train.jsonl"),
                 "--dev", str(workspace / "dev.jsonl"),
                 "--config", str(workspace / "config.json"),
                 "--out-dir", str(out_dir)])
    assert code == 0
    return out_dir


def test_convert_and_stats(tmp_path, capsys):
    tsv = tmp_path / "in.tsv"
    tsv.write_text("q1\twho wrote hamlet\tshakespeare\t1\n"
                   "q1\twho wrote hamlet\tparis\t0\n")
    out = tmp_path / "out.jsonl"
    assert main(["convert", "--from", "tsv", "--in", str(tsv), "--out", str(out)]) == 0
    assert main(["stats", "--in", str(out)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["num_questions"] == 1
    assert stats["num_train_pairs"] == 1


def test_stats_missing_file_is_data_error(tmp_path):
    assert main(["stats", "--in", str(tmp_path / "nope.jsonl")]) == 2


def test_stats_malformed_file_is_data_error(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert main(["stats", "--in", str(bad)]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["train"])  # missing required flags
    assert exc.value.code == 1


def test_train_eval_rank_end_to_end(workspace, capsys):
    out_dir = run_training(workspace)
    assert (out_dir / "model.ckpt").exists()
    assert (out_dir / "vocab.txt").exists()
    assert (out_dir / "history.json").exists()
    capsys.readouterr()

    run_file = workspace / "run.trec"
    code = main(["eval", "--checkpoint", str(out_dir / "model.ckpt"),
                 "--vocab", str(out_dir / "vocab.txt"),
                 "--data", str(workspace / "dev.jsonl"),
                 "--filter", "require_positive",
                 "--run-file", str(run_file)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert 0.0 <= report["mrr"] <= 1.0
    assert report["filter_mode"] == "require_positive"
    lines = run_file.read_text().splitlines()
    assert all(len(line.split()) == 6 and line.split()[1] == "Q0" for line in lines)

    answers = workspace / "answers.txt"
    answers.write_text("word1 word2 zmarker\nword3 word4\n")
    code = main(["rank", "--checkpoint", str(out_dir / "model.ckpt"),
                 "--vocab", str(out_dir / "vocab.txt"),
                 "--question", "question word1 word2",
                 "--answers", str(answers)])
    assert code == 0
    out_lines = capsys.readouterr().out.splitlines()
    assert len(out_lines) == 2
    assert out_lines[0].startswith("1\t")


def test_train_epochs_flag_overrides(workspace):
    out_dir = workspace / "short"
    code = main(["train", "--train", str(workspace / "train.jsonl"),
                 "--config", str(workspace / "config.json"),
                 "--epochs", "1", "--out-dir", str(out_dir)])
    assert code == 0
    saved = json.loads((out_dir / "config.json").read_text())
    assert saved["num_epochs"] == 1


def test_eval_vocab_mismatch_is_data_error(workspace, tmp_path):
    out_dir = run_training(workspace)
    bad_vocab = tmp_path / "bad_vocab.txt"
    bad_vocab.write_text("[PAD]\n[UNK]\n[CLS]\n[SEP]\nextra\n")
    code = main(["eval", "--checkpoint", str(out_dir / "model.ckpt"),
                 "--vocab", str(bad_vocab),
                 "--data", str(workspace / "dev.jsonl")])
    assert code == 2
