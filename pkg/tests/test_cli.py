import subprocess
import sys

import pytest

from xqct.cli import main, read_config
from xqct.data import samples_to_records, save_records
from xqct.evaluation import load_weights, save_weights
from xqct.synthetic import SyntheticConfig, generate_samples, hidden_weights
from xqct.training import read_meta


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "synth.txt"
    save_records(path, samples_to_records(generate_samples(hidden_weights(), SyntheticConfig(samples=120, seed=9))))
    return path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_perft(capsys):
    assert run(capsys, "perft", "--depth", "1") == (0, "44\n", "")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "xqct", "perft", "--depth", "2"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "1920"


def test_features_dump(capsys):
    code, out, _ = run(capsys, "features", "--sets", "matl")
    assert code == 0 and out == ""
    code, out, _ = run(capsys, "features", "--fen", "3k5/9/9/9/9/9/9/9/R8/4K4 w", "--sets", "matl,loc")
    lines = out.splitlines()
    assert "MATL R\t+1" in lines
    assert any(line.startswith("LOC R@") for line in lines)


def test_train_and_inspect(capsys, synth_file, tmp_path):
    out_path = tmp_path / "w.bin"
    code, out, _ = run(capsys, "train", "--data", str(synth_file), "--max-iter", "2", "--out", str(out_path))
    assert code == 0 and "best epoch" in out
    assert read_meta(out_path)["cfg.max_iterations"] == "2"
    code, out, _ = run(capsys, "weights", "show", "--weights", str(out_path), "--top", "3", "--average")
    assert code == 0 and len(out.splitlines()) == 3
    assert out.splitlines()[0].startswith("MATL R")


def test_accuracy_of_hidden_expert(capsys, synth_file, tmp_path):
    path = tmp_path / "hidden.bin"
    save_weights(path, hidden_weights())
    code, out, _ = run(capsys, "accuracy", "--weights", str(path), "--data", str(synth_file))
    assert code == 0 and float(out) == 1.0


def test_config_file(capsys, synth_file, tmp_path):
    cfg = tmp_path / "run.cfg"
    out_path = tmp_path / "cfg.bin"
    cfg.write_text(f"# training defaults\nmax-iter = 1\nbatch=7\nout={out_path}\n")
    assert read_config(cfg)["max_iter"] == "1"
    code, _, _ = run(capsys, "--config", str(cfg), "train", "--data", str(synth_file))
    assert code == 0
    meta = read_meta(out_path)
    assert meta["cfg.batch_size"] == "7" and meta["cfg.max_iterations"] == "1"
    # command-line flags win over the file
    code, _, _ = run(capsys, "--config", str(cfg), "train", "--data", str(synth_file), "--batch", "3")
    assert read_meta(out_path)["cfg.batch_size"] == "3"


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus=1\n")
    code, _, err = run(capsys, "--config", str(cfg), "perft")
    assert code == 2 and "bogus" in err


def test_match_command(capsys, tmp_path):
    code, out, _ = run(capsys, "match", "--a", "init", "--b", "init", "--count", "1", "--nodes", "200", "--report", str(tmp_path / "m.jsonl"))
    assert code == 0
    assert out.splitlines()[-1].startswith("A: ") and "win rate 0.5000" in out
    assert (tmp_path / "m.jsonl").exists()


def test_synth_command(capsys, tmp_path):
    path = tmp_path / "s.txt"
    code, out, _ = run(capsys, "synth", "--out", str(path), "--samples", "5")
    assert code == 0 and len(path.read_text().splitlines()) == 5


@pytest.mark.parametrize(
    "argv",
    [
        ["perft", "--fen", "not a fen"],
        ["accuracy", "--weights", "/nonexistent.bin", "--data", "/nonexistent.txt"],
        ["features", "--sets", "matl,bogus"],
    ],
)
def test_errors_exit_with_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and err.startswith("xqct: error:")


def test_missing_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_threads_env(monkeypatch):
    from xqct import cli

    monkeypatch.setenv("XQCT_THREADS", "3")
    assert cli._default_workers() == 3
    monkeypatch.setenv("XQCT_THREADS", "junk")
    assert cli._default_workers() == 1


def test_weights_roundtrip_through_cli(capsys, tmp_path):
    path = tmp_path / "h.bin"
    save_weights(path, hidden_weights())
    assert load_weights(path).layout.sets == ("MATL", "LOC")
    code, out, _ = run(capsys, "weights", "show", "--weights", str(path), "--top", "1")
    assert code == 0 and out.startswith("MATL R\topening=1300.000\tendgame=1400.000")
