import argparse
import subprocess
import sys

import pytest

from dracbf.cli import main, parse_seeds

HEAD_ON = "scenarios/head_on.yaml"


def test_parse_seeds():
    assert parse_seeds("3:5") == (3, 5)
    assert parse_seeds("7") == (7, 1)
    for bad in ("a:b", "1:0", "x"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_seeds(bad)


def test_batch_writes_identical_files(tmp_path, capsys):
    for d in ("a", "b"):
        assert main(["batch", "--config", HEAD_ON, "--seeds", "0:2", "--out", str(tmp_path / d),
                     "--no-timing"]) == 0
    assert "success=100.0%" in capsys.readouterr().out
    for name in ("episodes.csv", "episodes_summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_prints_trace_and_exports_jsonl(tmp_path, capsys):
    assert main(["run", "--config", HEAD_ON, "--trace-every", "50", "--out", str(tmp_path),
                 "--format", "jsonl"]) == 0
    out = capsys.readouterr().out
    assert '"success": true' in out
    assert (tmp_path / "trace.jsonl").exists() and (tmp_path / "episode.jsonl").exists()


def test_sweep_and_ablate(tmp_path, capsys):
    assert main(["sweep", "--config", HEAD_ON, "--seeds", "0:1", "--values", "0.3,0.4",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    assert main(["ablate", "--config", HEAD_ON, "--seeds", "0:1", "--out", str(tmp_path)]) == 0
    assert "gap:" in capsys.readouterr().out
    assert (tmp_path / "ablation.csv").exists()


def test_oracle_check_small(capsys):
    assert main(["oracle-check", "--instances", "20", "--grid", "2"]) == 0
    out = capsys.readouterr().out
    assert "GS vs QP" in out and out.strip().splitlines()[-1] in ("PASS", "FAIL")


def test_error_exit_codes(tmp_path, capsys):
    assert main(["batch", "--config", str(tmp_path / "nope.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("obstacles: []\nfilter: {bogus: 1}\n")
    assert main(["batch", "--config", str(bad)]) == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["batch", "--config", HEAD_ON, "--out", str(blocker / "x")]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["batch", "--seeds", "zz"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["batch", "--filter", "other"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dracbf.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("run", "batch", "sweep", "ablate", "oracle-check"):
        assert cmd in proc.stdout
