import json
import subprocess
import sys

import pytest

from speechcoach.audio import write_wav
from speechcoach.cli import main
from speechcoach.config import load_config
from speechcoach.corpus import planted_transcript, speech_surrogate, study_csv, synthetic_study
from speechcoach.errors import ConfigError
from speechcoach.transcript import format_word_event

TARGETS = ["um", "you know"]


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "targets.txt").write_text("\n".join(TARGETS) + "\n")
    src = tmp_path / "sources"
    src.mkdir()
    write_wav(src / "um.wav", speech_surrogate(700, seed=1))
    write_wav(src / "you_know.wav", speech_surrogate(3000, seed=2))
    cfg = tmp_path / "session.cfg"
    cfg.write_text(
        "targets = targets.txt\n"
        "asset_cache = cache\n"
        "sessions_root = sessions\n"
        "latency_model = uniform:380:1950\n"
        "seed = 7\n"
        "output_latency_ms = 200\n"
    )
    words, truth = planted_transcript(TARGETS, 400, 12, seed=3)
    (tmp_path / "replay.jsonl").write_text("".join(format_word_event(w) + "\n" for w in words))
    return tmp_path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_spearcon_build(workspace, capsys):
    code, out, err = run(["--config", workspace / "session.cfg", "spearcon", "build",
                          "--sources", workspace / "sources"], capsys)
    assert code == 0, err
    manifest = json.loads((workspace / "cache" / "manifest.json").read_text())
    assert set(manifest) == {"um", "you_know"}
    assert manifest["you_know"]["duration_ms"] <= 1000
    assert manifest["um"]["duration_ms"] == pytest.approx(280, abs=14)
    assert "you_know" in out


def test_spearcon_build_missing_source(workspace, capsys):
    (workspace / "sources" / "you_know.wav").unlink()
    code, _, err = run(["spearcon", "build", "--config", workspace / "session.cfg",
                        "--sources", workspace / "sources"], capsys)
    assert code == 1
    assert err.startswith("E_MISSING_SOURCE:") and "you_know" in err


def build(workspace, capsys):
    assert run(["--config", workspace / "session.cfg", "spearcon", "build",
                "--sources", workspace / "sources"], capsys)[0] == 0


def test_run_replay_reports_detections(workspace, capsys):
    build(workspace, capsys)
    code, out, err = run(["--config", workspace / "session.cfg", "run", "--replay", workspace / "replay.jsonl",
                          "--participant", "p01", "--session", 1], capsys)
    assert code == 0, err
    assert "detections: 12" in out
    assert (workspace / "sessions" / "p01" / "1.session.json").is_file()
    assert (workspace / "sessions" / "p01" / "1.events.jsonl").is_file()


def test_run_errors(workspace, capsys):
    cfg = workspace / "session.cfg"
    code, _, err = run(["--config", cfg, "run", "--replay", workspace / "replay.jsonl",
                        "--participant", "p01", "--session", 1], capsys)
    assert code == 1 and err.startswith("E_MISSING_ASSET:")

    build(workspace, capsys)
    code, _, err = run(["--config", cfg, "run", "--replay", workspace / "replay.jsonl",
                        "--participant", "p01", "--session", 0], capsys)
    assert code == 1 and err.startswith("E_VALIDATION:")

    bad = workspace / "bad.jsonl"
    bad.write_text('{"text": "um", "start_ms": 0, "end_ms": 100, "conf": 0.9}\n{"text": oops}\n')
    code, _, err = run(["--config", cfg, "run", "--replay", bad, "--participant", "p01", "--session", 1], capsys)
    assert code == 1 and err.startswith("E_SOURCE_FORMAT:") and "line 2" in err


def test_run_twice_byte_identical(workspace, capsys, tmp_path):
    build(workspace, capsys)
    outputs = []
    for _ in range(2):
        assert run(["--config", workspace / "session.cfg", "run", "--replay", workspace / "replay.jsonl",
                    "--participant", "p02", "--session", 2], capsys)[0] == 0
        folder = workspace / "sessions" / "p02"
        outputs.append(((folder / "2.session.json").read_bytes(), (folder / "2.events.jsonl").read_bytes()))
    assert outputs[0] == outputs[1]


def test_analyze_csv(workspace, capsys):
    table = workspace / "freq.csv"
    table.write_text(study_csv(synthetic_study(seed=5)))
    code, out, err = run(["analyze", "--csv", table, "--out", workspace / "rep"], capsys)
    assert code == 0, err
    report = json.loads((workspace / "rep" / "report.json").read_text())
    assert set(report["kinds"]) == {"S", "S'"}
    assert (workspace / "rep" / "report.csv").is_file()
    assert "RQ1 A" in out


def test_analyze_duplicate_participant(workspace, capsys):
    rows = synthetic_study(n_per_group=3, seed=5)
    rows[2]["participant"] = rows[0]["participant"]
    table = workspace / "dup.csv"
    table.write_text(study_csv(rows))
    code, _, err = run(["analyze", "--csv", table, "--out", workspace / "rep"], capsys)
    assert code == 1 and err.startswith("E_CSV_SCHEMA:")


def test_analyze_sessions_root(workspace, capsys):
    build(workspace, capsys)
    cfg = workspace / "session.cfg"
    for n in range(1, 9):
        words, _ = planted_transcript(TARGETS, 400, 20 - n, seed=n)
        replay = workspace / f"r{n}.jsonl"
        replay.write_text("".join(format_word_event(w) + "\n" for w in words))
        for pid in ("p1", "p2"):
            assert run(["--config", cfg, "run", "--replay", replay, "--participant", pid, "--session", n], capsys)[0] == 0
    code, out, err = run(["--config", cfg, "analyze", "--out", workspace / "rep"], capsys)
    assert code == 0, err
    report = json.loads((workspace / "rep" / "report.json").read_text())
    assert report["groups"] == ["all"]
    assert report["kinds"]["S"]["RQ1"]["all"]["test"]["mean"] < 0


def test_env_var_config(workspace, monkeypatch):
    monkeypatch.setenv("SPEECHCOACH_CONFIG", str(workspace / "session.cfg"))
    cfg = load_config()
    assert cfg.seed == 7 and cfg.asset_cache == workspace / "cache"


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("delay_budget_ms = soon\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("colour = blue\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_config(bad)
    bad.write_text("refractory_ms = -5\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
    ok = tmp_path / "ok.cfg"
    ok.write_text("[speechcoach]\nphrases = um, you know\nclock = virtual\n")
    assert load_config(ok).target_phrases() == ["um", "you know"]


def test_console_script_bridge(workspace, capsys):
    build(workspace, capsys)
    words, _ = planted_transcript(TARGETS, 60, 3, seed=4)
    stdin = "".join(format_word_event(w) + "\n" for w in words)
    proc = subprocess.run(
        [sys.executable, "-m", "speechcoach.cli", "--config", str(workspace / "session.cfg"),
         "run", "--bridge", "--participant", "live", "--session", "1"],
        input=stdin, capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "detections: 3" in proc.stdout
