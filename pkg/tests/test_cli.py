"""CLI surface tests: subcommands, exit codes, bundled scenario access."""

import json

from bandsplit.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

MINI = {
    "name": "cli_mini",
    "bands": [
        {"service": {"kind": "deterministic", "mean": 0.05714285714285714}},
        {"service": {"kind": "deterministic", "mean": 0.1}, "prop_latency_s": 0.015},
    ],
    "flows": [{"sta": 0, "ac": 0, "lambda_pps": 9.0, "packets": 800}],
    "schedulers": ["leaky_bucket", "even_split"],
    "seed_base": 1,
    "replications": 2,
}


def write_mini(tmp_path):
    p = tmp_path / "mini.json"
    p.write_text(json.dumps(MINI), encoding="utf-8")
    return p


def test_run_and_compare_roundtrip(tmp_path, capsys):
    cfg = write_mini(tmp_path)
    out = tmp_path / "records.csv"
    assert main(["run", str(cfg), "--out", str(out)]) == EXIT_OK
    assert out.exists()
    text = out.read_text()
    assert text.count("\n") == 5  # header + 2 schedulers x 2 seeds
    assert main(["compare", str(out), "--baseline", "even_split"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "baseline: even_split" in captured.out


def test_run_lists_bundled_scenarios(capsys):
    assert main(["run", "--list"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("two_band_asym", "two_band_high_rtt", "two_sta_mixed"):
        assert name in out


def test_json_format_output(tmp_path):
    cfg = write_mini(tmp_path)
    out = tmp_path / "records.jsonl"
    assert main(["run", str(cfg), "--out", str(out), "--format", "json"]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert json.loads(lines[0])["scenario"] == "cli_mini"


def test_missing_config_is_config_error(capsys):
    assert main(["run", "no_such_file.json", "--out", "x.csv"]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_invalid_config_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**MINI, "flows": []}), encoding="utf-8")
    assert main(["run", str(bad), "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG
    assert "flows" in capsys.readouterr().err


def test_unparseable_json_is_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken", encoding="utf-8")
    assert main(["run", str(bad), "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG


def test_compare_single_scheme_is_runtime_error(tmp_path, capsys):
    cfg = dict(MINI)
    cfg["schedulers"] = ["leaky_bucket"]
    p = tmp_path / "one.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "one.csv"
    assert main(["run", str(p), "--out", str(out)]) == EXIT_OK
    assert main(["compare", str(out)]) == EXIT_RUNTIME


def test_seeds_override(tmp_path):
    cfg = write_mini(tmp_path)
    out = tmp_path / "records.csv"
    assert main(["run", str(cfg), "--out", str(out), "--seeds", "3"]) == EXIT_OK
    assert out.read_text().count("\n") == 7  # header + 2 x 3


def test_compare_writes_summary_file(tmp_path):
    cfg = write_mini(tmp_path)
    out = tmp_path / "records.csv"
    assert main(["run", str(cfg), "--out", str(out)]) == EXIT_OK
    summary = tmp_path / "summary.txt"
    assert main(["compare", str(out), "--out", str(summary)]) == EXIT_OK
    assert "baseline: leaky_bucket" in summary.read_text()
