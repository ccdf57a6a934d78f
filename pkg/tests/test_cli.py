"""Command line behavior: exit codes, formats, and store round trips."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from tracegrid import canonical
from tracegrid.cli import main
from tracegrid.translator import translate_bytes

EXAMPLES = Path(__file__).resolve().parent.parent / "docs" / "pipeline-examples"
CHAIN = str(EXAMPLES / "linear-chain.json")


def test_translate_text(capsys):
    assert main(["translate", CHAIN]) == 0
    out = capsys.readouterr().out
    assert "linear-chain" in out
    assert "fetch" in out and "publish" in out


def test_translate_machine_matches_module(capsysbinary):
    assert main(["translate", CHAIN, "--format", "machine"]) == 0
    got = capsysbinary.readouterr().out.strip()
    expected = translate_bytes(Path(CHAIN).read_bytes()).to_jsonable()
    assert got == canonical.dumps(expected)


def test_translate_missing_file_exits_1(capsys):
    assert main(["translate", "/no/such/pipeline.json"]) == 1
    assert "No such file" in capsys.readouterr().err


def test_translate_cycle_exits_1(tmp_path, capsys):
    doc = {"pipelineName": "loop", "tasks": [
        {"taskName": "a", "executable": "/x", "dependsOn": ["b"]},
        {"taskName": "b", "executable": "/x", "dependsOn": ["a"]},
    ]}
    path = tmp_path / "loop.json"
    path.write_text(json.dumps(doc))
    assert main(["translate", str(path)]) == 1
    assert "CycleError" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["challenge", "--profile", "bogus"])
    assert exc.value.code == 2


def test_define_submit_events_query_round_trip(tmp_path, capsys):
    d = str(tmp_path / "store")
    assert main(["define", CHAIN, "--data-dir", d]) == 0
    assert capsys.readouterr().out.strip() == "linear-chain@1"

    assert main(["submit", "linear-chain", "--data-dir", d,
                 "--input", "in=scan-1", "--workers", "2"]) == 0
    out = capsys.readouterr().out
    assert "inst-000001" in out and "jobsCompleted     3" in out

    assert main(["events", "inst-000001", "--data-dir", d]) == 0
    out = capsys.readouterr().out
    assert "PENDING->SCHEDULED" in out and out.count("COMPLETED") == 3

    assert main(["query", "reconstruct", "inst-000001", "--data-dir", d]) == 0
    out = capsys.readouterr().out
    assert "linear-chain@1" in out and "3/3" in out


def test_define_duplicate_and_revise(tmp_path, capsys):
    d = str(tmp_path / "store")
    assert main(["define", CHAIN, "--data-dir", d]) == 0
    assert main(["define", CHAIN, "--data-dir", d]) == 1
    assert "DuplicateName" in capsys.readouterr().err
    assert main(["define", CHAIN, "--data-dir", d, "--revise"]) == 0
    assert capsys.readouterr().out.strip() == "linear-chain@2"


def test_diff_files_and_registry_refs(tmp_path, capsys):
    assert main(["diff", CHAIN, str(EXAMPLES / "minimal.json")]) == 0
    out = capsys.readouterr().out
    assert "+ activity fetch" in out and "- activity run" in out

    d = str(tmp_path / "store")
    main(["define", CHAIN, "--data-dir", d])
    main(["define", CHAIN, "--data-dir", d, "--revise"])
    capsys.readouterr()
    assert main(["diff", "linear-chain@1", "linear-chain@2", "--data-dir", d]) == 0
    assert "(no differences)" in capsys.readouterr().out
    assert main(["diff", "linear-chain@1", "linear-chain@3", "--data-dir", d]) == 1
    assert "NotFound" in capsys.readouterr().err


def test_diff_renders_annotation_changes(tmp_path, capsys):
    doc = json.loads((EXAMPLES / "annotated.json").read_text())
    stripped = dict(doc, annotations=[])
    plain = tmp_path / "plain.json"
    plain.write_text(json.dumps(stripped))

    assert main(["diff", str(EXAMPLES / "annotated.json"), str(plain)]) == 0
    out = capsys.readouterr().out
    assert "+ note [WORKFLOW] owner: data quality group" in out

    assert main(["diff", str(plain), str(EXAMPLES / "annotated.json")]) == 0
    out = capsys.readouterr().out
    assert "- note [WORKFLOW] owner: data quality group" in out


def test_query_results_against_gold_file(tmp_path, capsys):
    d = str(tmp_path / "store")
    main(["define", CHAIN, "--data-dir", d])
    main(["submit", "linear-chain", "--data-dir", d, "--input", "in=scan-1"])
    capsys.readouterr()

    main(["query", "outcomes", "inst-000001", "--data-dir", d, "--format", "machine"])
    rows = json.loads(capsys.readouterr().out)
    gold = {r["event"]["taskName"]: r["outcome"]["outcomeId"] for r in rows}
    gold_path = tmp_path / "gold.json"
    gold_path.write_text(json.dumps(gold))

    assert main(["query", "results", "inst-000001", str(gold_path), "--data-dir", d]) == 0
    assert "verdict: PASS" in capsys.readouterr().out

    gold["clean"] = "0" * 64
    gold_path.write_text(json.dumps(gold))
    assert main(["query", "results", "inst-000001", str(gold_path), "--data-dir", d]) == 0
    out = capsys.readouterr().out
    assert "MISMATCH" in out and "verdict: FAIL" in out


def test_challenge_smoke_machine_report(capsysbinary):
    assert main(["challenge", "--profile", "smoke", "--format", "machine"]) == 0
    report = canonical.loads(capsysbinary.readouterr().out)
    assert report["jobs"] == 4
    assert report["workers"] == 2
    assert report["audit"]["ok"] is True
    assert report["totalOutputBytes"] == 10 * report["totalInputBytes"]


def test_challenge_persists_when_given_data_dir(tmp_path, capsys):
    d = str(tmp_path / "run")
    assert main(["challenge", "--profile", "smoke", "--data-dir", d]) == 0
    capsys.readouterr()
    assert main(["query", "annotations", "--data-dir", d]) == 0  # store reopens cleanly
    assert (tmp_path / "run" / "internal.journal").exists()
