"""Plain-text renderers against the exact wire dicts the modules emit."""
from __future__ import annotations

from tracegrid import render
from tracegrid.descriptions import ActivityDescription, WorkflowDescription
from tracegrid.graph import diff


def two_versions():
    a1 = ActivityDescription.from_jsonable(
        {"taskName": "mask", "executable": "/opt/m1", "inputSlots": ["in"]})
    a2 = ActivityDescription.from_jsonable(
        {"taskName": "mask", "executable": "/opt/m2", "priority": 3,
         "inputSlots": ["in", "atlas"], "environment": {"V": "2"}})
    return (WorkflowDescription.create("p", [a1], []),
            WorkflowDescription.create("p", [a2], []))


def test_diff_text_field_changes_read_old_to_new():
    v1, v2 = two_versions()
    lines = render.diff_text(diff(v2, v1).to_jsonable())
    assert lines == [
        "~ mask.environment: {} -> {'V': '2'}",
        "~ mask.executable: '/opt/m1' -> '/opt/m2'",
        "~ mask.inputSlots: ['in'] -> ['in', 'atlas']",
        "~ mask.priority: 0 -> 3",
    ]


def test_diff_text_annotation_signs_follow_the_operation():
    d = {"addedActivities": [], "removedActivities": [], "modifiedActivities": [],
         "addedEdges": [], "removedEdges": [],
         "annotationChanges": [
             {"op": "add", "target": "mask", "key": "qc", "text": "checked"},
             {"op": "remove", "target": "WORKFLOW", "key": "owner", "text": "dq group"},
         ]}
    assert render.diff_text(d) == [
        "+ note [mask] qc: checked",
        "- note [WORKFLOW] owner: dq group",
    ]


def test_spec_validation_text_names_both_versions():
    v = {"verdict": "FAIL",
         "candidate": {"name": "civet", "version": 2},
         "reference": {"name": "civet", "version": 1},
         "diff": {"addedActivities": ["extract"], "removedActivities": [],
                  "modifiedActivities": [], "addedEdges": [], "removedEdges": [],
                  "annotationChanges": []}}
    lines = render.spec_validation_text(v)
    assert lines[0] == "candidate  civet@2"
    assert lines[1] == "reference  civet@1"
    assert "verdict    FAIL" in lines
    assert "+ activity extract" in lines


def test_results_validation_text_sorts_tasks():
    r = {"instanceId": "inst-000001", "verdict": "FAIL",
         "perActivity": {"mask": "MISMATCH", "convert": "MATCH", "extract": "MISSING"}}
    lines = render.results_validation_text(r)
    body = [l for l in lines if l and not l.startswith(("task", "--", "verdict:"))]
    assert body == ["convert  MATCH", "extract  MISSING", "mask     MISMATCH"]
    assert lines[-1] == "verdict: FAIL"


def test_comparison_text_outcome_delta_rows():
    c = {"analysisA": "an-0001", "analysisB": "an-0002", "comparable": True,
         "versionDelta": {"addedActivities": [], "removedActivities": [],
                          "modifiedActivities": [], "addedEdges": [],
                          "removedEdges": [], "annotationChanges": []},
         "outcomeDeltas": [{"taskName": "mask", "digestA": "a" * 64, "digestB": "b" * 64}],
         "durationStats": {"makespanMsA": 100, "makespanMsB": 200},
         "errorCounts": {"failedEventsA": 0, "failedEventsB": 1}}
    lines = render.comparison_text(c)
    assert "  mask  " + "a" * 16 + "  " + "b" * 16 in lines
    assert all("taskName" not in l for l in lines)


def test_table_lines_carry_no_trailing_whitespace():
    lines = render.table(["a", "b"], [["x", ""], ["longer", "y"]])
    assert all(l == l.rstrip() for l in lines)
