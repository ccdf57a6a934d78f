"""Query layer and audits over enacted provenance."""
from __future__ import annotations

import hashlib
import json

import pytest

from tracegrid.audit import audit
from tracegrid.clock import LogicalClock
from tracegrid.errors import InstanceStillOpen, NotFound, UnknownActivity
from tracegrid.queries import FAIL, MATCH, MISMATCH, MISSING, PASS, QueryEngine
from tracegrid.simulator import SimulationConfig, enact, plan
from tracegrid.store import COMPLETED, FAILED, OPEN, PENDING, ProvenanceStore, SCHEDULED

from conftest import act, wf


def chain_desc(name="civet-chain", mid_exec="/opt/civet/mask"):
    return wf(
        name,
        [act("convert", executable="/opt/civet/convert"),
         act("mask", executable=mid_exec),
         act("extract", executable="/opt/civet/extract")],
        [("convert", "mask"), ("mask", "extract")],
    )


def enacted_store(n=2, failure_rate=0.0, seed=0, name="civet-chain"):
    s = ProvenanceStore(clock=LogicalClock(start=50_000, step=1000))
    s.define(chain_desc(name))
    pairs = [(s.open_instance(name, 1, {"in": f"scan-{i:03d}"}), 1_000) for i in range(n)]
    cfg = SimulationConfig(workers=4, default_duration_ms=100, failure_rate=failure_rate, seed=seed)
    report = enact(plan(s.registry, pairs, cfg), cfg, s.append_event)
    return s, [inst.instance_id for inst, _ in pairs], report


# --- i. reconstruct ------------------------------------------------------------


def test_reconstruct_returns_pinned_version_after_revision():
    s, (iid, *_), _ = enacted_store()
    s.revise("civet-chain", wf("civet-chain", [act("only")], []))
    rec = QueryEngine(s).reconstruct(iid)
    assert rec.description_jsonable["version"] == 1
    assert [a["taskName"] for a in rec.description_jsonable["activities"]] == [
        "convert", "extract", "mask",
    ]
    assert rec.instance.status == COMPLETED


def test_reconstruct_truncation_matches_independent_fold():
    s, (iid, *_), _ = enacted_store(n=1)
    q = QueryEngine(s)
    all_events = s.events(iid)
    for cut in range(len(all_events) + 1):
        rec = q.reconstruct(iid, up_to_seq=cut)
        # independent fold over the first `cut` event jsonables
        states = {"convert": PENDING, "mask": PENDING, "extract": PENDING}
        for e in all_events[:cut]:
            states[e.task_name] = e.to_state
        assert dict(rec.instance.activity_states) == states
        assert len(rec.events) == cut
        assert rec.instance.last_seq == (all_events[cut - 1].seq if cut else 0)


def test_reconstruct_full_equals_replay():
    s, ids, _ = enacted_store()
    q = QueryEngine(s)
    for iid in ids:
        assert q.reconstruct(iid).instance == s.replay(iid)


def test_reconstruct_unknown():
    s, _, _ = enacted_store()
    with pytest.raises(NotFound):
        QueryEngine(s).reconstruct("inst-424242")


# --- ii. validate_spec ----------------------------------------------------------


def test_validate_spec_identity_passes():
    s, _, _ = enacted_store()
    v = QueryEngine(s).validate_spec(("civet-chain", 1), ("civet-chain", 1))
    assert v.verdict == PASS
    assert v.diff.is_empty()


def test_validate_spec_flags_added_task():
    s, _, _ = enacted_store()
    v2 = wf("civet-chain", [act("convert", executable="/opt/civet/convert"),
                            act("mask", executable="/opt/civet/mask"),
                            act("extract", executable="/opt/civet/extract"),
                            act("qc", executable="/opt/civet/qc")],
            [("convert", "mask"), ("mask", "extract"), ("extract", "qc")])
    s.revise("civet-chain", v2)
    v = QueryEngine(s).validate_spec(("civet-chain", 2), ("civet-chain", 1))
    assert v.verdict == FAIL
    assert [a.task_name for a in v.diff.added_activities] == ["qc"]
    assert v.candidate == ("civet-chain", 2)


def test_validate_spec_missing_version():
    s, _, _ = enacted_store()
    with pytest.raises(NotFound):
        QueryEngine(s).validate_spec(("civet-chain", 1), ("civet-chain", 9))


# --- iii. intermediary results ---------------------------------------------------


def test_intermediary_results_in_seq_order():
    s, (iid, *_), _ = enacted_store(n=1)
    rows = QueryEngine(s).intermediary_results(iid)
    assert [e.task_name for e, _ in rows] == ["convert", "mask", "extract"]
    assert [o.kind for _, o in rows] == ["DATA", "DATA", "DATA"]
    assert [e.seq for e, _ in rows] == sorted(e.seq for e, _ in rows)


def test_intermediary_results_filter_by_task():
    s, (iid, *_), _ = enacted_store(n=1)
    rows = QueryEngine(s).intermediary_results(iid, task_name="mask")
    assert len(rows) == 1
    assert rows[0][0].task_name == "mask"
    with pytest.raises(UnknownActivity):
        QueryEngine(s).intermediary_results(iid, task_name="ghost")


def test_intermediary_results_include_error_log_on_failure():
    s, (iid, *_), _ = enacted_store(n=1, failure_rate=1.0)
    rows = QueryEngine(s).intermediary_results(iid)
    assert [o.kind for _, o in rows] == ["ERROR_LOG"]
    assert s.instance(iid).status == FAILED


# --- iv. validate_results ---------------------------------------------------------


def test_validate_results_reflexive_pass():
    s, (iid, *_), _ = enacted_store(n=1)
    q = QueryEngine(s)
    report = q.validate_results(iid, q.data_digests(iid))
    assert report.verdict == PASS
    assert dict(report.per_activity) == {"convert": MATCH, "mask": MATCH, "extract": MATCH}


def test_validate_results_detects_single_byte_mutation():
    s, (iid, *_), _ = enacted_store(n=1)
    q = QueryEngine(s)
    gold = q.data_digests(iid)
    payload = bytearray(s.payload(gold["mask"]))
    payload[0] ^= 0x01
    forged = hashlib.sha256(bytes(payload)).hexdigest()
    assert forged != gold["mask"]
    report = q.validate_results(iid, {**gold, "mask": forged})
    assert dict(report.per_activity)["mask"] == MISMATCH
    assert report.verdict == FAIL


def test_validate_results_missing_reference_entry():
    s, (iid, *_), _ = enacted_store(n=1)
    q = QueryEngine(s)
    gold = q.data_digests(iid)
    gold.pop("extract")
    report = q.validate_results(iid, gold)
    assert dict(report.per_activity)["extract"] == MISSING
    assert report.verdict == FAIL


def test_validate_results_requires_terminal_instance():
    s = ProvenanceStore(clock=LogicalClock())
    s.define(chain_desc())
    iid = s.open_instance("civet-chain", 1, {}).instance_id
    with pytest.raises(InstanceStillOpen):
        QueryEngine(s).validate_results(iid, {})


def test_validate_results_fails_when_referenced_task_produced_nothing():
    s, (iid, *_), _ = enacted_store(n=1, failure_rate=1.0)
    q = QueryEngine(s)
    report = q.validate_results(iid, {"convert": "0" * 64})
    assert report.verdict == FAIL


# --- v. query_analyses -------------------------------------------------------------


def analyses_fixture():
    s, ids, _ = enacted_store(n=3)
    ds = s.register_dataset([("scan-000", 10, {}), ("scan-001", 10, {})], "ingest")
    a1 = s.record_analysis("first pass", ds.dataset_id, "civet-chain", 1, ids[:1], author="rm")
    a2 = s.record_analysis("second pass", ds.dataset_id, "civet-chain", 1, ids[1:], author="kl")
    a3 = s.record_analysis("planning only", ds.dataset_id, "civet-chain", 1, [], author="rm")
    return s, ds, (a1, a2, a3)


def test_query_analyses_empty_filter_returns_all_in_order():
    s, _, (a1, a2, a3) = analyses_fixture()
    rows = QueryEngine(s).query_analyses()
    assert [r["analysisId"] for r in rows] == [a1.analysis_id, a2.analysis_id, a3.analysis_id]


def test_query_analyses_filters_conjunctively():
    s, ds, (a1, _, a3) = analyses_fixture()
    q = QueryEngine(s)
    assert [r["analysisId"] for r in q.query_analyses(author="rm")] == [a1.analysis_id, a3.analysis_id]
    assert q.query_analyses(author="rm", status="PLANNED")[0]["analysisId"] == a3.analysis_id
    assert q.query_analyses(author="rm", dataset_id="ds-9999") == []


def test_query_analyses_time_range():
    s, _, (a1, a2, a3) = analyses_fixture()
    q = QueryEngine(s)
    assert [r["analysisId"] for r in q.query_analyses(time_range=(a2.created_at, None))] == [
        a2.analysis_id, a3.analysis_id,
    ]
    assert q.query_analyses(time_range=(a3.created_at + 1, None)) == []


def test_query_analyses_derived_status():
    s, _, (a1, _, a3) = analyses_fixture()
    q = QueryEngine(s)
    rows = {r["analysisId"]: r["status"] for r in q.query_analyses()}
    assert rows[a1.analysis_id] == COMPLETED
    assert rows[a3.analysis_id] == "PLANNED"


# --- vi. compare_analyses ------------------------------------------------------------


def test_compare_identity_has_no_deltas():
    s, _, (a1, _, _) = analyses_fixture()
    rep = QueryEngine(s).compare_analyses(a1.analysis_id, a1.analysis_id)
    assert rep.comparable
    assert rep.outcome_deltas == ()
    assert rep.version_delta.is_empty()
    assert rep.makespan_a == rep.makespan_b
    assert rep.errors_a == rep.errors_b == 0


def test_compare_v1_v2_names_changed_activity_and_diverged_digests():
    s = ProvenanceStore(clock=LogicalClock())
    s.define(chain_desc())
    s.revise("civet-chain", chain_desc(mid_exec="/opt/civet/mask-v2"))
    ds = s.register_dataset([("scan-0", 10, {})], "src")
    cfg = SimulationConfig(workers=2, default_duration_ms=100, seed=4)

    def run(version):
        inst = s.open_instance("civet-chain", version, {"in": "scan-0"})
        enact(plan(s.registry, [(inst, 1_000)], cfg), cfg, s.append_event)
        return s.record_analysis(f"v{version} run", ds.dataset_id, "civet-chain", version,
                                 [inst.instance_id], author="rm")

    a, b = run(1), run(2)
    rep = QueryEngine(s).compare_analyses(a.analysis_id, b.analysis_id)
    assert rep.comparable
    (task, changes), = rep.version_delta.modified_activities
    assert task == "mask"
    assert {c.field for c in changes} == {"executable"}
    deltas = {t for t, _, _ in rep.outcome_deltas}
    assert deltas == {"mask", "extract"}  # the change plus its downstream cone
    assert all(da != db for _, da, db in rep.outcome_deltas)


def test_compare_different_pipelines_not_comparable():
    s, ids, _ = enacted_store(n=1)
    s.define(wf("other", [act("z")], []))
    inst = s.open_instance("other", 1, {})
    cfg = SimulationConfig(workers=1, default_duration_ms=10)
    enact(plan(s.registry, [(inst, 10)], cfg), cfg, s.append_event)
    ds = s.register_dataset([("scan-0", 10, {})], "src")
    a = s.record_analysis("a", ds.dataset_id, "civet-chain", 1, ids, author="x")
    b = s.record_analysis("b", ds.dataset_id, "other", 1, [inst.instance_id], author="x")
    rep = QueryEngine(s).compare_analyses(a.analysis_id, b.analysis_id)
    assert not rep.comparable
    assert rep.outcome_deltas == ()
    assert not rep.version_delta.is_empty()  # full structural diff attached


def test_compare_is_mirrored():
    s, _, (a1, a2, _) = analyses_fixture()
    q = QueryEngine(s)
    fwd = q.compare_analyses(a1.analysis_id, a2.analysis_id)
    rev = q.compare_analyses(a2.analysis_id, a1.analysis_id)
    assert fwd.comparable == rev.comparable
    assert {(t, a, b) for t, a, b in fwd.outcome_deltas} == {(t, b, a) for t, a, b in rev.outcome_deltas}
    assert (fwd.makespan_a, fwd.makespan_b) == (rev.makespan_b, rev.makespan_a)
    assert (fwd.errors_a, fwd.errors_b) == (rev.errors_b, rev.errors_a)


def test_compare_unknown_analysis():
    s, _, (a1, _, _) = analyses_fixture()
    with pytest.raises(NotFound):
        QueryEngine(s).compare_analyses(a1.analysis_id, "an-9999")


# --- vii. search_annotations -----------------------------------------------------------


def annotated_store():
    s, ids, _ = enacted_store(n=1)
    s.annotate(ids[0], "qc-status", "cortical surfaces look clean", author="rm")
    s.annotate("civet-chain", "qc-status", "pipeline blessed for production", author="kl")
    s.annotate("civet-chain@1", "note", "first frozen version", author="kl")
    return s, ids


def test_search_by_key_oldest_first():
    s, _ = annotated_store()
    hits = QueryEngine(s).search_annotations(key_exact="qc-status")
    assert [h.author for h in hits] == ["rm", "kl"]
    assert hits[0].created_at <= hits[1].created_at


def test_search_text_substring_case_insensitive():
    s, _ = annotated_store()
    hits = QueryEngine(s).search_annotations(text_substring="CORTICAL")
    assert len(hits) == 1
    assert hits[0].target.startswith("inst-")


def test_search_by_target_and_no_matches():
    s, ids = annotated_store()
    q = QueryEngine(s)
    assert [h.key for h in q.search_annotations(target=ids[0])] == ["qc-status"]
    assert q.search_annotations(text_substring="no such text") == []


# --- read-only + audits ------------------------------------------------------------------


def test_queries_leave_journals_untouched():
    s, ids = annotated_store()
    q = QueryEngine(s)
    before = s.verify()
    q.reconstruct(ids[0])
    q.validate_spec(("civet-chain", 1), ("civet-chain", 1))
    q.intermediary_results(ids[0])
    q.validate_results(ids[0], q.data_digests(ids[0]))
    q.query_analyses()
    q.search_annotations(key_exact="qc-status")
    assert s.verify() == before


def test_audit_clean_run_is_ok():
    s, ids, report = enacted_store(n=4)
    result = audit(s, workers=4)
    assert result["ok"]
    assert result["instancesAudited"] == 4
    assert result["precedenceViolations"] == []
    assert result["disciplineViolations"] == []
    assert result["ceilingViolations"] == []
    assert 1 <= result["maxConcurrentRunning"] <= 4


def test_audit_is_ok_under_failures_and_retries():
    s, ids, _ = enacted_store(n=5, failure_rate=0.4, seed=13)
    result = audit(s, workers=4)
    assert result["ok"]


def forge_event(s, body):
    """Plant a record the validating API would refuse, the way an insider
    rewriting the journal (chain intact) would: journal plus index together."""
    s._internal.append("event", body)
    s._event_bodies[body["instanceId"]].append(body)


def test_audit_detects_forged_precedence_violation():
    s = ProvenanceStore(clock=LogicalClock())
    s.define(chain_desc())
    iid = s.open_instance("civet-chain", 1, {}).instance_id
    # `mask` runs before its predecessor `convert` has completed
    forged = [
        {"instanceId": iid, "taskName": "mask", "seq": 1, "fromState": "PENDING",
         "toState": "SCHEDULED", "simTimestamp": 0},
        {"instanceId": iid, "taskName": "mask", "seq": 2, "fromState": "SCHEDULED",
         "toState": "RUNNING", "simTimestamp": 0},
    ]
    for body in forged:
        forge_event(s, body)
    result = audit(s)
    assert not result["ok"]
    assert result["precedenceViolations"][0]["taskName"] == "mask"


def test_audit_detects_forged_sequence_gap_and_missing_outcome():
    s = ProvenanceStore(clock=LogicalClock())
    s.define(chain_desc())
    iid = s.open_instance("civet-chain", 1, {}).instance_id
    forge_event(s, {
        "instanceId": iid, "taskName": "convert", "seq": 3, "fromState": "RUNNING",
        "toState": "COMPLETED", "simTimestamp": 5,
    })
    result = audit(s)
    issues = {v["issue"] for v in result["disciplineViolations"]}
    assert any("seq jumped" in i for i in issues)


def test_audit_detects_ceiling_breach():
    s = ProvenanceStore(clock=LogicalClock())
    s.define(wf("p", [act("a"), act("b")], []))
    iid = s.open_instance("p", 1, {}).instance_id
    seq = 0
    for task in ("a", "b"):
        for frm, to in ((PENDING, SCHEDULED), (SCHEDULED, "RUNNING")):
            seq += 1
            forge_event(s, {
                "instanceId": iid, "taskName": task, "seq": seq, "fromState": frm,
                "toState": to, "simTimestamp": 0,
            })
    result = audit(s, workers=1)
    assert result["maxConcurrentRunning"] == 2
    assert result["ceilingViolations"]
    assert not result["ok"]
