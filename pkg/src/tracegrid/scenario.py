"""Scripted end-to-end walkthrough of one full study cycle.

Covers the whole researcher loop on synthetic data: register an acquisition
feed, select a study set, run a pipeline over it, revise the pipeline, run it
again, then answer all seven traceability questions and audit the journals.
Every line of the transcript is a pure function of the seed, so a frozen
transcript doubles as a regression oracle.

The gold-standard check is exercised twice: once against intact reference
digests (expected PASS) and once against a deliberately tampered copy, where
the expected outcome is that the tampering IS detected. `corrupt_gold=True`
instead corrupts the reference the PASS check uses, which must make the run
fail with a nonzero exit code.
"""
from __future__ import annotations

import random
from typing import Callable

from .audit import audit
from .clock import LogicalClock
from .descriptions import ActivityDescription, WorkflowDescription
from .queries import FAIL, MATCH, MISMATCH, PASS, QueryEngine
from .simulator import SimulationConfig, enact, plan
from .store import COMPLETED, DATA, ProvenanceStore

PIPELINE = "civet-chain"
ACQUIRED_IMAGES = 2_400
STUDY_SET_SIZE = 2_000
WORKERS = 500


class StepFailure(Exception):
    def __init__(self, step: str, detail: str):
        super().__init__(detail)
        self.step = step
        self.detail = detail


def _expect(condition: bool, step: str, detail: str) -> None:
    if not condition:
        raise StepFailure(step, detail)


def _pipeline(mask_executable: str) -> WorkflowDescription:
    return WorkflowDescription.create(
        name=PIPELINE,
        activities=[
            ActivityDescription(task_name="convert", executable="/opt/civet/convert"),
            ActivityDescription(task_name="mask", executable=mask_executable),
            ActivityDescription(task_name="thickness", executable="/opt/civet/thickness"),
        ],
        edges=[("convert", "mask"), ("mask", "thickness")],
    )


def _flip(digest: str) -> str:
    return ("0" if digest[0] != "0" else "1") + digest[1:]


def run_scenario(
    seed: int = 0,
    corrupt_gold: bool = False,
    emit: Callable[[str], None] = print,
    data_dir: str | None = None,
) -> int:
    try:
        _walk(seed, corrupt_gold, emit, data_dir)
    except StepFailure as e:
        emit(f"[{e.step}] FAILED: {e.detail}")
        return 1
    return 0


def _walk(seed: int, corrupt_gold: bool, emit: Callable[[str], None], data_dir) -> None:
    rng = random.Random(seed)
    store = ProvenanceStore(clock=LogicalClock(start=1_000, step=1))
    engine = QueryEngine(store)
    cfg = SimulationConfig(
        workers=WORKERS,
        duration_model=(
            ("/opt/civet/convert", 600_000),
            ("/opt/civet/mask", 1_800_000),
            ("/opt/civet/mask-v2", 1_800_000),
            ("/opt/civet/thickness", 3_000_000),
        ),
        seed=seed,
    )
    emit(f"[setup] seed={seed} workers={WORKERS}")

    # acquisition feed, then the curated subset the study actually uses
    sizes = {f"img-{i:04d}": rng.randrange(14_000_000, 30_000_000)
             for i in range(ACQUIRED_IMAGES)}
    feed = store.register_dataset(
        [(img, size, {}) for img, size in sorted(sizes.items())], source="acquisition feed"
    )
    emit(f"[register-dataset] {feed.dataset_id}: {len(feed.members)} images, "
         f"{feed.total_bytes()} bytes")

    chosen = sorted(rng.sample(sorted(sizes), STUDY_SET_SIZE))
    study = store.register_dataset(
        [(img, sizes[img], {}) for img in chosen],
        source=f"selected from {feed.dataset_id}",
    )
    emit(f"[select-study-set] {study.dataset_id}: {len(study.members)} of "
         f"{len(feed.members)} images")

    name, version = store.define(_pipeline("/opt/civet/mask"))
    emit(f"[define-pipeline] {name}@{version}: "
         f"{'/'.join(store.description(name).activity_names())}")

    def run_batch(pipeline_version: int) -> list[str]:
        pairs = [
            (store.open_instance(PIPELINE, pipeline_version, {"in": img}), sizes[img])
            for img in chosen
        ]
        report = enact(plan(store.registry, pairs, cfg), cfg, store.append_event)
        _expect(report.jobs_failed == 0, "enact", "batch had failures")
        emit(f"[enact] v{pipeline_version}: {report.jobs_completed} jobs, "
             f"makespan {report.makespan_ms} ms, output {report.total_output_bytes} bytes")
        return [inst.instance_id for inst, _ in pairs]

    ids_a = run_batch(1)
    analysis_a = store.record_analysis(
        "baseline cortical thickness", study.dataset_id, PIPELINE, 1, ids_a, author="rm"
    )
    emit(f"[record-analysis] {analysis_a.analysis_id}: {len(ids_a)} instances by rm")

    name, v2 = store.revise(PIPELINE, _pipeline("/opt/civet/mask-v2"))
    emit(f"[revise-pipeline] {name}@{v2}: mask stage replaced")

    ids_b = run_batch(2)
    analysis_b = store.record_analysis(
        "reworked mask stage", study.dataset_id, PIPELINE, 2, ids_b, author="kl"
    )
    emit(f"[record-analysis] {analysis_b.analysis_id}: {len(ids_b)} instances by kl")

    # i. reconstruct a past run, including a mid-flight prefix
    first = ids_a[0]
    rec = engine.reconstruct(first)
    _expect(rec.description_jsonable["version"] == 1, "reconstruct",
            "instance not pinned to version 1")
    _expect(rec.instance.status == COMPLETED, "reconstruct", "instance not COMPLETED")
    partial = engine.reconstruct(first, up_to_seq=2)
    _expect(partial.instance.status == "OPEN", "reconstruct", "prefix should still be open")
    emit(f"[i reconstruct] {first}: pinned v{rec.description_jsonable['version']}, "
         f"{len(rec.events)} events, prefix@2 status {partial.instance.status}")

    # ii. validate a workflow spec against a reference
    same = engine.validate_spec((PIPELINE, 1), (PIPELINE, 1))
    drifted = engine.validate_spec((PIPELINE, 2), (PIPELINE, 1))
    _expect(same.verdict == PASS, "validate-spec", "v1 vs v1 must PASS")
    changed = [task for task, _ in drifted.diff.modified_activities]
    _expect(drifted.verdict == FAIL and changed == ["mask"], "validate-spec",
            f"v2 vs v1 should flag mask, got {changed}")
    emit(f"[ii validate-spec] v1~v1 {same.verdict}; v2~v1 {drifted.verdict} "
         f"(modified: {','.join(changed)})")

    # iii. inspect intermediary results of one run
    rows = engine.intermediary_results(first)
    kinds = [outcome.kind for _, outcome in rows]
    _expect(kinds == [DATA, DATA, DATA], "intermediary-results",
            f"expected three DATA outcomes, got {kinds}")
    for event, outcome in rows:
        emit(f"[iii intermediary] {event.task_name}: {outcome.size_bytes} bytes "
             f"digest {outcome.outcome_id[:16]}")

    # iv. validate results against the gold standard
    gold = engine.data_digests(first)
    if corrupt_gold:
        gold["mask"] = _flip(gold["mask"])
        emit("[iv validate-results] gold standard corrupted by flag")
    verification = store.open_instance(PIPELINE, 1, {"in": chosen[0]})
    enact(plan(store.registry, [(verification, sizes[chosen[0]])], cfg), cfg, store.append_event)
    report = engine.validate_results(verification.instance_id, gold)
    _expect(report.verdict == PASS, "validate-results",
            f"re-run of {chosen[0]} should reproduce the gold digests, got {report.verdict}")
    emit(f"[iv validate-results] {verification.instance_id} vs gold: {report.verdict}")

    tampered = {**gold, "mask": _flip(gold["mask"])}
    caught = engine.validate_results(verification.instance_id, tampered)
    _expect(caught.verdict == FAIL and dict(caught.per_activity)["mask"] == MISMATCH,
            "validate-results", "tampered gold digest was not flagged")
    emit("[iv validate-results] tampered copy: mask MISMATCH detected, verdict FAIL "
         "(detection expected)")

    # v. query past analyses
    mine = engine.query_analyses(author="rm")
    done = engine.query_analyses(description_name=PIPELINE, status=COMPLETED)
    _expect([r["analysisId"] for r in mine] == [analysis_a.analysis_id],
            "query-analyses", "author filter missed the baseline analysis")
    _expect(len(done) == 2, "query-analyses", f"expected 2 completed analyses, got {len(done)}")
    emit(f"[v query-analyses] author=rm -> {len(mine)}; status=COMPLETED -> {len(done)}")

    # vi. compare the two analyses
    cmp = engine.compare_analyses(analysis_a.analysis_id, analysis_b.analysis_id)
    _expect(cmp.comparable, "compare-analyses", "same pipeline must be comparable")
    delta_tasks = sorted(t for t, _, _ in cmp.outcome_deltas)
    _expect(delta_tasks == ["mask", "thickness"], "compare-analyses",
            f"expected the mask change plus its downstream cone, got {delta_tasks}")
    emit(f"[vi compare-analyses] {analysis_a.analysis_id} vs {analysis_b.analysis_id}: "
         f"diverged tasks {','.join(delta_tasks)}; makespans "
         f"{cmp.makespan_a}/{cmp.makespan_b} ms")

    # vii. annotate and search annotations
    store.annotate(first, "qc-status", "left hemisphere artifact reviewed, accepted",
                   author="rm")
    store.annotate(PIPELINE, "qc-status", "blessed for production studies", author="kl")
    by_key = engine.search_annotations(key_exact="qc-status")
    by_text = engine.search_annotations(text_substring="ARTIFACT")
    by_target = engine.search_annotations(target=first)
    _expect(len(by_key) == 2 and len(by_text) == 1 and len(by_target) == 1,
            "annotations", f"search returned {len(by_key)}/{len(by_text)}/{len(by_target)}")
    emit(f"[vii annotations] key=qc-status -> {len(by_key)}; "
         f"text~artifact -> {len(by_text)}; target={first} -> {len(by_target)}")

    # chains, precedence and discipline hold globally; the worker ceiling is a
    # per-enactment-batch property, so each batch is swept on its own timeline
    checked = audit(store)
    _expect(checked["ok"], "audit", "journal audit found violations")
    peaks = []
    for batch in (ids_a, ids_b, [verification.instance_id]):
        swept = audit(store, workers=WORKERS, instance_ids=batch)
        _expect(swept["ok"], "audit", f"worker ceiling breached in a batch of {len(batch)}")
        peaks.append(swept["maxConcurrentRunning"])
    emit(f"[audit] ok: {checked['instancesAudited']} instances, "
         f"{checked['eventsAudited']} events, per-batch peak running "
         f"{'/'.join(str(p) for p in peaks)} <= {WORKERS}")

    if data_dir is not None:
        store.persist(data_dir)
        emit(f"[persist] journals written to {data_dir}")
