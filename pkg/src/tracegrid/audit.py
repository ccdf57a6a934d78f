"""After-the-fact audits over recorded provenance.

These re-examine the journal with no help from the simulator: hash-chain
verification, precedence safety, a worker-ceiling sweep line, and the
event/outcome discipline. A clean report means the recorded history could
have happened on the claimed machine and nobody has edited it since.

The worker-ceiling sweep assumes the audited instances share one simulated
timeline (one enactment batch); scope `instance_ids` accordingly.
"""
from __future__ import annotations

from .store import (
    COMPLETED,
    DATA,
    ERROR_LOG,
    FAILED,
    PENDING,
    RUNNING,
    SCHEDULED,
    SKIPPED,
    ProvenanceStore,
)

_LEGAL = {
    (PENDING, SCHEDULED),
    (SCHEDULED, RUNNING),
    (RUNNING, COMPLETED),
    (RUNNING, FAILED),
    (FAILED, SCHEDULED),
    (PENDING, SKIPPED),
    (SCHEDULED, SKIPPED),
    (RUNNING, SKIPPED),
    (FAILED, SKIPPED),
}


def audit(
    store: ProvenanceStore,
    workers: int | None = None,
    instance_ids: list[str] | None = None,
) -> dict:
    ids = sorted(instance_ids) if instance_ids is not None else [
        i.instance_id for i in store.instances()
    ]
    precedence: list[dict] = []
    discipline: list[dict] = []
    points: list[tuple[int, int]] = []  # (simTimestamp, +1 start / -1 stop)
    events_audited = 0

    for iid in ids:
        snapshot = store.instance(iid)
        desc = store.registry.get(snapshot.description_name, snapshot.description_version)
        preds = {a.task_name: desc.predecessors(a.task_name) for a in desc.activities}
        states = {a.task_name: PENDING for a in desc.activities}
        final_failed: set[str] = set()
        completed_at: dict[str, int] = {}
        expected_seq = 1
        for event in store.events(iid):
            events_audited += 1
            issue = None
            if event.seq != expected_seq:
                issue = f"seq jumped from {expected_seq - 1} to {event.seq}"
            elif event.task_name not in states:
                issue = f"event for unknown activity {event.task_name!r}"
            elif event.from_state != states[event.task_name]:
                issue = (
                    f"fromState {event.from_state} but activity was {states[event.task_name]}"
                )
            elif (event.from_state, event.to_state) not in _LEGAL:
                issue = f"illegal transition {event.from_state} -> {event.to_state}"
            elif event.task_name in final_failed:
                issue = "event after permanent failure"
            if issue is None:
                issue = _outcome_issue(store, event)
            if issue is not None:
                discipline.append(
                    {"instanceId": iid, "taskName": event.task_name, "seq": event.seq, "issue": issue}
                )
            if event.to_state == RUNNING:
                for p in preds.get(event.task_name, ()):
                    done = completed_at.get(p)
                    if done is None or done > event.sim_timestamp:
                        precedence.append(
                            {
                                "instanceId": iid,
                                "taskName": event.task_name,
                                "seq": event.seq,
                                "issue": f"ran before predecessor {p!r} completed",
                            }
                        )
                points.append((event.sim_timestamp, 1))
            elif event.from_state == RUNNING:
                points.append((event.sim_timestamp, -1))
            if event.to_state == COMPLETED:
                completed_at[event.task_name] = event.sim_timestamp
            if event.to_state == FAILED and event.final:
                final_failed.add(event.task_name)
            if event.task_name in states:
                states[event.task_name] = event.to_state
            expected_seq = event.seq + 1

    # sweep line: at equal timestamps workers free up before new work starts
    load = 0
    peak = 0
    ceiling_violations: list[dict] = []
    for t, delta in sorted(points):
        load += delta
        peak = max(peak, load)
        if workers is not None and load > workers and delta > 0:
            ceiling_violations.append({"simTimestamp": t, "running": load})

    chain = store.verify()
    ok = (
        all(part["ok"] for part in chain.values())
        and not precedence
        and not discipline
        and not ceiling_violations
    )
    return {
        "ok": ok,
        "chain": chain,
        "instancesAudited": len(ids),
        "eventsAudited": events_audited,
        "precedenceViolations": precedence,
        "disciplineViolations": discipline,
        "maxConcurrentRunning": peak,
        "workerCeiling": workers,
        "ceilingViolations": ceiling_violations,
    }


def _outcome_issue(store: ProvenanceStore, event) -> str | None:
    produced = store.produced_outcome(event.instance_id, event.task_name, event.seq)
    if event.to_state == COMPLETED:
        if event.outcome_id is None or produced is None:
            return "COMPLETED without a DATA outcome"
        if produced.kind != DATA:
            return "COMPLETED outcome is not DATA"
    elif event.to_state == FAILED and event.final:
        if event.outcome_id is None or produced is None:
            return "permanent FAILED without an ERROR_LOG outcome"
        if produced.kind != ERROR_LOG:
            return "permanent FAILED outcome is not ERROR_LOG"
    return None
