"""Dual provenance store over one append-only journal mechanism.

Two journals share the format: `internal` holds workflow meta-data and the
event stream (descriptions, instance openings, activity events); the analysis
base holds what executions produce and how researchers group it (outcomes,
datasets, analyses, annotations).

Every journal record carries the digest of its predecessor, so any historical
edit breaks the chain and is caught by a single O(n) walk. State is never
stored, only derived: folding the event stream from the instance-open record
always reproduces the live view.

Journal line format (UTF-8, one canonical JSON object per line):
    {"seq": int, "prevDigest": hex, "kind": str, "body": {...}, "digest": hex}
where digest = sha256 over the canonical bytes of the record minus `digest`.
Outcome payloads larger than the blob threshold live beside the journal in
`blobs/<outcomeId>`; smaller ones are inlined base64.
"""
from __future__ import annotations

import base64
from dataclasses import dataclass, field
from pathlib import Path

from . import canonical
from .canonical import GENESIS_DIGEST
from .clock import Clock, SystemClock
from .descriptions import WorkflowDescription
from .errors import (
    CorruptJournal,
    IllegalTransition,
    InstanceClosed,
    NotFound,
    OutcomeError,
    SchemaError,
    SequenceGap,
    UnknownActivity,
)
from .registry import DescriptionRegistry

PENDING = "PENDING"
SCHEDULED = "SCHEDULED"
RUNNING = "RUNNING"
COMPLETED = "COMPLETED"
FAILED = "FAILED"
SKIPPED = "SKIPPED"

ACTIVITY_STATES = (PENDING, SCHEDULED, RUNNING, COMPLETED, FAILED, SKIPPED)

OPEN = "OPEN"  # instance-level; terminal instance states reuse COMPLETED/FAILED

DATA = "DATA"
ERROR_LOG = "ERROR_LOG"
STATUS = "STATUS"

_LEGAL = {
    (PENDING, SCHEDULED),
    (SCHEDULED, RUNNING),
    (RUNNING, COMPLETED),
    (RUNNING, FAILED),
    (FAILED, SCHEDULED),  # retry
    (PENDING, SKIPPED),
    (SCHEDULED, SKIPPED),
    (RUNNING, SKIPPED),
    (FAILED, SKIPPED),  # a failure awaiting retry can still be abandoned
}

DEFAULT_BLOB_THRESHOLD = 1 << 20

INTERNAL = "internal"
ANALYSIS_BASE = "analysisbase"


@dataclass(frozen=True)
class OutcomeDraft:
    """What a producer hands over; the store derives the content address."""

    kind: str  # DATA | ERROR_LOG | STATUS
    payload: bytes
    size_bytes: int | None = None  # declared size; defaults to len(payload)

    def declared_size(self) -> int:
        return len(self.payload) if self.size_bytes is None else self.size_bytes


@dataclass(frozen=True)
class Outcome:
    outcome_id: str
    kind: str
    size_bytes: int
    producer: tuple[str, str, int]  # (instanceId, taskName, seq)

    def to_jsonable(self) -> dict:
        return {
            "outcomeId": self.outcome_id,
            "kind": self.kind,
            "sizeBytes": self.size_bytes,
            "producer": {
                "instanceId": self.producer[0],
                "taskName": self.producer[1],
                "seq": self.producer[2],
            },
        }


@dataclass(frozen=True)
class ActivityEvent:
    instance_id: str
    task_name: str
    seq: int
    from_state: str
    to_state: str
    sim_timestamp: int
    final: bool = False
    outcome_id: str | None = None

    def to_jsonable(self) -> dict:
        d = {
            "instanceId": self.instance_id,
            "taskName": self.task_name,
            "seq": self.seq,
            "fromState": self.from_state,
            "toState": self.to_state,
            "simTimestamp": self.sim_timestamp,
        }
        if self.to_state == FAILED:
            d["final"] = self.final
        if self.outcome_id is not None:
            d["outcomeId"] = self.outcome_id
        return d

    @classmethod
    def from_jsonable(cls, b: dict) -> "ActivityEvent":
        return cls(
            instance_id=b["instanceId"],
            task_name=b["taskName"],
            seq=b["seq"],
            from_state=b["fromState"],
            to_state=b["toState"],
            sim_timestamp=b["simTimestamp"],
            final=bool(b.get("final", False)),
            outcome_id=b.get("outcomeId"),
        )


@dataclass(frozen=True)
class WorkflowInstance:
    """Immutable snapshot of derived instance state."""

    instance_id: str
    description_name: str
    description_version: int
    submitted_at: int
    inputs: tuple[tuple[str, str], ...]  # slot -> input ref
    activity_states: tuple[tuple[str, str], ...]  # taskName -> state
    status: str  # OPEN | COMPLETED | FAILED
    last_seq: int

    def state_of(self, task_name: str) -> str:
        for name, state in self.activity_states:
            if name == task_name:
                return state
        raise UnknownActivity(task_name)

    def to_jsonable(self) -> dict:
        return {
            "instanceId": self.instance_id,
            "descriptionName": self.description_name,
            "descriptionVersion": self.description_version,
            "submittedAt": self.submitted_at,
            "inputs": dict(self.inputs),
            "activityStates": dict(self.activity_states),
            "status": self.status,
            "lastSeq": self.last_seq,
        }


@dataclass(frozen=True)
class DatasetRecord:
    dataset_id: str
    members: tuple[tuple[str, int, tuple[tuple[str, str], ...]], ...]  # (scanId, size, metadata)
    source: str
    registered_at: int

    def total_bytes(self) -> int:
        return sum(size for _, size, _ in self.members)

    def to_jsonable(self) -> dict:
        return {
            "datasetId": self.dataset_id,
            "memberRefs": [
                {"scanId": sid, "sizeBytes": size, "metadata": dict(meta)}
                for sid, size, meta in self.members
            ],
            "registrationProvenance": {"source": self.source, "timestamp": self.registered_at},
        }


@dataclass(frozen=True)
class AnalysisRecord:
    analysis_id: str
    title: str
    dataset_id: str
    description_name: str
    description_version: int
    instance_ids: tuple[str, ...]
    author: str
    annotations: tuple[tuple[str, str], ...]  # key -> text
    final_outcome_ids: tuple[str, ...]
    created_at: int

    def to_jsonable(self) -> dict:
        return {
            "analysisId": self.analysis_id,
            "title": self.title,
            "datasetId": self.dataset_id,
            "descriptionName": self.description_name,
            "descriptionVersion": self.description_version,
            "instanceIds": list(self.instance_ids),
            "author": self.author,
            "annotations": [{"key": k, "text": t} for k, t in self.annotations],
            "finalOutcomeIds": list(self.final_outcome_ids),
            "createdAt": self.created_at,
        }


@dataclass(frozen=True)
class AnnotationRecord:
    annotation_id: str
    target: str
    key: str
    text: str
    author: str
    created_at: int

    def to_jsonable(self) -> dict:
        return {
            "annotationId": self.annotation_id,
            "target": self.target,
            "key": self.key,
            "text": self.text,
            "author": self.author,
            "createdAt": self.created_at,
        }


class _Journal:
    """One append-only hash-chained record sequence, optionally write-through."""

    def __init__(self, name: str, path: Path | None = None):
        self.name = name
        self.records: list[dict] = []
        self.last_digest = GENESIS_DIGEST
        self._path = path
        self._fh = None
        if path is not None:
            self._fh = open(path, "ab")

    def append(self, kind: str, body: dict) -> dict:
        core = {"seq": len(self.records), "prevDigest": self.last_digest, "kind": kind, "body": body}
        record = {**core, "digest": canonical.digest_of(core)}
        self.records.append(record)
        self.last_digest = record["digest"]
        if self._fh is not None:
            self._fh.write(canonical.dumps(record) + b"\n")
            self._fh.flush()
        return record

    def admit(self, record: dict, line: int) -> None:
        """Accept an already-journaled record during load, re-checking the chain."""
        try:
            core = {k: record[k] for k in ("seq", "prevDigest", "kind", "body")}
            claimed = record["digest"]
        except (KeyError, TypeError):
            raise CorruptJournal(self.name, line, "missing record fields")
        if core["seq"] != len(self.records):
            raise CorruptJournal(self.name, line, f"expected seq {len(self.records)}, found {core['seq']}")
        if core["prevDigest"] != self.last_digest:
            raise CorruptJournal(self.name, line, "broken hash chain (prevDigest mismatch)")
        if canonical.digest_of(core) != claimed:
            raise CorruptJournal(self.name, line, "record digest does not match content")
        self.records.append(record)
        self.last_digest = claimed

    def verify(self) -> dict:
        """Re-walk the whole chain; O(n)."""
        last = GENESIS_DIGEST
        for i, record in enumerate(self.records):
            core = {k: record.get(k) for k in ("seq", "prevDigest", "kind", "body")}
            if core["seq"] != i or core["prevDigest"] != last or canonical.digest_of(core) != record.get("digest"):
                return {"journal": self.name, "records": len(self.records), "ok": False, "firstBadLine": i + 1}
            last = record["digest"]
        return {"journal": self.name, "records": len(self.records), "ok": True}

    def write_to(self, path: Path) -> None:
        with open(path, "wb") as fh:
            for record in self.records:
                fh.write(canonical.dumps(record) + b"\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class _InstanceState:
    """Mutable derived state; every change comes from applying a journal body."""

    __slots__ = ("instance_id", "description_name", "description_version", "submitted_at",
                 "inputs", "states", "final_failed", "last_seq")

    def __init__(self, body: dict, activity_names: list[str]):
        self.instance_id = body["instanceId"]
        self.description_name = body["descriptionName"]
        self.description_version = body["descriptionVersion"]
        self.submitted_at = body["submittedAt"]
        self.inputs = dict(body.get("inputs", {}))
        self.states = {name: PENDING for name in activity_names}
        self.final_failed: set[str] = set()
        self.last_seq = 0

    def apply(self, body: dict) -> None:
        self.states[body["taskName"]] = body["toState"]
        if body["toState"] == FAILED and body.get("final"):
            self.final_failed.add(body["taskName"])
        self.last_seq = body["seq"]

    @property
    def status(self) -> str:
        values = self.states.values()
        if all(s == COMPLETED for s in values):
            return COMPLETED
        quiescent = all(
            s in (COMPLETED, SKIPPED) or (s == FAILED and n in self.final_failed)
            for n, s in self.states.items()
        )
        return FAILED if quiescent else OPEN

    def snapshot(self) -> WorkflowInstance:
        return WorkflowInstance(
            instance_id=self.instance_id,
            description_name=self.description_name,
            description_version=self.description_version,
            submitted_at=self.submitted_at,
            inputs=tuple(sorted(self.inputs.items())),
            activity_states=tuple(sorted(self.states.items())),
            status=self.status,
            last_seq=self.last_seq,
        )


class ProvenanceStore:
    """Append-only provenance engine; in-memory by default, write-through when
    given a data directory. `load` re-checks every record digest and the chain
    linkage; by default corruption raises, with `tolerate_corruption=True` the
    valid prefix is kept and the damage reported in `corruption`."""

    def __init__(
        self,
        clock: Clock | None = None,
        data_dir: str | Path | None = None,
        blob_threshold: int = DEFAULT_BLOB_THRESHOLD,
        tolerate_corruption: bool = False,
    ):
        self.clock = clock or SystemClock()
        self.blob_threshold = blob_threshold
        self.corruption: list[dict] = []
        self._dir = Path(data_dir) if data_dir is not None else None
        self._write_through = data_dir is not None
        self._payloads: dict[str, bytes] = {}
        self._instances: dict[str, _InstanceState] = {}
        # read-only views of journaled bodies, indexed by instance so that
        # events()/replay() need not rescan the whole journal
        self._open_bodies: dict[str, dict] = {}
        self._event_bodies: dict[str, list[dict]] = {}
        self._outcomes: dict[str, Outcome] = {}
        self._outcome_by_producer: dict[tuple[str, str, int], Outcome] = {}
        self._datasets: dict[str, DatasetRecord] = {}
        self._analyses: dict[str, AnalysisRecord] = {}
        self._annotations: list[AnnotationRecord] = []
        self.registry = DescriptionRegistry(
            clock=self.clock, on_publish=lambda doc: self._internal.append("description", doc)
        )
        if self._dir is None:
            self._internal = _Journal(INTERNAL)
            self._analysisbase = _Journal(ANALYSIS_BASE)
        else:
            self._dir.mkdir(parents=True, exist_ok=True)
            (self._dir / "blobs").mkdir(exist_ok=True)
            pending = []
            for name in (INTERNAL, ANALYSIS_BASE):
                path = self._dir / f"{name}.journal"
                if path.exists():
                    pending.append((name, path.read_bytes()))
                else:
                    pending.append((name, b""))
            # replay existing journals in-memory first, then reopen for append
            self._internal = _Journal(INTERNAL)
            self._analysisbase = _Journal(ANALYSIS_BASE)
            for name, data in pending:
                self._replay_journal(name, data, tolerate_corruption)
            self._internal._fh = open(self._dir / f"{INTERNAL}.journal", "ab")
            self._analysisbase._fh = open(self._dir / f"{ANALYSIS_BASE}.journal", "ab")

    # --- journal replay / persistence ------------------------------------

    def _journal(self, name: str) -> _Journal:
        return self._internal if name == INTERNAL else self._analysisbase

    def _replay_journal(self, name: str, data: bytes, tolerate: bool) -> None:
        journal = self._journal(name)
        for i, line in enumerate(data.split(b"\n")):
            if not line:
                continue
            try:
                record = canonical.loads(line)
            except ValueError:
                err = CorruptJournal(name, i + 1, "line is not valid canonical text")
            else:
                try:
                    journal.admit(record, i + 1)
                    self._rebuild(record["kind"], record["body"])
                    continue
                except CorruptJournal as e:
                    err = e
            if not tolerate:
                raise err
            self.corruption.append({"journal": err.journal, "line": err.line, "reason": err.reason})
            return  # keep the valid prefix, ignore the unverifiable tail

    def _rebuild(self, kind: str, body: dict) -> None:
        if kind == "description":
            self.registry.restore(body)
        elif kind == "instance":
            desc = self.registry.get(body["descriptionName"], body["descriptionVersion"])
            self._instances[body["instanceId"]] = _InstanceState(body, desc.activity_names())
            self._open_bodies[body["instanceId"]] = body
            self._event_bodies[body["instanceId"]] = []
        elif kind == "event":
            self._instances[body["instanceId"]].apply(body)
            self._event_bodies[body["instanceId"]].append(body)
        elif kind == "outcome":
            outcome = Outcome(
                outcome_id=body["outcomeId"],
                kind=body["kind"],
                size_bytes=body["sizeBytes"],
                producer=(
                    body["producer"]["instanceId"],
                    body["producer"]["taskName"],
                    body["producer"]["seq"],
                ),
            )
            self._outcomes.setdefault(outcome.outcome_id, outcome)
            self._outcome_by_producer[outcome.producer] = outcome
            if "payloadB64" in body:
                self._payloads[outcome.outcome_id] = base64.b64decode(body["payloadB64"])
        elif kind == "dataset":
            rec = DatasetRecord(
                dataset_id=body["datasetId"],
                members=tuple(
                    (m["scanId"], m["sizeBytes"], tuple(sorted(m.get("metadata", {}).items())))
                    for m in body["memberRefs"]
                ),
                source=body["registrationProvenance"]["source"],
                registered_at=body["registrationProvenance"]["timestamp"],
            )
            self._datasets[rec.dataset_id] = rec
        elif kind == "analysis":
            rec = AnalysisRecord(
                analysis_id=body["analysisId"],
                title=body["title"],
                dataset_id=body["datasetId"],
                description_name=body["descriptionName"],
                description_version=body["descriptionVersion"],
                instance_ids=tuple(body["instanceIds"]),
                author=body["author"],
                annotations=tuple((a["key"], a["text"]) for a in body["annotations"]),
                final_outcome_ids=tuple(body["finalOutcomeIds"]),
                created_at=body["createdAt"],
            )
            self._analyses[rec.analysis_id] = rec
        elif kind == "annotation":
            self._annotations.append(
                AnnotationRecord(
                    annotation_id=body["annotationId"],
                    target=body["target"],
                    key=body["key"],
                    text=body["text"],
                    author=body["author"],
                    created_at=body["createdAt"],
                )
            )

    def persist(self, data_dir: str | Path) -> Path:
        """Write both journals and all blob payloads under `data_dir`."""
        root = Path(data_dir)
        root.mkdir(parents=True, exist_ok=True)
        (root / "blobs").mkdir(exist_ok=True)
        self._internal.write_to(root / f"{INTERNAL}.journal")
        self._analysisbase.write_to(root / f"{ANALYSIS_BASE}.journal")
        for record in self._analysisbase.records:
            if record["kind"] == "outcome" and "blobRef" in record["body"]:
                oid = record["body"]["blobRef"]
                blob = root / "blobs" / oid
                if not blob.exists() and oid in self._payloads:
                    blob.write_bytes(self._payloads[oid])
        return root

    @classmethod
    def load(
        cls,
        data_dir: str | Path,
        clock: Clock | None = None,
        tolerate_corruption: bool = False,
    ) -> "ProvenanceStore":
        """Rebuild a store from journals, verifying every digest on the way in."""
        store = cls.__new__(cls)
        store.clock = clock or SystemClock()
        store.blob_threshold = DEFAULT_BLOB_THRESHOLD
        store.corruption = []
        store._dir = Path(data_dir)
        store._write_through = False
        store._payloads = {}
        store._instances = {}
        store._open_bodies = {}
        store._event_bodies = {}
        store._outcomes = {}
        store._outcome_by_producer = {}
        store._datasets = {}
        store._analyses = {}
        store._annotations = []
        store._internal = _Journal(INTERNAL)
        store._analysisbase = _Journal(ANALYSIS_BASE)
        store.registry = DescriptionRegistry(
            clock=store.clock, on_publish=lambda doc: store._internal.append("description", doc)
        )
        for name in (INTERNAL, ANALYSIS_BASE):
            path = store._dir / f"{name}.journal"
            data = path.read_bytes() if path.exists() else b""
            store._replay_journal(name, data, tolerate_corruption)
        return store

    def close(self) -> None:
        self._internal.close()
        self._analysisbase.close()

    def verify(self) -> dict:
        """Walk both hash chains; the audit entry point."""
        return {INTERNAL: self._internal.verify(), ANALYSIS_BASE: self._analysisbase.verify()}

    def journal_heads(self) -> dict[str, int]:
        """Seq of the newest record per journal, -1 while empty."""
        return {
            INTERNAL: len(self._internal.records) - 1,
            ANALYSIS_BASE: len(self._analysisbase.records) - 1,
        }

    # --- descriptions ------------------------------------------------------

    def define(self, content: WorkflowDescription) -> tuple[str, int]:
        return self.registry.define(content)

    def revise(self, name: str, content: WorkflowDescription) -> tuple[str, int]:
        return self.registry.revise(name, content)

    def description(self, name: str, version: int | None = None) -> WorkflowDescription:
        return self.registry.get(name, version)

    # --- instances and events ----------------------------------------------

    def open_instance(
        self, description_name: str, version: int, inputs: dict[str, str] | None = None
    ) -> WorkflowInstance:
        desc = self.registry.get(description_name, version)  # NotFound if absent
        instance_id = f"inst-{len(self._instances) + 1:06d}"
        body = {
            "instanceId": instance_id,
            "descriptionName": description_name,
            "descriptionVersion": desc.version,
            "submittedAt": self.clock.now_ms(),
            "inputs": dict(inputs or {}),
            "seq": 0,
        }
        self._internal.append("instance", body)
        self._instances[instance_id] = _InstanceState(body, desc.activity_names())
        self._open_bodies[instance_id] = body
        self._event_bodies[instance_id] = []
        return self._instances[instance_id].snapshot()

    def _live(self, instance_id: str) -> _InstanceState:
        st = self._instances.get(instance_id)
        if st is None:
            raise NotFound(f"instance {instance_id!r} does not exist")
        return st

    def append_event(
        self,
        instance_id: str,
        task_name: str,
        from_state: str,
        to_state: str,
        sim_timestamp: int,
        outcome: OutcomeDraft | None = None,
        final: bool = False,
        seq: int | None = None,
    ) -> int:
        """Validate, journal, then apply. Returns the assigned event seq."""
        st = self._live(instance_id)
        if st.status != OPEN:
            raise InstanceClosed(f"instance {instance_id} is {st.status}")
        if task_name not in st.states:
            raise UnknownActivity(f"{task_name!r} is not an activity of {st.description_name}")
        current = st.states[task_name]
        if from_state != current:
            raise IllegalTransition(from_state, to_state, f"activity is {current}")
        if current == FAILED and task_name in st.final_failed:
            raise IllegalTransition(from_state, to_state, "activity failed permanently")
        if (from_state, to_state) not in _LEGAL:
            raise IllegalTransition(from_state, to_state)
        expected = st.last_seq + 1
        if seq is not None and seq != expected:
            raise SequenceGap(expected, seq)
        self._check_outcome_discipline(to_state, final, outcome)
        outcome_id = None
        if outcome is not None:
            outcome_id = self._append_outcome(outcome, (instance_id, task_name, expected))
        event = ActivityEvent(
            instance_id=instance_id,
            task_name=task_name,
            seq=expected,
            from_state=from_state,
            to_state=to_state,
            sim_timestamp=sim_timestamp,
            final=final if to_state == FAILED else False,
            outcome_id=outcome_id,
        )
        body = event.to_jsonable()
        self._internal.append("event", body)
        st.apply(body)
        self._event_bodies[instance_id].append(body)
        return expected

    @staticmethod
    def _check_outcome_discipline(to_state: str, final: bool, outcome: OutcomeDraft | None) -> None:
        if to_state == COMPLETED:
            if outcome is None or outcome.kind != DATA:
                raise OutcomeError("a COMPLETED event requires exactly one DATA outcome")
        elif to_state == FAILED:
            if final and outcome is None:
                raise OutcomeError("a permanent FAILED event requires an ERROR_LOG outcome")
            if outcome is not None and outcome.kind != ERROR_LOG:
                raise OutcomeError("a FAILED event may only carry an ERROR_LOG outcome")
        else:
            if outcome is not None and outcome.kind != STATUS:
                raise OutcomeError(f"a {to_state} event may only carry a STATUS outcome")

    def _append_outcome(self, draft: OutcomeDraft, producer: tuple[str, str, int]) -> str:
        if draft.kind not in (DATA, ERROR_LOG, STATUS):
            raise OutcomeError(f"unknown outcome kind {draft.kind!r}")
        size = draft.declared_size()
        if size < 0:
            raise OutcomeError("sizeBytes must be >= 0")
        outcome_id = canonical.digest(draft.payload)
        body = {
            "outcomeId": outcome_id,
            "kind": draft.kind,
            "sizeBytes": size,
            "producer": {"instanceId": producer[0], "taskName": producer[1], "seq": producer[2]},
        }
        if outcome_id not in self._payloads:
            # first sighting carries the bytes; later sightings deduplicate
            if len(draft.payload) > self.blob_threshold:
                body["blobRef"] = outcome_id
                if self._write_through and self._dir is not None:
                    (self._dir / "blobs" / outcome_id).write_bytes(draft.payload)
            else:
                body["payloadB64"] = base64.b64encode(draft.payload).decode("ascii")
            self._payloads[outcome_id] = draft.payload
        self._analysisbase.append("outcome", body)
        record = Outcome(outcome_id, draft.kind, size, producer)
        self._outcomes.setdefault(outcome_id, record)
        self._outcome_by_producer[producer] = record
        return outcome_id

    def instance(self, instance_id: str) -> WorkflowInstance:
        return self._live(instance_id).snapshot()

    def instances(self, status: str | None = None) -> list[WorkflowInstance]:
        snaps = [self._instances[iid].snapshot() for iid in sorted(self._instances)]
        return [s for s in snaps if status is None or s.status == status]

    def replay(self, instance_id: str, up_to_seq: int | None = None) -> WorkflowInstance:
        """Fold the instance's journaled bodies (never live state) back into a
        snapshot. The per-instance index is written only where journal records
        are admitted, so folding it is folding the journal."""
        body = self._open_bodies.get(instance_id)
        if body is None:
            raise NotFound(f"instance {instance_id!r} does not exist")
        desc = self.registry.get(body["descriptionName"], body["descriptionVersion"])
        opened = _InstanceState(body, desc.activity_names())
        for event_body in self._event_bodies[instance_id]:
            if up_to_seq is None or event_body["seq"] <= up_to_seq:
                opened.apply(event_body)
        return opened.snapshot()

    def events(self, instance_id: str, up_to_seq: int | None = None) -> list[ActivityEvent]:
        self._live(instance_id)
        return [
            ActivityEvent.from_jsonable(body)
            for body in self._event_bodies[instance_id]
            if up_to_seq is None or body["seq"] <= up_to_seq
        ]

    # --- outcomes ------------------------------------------------------------

    def outcome(self, outcome_id: str) -> Outcome:
        o = self._outcomes.get(outcome_id)
        if o is None:
            raise NotFound(f"outcome {outcome_id!r} does not exist")
        return o

    def produced_outcome(self, instance_id: str, task_name: str, seq: int) -> Outcome | None:
        """The outcome record a specific event produced, if any; unlike
        `outcome`, this keeps per-producer metadata after deduplication."""
        return self._outcome_by_producer.get((instance_id, task_name, seq))

    def payload(self, outcome_id: str) -> bytes:
        self.outcome(outcome_id)
        data = self._payloads.get(outcome_id)
        if data is None and self._dir is not None:
            blob = self._dir / "blobs" / outcome_id
            if blob.exists():
                data = blob.read_bytes()
                self._payloads[outcome_id] = data
        if data is None:
            raise OutcomeError(f"payload for {outcome_id} is not available")
        return data

    def outcomes_for(self, instance_id: str, task_name: str | None = None) -> list[tuple[ActivityEvent, Outcome]]:
        """Event/outcome pairs for one instance, in seq order."""
        st = self._live(instance_id)
        if task_name is not None and task_name not in st.states:
            raise UnknownActivity(f"{task_name!r} is not an activity of {st.description_name}")
        pairs = []
        for event in self.events(instance_id):
            if event.outcome_id is None:
                continue
            if task_name is not None and event.task_name != task_name:
                continue
            produced = self._outcome_by_producer.get(
                (instance_id, event.task_name, event.seq), self._outcomes[event.outcome_id]
            )
            pairs.append((event, produced))
        return pairs

    # --- analysis base --------------------------------------------------------

    def register_dataset(
        self, members: list[tuple[str, int, dict]], source: str
    ) -> DatasetRecord:
        if not members:
            raise SchemaError("a dataset needs at least one member")
        seen = set()
        for scan_id, size, _ in members:
            if size <= 0:
                raise SchemaError(f"member {scan_id!r} has non-positive sizeBytes")
            if scan_id in seen:
                raise SchemaError(f"member {scan_id!r} registered twice")
            seen.add(scan_id)
        rec = DatasetRecord(
            dataset_id=f"ds-{len(self._datasets) + 1:04d}",
            members=tuple((sid, size, tuple(sorted((meta or {}).items()))) for sid, size, meta in members),
            source=source,
            registered_at=self.clock.now_ms(),
        )
        self._analysisbase.append("dataset", rec.to_jsonable())
        self._datasets[rec.dataset_id] = rec
        return rec

    def dataset(self, dataset_id: str) -> DatasetRecord:
        rec = self._datasets.get(dataset_id)
        if rec is None:
            raise NotFound(f"dataset {dataset_id!r} does not exist")
        return rec

    def record_analysis(
        self,
        title: str,
        dataset_id: str,
        description_name: str,
        description_version: int,
        instance_ids: list[str] = (),
        author: str = "",
        annotations: list[tuple[str, str]] = (),
        final_outcome_ids: list[str] = (),
    ) -> AnalysisRecord:
        self.dataset(dataset_id)
        self.registry.get(description_name, description_version)
        for iid in instance_ids:
            snap = self._live(iid)
            if (snap.description_name, snap.description_version) != (description_name, description_version):
                raise SchemaError(
                    f"instance {iid} is pinned to {snap.description_name}@{snap.description_version},"
                    f" not {description_name}@{description_version}"
                )
        for oid in final_outcome_ids:
            self.outcome(oid)
        rec = AnalysisRecord(
            analysis_id=f"an-{len(self._analyses) + 1:04d}",
            title=title,
            dataset_id=dataset_id,
            description_name=description_name,
            description_version=description_version,
            instance_ids=tuple(instance_ids),
            author=author,
            annotations=tuple((str(k), str(t)) for k, t in annotations),
            final_outcome_ids=tuple(final_outcome_ids),
            created_at=self.clock.now_ms(),
        )
        self._analysisbase.append("analysis", rec.to_jsonable())
        self._analyses[rec.analysis_id] = rec
        return rec

    def analysis(self, analysis_id: str) -> AnalysisRecord:
        rec = self._analyses.get(analysis_id)
        if rec is None:
            raise NotFound(f"analysis {analysis_id!r} does not exist")
        return rec

    def analyses(self) -> list[AnalysisRecord]:
        return sorted(self._analyses.values(), key=lambda a: (a.created_at, a.analysis_id))

    def annotate(self, target: str, key: str, text: str, author: str = "") -> AnnotationRecord:
        self._resolve_target(target)
        rec = AnnotationRecord(
            annotation_id=f"note-{len(self._annotations) + 1:04d}",
            target=target,
            key=key,
            text=text,
            author=author,
            created_at=self.clock.now_ms(),
        )
        self._analysisbase.append("annotation", rec.to_jsonable())
        self._annotations.append(rec)
        return rec

    def annotations(self) -> list[AnnotationRecord]:
        return list(self._annotations)

    def _resolve_target(self, target: str) -> None:
        """Annotation targets: instance, dataset, analysis, outcome, or a
        description as `name` / `name@version`."""
        if target in self._instances or target in self._datasets or target in self._analyses:
            return
        if target in self._outcomes:
            return
        name, sep, version = target.partition("@")
        if sep:
            try:
                self.registry.get(name, int(version))
                return
            except (ValueError, NotFound):
                raise NotFound(f"annotation target {target!r} does not resolve")
        if name in self.registry.names():
            return
        raise NotFound(f"annotation target {target!r} does not resolve")
