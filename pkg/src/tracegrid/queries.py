"""Query layer: the researcher-facing questions answered from provenance.

Everything here is read-only over the store. Result orderings are fully
specified (documented per operation) so rendered output is stable enough for
golden-file comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import canonical, graph
from .errors import InstanceStillOpen, NotFound
from .store import (
    COMPLETED,
    DATA,
    FAILED,
    OPEN,
    ActivityEvent,
    AnalysisRecord,
    AnnotationRecord,
    Outcome,
    ProvenanceStore,
    WorkflowInstance,
)

MATCH = "MATCH"
MISMATCH = "MISMATCH"
MISSING = "MISSING"
PASS = "PASS"
FAIL = "FAIL"


@dataclass(frozen=True)
class Reconstruction:
    """A past run, rebuilt: the exact description version it was pinned to,
    the event history (optionally truncated), and the state derived from it."""

    instance: WorkflowInstance
    description_jsonable: dict
    events: tuple[ActivityEvent, ...]

    def to_jsonable(self) -> dict:
        return {
            "instance": self.instance.to_jsonable(),
            "description": self.description_jsonable,
            "events": [e.to_jsonable() for e in self.events],
        }


@dataclass(frozen=True)
class SpecValidation:
    verdict: str  # PASS | FAIL
    diff: graph.SpecDiff
    candidate: tuple[str, int]
    reference: tuple[str, int]

    def to_jsonable(self) -> dict:
        return {
            "verdict": self.verdict,
            "candidate": {"name": self.candidate[0], "version": self.candidate[1]},
            "reference": {"name": self.reference[0], "version": self.reference[1]},
            "diff": self.diff.to_jsonable(),
        }


@dataclass(frozen=True)
class ValidationReport:
    instance_id: str
    per_activity: tuple[tuple[str, str], ...]  # taskName -> MATCH/MISMATCH/MISSING
    verdict: str

    def to_jsonable(self) -> dict:
        return {
            "instanceId": self.instance_id,
            "perActivity": dict(self.per_activity),
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class ComparisonReport:
    analysis_a: str
    analysis_b: str
    comparable: bool
    version_delta: graph.SpecDiff
    outcome_deltas: tuple[tuple[str, str, str], ...]  # (taskName, digestA, digestB)
    makespan_a: int
    makespan_b: int
    errors_a: int
    errors_b: int

    def to_jsonable(self) -> dict:
        return {
            "analysisA": self.analysis_a,
            "analysisB": self.analysis_b,
            "comparable": self.comparable,
            "versionDelta": self.version_delta.to_jsonable(),
            "outcomeDeltas": [
                {"taskName": t, "digestA": a, "digestB": b} for t, a, b in self.outcome_deltas
            ],
            "durationStats": {"makespanMsA": self.makespan_a, "makespanMsB": self.makespan_b},
            "errorCounts": {"failedEventsA": self.errors_a, "failedEventsB": self.errors_b},
        }


class QueryEngine:
    def __init__(self, store: ProvenanceStore):
        self.store = store

    # i. reconstruct a past workflow (or a prefix of it)
    def reconstruct(self, instance_id: str, up_to_seq: int | None = None) -> Reconstruction:
        snapshot = self.store.replay(instance_id, up_to_seq)
        data = self.store.registry.serialized(snapshot.description_name, snapshot.description_version)
        return Reconstruction(
            instance=snapshot,
            description_jsonable=canonical.loads(data),
            events=tuple(self.store.events(instance_id, up_to_seq)),
        )

    # ii. validate one description against a reference description
    def validate_spec(
        self,
        candidate: tuple[str, int | None],
        reference: tuple[str, int | None],
        ignore_annotations: bool = False,
    ) -> SpecValidation:
        cand = self.store.registry.get(candidate[0], candidate[1])
        ref = self.store.registry.get(reference[0], reference[1])
        d = graph.diff(cand, ref)
        verdict = PASS if d.is_empty(ignore_annotations=ignore_annotations) else FAIL
        return SpecValidation(
            verdict=verdict,
            diff=d,
            candidate=(cand.name, cand.version),
            reference=(ref.name, ref.version),
        )

    # iii. intermediary results of one run, in event order
    def intermediary_results(
        self, instance_id: str, task_name: str | None = None
    ) -> list[tuple[ActivityEvent, Outcome]]:
        return self.store.outcomes_for(instance_id, task_name)

    # iv. validate results against a reference digest map ("gold standard")
    def validate_results(self, instance_id: str, reference: dict[str, str]) -> ValidationReport:
        """PASS iff every produced digest MATCHes and no referenced activity of
        the run is left without production. Reference keys that are not
        activities of the pinned description are ignored."""
        snapshot = self.store.instance(instance_id)
        if snapshot.status == OPEN:
            raise InstanceStillOpen(f"instance {instance_id} has not terminated")
        produced = self.data_digests(instance_id)
        rows = []
        for task in sorted(produced):
            if task not in reference:
                rows.append((task, MISSING))
            elif reference[task] == produced[task]:
                rows.append((task, MATCH))
            else:
                rows.append((task, MISMATCH))
        declared = {name for name, _ in snapshot.activity_states}
        unmet = [t for t in reference if t in declared and t not in produced]
        verdict = PASS if all(state == MATCH for _, state in rows) and not unmet else FAIL
        return ValidationReport(instance_id=instance_id, per_activity=tuple(rows), verdict=verdict)

    def data_digests(self, instance_id: str) -> dict[str, str]:
        """taskName -> digest of its (last) DATA outcome."""
        out: dict[str, str] = {}
        for event, outcome in self.store.outcomes_for(instance_id):
            if outcome.kind == DATA:
                out[event.task_name] = outcome.outcome_id
        return out

    # v. query past analyses
    def query_analyses(
        self,
        author: str | None = None,
        description_name: str | None = None,
        dataset_id: str | None = None,
        time_range: tuple[int | None, int | None] | None = None,
        status: str | None = None,
    ) -> list[dict]:
        """Conjunctive filter; rows ordered by (createdAt, analysisId). Each row
        is the analysis jsonable plus a derived `status`."""
        rows = []
        for rec in self.store.analyses():
            if author is not None and rec.author != author:
                continue
            if description_name is not None and rec.description_name != description_name:
                continue
            if dataset_id is not None and rec.dataset_id != dataset_id:
                continue
            if time_range is not None:
                lo, hi = time_range
                if lo is not None and rec.created_at < lo:
                    continue
                if hi is not None and rec.created_at > hi:
                    continue
            derived = self.analysis_status(rec)
            if status is not None and derived != status:
                continue
            rows.append({**rec.to_jsonable(), "status": derived})
        return rows

    def analysis_status(self, rec: AnalysisRecord) -> str:
        """PLANNED without instances; else OPEN/FAILED/COMPLETED over them."""
        if not rec.instance_ids:
            return "PLANNED"
        states = [self.store.instance(i).status for i in rec.instance_ids]
        if any(s == OPEN for s in states):
            return OPEN
        if any(s == FAILED for s in states):
            return FAILED
        return COMPLETED

    # vi. compare two analyses
    def compare_analyses(self, id_a: str, id_b: str) -> ComparisonReport:
        a = self.store.analysis(id_a)
        b = self.store.analysis(id_b)
        desc_a = self.store.registry.get(a.description_name, a.description_version)
        desc_b = self.store.registry.get(b.description_name, b.description_version)
        delta = graph.diff(desc_b, desc_a)  # what changed going from A's pipeline to B's
        digests_a = self._analysis_digests(a)
        digests_b = self._analysis_digests(b)
        shared = sorted(set(digests_a) & set(digests_b))
        comparable = a.description_name == b.description_name and bool(
            set(desc_a.activity_names()) & set(desc_b.activity_names())
        )
        deltas = tuple(
            (t, digests_a[t], digests_b[t]) for t in shared if digests_a[t] != digests_b[t]
        ) if comparable else ()
        return ComparisonReport(
            analysis_a=id_a,
            analysis_b=id_b,
            comparable=comparable,
            version_delta=delta,
            outcome_deltas=deltas,
            makespan_a=self._analysis_makespan(a),
            makespan_b=self._analysis_makespan(b),
            errors_a=self._failed_events(a),
            errors_b=self._failed_events(b),
        )

    def _analysis_digests(self, rec: AnalysisRecord) -> dict[str, str]:
        """Per-task digests over the analysis's instances, last instance wins."""
        out: dict[str, str] = {}
        for iid in rec.instance_ids:
            out.update(self.data_digests(iid))
        return out

    def _analysis_makespan(self, rec: AnalysisRecord) -> int:
        times = [
            e.sim_timestamp for iid in rec.instance_ids for e in self.store.events(iid)
        ]
        return max(times) - min(times) if times else 0

    def _failed_events(self, rec: AnalysisRecord) -> int:
        return sum(
            1
            for iid in rec.instance_ids
            for e in self.store.events(iid)
            if e.to_state == FAILED
        )

    # vii. search annotations
    def search_annotations(
        self,
        key_exact: str | None = None,
        text_substring: str | None = None,
        target: str | None = None,
    ) -> list[AnnotationRecord]:
        """Exact key, case-insensitive substring on text, exact target; rows
        ordered oldest first (createdAt, annotationId)."""
        needle = text_substring.lower() if text_substring is not None else None
        hits = [
            a
            for a in self.store.annotations()
            if (key_exact is None or a.key == key_exact)
            and (needle is None or needle in a.text.lower())
            and (target is None or a.target == target)
        ]
        return sorted(hits, key=lambda a: (a.created_at, a.annotation_id))
