"""Structural checks and algebra over workflow description graphs.

Everything here is deterministic: cycle reports always start from the
lexicographically smallest task on any cycle, and the execution order breaks
ties by (priority descending, task name ascending).
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from .descriptions import (
    WORKFLOW_TARGET,
    ActivityDescription,
    Annotation,
    WorkflowDescription,
)
from .errors import CycleError, DanglingEdge, DuplicateTask, SchemaError


@dataclass(frozen=True)
class Violation:
    kind: str  # "duplicate-task" | "dangling-edge" | "cycle" | "bad-task" | "bad-annotation"
    detail: str
    nodes: tuple[str, ...] = ()

    def to_jsonable(self) -> dict:
        return {"kind": self.kind, "detail": self.detail, "nodes": list(self.nodes)}


@dataclass(frozen=True)
class ValidationOutcome:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_jsonable(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_jsonable() for v in self.violations]}


def _adjacency(desc: WorkflowDescription) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {a.task_name: [] for a in desc.activities}
    for f, t in desc.edges:
        if f in adj and t in adj:
            adj[f].append(t)
    for outs in adj.values():
        outs.sort()
    return adj


def _smallest_cycle(desc: WorkflowDescription) -> list[str] | None:
    """Return a cycle as a node list starting at the lexicographically
    smallest task that lies on any cycle, or None for acyclic graphs.

    BFS from each candidate start back to itself; neighbor expansion in
    sorted order keeps the reconstruction deterministic.
    """
    adj = _adjacency(desc)
    for start in sorted(adj):
        parent: dict[str, str] = {}
        q = deque(adj[start])
        for n in adj[start]:
            parent.setdefault(n, start)
        seen = set(adj[start])
        found = start in seen
        while q and not found:
            node = q.popleft()
            for nxt in adj[node]:
                if nxt == start:
                    parent[start] = node
                    found = True
                    break
                if nxt not in seen:
                    seen.add(nxt)
                    parent[nxt] = node
                    q.append(nxt)
        if not found:
            continue
        # walk parents from start back to start; the walk visits the cycle
        # against edge direction, so reverse the tail
        back = []
        node = parent[start]
        while node != start:
            back.append(node)
            node = parent[node]
        return [start] + back[::-1]
    return None


def validate(desc: WorkflowDescription) -> ValidationOutcome:
    violations: list[Violation] = []
    names: list[str] = []
    dupes: list[str] = []
    for a in desc.activities:
        if a.task_name in names:
            if a.task_name not in dupes:
                dupes.append(a.task_name)
        else:
            names.append(a.task_name)
        if not a.task_name:
            violations.append(Violation("bad-task", "activity with empty taskName"))
    for d in dupes:
        violations.append(Violation("duplicate-task", f"task {d!r} declared more than once", (d,)))
    known = set(names)
    for f, t in desc.edges:
        for end in (f, t):
            if end not in known:
                violations.append(
                    Violation("dangling-edge", f"edge ({f!r}, {t!r}) references unknown task {end!r}", (end,))
                )
    for ann in desc.annotations:
        if ann.target != WORKFLOW_TARGET and ann.target not in known:
            violations.append(
                Violation(
                    "bad-annotation",
                    f"annotation {ann.key!r} targets unknown task {ann.target!r}",
                    (ann.target,),
                )
            )
    if not dupes and not any(v.kind == "dangling-edge" for v in violations):
        cyc = _smallest_cycle(desc)
        if cyc is not None:
            violations.append(Violation("cycle", "dependency cycle: " + " -> ".join(cyc + [cyc[0]]), tuple(cyc)))
    return ValidationOutcome(tuple(violations))


def validate_or_raise(desc: WorkflowDescription) -> None:
    outcome = validate(desc)
    for v in outcome.violations:
        if v.kind == "duplicate-task":
            raise DuplicateTask(v.nodes[0])
        if v.kind == "dangling-edge":
            raise DanglingEdge(v.nodes[0])
        if v.kind == "cycle":
            raise CycleError(list(v.nodes))
        raise SchemaError(v.detail)


def topological_order(desc: WorkflowDescription) -> list[str]:
    """Kahn's algorithm with a deterministic tie-break: among tasks whose
    dependencies are all satisfied, higher priority first, then task name."""
    indeg: dict[str, int] = {a.task_name: 0 for a in desc.activities}
    for f, t in desc.edges:
        if f not in indeg or t not in indeg:
            raise DanglingEdge(f if f not in indeg else t)
        indeg[t] += 1
    adj = _adjacency(desc)
    prio = {a.task_name: a.priority for a in desc.activities}
    heap = [(-prio[n], n) for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        _, node = heapq.heappop(heap)
        order.append(node)
        for nxt in adj[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, (-prio[nxt], nxt))
    if len(order) != len(indeg):
        cyc = _smallest_cycle(desc) or []
        raise CycleError(cyc)
    return order


@dataclass(frozen=True)
class FieldChange:
    field: str
    before: object
    after: object


@dataclass(frozen=True)
class SpecDiff:
    """Structural difference between two descriptions of the same workflow.

    Annotation changes compare content only (target, key, text); author and
    createdAt are metadata and never show up here.
    """

    added_activities: tuple[ActivityDescription, ...] = ()
    removed_activities: tuple[str, ...] = ()
    modified_activities: tuple[tuple[str, tuple[FieldChange, ...]], ...] = ()
    added_edges: tuple[tuple[str, str], ...] = ()
    removed_edges: tuple[tuple[str, str], ...] = ()
    annotation_changes: tuple[tuple[str, str, str, str], ...] = ()  # (op, target, key, text)

    def is_empty(self, ignore_annotations: bool = False) -> bool:
        structural = not (
            self.added_activities
            or self.removed_activities
            or self.modified_activities
            or self.added_edges
            or self.removed_edges
        )
        return structural and (ignore_annotations or not self.annotation_changes)

    def to_jsonable(self) -> dict:
        return {
            "addedActivities": [a.task_name for a in self.added_activities],
            "removedActivities": list(self.removed_activities),
            "modifiedActivities": [
                {
                    "taskName": name,
                    "fields": {
                        c.field: {
                            "from": _render_value(c.field, c.before),
                            "to": _render_value(c.field, c.after),
                        }
                        for c in changes
                    },
                }
                for name, changes in self.modified_activities
            ],
            "addedEdges": [list(e) for e in self.added_edges],
            "removedEdges": [list(e) for e in self.removed_edges],
            "annotationChanges": [
                {"op": op, "target": target, "key": key, "text": text}
                for op, target, key, text in self.annotation_changes
            ],
        }


def _render_value(field_name: str, v: object) -> object:
    if field_name == "environment":
        return dict(v)  # type: ignore[call-overload]
    if isinstance(v, tuple):
        return list(v)
    return v


_FIELD_WIRE = {
    "executable": "executable",
    "priority": "priority",
    "input_slots": "inputSlots",
    "output_slots": "outputSlots",
    "environment": "environment",
}


def diff(candidate: WorkflowDescription, reference: WorkflowDescription) -> SpecDiff:
    """What must change in `reference` to obtain `candidate`."""
    cand = {a.task_name: a for a in candidate.activities}
    ref = {a.task_name: a for a in reference.activities}
    added = tuple(cand[n] for n in sorted(cand.keys() - ref.keys()))
    removed = tuple(sorted(ref.keys() - cand.keys()))
    modified: list[tuple[str, tuple[FieldChange, ...]]] = []
    for name in sorted(cand.keys() & ref.keys()):
        changes = tuple(
            FieldChange(_FIELD_WIRE[f], getattr(ref[name], f), getattr(cand[name], f))
            for f in ActivityDescription.COMPARED_FIELDS
            if getattr(ref[name], f) != getattr(cand[name], f)
        )
        if changes:
            modified.append((name, changes))
    cedges, redges = set(candidate.edges), set(reference.edges)
    cann = _annotation_counts(candidate)
    rann = _annotation_counts(reference)
    ann_changes: list[tuple[str, str, str, str]] = []
    for content in sorted(cann.keys() | rann.keys()):
        delta = cann.get(content, 0) - rann.get(content, 0)
        op = "add" if delta > 0 else "remove"
        ann_changes.extend([(op, *content)] * abs(delta))
    return SpecDiff(
        added_activities=added,
        removed_activities=removed,
        modified_activities=tuple(modified),
        added_edges=tuple(sorted(cedges - redges)),
        removed_edges=tuple(sorted(redges - cedges)),
        annotation_changes=tuple(ann_changes),
    )


def _annotation_counts(desc: WorkflowDescription) -> dict[tuple[str, str, str], int]:
    counts: dict[tuple[str, str, str], int] = {}
    for a in desc.annotations:
        counts[a.content_key()] = counts.get(a.content_key(), 0) + 1
    return counts


_FIELD_ATTR = {wire: attr for attr, wire in _FIELD_WIRE.items()}


def apply_diff(reference: WorkflowDescription, d: SpecDiff) -> WorkflowDescription:
    """Patch `reference` with `d`. Inverse of diff up to annotation metadata:
    diff(apply_diff(ref, diff(cand, ref)), cand).is_empty() holds."""
    acts: dict[str, ActivityDescription] = {a.task_name: a for a in reference.activities}
    for name in d.removed_activities:
        acts.pop(name, None)
    for name, changes in d.modified_activities:
        base = acts[name]
        kwargs = {_FIELD_ATTR[c.field]: _unjsonable_value(c.field, c.after) for c in changes}
        acts[name] = ActivityDescription(
            task_name=name,
            executable=kwargs.get("executable", base.executable),
            priority=kwargs.get("priority", base.priority),
            input_slots=kwargs.get("input_slots", base.input_slots),
            output_slots=kwargs.get("output_slots", base.output_slots),
            environment=kwargs.get("environment", base.environment),
        )
    for a in d.added_activities:
        acts[a.task_name] = a
    edges = (set(reference.edges) - set(d.removed_edges)) | set(d.added_edges)
    anns = list(reference.annotations)
    for op, target, key, text in d.annotation_changes:
        if op == "remove":
            for i, a in enumerate(anns):
                if a.content_key() == (target, key, text):
                    del anns[i]
                    break
        else:
            anns.append(Annotation(target=target, key=key, text=text))
    return WorkflowDescription.create(
        name=reference.name,
        activities=acts.values(),
        edges=edges,
        annotations=anns,
        extra=dict(reference.extra),
    )


def _unjsonable_value(field_name: str, v: object):
    if field_name in ("inputSlots", "outputSlots"):
        return tuple(v)  # type: ignore[arg-type]
    if field_name == "environment":
        if isinstance(v, dict):
            return tuple(sorted((str(k), str(x)) for k, x in v.items()))
        return tuple(tuple(p) for p in v)  # type: ignore[union-attr]
    return v
