"""Workflow description meta-model: immutable, versioned activity graphs.

A description is a pure value. Construction normalizes ordering (activities by
name, edges and annotations sorted) so that structural equality and canonical
byte equality coincide. Version and createdAt are assigned by the registry;
an unpublished description carries version 0 / createdAt 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import canonical

WORKFLOW_TARGET = "WORKFLOW"


@dataclass(frozen=True)
class ActivityDescription:
    task_name: str
    executable: str
    priority: int = 0
    input_slots: tuple[str, ...] = ("in",)
    output_slots: tuple[str, ...] = ("out",)
    environment: tuple[tuple[str, str], ...] = ()

    # per-field comparison granularity used by the structural diff
    COMPARED_FIELDS = ("executable", "priority", "input_slots", "output_slots", "environment")

    def to_jsonable(self) -> dict:
        return {
            "taskName": self.task_name,
            "executable": self.executable,
            "priority": self.priority,
            "inputSlots": list(self.input_slots),
            "outputSlots": list(self.output_slots),
            "environment": dict(self.environment),
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "ActivityDescription":
        return cls(
            task_name=d["taskName"],
            executable=d["executable"],
            priority=int(d.get("priority", 0)),
            input_slots=tuple(d.get("inputSlots", ["in"])),
            output_slots=tuple(d.get("outputSlots", ["out"])),
            environment=tuple(sorted((str(k), str(v)) for k, v in d.get("environment", {}).items())),
        )


@dataclass(frozen=True)
class Annotation:
    target: str  # WORKFLOW_TARGET or an activity taskName
    key: str
    text: str
    author: str = ""
    created_at: int = 0

    def content_key(self) -> tuple[str, str, str]:
        """Identity used by the diff: author and createdAt are metadata."""
        return (self.target, self.key, self.text)

    def to_jsonable(self) -> dict:
        return {
            "target": self.target,
            "key": self.key,
            "text": self.text,
            "author": self.author,
            "createdAt": self.created_at,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "Annotation":
        return cls(
            target=d.get("target", WORKFLOW_TARGET),
            key=d["key"],
            text=d.get("text", ""),
            author=d.get("author", ""),
            created_at=int(d.get("createdAt", 0)),
        )


@dataclass(frozen=True)
class WorkflowDescription:
    name: str
    activities: tuple[ActivityDescription, ...]
    edges: tuple[tuple[str, str], ...]
    annotations: tuple[Annotation, ...] = ()
    version: int = 0
    created_at: int = 0
    extra: tuple[tuple[str, object], ...] = field(default=())

    @classmethod
    def create(
        cls,
        name: str,
        activities,
        edges,
        annotations=(),
        version: int = 0,
        created_at: int = 0,
        extra: dict | None = None,
    ) -> "WorkflowDescription":
        """Normalized constructor: sorts members so equal content is equal bytes."""
        acts = tuple(
            sorted(
                (replace(a, environment=tuple(sorted(a.environment))) for a in activities),
                key=lambda a: a.task_name,
            )
        )
        edgs = tuple(sorted((str(f), str(t)) for f, t in edges))
        anns = tuple(
            sorted(annotations, key=lambda a: (a.target, a.key, a.text, a.author, a.created_at))
        )
        xtra = tuple(sorted((extra or {}).items()))
        return cls(name, acts, edgs, anns, version, created_at, xtra)

    def activity(self, task_name: str) -> ActivityDescription:
        for a in self.activities:
            if a.task_name == task_name:
                return a
        raise KeyError(task_name)

    def activity_names(self) -> list[str]:
        return [a.task_name for a in self.activities]

    def predecessors(self, task_name: str) -> list[str]:
        return sorted(f for f, t in self.edges if t == task_name)

    def successors(self, task_name: str) -> list[str]:
        return sorted(t for f, t in self.edges if f == task_name)

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "createdAt": self.created_at,
            "activities": [a.to_jsonable() for a in self.activities],
            "edges": [list(e) for e in self.edges],
            "annotations": [a.to_jsonable() for a in self.annotations],
            "extra": dict(self.extra),
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "WorkflowDescription":
        return cls.create(
            name=d["name"],
            activities=[ActivityDescription.from_jsonable(a) for a in d.get("activities", [])],
            edges=[(e[0], e[1]) for e in d.get("edges", [])],
            annotations=[Annotation.from_jsonable(a) for a in d.get("annotations", [])],
            version=int(d.get("version", 0)),
            created_at=int(d.get("createdAt", 0)),
            extra=d.get("extra") or {},
        )

    def serialize(self) -> bytes:
        return canonical.dumps(self.to_jsonable())

    def published(self, version: int, created_at: int) -> "WorkflowDescription":
        return replace(self, version=version, created_at=created_at)
