"""Pipeline document translation.

External authoring tools hand over a JSON document (`pipelineName`, `tasks[]`
with `dependsOn` lists). Translation runs in two distinct passes: the first
mines an info table about every declared task, the second constructs the
workflow description from that table plus the dependency edges. Unrecognized
fields are kept in the description's `extra` map instead of being dropped.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .descriptions import Annotation, WorkflowDescription, ActivityDescription
from .errors import DuplicateTask, ParseError, SchemaError, UnknownDependency
from .graph import validate_or_raise

_TASK_FIELDS = {"taskName", "executable", "priority", "inputs", "outputs", "env", "dependsOn"}
_DOC_FIELDS = {"pipelineName", "tasks", "annotations"}


@dataclass(frozen=True)
class TaskDecl:
    task_name: str
    executable: str
    priority: int = 0
    inputs: tuple[str, ...] = ("in",)
    outputs: tuple[str, ...] = ("out",)
    env: tuple[tuple[str, str], ...] = ()
    depends_on: tuple[str, ...] = ()
    extra: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class PipelineDocument:
    pipeline_name: str
    tasks: tuple[TaskDecl, ...]
    annotations: tuple[Annotation, ...] = ()
    extra: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class ActivityInfo:
    executable: str
    priority: int
    input_slots: tuple[str, ...]
    output_slots: tuple[str, ...]
    environment: tuple[tuple[str, str], ...]


def _want(obj: dict, key: str, kind, where: str, default=None, required: bool = False):
    if key not in obj:
        if required:
            raise SchemaError(f"{where}.{key}" if where else key)
        return default
    v = obj[key]
    if kind is int and isinstance(v, bool) or not isinstance(v, kind):
        raise SchemaError(f"{where}.{key}" if where else key)
    return v


def _str_list(obj: dict, key: str, where: str, default: tuple[str, ...]) -> tuple[str, ...]:
    v = _want(obj, key, list, where)
    if v is None:
        return default
    if not all(isinstance(x, str) for x in v):
        raise SchemaError(f"{where}.{key}")
    return tuple(v)


def parse_document(data: bytes | str) -> PipelineDocument:
    """Parse and schema-check a pipeline document; errors carry a locus."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object")
    name = _want(doc, "pipelineName", str, "", required=True)
    if not name:
        raise SchemaError("pipelineName")
    raw_tasks = _want(doc, "tasks", list, "", required=True)
    tasks = []
    for i, t in enumerate(raw_tasks):
        where = f"tasks[{i}]"
        if not isinstance(t, dict):
            raise SchemaError(where)
        task_name = _want(t, "taskName", str, where, required=True)
        if not task_name:
            raise SchemaError(f"{where}.taskName")
        executable = _want(t, "executable", str, where, required=True)
        if not executable:
            raise SchemaError(f"{where}.executable")
        env = _want(t, "env", dict, where, default={})
        if not all(isinstance(k, str) and isinstance(v, str) for k, v in env.items()):
            raise SchemaError(f"{where}.env")
        tasks.append(
            TaskDecl(
                task_name=task_name,
                executable=executable,
                priority=_want(t, "priority", int, where, default=0),
                inputs=_str_list(t, "inputs", where, ("in",)),
                outputs=_str_list(t, "outputs", where, ("out",)),
                env=tuple(sorted(env.items())),
                depends_on=_str_list(t, "dependsOn", where, ()),
                extra=tuple(sorted((k, v) for k, v in t.items() if k not in _TASK_FIELDS)),
            )
        )
    annotations = []
    for i, a in enumerate(doc.get("annotations") or []):
        where = f"annotations[{i}]"
        if not isinstance(a, dict):
            raise SchemaError(where)
        annotations.append(
            Annotation(
                target=_want(a, "target", str, where, default="WORKFLOW"),
                key=_want(a, "key", str, where, required=True),
                text=_want(a, "text", str, where, default=""),
                author=_want(a, "author", str, where, default=""),
            )
        )
    return PipelineDocument(
        pipeline_name=name,
        tasks=tuple(tasks),
        annotations=tuple(annotations),
        extra=tuple(sorted((k, v) for k, v in doc.items() if k not in _DOC_FIELDS)),
    )


def translate(doc: PipelineDocument) -> WorkflowDescription:
    """Two passes: mine the per-task info table, then build the description."""
    # pass 1: mine attributes for every declared task
    table: dict[str, ActivityInfo] = {}
    for t in doc.tasks:
        if t.task_name in table:
            raise DuplicateTask(t.task_name)
        table[t.task_name] = ActivityInfo(
            executable=t.executable,
            priority=t.priority,
            input_slots=t.inputs,
            output_slots=t.outputs,
            environment=t.env,
        )

    # pass 2: construct the description from the mined table
    activities = [
        ActivityDescription(
            task_name=name,
            executable=info.executable,
            priority=info.priority,
            input_slots=info.input_slots,
            output_slots=info.output_slots,
            environment=info.environment,
        )
        for name, info in table.items()
    ]
    edges: set[tuple[str, str]] = set()
    for t in doc.tasks:
        for dep in t.depends_on:
            if dep not in table:
                raise UnknownDependency(dep)
            edges.add((dep, t.task_name))
    extra: dict[str, object] = {}
    if doc.extra:
        extra["pipeline"] = dict(doc.extra)
    task_extra = {t.task_name: dict(t.extra) for t in doc.tasks if t.extra}
    if task_extra:
        extra["tasks"] = task_extra
    desc = WorkflowDescription.create(
        name=doc.pipeline_name,
        activities=activities,
        edges=edges,
        annotations=doc.annotations,
        extra=extra,
    )
    validate_or_raise(desc)
    return desc


def translate_bytes(data: bytes | str) -> WorkflowDescription:
    return translate(parse_document(data))
