"""Shared builders for the test suite."""
from __future__ import annotations

import pytest

from tracegrid.descriptions import ActivityDescription, Annotation, WorkflowDescription


def act(name: str, executable: str | None = None, priority: int = 0, env: dict | None = None,
        inputs=("in",), outputs=("out",)) -> ActivityDescription:
    return ActivityDescription(
        task_name=name,
        executable=executable or f"/bin/{name}",
        priority=priority,
        input_slots=tuple(inputs),
        output_slots=tuple(outputs),
        environment=tuple(sorted((env or {}).items())),
    )


def wf(name: str, activities, edges, annotations=(), extra=None) -> WorkflowDescription:
    return WorkflowDescription.create(name, activities, edges, annotations, extra=extra)


@pytest.fixture
def diamond() -> WorkflowDescription:
    """A fan-out/fan-in shape: A feeds B and C, both feed D.

    B outranks C, so the deterministic order is A, B, C, D.
    """
    return wf(
        "diamond",
        [act("A"), act("B", priority=5), act("C", priority=1), act("D")],
        [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
    )


@pytest.fixture
def chain3() -> WorkflowDescription:
    return wf(
        "chain3",
        [act("ingest"), act("transform"), act("publish")],
        [("ingest", "transform"), ("transform", "publish")],
        annotations=[Annotation("transform", "note", "normalizes intensity", author="mw")],
    )
