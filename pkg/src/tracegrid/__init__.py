"""Traceability engine for versioned workflow definitions.

The pieces, in dependency order: immutable descriptions and their registry,
a pipeline-document translator, a hash-chained provenance store, a
deterministic grid simulator, the query layer, after-the-fact audits, and an
HTTP front door. The CLI (`tracegrid`) drives all of it.
"""
from .descriptions import ActivityDescription, Annotation, WorkflowDescription
from .graph import SpecDiff, diff, topological_order, validate
from .queries import QueryEngine
from .registry import DescriptionRegistry
from .simulator import ExecutionPlan, SimReport, SimulationConfig, enact, plan
from .store import Outcome, OutcomeDraft, ProvenanceStore, WorkflowInstance

__all__ = [
    "ActivityDescription",
    "Annotation",
    "DescriptionRegistry",
    "ExecutionPlan",
    "Outcome",
    "OutcomeDraft",
    "ProvenanceStore",
    "QueryEngine",
    "SimReport",
    "SimulationConfig",
    "SpecDiff",
    "WorkflowDescription",
    "WorkflowInstance",
    "diff",
    "enact",
    "plan",
    "topological_order",
    "validate",
]
