"""Deterministic grid stand-in.

`plan` turns submitted instances into a greedy list-scheduling plan; `enact`
runs a discrete-event loop over K simulated workers and streams every state
transition to the provenance sink in timestamp order. Identical
(plan, config) pairs reproduce byte-identical event streams: the only
randomness is a seeded generator for failure injection and optional duration
jitter.

Synthetic DATA payloads are small representative bytes (at most 4 KiB) while
the declared sizeBytes carries the modelled volume; the payload is derived
from the task, its executable, the attempt, and the digests of its
predecessors' payloads, so a change anywhere upstream changes every digest
downstream of it, and untouched branches reproduce exactly.
"""
from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field

from . import canonical
from .descriptions import WorkflowDescription
from .errors import ConfigError, EmptyWorkerPool
from .graph import topological_order
from .registry import DescriptionRegistry
from .store import (
    COMPLETED,
    DATA,
    ERROR_LOG,
    FAILED,
    PENDING,
    RUNNING,
    SCHEDULED,
    SKIPPED,
    OutcomeDraft,
    WorkflowInstance,
)

PAYLOAD_CAP = 4096  # representative payload bytes; declared sizes are separate


@dataclass(frozen=True)
class SimulationConfig:
    workers: int
    duration_model: tuple[tuple[str, int], ...] = ()  # executable -> simulated ms
    default_duration_ms: int = 60_000
    output_multiplier: float = 10.0
    failure_rate: float = 0.0
    retries: int = 0
    seed: int = 0
    jitter_ms: int = 0

    def __post_init__(self):
        if self.workers < 1:
            raise EmptyWorkerPool("workers must be >= 1")
        if self.default_duration_ms <= 0 or any(d <= 0 for _, d in self.duration_model):
            raise ConfigError("durations must be > 0")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ConfigError("failureRate must be within [0, 1]")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")
        if self.jitter_ms < 0:
            raise ConfigError("jitterMs must be >= 0")

    def duration_for(self, executable: str) -> int:
        for name, ms in self.duration_model:
            if name == executable:
                return ms
        return self.default_duration_ms

    def to_jsonable(self) -> dict:
        return {
            "workers": self.workers,
            "durationModel": dict(self.duration_model),
            "defaultDurationMs": self.default_duration_ms,
            "outputMultiplier": self.output_multiplier,
            "failureRate": self.failure_rate,
            "retries": self.retries,
            "seed": self.seed,
            "jitterMs": self.jitter_ms,
        }

    @classmethod
    def from_jsonable(cls, d: dict) -> "SimulationConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be an object")
        try:
            return cls(
                workers=int(d["workers"]),
                duration_model=tuple(sorted((str(k), int(v)) for k, v in (d.get("durationModel") or {}).items())),
                default_duration_ms=int(d.get("defaultDurationMs", 60_000)),
                output_multiplier=float(d.get("outputMultiplier", 10.0)),
                failure_rate=float(d.get("failureRate", 0.0)),
                retries=int(d.get("retries", 0)),
                seed=int(d.get("seed", 0)),
                jitter_ms=int(d.get("jitterMs", 0)),
            )
        except KeyError as e:
            raise ConfigError(f"config is missing {e.args[0]!r}")
        except (TypeError, ValueError) as e:
            raise ConfigError(f"config field has the wrong type: {e}")


@dataclass(frozen=True)
class SimReport:
    """Totals count completed runs only: inputs consumed and outputs produced
    by activities that reached COMPLETED."""

    makespan_ms: int
    jobs_completed: int
    jobs_failed: int  # permanent failures
    jobs_skipped: int
    attempts: int
    total_input_bytes: int
    total_output_bytes: int
    per_worker_busy_ms: tuple[int, ...]

    def to_jsonable(self) -> dict:
        return {
            "makespanMs": self.makespan_ms,
            "jobsCompleted": self.jobs_completed,
            "jobsFailed": self.jobs_failed,
            "jobsSkipped": self.jobs_skipped,
            "attempts": self.attempts,
            "totalInputBytes": self.total_input_bytes,
            "totalOutputBytes": self.total_output_bytes,
            "perWorkerBusyMs": list(self.per_worker_busy_ms),
        }


@dataclass(frozen=True)
class _PlanEntry:
    index: int  # submission order
    instance: WorkflowInstance
    description: WorkflowDescription
    input_bytes: int


@dataclass(frozen=True)
class ExecutionPlan:
    workers: int
    entries: tuple[_PlanEntry, ...]

    def total_activities(self) -> int:
        return sum(len(e.description.activities) for e in self.entries)


def plan(
    registry: DescriptionRegistry,
    instances: list[tuple[WorkflowInstance, int]],
    config: SimulationConfig,
) -> ExecutionPlan:
    """Resolve every instance's pinned description and fix submission order.
    Scheduling decisions themselves happen lazily during `enact`."""
    entries = []
    for i, (inst, input_bytes) in enumerate(instances):
        desc = registry.get(inst.description_name, inst.description_version)
        if input_bytes < 0:
            raise ConfigError(f"inputBytes for {inst.instance_id} must be >= 0")
        entries.append(_PlanEntry(i, inst, desc, input_bytes))
    return ExecutionPlan(workers=config.workers, entries=tuple(entries))


class _Run:
    """Mutable per-activity bookkeeping during one simulation."""

    __slots__ = ("entry", "task", "executable", "priority", "attempts", "state",
                 "unmet", "succs", "preds", "digest", "output_bytes")

    def __init__(self, entry: _PlanEntry, task: str):
        a = entry.description.activity(task)
        self.entry = entry
        self.task = task
        self.executable = a.executable
        self.priority = a.priority
        self.attempts = 0
        self.state = PENDING
        self.preds = entry.description.predecessors(task)
        self.succs = entry.description.successors(task)
        self.unmet = len(self.preds)
        self.digest: str | None = None  # payload digest once COMPLETED
        self.output_bytes = 0


def _representative_payload(material: str, size: int) -> bytes:
    if size <= 0:
        return b""
    block = hashlib.sha256(material.encode("utf-8")).digest()
    reps = (min(size, PAYLOAD_CAP) + len(block) - 1) // len(block)
    return (block * reps)[: min(size, PAYLOAD_CAP)]


def _output_bytes(input_bytes: int, multiplier: float) -> int:
    if float(multiplier).is_integer():
        return input_bytes * int(multiplier)
    return int(input_bytes * multiplier)


def enact(execution_plan: ExecutionPlan, config: SimulationConfig, sink) -> SimReport:
    """Run the discrete-event loop, pushing each transition into `sink`.

    `sink` has the store's append_event signature. A sink exception aborts the
    run and propagates; everything already emitted is valid provenance.
    """
    rng = random.Random(config.seed)
    runs: dict[tuple[int, str], _Run] = {}
    for entry in execution_plan.entries:
        for a in entry.description.activities:
            runs[(entry.index, a.task_name)] = _Run(entry, a.task_name)

    ready: list[tuple[int, int, str]] = []  # (-priority, submission idx, task)
    for (idx, task), run in sorted(runs.items()):
        if run.unmet == 0:
            heapq.heappush(ready, (-run.priority, idx, task))

    free = list(range(config.workers))
    heapq.heapify(free)
    busy = [0] * config.workers
    # (finish, tick, worker, idx, task, fails, duration)
    completions: list[tuple[int, int, int, int, str, bool, int]] = []
    tick = 0
    now = 0
    makespan = 0
    completed = failed = skipped = attempts = 0
    total_in = total_out = 0

    def emit(run: _Run, from_state: str, to_state: str, t: int, outcome=None, final=False):
        nonlocal makespan
        makespan = max(makespan, t)
        run.state = to_state
        sink(
            instance_id=run.entry.instance.instance_id,
            task_name=run.task,
            from_state=from_state,
            to_state=to_state,
            sim_timestamp=t,
            outcome=outcome,
            final=final,
        )

    def assign() -> None:
        nonlocal tick, attempts
        while free and ready:
            _, idx, task = heapq.heappop(ready)
            run = runs[(idx, task)]
            worker = heapq.heappop(free)
            run.attempts += 1
            attempts += 1
            emit(run, run.state, SCHEDULED, now)
            emit(run, SCHEDULED, RUNNING, now)
            duration = config.duration_for(run.executable)
            if config.jitter_ms:
                duration = max(1, duration + rng.randint(-config.jitter_ms, config.jitter_ms))
            fails = config.failure_rate > 0 and rng.random() < config.failure_rate
            tick += 1
            heapq.heappush(completions, (now + duration, tick, worker, idx, task, fails, duration))

    def input_bytes_of(run: _Run) -> int:
        if not run.preds:
            return run.entry.input_bytes
        return sum(runs[(run.entry.index, p)].output_bytes for p in run.preds)

    def skip_downstream(origin: _Run, t: int) -> None:
        nonlocal skipped
        # topological order of the pinned description keeps the cascade stable
        order = topological_order(origin.entry.description)
        cone = {origin.task}
        for task in order:
            run = runs[(origin.entry.index, task)]
            if task in cone or not any(p in cone for p in run.preds):
                continue
            cone.add(task)
            if run.state in (COMPLETED, SKIPPED):
                continue
            emit(run, run.state, SKIPPED, t)
            skipped += 1

    assign()
    while completions:
        now = completions[0][0]
        finishing = []
        while completions and completions[0][0] == now:
            finishing.append(heapq.heappop(completions))
        for _, _, worker, idx, task, fails, duration in finishing:
            run = runs[(idx, task)]
            busy[worker] += duration
            heapq.heappush(free, worker)
            if fails:
                log = (
                    f"exit 1: {run.executable} failed on attempt {run.attempts}"
                    f" for {run.entry.instance.instance_id}/{run.task} at t={now}"
                )
                final = run.attempts > config.retries
                emit(run, RUNNING, FAILED, now, outcome=OutcomeDraft(ERROR_LOG, log.encode()), final=final)
                if final:
                    failed += 1
                    skip_downstream(run, now)
                else:
                    heapq.heappush(ready, (-run.priority, idx, task))
            else:
                consumed = input_bytes_of(run)
                produced = _output_bytes(consumed, config.output_multiplier)
                material = "\x1f".join([
                    str(config.seed),
                    run.entry.instance.description_name,
                    run.task,
                    run.executable,
                    str(run.attempts),
                    canonical.dumps(dict(run.entry.instance.inputs)).decode("utf-8"),
                    ",".join(runs[(idx, p)].digest or "" for p in run.preds),
                ])
                payload = _representative_payload(material, produced)
                draft = OutcomeDraft(DATA, payload, size_bytes=produced)
                run.output_bytes = produced
                run.digest = hashlib.sha256(payload).hexdigest()
                emit(run, RUNNING, COMPLETED, now, outcome=draft)
                completed += 1
                total_in += consumed
                total_out += produced
                for succ in run.succs:
                    nxt = runs[(idx, succ)]
                    nxt.unmet -= 1
                    if nxt.unmet == 0 and nxt.state == PENDING:
                        heapq.heappush(ready, (-nxt.priority, idx, succ))
        assign()

    return SimReport(
        makespan_ms=makespan,
        jobs_completed=completed,
        jobs_failed=failed,
        jobs_skipped=skipped,
        attempts=attempts,
        total_input_bytes=total_in,
        total_output_bytes=total_out,
        per_worker_busy_ms=tuple(busy),
    )
