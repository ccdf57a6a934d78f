"""Capacity rehearsals: synthetic batches sized like the historical data runs.

Each profile registers a scan collection, opens one instance per scan and
pipeline, enacts the whole batch on a fixed worker pool, then audits the
resulting journals end to end (terminal instances, gap-free event chains,
precedence, worker ceiling, digest chains). The report carries both simulated
time and wall-clock time; nothing here sleeps.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from .audit import audit
from .clock import LogicalClock
from .descriptions import ActivityDescription, WorkflowDescription
from .errors import NotFound
from .simulator import SimulationConfig, SimReport, enact, plan
from .store import COMPLETED, ProvenanceStore

HOUR_MS = 3_600_000


@dataclass(frozen=True)
class ChallengeProfile:
    name: str
    scans: int
    total_input_bytes: int
    workers: int
    # one single-activity pipeline per entry: (description name, job duration ms)
    pipelines: tuple[tuple[str, int], ...]
    output_multiplier: float
    patients: int
    note: str = ""


PROFILES: dict[str, ChallengeProfile] = {
    "smoke": ChallengeProfile(
        name="smoke",
        scans=4,
        total_input_bytes=4 * 4096,
        workers=2,
        pipelines=(("thickness-quick", 1_000),),
        output_multiplier=10.0,
        patients=4,
        note="tiny end-to-end check",
    ),
    "dc2": ChallengeProfile(
        name="dc2",
        scans=6_235,
        total_input_bytes=108_000_000_000,
        workers=184,
        pipelines=(("civet", 7 * HOUR_MS),),
        output_multiplier=10.0,
        patients=715,
        note="single-pipeline throughput rehearsal",
    ),
    "dc3": ChallengeProfile(
        name="dc3",
        scans=7_500,
        total_input_bytes=112_500_000_000,
        workers=1_000,
        # per-job durations are stand-ins; only the job count is load-bearing
        pipelines=(("civet", 7 * HOUR_MS),
                   ("surface-stats", 20 * HOUR_MS),
                   ("volumetry", 10 * HOUR_MS)),
        output_multiplier=10.0,
        patients=800,
        note="three pipelines over the full scan set; durations are stand-ins",
    ),
}


@dataclass(frozen=True)
class ChallengeReport:
    profile: str
    scans: int
    pipelines: int
    jobs: int
    workers: int
    seed: int
    makespan_ms: int
    attempts: int
    jobs_completed: int
    jobs_failed: int
    total_input_bytes: int
    total_output_bytes: int
    wall_seconds: float
    audit: dict

    @property
    def ok(self) -> bool:
        return bool(self.audit.get("ok")) and self.jobs_completed == self.jobs

    def to_jsonable(self) -> dict:
        return {
            "profile": self.profile,
            "scans": self.scans,
            "pipelines": self.pipelines,
            "jobs": self.jobs,
            "workers": self.workers,
            "seed": self.seed,
            "makespanMs": self.makespan_ms,
            "attempts": self.attempts,
            "jobsCompleted": self.jobs_completed,
            "jobsFailed": self.jobs_failed,
            "totalInputBytes": self.total_input_bytes,
            "totalOutputBytes": self.total_output_bytes,
            "wallSeconds": self.wall_seconds,
            "audit": self.audit,
        }


def scan_sizes(total_bytes: int, scans: int) -> list[int]:
    """Split a byte total exactly across scans; the first remainder-many scans
    carry one extra byte so the sum stays exact."""
    base, extra = divmod(total_bytes, scans)
    return [base + 1 if i < extra else base for i in range(scans)]


def single_activity_pipeline(name: str) -> WorkflowDescription:
    """A whole pipeline modeled as one schedulable job, the granularity the
    historical numbers are quoted at."""
    activity = ActivityDescription(task_name=name, executable=f"/opt/{name}/run")
    return WorkflowDescription.create(name=name, activities=[activity], edges=[])


def run_challenge(
    profile_name: str,
    seed: int = 1,
    store: ProvenanceStore | None = None,
) -> tuple[ChallengeReport, ProvenanceStore]:
    profile = PROFILES.get(profile_name)
    if profile is None:
        raise NotFound(f"unknown challenge profile {profile_name!r}; "
                       f"choose from {sorted(PROFILES)}")
    started = time.monotonic()
    if store is None:
        store = ProvenanceStore(clock=LogicalClock(start=1_000, step=1))

    sizes = scan_sizes(profile.total_input_bytes, profile.scans)
    members = [(f"scan-{i:05d}", size, {}) for i, size in enumerate(sizes)]
    store.register_dataset(
        members, source=f"{profile.name} acquisition ({profile.patients} patients)"
    )

    durations = {}  # keyed by executable, the duration model's key
    for pipeline_name, duration_ms in profile.pipelines:
        desc = single_activity_pipeline(pipeline_name)
        store.define(desc)
        durations[desc.activities[0].executable] = duration_ms

    pairs = []
    for pipeline_name, _ in profile.pipelines:
        for i, size in enumerate(sizes):
            inst = store.open_instance(pipeline_name, 1, {"in": f"scan-{i:05d}"})
            pairs.append((inst, size))

    cfg = SimulationConfig(
        workers=profile.workers,
        duration_model=tuple(sorted(durations.items())),
        output_multiplier=profile.output_multiplier,
        seed=seed,
    )
    sim: SimReport = enact(plan(store.registry, pairs, cfg), cfg, store.append_event)

    audit_report = audit(store, workers=profile.workers)
    terminal = sum(1 for s in store.instances() if s.status == COMPLETED)
    if terminal != len(pairs):
        audit_report["ok"] = False
        audit_report.setdefault("disciplineViolations", []).append(
            {"issue": f"{len(pairs) - terminal} instances did not complete"}
        )

    report = ChallengeReport(
        profile=profile.name,
        scans=profile.scans,
        pipelines=len(profile.pipelines),
        jobs=len(pairs),
        workers=profile.workers,
        seed=seed,
        makespan_ms=sim.makespan_ms,
        attempts=sim.attempts,
        jobs_completed=sim.jobs_completed,
        jobs_failed=sim.jobs_failed,
        total_input_bytes=sim.total_input_bytes,
        total_output_bytes=sim.total_output_bytes,
        wall_seconds=round(time.monotonic() - started, 3),
        audit=audit_report,
    )
    return report, store
