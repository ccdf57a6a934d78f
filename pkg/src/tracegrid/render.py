"""Plain-text renderings for command output.

Machine output is always canonical JSON of the same wire dicts these helpers
take; keeping both views off one dict means the two formats cannot drift.
"""
from __future__ import annotations


def table(headers: list[str], rows: list[list[str]]) -> list[str]:
    cells = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    body = [cells[0], ["-" * w for w in widths]] + cells[1:]
    return ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]


def kv(pairs: list[tuple[str, object]]) -> list[str]:
    width = max((len(k) for k, _ in pairs), default=0)
    return [f"{k.ljust(width)}  {v}" for k, v in pairs]


def description_text(d: dict) -> list[str]:
    lines = kv([("name", d["name"]), ("version", d["version"]),
                ("createdAt", d["createdAt"]), ("activities", len(d["activities"]))])
    rows = [[a["taskName"], a["executable"], a["priority"],
             ",".join(a["inputSlots"]), ",".join(a["outputSlots"])]
            for a in d["activities"]]
    lines += [""] + table(["task", "executable", "prio", "in", "out"], rows)
    if d["edges"]:
        lines += ["", "edges:"] + [f"  {a} -> {b}" for a, b in d["edges"]]
    if d["annotations"]:
        lines += ["", "annotations:"]
        lines += [f"  [{a['target']}] {a['key']}: {a['text']}" for a in d["annotations"]]
    return lines


def instances_text(snapshots: list[dict]) -> list[str]:
    rows = []
    for s in snapshots:
        states = s["activityStates"]
        done = sum(1 for v in states.values() if v == "COMPLETED")
        rows.append([s["instanceId"], f"{s['descriptionName']}@{s['descriptionVersion']}",
                     s["status"], f"{done}/{len(states)}", s["lastSeq"]])
    return table(["instance", "description", "status", "done", "lastSeq"], rows)


def events_text(events: list[dict]) -> list[str]:
    rows = []
    for e in events:
        flag = "final" if e.get("final") else ""
        rows.append([e["seq"], e["taskName"], f"{e['fromState']}->{e['toState']}",
                     e["simTimestamp"], e.get("outcomeId", "")[:12], flag])
    return table(["seq", "task", "transition", "t", "outcome", ""], rows)


def outcomes_text(rows: list[tuple[dict, dict]]) -> list[str]:
    body = [[e["seq"], e["taskName"], o["kind"], o["sizeBytes"], o["outcomeId"][:16]]
            for e, o in rows]
    return table(["seq", "task", "kind", "bytes", "outcomeId"], body)


def diff_text(d: dict) -> list[str]:
    lines: list[str] = []
    for name in d["addedActivities"]:
        lines.append(f"+ activity {name}")
    for name in d["removedActivities"]:
        lines.append(f"- activity {name}")
    for mod in d["modifiedActivities"]:
        for field, change in sorted(mod["fields"].items()):
            lines.append(f"~ {mod['taskName']}.{field}: {change['from']!r} -> {change['to']!r}")
    for a, b in d["addedEdges"]:
        lines.append(f"+ edge {a} -> {b}")
    for a, b in d["removedEdges"]:
        lines.append(f"- edge {a} -> {b}")
    for ch in d["annotationChanges"]:
        sign = "+" if ch["op"] == "add" else "-"
        lines.append(f"{sign} note [{ch['target']}] {ch['key']}: {ch['text']}")
    return lines or ["(no differences)"]


def spec_validation_text(v: dict) -> list[str]:
    head = kv([("candidate", "{name}@{version}".format(**v["candidate"])),
               ("reference", "{name}@{version}".format(**v["reference"])),
               ("verdict", v["verdict"])])
    return head + [""] + diff_text(v["diff"])


def results_validation_text(r: dict) -> list[str]:
    rows = [[task, verdict] for task, verdict in sorted(r["perActivity"].items())]
    return table(["task", "verdict"], rows) + ["", f"verdict: {r['verdict']}"]


def comparison_text(c: dict) -> list[str]:
    lines = kv([("analysisA", c["analysisA"]), ("analysisB", c["analysisB"]),
                ("comparable", c["comparable"]),
                ("makespanMsA", c["durationStats"]["makespanMsA"]),
                ("makespanMsB", c["durationStats"]["makespanMsB"]),
                ("failedEventsA", c["errorCounts"]["failedEventsA"]),
                ("failedEventsB", c["errorCounts"]["failedEventsB"])])
    lines += ["", "version delta:"] + ["  " + l for l in diff_text(c["versionDelta"])]
    if c["outcomeDeltas"]:
        lines += ["", "outcome deltas:"]
        rows = [[d["taskName"], d["digestA"][:16], d["digestB"][:16]]
                for d in c["outcomeDeltas"]]
        lines += ["  " + l for l in table(["task", "digestA", "digestB"], rows)]
    return lines


def sim_report_text(r: dict) -> list[str]:
    return kv([("makespanMs", r["makespanMs"]),
               ("jobsCompleted", r["jobsCompleted"]),
               ("jobsFailed", r["jobsFailed"]),
               ("jobsSkipped", r["jobsSkipped"]),
               ("attempts", r["attempts"]),
               ("totalInputBytes", r["totalInputBytes"]),
               ("totalOutputBytes", r["totalOutputBytes"])])


def audit_text(a: dict) -> list[str]:
    lines = kv([("ok", a["ok"]), ("instancesAudited", a["instancesAudited"]),
                ("eventsAudited", a["eventsAudited"]),
                ("maxConcurrentRunning", a["maxConcurrentRunning"]),
                ("workerCeiling", a["workerCeiling"])])
    for bucket in ("precedenceViolations", "disciplineViolations", "ceilingViolations"):
        for v in a[bucket]:
            lines.append(f"!! {bucket[:-1]}: {v}")
    return lines


def annotations_text(notes: list[dict]) -> list[str]:
    rows = [[n["annotationId"], n["target"], n["key"], n["text"], n["author"]]
            for n in notes]
    return table(["id", "target", "key", "text", "author"], rows)


def challenge_text(r: dict) -> list[str]:
    hours = r["makespanMs"] / 3_600_000
    lines = kv([
        ("profile", r["profile"]),
        ("scans", r["scans"]),
        ("pipelines", r["pipelines"]),
        ("jobs", r["jobs"]),
        ("workers", r["workers"]),
        ("makespanMs", f"{r['makespanMs']} ({hours:g} h simulated)"),
        ("totalInputBytes", r["totalInputBytes"]),
        ("totalOutputBytes", r["totalOutputBytes"]),
        ("attempts", r["attempts"]),
        ("wallSeconds", f"{r['wallSeconds']:.2f}"),
        ("auditOk", r["audit"]["ok"]),
        ("eventsAudited", r["audit"]["eventsAudited"]),
    ])
    return lines
