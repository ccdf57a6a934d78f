"""Command line driver for the whole lifecycle.

Exit codes: 0 success, 1 domain error or failed audit/scenario, 2 usage error
(argparse's own convention). `--format machine` prints the canonical encoding
of exactly what the module layer returned; `text` renders the same dict.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import canonical, render
from .challenges import PROFILES, run_challenge
from .errors import SchemaError, TracegridError
from .graph import diff as spec_diff
from .queries import QueryEngine
from .scenario import run_scenario
from .simulator import SimulationConfig, enact, plan
from .store import ProvenanceStore
from .translator import translate_bytes


def _print(lines: list[str]) -> None:
    sys.stdout.write("\n".join(lines) + "\n")


def _machine(jsonable: object) -> None:
    sys.stdout.buffer.write(canonical.dumps(jsonable) + b"\n")


def _store(args) -> ProvenanceStore:
    return ProvenanceStore(data_dir=args.data_dir)


def _ref(text: str) -> tuple[str, int | None]:
    """`name` or `name@version`."""
    name, sep, version = text.partition("@")
    if not sep:
        return name, None
    try:
        return name, int(version)
    except ValueError:
        raise SchemaError(f"{text!r}: version must be an integer")


def _inputs(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise SchemaError(f"--input expects slot=value, got {pair!r}")
        out[key] = value
    return out


# --- commands ---------------------------------------------------------------


def cmd_translate(args) -> int:
    desc = translate_bytes(Path(args.file).read_bytes())
    jsonable = desc.to_jsonable()
    if args.format == "machine":
        _machine(jsonable)
    else:
        _print(render.description_text(jsonable))
    return 0


def cmd_define(args) -> int:
    desc = translate_bytes(Path(args.file).read_bytes())
    store = _store(args)
    if args.revise and desc.name in store.registry.names():
        name, version = store.revise(desc.name, desc)
    else:
        name, version = store.define(desc)
    result = {"name": name, "version": version,
              "journalSeq": store.journal_heads()["internal"]}
    if args.format == "machine":
        _machine(result)
    else:
        _print([f"{name}@{version}"])
    return 0


def cmd_submit(args) -> int:
    store = _store(args)
    name, version = _ref(args.description)
    if version is None:
        version = store.registry.latest_version(name)
    inputs = _inputs(args.input)
    cfg = SimulationConfig(
        workers=args.workers,
        default_duration_ms=args.duration_ms,
        failure_rate=args.failure_rate,
        retries=args.retries,
        seed=args.seed,
    )
    pairs = [(store.open_instance(name, version, inputs), args.input_bytes)
             for _ in range(args.count)]
    report = enact(plan(store.registry, pairs, cfg), cfg, store.append_event)
    result = {"instanceIds": [inst.instance_id for inst, _ in pairs],
              "report": report.to_jsonable()}
    if args.format == "machine":
        _machine(result)
    else:
        _print([f"opened {', '.join(result['instanceIds'])}", ""]
               + render.sim_report_text(result["report"]))
    return 0


def cmd_events(args) -> int:
    store = _store(args)
    events = [e.to_jsonable() for e in store.events(args.instance, args.up_to_seq)]
    if args.format == "machine":
        _machine(events)
    else:
        _print(render.events_text(events))
    return 0


def cmd_diff(args) -> int:
    def resolve(ref: str, store_box: list):
        if Path(ref).is_file():
            return translate_bytes(Path(ref).read_bytes())
        if not store_box:
            if args.data_dir is None:
                raise SchemaError(f"{ref!r} is not a file; --data-dir is required "
                                  "to resolve registered descriptions")
            store_box.append(_store(args))
        return store_box[0].description(*_ref(ref))

    box: list = []
    delta = spec_diff(resolve(args.candidate, box), resolve(args.reference, box))
    if args.format == "machine":
        _machine(delta.to_jsonable())
    else:
        _print(render.diff_text(delta.to_jsonable()))
    return 0


def cmd_query(args) -> int:
    store = _store(args)
    engine = QueryEngine(store)
    sub = args.query_command
    if sub == "reconstruct":
        jsonable = engine.reconstruct(args.instance, args.up_to_seq).to_jsonable()
        lines = (render.instances_text([jsonable["instance"]]) + [""]
                 + render.events_text(jsonable["events"]))
    elif sub == "spec":
        report = engine.validate_spec(_ref(args.candidate), _ref(args.reference),
                                      ignore_annotations=args.ignore_annotations)
        jsonable = report.to_jsonable()
        lines = render.spec_validation_text(jsonable)
    elif sub == "outcomes":
        rows = engine.intermediary_results(args.instance, args.task)
        jsonable = [{"event": e.to_jsonable(), "outcome": o.to_jsonable()} for e, o in rows]
        lines = render.outcomes_text([(r["event"], r["outcome"]) for r in jsonable])
    elif sub == "results":
        reference = canonical.loads(Path(args.gold).read_bytes())
        jsonable = engine.validate_results(args.instance, reference).to_jsonable()
        lines = render.results_validation_text(jsonable)
    elif sub == "analyses":
        time_range = None
        if args.created_from is not None or args.created_to is not None:
            time_range = (args.created_from, args.created_to)
        jsonable = engine.query_analyses(
            author=args.author, description_name=args.description,
            dataset_id=args.dataset, time_range=time_range, status=args.status)
        lines = [f"{r['analysisId']}  {r['title']!r}  {r['author']}  {r['status']}"
                 for r in jsonable] or ["(no analyses matched)"]
    elif sub == "compare":
        jsonable = engine.compare_analyses(args.a, args.b).to_jsonable()
        lines = render.comparison_text(jsonable)
    else:  # annotations
        hits = engine.search_annotations(key_exact=args.key, text_substring=args.text,
                                         target=args.target)
        jsonable = [a.to_jsonable() for a in hits]
        lines = render.annotations_text(jsonable) if jsonable else ["(no annotations matched)"]
    if args.format == "machine":
        _machine(jsonable)
    else:
        _print(lines)
    return 0


def cmd_challenge(args) -> int:
    store = ProvenanceStore(data_dir=args.data_dir) if args.data_dir else None
    report, _ = run_challenge(args.profile, seed=args.seed, store=store)
    if args.format == "machine":
        _machine(report.to_jsonable())
    else:
        _print(render.challenge_text(report.to_jsonable()))
    if not report.ok:
        for bucket in ("precedenceViolations", "disciplineViolations", "ceilingViolations"):
            if report.audit.get(bucket):
                sys.stderr.write(f"audit: {report.audit[bucket][0]}\n")
                break
        else:
            sys.stderr.write("audit: journal verification failed\n")
        return 1
    return 0


def cmd_scenario(args) -> int:
    return run_scenario(seed=args.seed, corrupt_gold=args.corrupt_gold,
                        data_dir=args.data_dir)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    addr = args.addr or os.environ.get("TRACEGRID_ADDR", "127.0.0.1:8023")
    host, _, port = addr.rpartition(":")
    store = ProvenanceStore(data_dir=args.data_dir)
    uvicorn.run(create_app(store), host=host or "127.0.0.1", port=int(port),
                log_level="warning")
    return 0


# --- wiring ---------------------------------------------------------------------


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "machine"), default="text")


def _add_data_dir(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--data-dir", default=os.environ.get("TRACEGRID_DATA_DIR"),
                   required=required and "TRACEGRID_DATA_DIR" not in os.environ,
                   help="journal directory (defaults to $TRACEGRID_DATA_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracegrid",
        description="versioned workflow definitions, simulated enactment, "
                    "append-only provenance, audit-trail queries",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("translate", help="parse a pipeline document")
    p.add_argument("file")
    _add_format(p)
    p.set_defaults(run=cmd_translate)

    p = commands.add_parser("define", help="register a pipeline document as a description")
    p.add_argument("file")
    p.add_argument("--revise", action="store_true",
                   help="publish a new version when the name already exists")
    _add_data_dir(p)
    _add_format(p)
    p.set_defaults(run=cmd_define)

    p = commands.add_parser("submit", help="open instances and enact them")
    p.add_argument("description", help="name or name@version")
    p.add_argument("--input", action="append", default=[], metavar="SLOT=VALUE")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--duration-ms", type=int, default=1_000)
    p.add_argument("--failure-rate", type=float, default=0.0)
    p.add_argument("--retries", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-bytes", type=int, default=4096)
    _add_data_dir(p)
    _add_format(p)
    p.set_defaults(run=cmd_submit)

    p = commands.add_parser("events", help="event history of one instance")
    p.add_argument("instance")
    p.add_argument("--up-to-seq", type=int, default=None)
    _add_data_dir(p)
    _add_format(p)
    p.set_defaults(run=cmd_events)

    p = commands.add_parser("diff", help="structural diff of two descriptions or documents")
    p.add_argument("candidate", help="pipeline file or name[@version]")
    p.add_argument("reference", help="pipeline file or name[@version]")
    _add_data_dir(p, required=False)
    _add_format(p)
    p.set_defaults(run=cmd_diff)

    p = commands.add_parser("query", help="the seven traceability questions")
    queries = p.add_subparsers(dest="query_command", required=True)

    q = queries.add_parser("reconstruct")
    q.add_argument("instance")
    q.add_argument("--up-to-seq", type=int, default=None)
    q = queries.add_parser("spec")
    q.add_argument("candidate")
    q.add_argument("reference")
    q.add_argument("--ignore-annotations", action="store_true")
    q = queries.add_parser("outcomes")
    q.add_argument("instance")
    q.add_argument("--task", default=None)
    q = queries.add_parser("results")
    q.add_argument("instance")
    q.add_argument("gold", help="JSON file mapping task names to reference digests")
    q = queries.add_parser("analyses")
    q.add_argument("--author", default=None)
    q.add_argument("--description", default=None)
    q.add_argument("--dataset", default=None)
    q.add_argument("--status", default=None)
    q.add_argument("--from", dest="created_from", type=int, default=None)
    q.add_argument("--to", dest="created_to", type=int, default=None)
    q = queries.add_parser("compare")
    q.add_argument("a")
    q.add_argument("b")
    q = queries.add_parser("annotations")
    q.add_argument("--key", default=None)
    q.add_argument("--text", default=None)
    q.add_argument("--target", default=None)
    for q in queries.choices.values():
        _add_data_dir(q)
        _add_format(q)
    p.set_defaults(run=cmd_query)

    p = commands.add_parser("challenge", help="capacity rehearsal with a full audit")
    p.add_argument("--profile", choices=sorted(PROFILES), required=True)
    p.add_argument("--seed", type=int, default=1)
    _add_data_dir(p, required=False)
    _add_format(p)
    p.set_defaults(run=cmd_challenge)

    p = commands.add_parser("scenario", help="end-to-end study walkthrough")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-gold", action="store_true",
                   help="damage the reference digests; the run must then fail")
    _add_data_dir(p, required=False)
    p.set_defaults(run=cmd_scenario)

    p = commands.add_parser("serve", help="expose one journal directory over HTTP")
    p.add_argument("--addr", default=None, help="host:port (default $TRACEGRID_ADDR "
                                                "or 127.0.0.1:8023)")
    _add_data_dir(p)
    p.set_defaults(run=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except TracegridError as e:
        sys.stderr.write(f"{e.code}: {e}\n")
        return 1
    except OSError as e:
        sys.stderr.write(f"{e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
