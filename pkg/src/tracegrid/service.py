"""HTTP front door over one provenance store.

Thin by design: every route body is the canonical encoding of exactly what the
underlying module call returns, so a response can be diffed byte-for-byte
against an in-process call on the same store. Mutating responses carry the seq
of the journal record they appended. An `X-Request-Id` header, when sent, is
echoed back unchanged.
"""
from __future__ import annotations

import base64
import json
import threading

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware

from . import canonical
from .descriptions import ActivityDescription, Annotation, WorkflowDescription
from .errors import DuplicateName, ParseError, SchemaError, TracegridError
from .queries import QueryEngine
from .store import ANALYSIS_BASE, INTERNAL, OutcomeDraft, ProvenanceStore
from .translator import translate_bytes

# everything not listed maps to 400
_STATUS = {
    "NotFound": 404,
    "DuplicateName": 409,
    "IllegalTransition": 409,
    "SequenceGap": 409,
    "InstanceStillOpen": 409,
    "InstanceClosed": 410,
}


def _reply(jsonable: object, status: int = 200) -> Response:
    return Response(
        content=canonical.dumps(jsonable),
        status_code=status,
        media_type="application/json",
    )


async def _body_object(request: Request) -> dict:
    raw = await request.body()
    try:
        obj = json.loads(raw.decode("utf-8") if raw else "null")
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"request body: {e}")
    if not isinstance(obj, dict):
        raise SchemaError("request body must be an object")
    return obj


def _want(obj: dict, key: str, kind: type, default=None, required: bool = True):
    if key not in obj:
        if required:
            raise SchemaError(f"body.{key} is required")
        return default
    value = obj[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError(f"body.{key} must be {kind.__name__}")
    return value


def _string_map(obj: dict, key: str) -> dict[str, str]:
    value = _want(obj, key, dict, default={}, required=False)
    for k, v in value.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise SchemaError(f"body.{key} must map strings to strings")
    return value


def _description_from_content(obj: dict) -> WorkflowDescription:
    """Accept already-translated description content (as opposed to a pipeline
    document): name + activities [+ edges, annotations, extra]."""
    name = _want(obj, "name", str)
    activities = [
        ActivityDescription.from_jsonable(a) for a in _want(obj, "activities", list)
    ]
    edges = [tuple(e) for e in _want(obj, "edges", list, default=[], required=False)]
    annotations = [
        Annotation.from_jsonable(a)
        for a in _want(obj, "annotations", list, default=[], required=False)
    ]
    extra = _want(obj, "extra", dict, default={}, required=False)
    return WorkflowDescription.create(
        name=name, activities=activities, edges=edges, annotations=annotations, extra=extra
    )


def _outcome_draft(obj: dict | None) -> OutcomeDraft | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise SchemaError("body.outcome must be an object")
    kind = _want(obj, "kind", str)
    encoded = _want(obj, "payloadB64", str)
    try:
        payload = base64.b64decode(encoded, validate=True)
    except (ValueError, TypeError):
        raise SchemaError("body.outcome.payloadB64 is not valid base64")
    size = _want(obj, "sizeBytes", int, default=None, required=False)
    return OutcomeDraft(kind=kind, payload=payload, size_bytes=size)


def create_app(store: ProvenanceStore) -> FastAPI:
    app = FastAPI(title="tracegrid", docs_url=None, redoc_url=None)
    engine = QueryEngine(store)
    write_lock = threading.Lock()  # single-writer contract for the journals

    # the dashboard is served from its own origin; without this a browser
    # would refuse to call the API at all
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(TracegridError)
    async def _domain_error(request: Request, exc: TracegridError):
        return _reply({"code": exc.code, "message": str(exc)}, _STATUS.get(exc.code, 400))

    @app.exception_handler(RequestValidationError)
    async def _bad_filter(request: Request, exc: RequestValidationError):
        return _reply({"code": "SchemaError", "message": str(exc.errors()[0]["msg"])}, 400)

    @app.middleware("http")
    async def _echo_request_id(request: Request, call_next):
        response = await call_next(request)
        rid = request.headers.get("x-request-id")
        if rid is not None:
            response.headers["X-Request-Id"] = rid
        return response

    @app.get("/health")
    async def health():
        return _reply({"ok": True, "journalHeads": store.journal_heads()})

    # --- templates -----------------------------------------------------------

    @app.post("/templates")
    async def store_template(request: Request, revise: bool = False):
        obj = await _body_object(request)
        if "pipelineName" in obj:
            desc = translate_bytes(canonical.dumps(obj))
        else:
            desc = _description_from_content(obj)
        with write_lock:
            exists = desc.name in store.registry.names()
            if exists and not revise:
                raise DuplicateName(f"description {desc.name!r} already exists")
            name, version = (store.revise(desc.name, desc) if exists else store.define(desc))
            seq = store.journal_heads()[INTERNAL]
        return _reply({"name": name, "version": version, "journalSeq": seq}, 201)

    @app.get("/templates")
    async def list_templates():
        rows = [
            {"name": name, "latestVersion": store.registry.latest_version(name)}
            for name in store.registry.names()
        ]
        return _reply(rows)

    @app.get("/templates/{name}/versions")
    async def template_versions(name: str):
        return _reply(store.registry.versions(name))

    @app.get("/templates/{name}")
    @app.get("/templates/{name}/{version}")
    async def get_template(name: str, version: int | None = None):
        data = store.registry.serialized(name, version)
        return Response(content=data, media_type="application/json")

    # --- instances and events --------------------------------------------------

    @app.post("/instances")
    async def create_instance(request: Request):
        obj = await _body_object(request)
        name = _want(obj, "descriptionName", str)
        version = _want(obj, "version", int, default=None, required=False)
        inputs = _string_map(obj, "inputs")
        with write_lock:
            snapshot = store.open_instance(name, version, inputs)
            seq = store.journal_heads()[INTERNAL]
        return _reply({"instance": snapshot.to_jsonable(), "journalSeq": seq}, 201)

    @app.get("/instances")
    async def list_instances(status: str | None = None):
        return _reply([s.to_jsonable() for s in store.instances(status)])

    @app.get("/instances/{instance_id}")
    async def get_instance(instance_id: str):
        return _reply(store.instance(instance_id).to_jsonable())

    @app.post("/instances/{instance_id}/events")
    async def append_event(instance_id: str, request: Request):
        obj = await _body_object(request)
        task = _want(obj, "taskName", str)
        draft = _outcome_draft(obj.get("outcome"))
        with write_lock:
            seq = store.append_event(
                instance_id,
                task,
                from_state=_want(obj, "fromState", str),
                to_state=_want(obj, "toState", str),
                sim_timestamp=_want(obj, "simTimestamp", int),
                outcome=draft,
                final=_want(obj, "final", bool, default=False, required=False),
                seq=_want(obj, "seq", int, default=None, required=False),
            )
            journal_seq = store.journal_heads()[INTERNAL]
        body = {"seq": seq, "journalSeq": journal_seq}
        if draft is not None:
            body["outcomeId"] = store.produced_outcome(instance_id, task, seq).outcome_id
        return _reply(body)

    @app.get("/instances/{instance_id}/reconstruct")
    async def reconstruct(instance_id: str, upToSeq: int | None = None):
        return _reply(engine.reconstruct(instance_id, upToSeq).to_jsonable())

    @app.get("/instances/{instance_id}/outcomes")
    async def instance_outcomes(instance_id: str, taskName: str | None = None):
        rows = engine.intermediary_results(instance_id, taskName)
        return _reply([{"event": e.to_jsonable(), "outcome": o.to_jsonable()} for e, o in rows])

    # --- outcomes ----------------------------------------------------------------

    @app.get("/outcomes/{outcome_id}")
    async def get_outcome(outcome_id: str):
        return _reply(store.outcome(outcome_id).to_jsonable())

    @app.get("/outcomes/{outcome_id}/payload")
    async def get_payload(outcome_id: str):
        return Response(content=store.payload(outcome_id), media_type="application/octet-stream")

    # --- validation ----------------------------------------------------------------

    @app.post("/validate/spec")
    async def validate_spec(request: Request):
        obj = await _body_object(request)
        cand = _want(obj, "candidate", dict)
        ref = _want(obj, "reference", dict)
        report = engine.validate_spec(
            (_want(cand, "name", str), _want(cand, "version", int, default=None, required=False)),
            (_want(ref, "name", str), _want(ref, "version", int, default=None, required=False)),
            ignore_annotations=_want(obj, "ignoreAnnotations", bool, default=False, required=False),
        )
        return _reply(report.to_jsonable())

    @app.post("/validate/results")
    async def validate_results(request: Request):
        obj = await _body_object(request)
        instance_id = _want(obj, "instanceId", str)
        reference = _string_map(obj, "reference")
        return _reply(engine.validate_results(instance_id, reference).to_jsonable())

    # --- analyses and annotations ------------------------------------------------------

    @app.get("/analyses")
    async def list_analyses(
        author: str | None = None,
        descriptionName: str | None = None,
        datasetId: str | None = None,
        status: str | None = None,
        createdFrom: int | None = Query(None, alias="from"),
        createdTo: int | None = Query(None, alias="to"),
    ):
        time_range = None
        if createdFrom is not None or createdTo is not None:
            time_range = (createdFrom, createdTo)
        rows = engine.query_analyses(
            author=author,
            description_name=descriptionName,
            dataset_id=datasetId,
            time_range=time_range,
            status=status,
        )
        return _reply(rows)

    @app.get("/analyses/compare")
    async def compare_analyses(a: str, b: str):
        return _reply(engine.compare_analyses(a, b).to_jsonable())

    @app.get("/annotations")
    async def search_annotations(
        key: str | None = None, text: str | None = None, target: str | None = None
    ):
        hits = engine.search_annotations(key_exact=key, text_substring=text, target=target)
        return _reply([a.to_jsonable() for a in hits])

    @app.post("/annotations")
    async def add_annotation(request: Request):
        obj = await _body_object(request)
        with write_lock:
            rec = store.annotate(
                _want(obj, "target", str),
                _want(obj, "key", str),
                _want(obj, "text", str),
                author=_want(obj, "author", str, default="", required=False),
            )
            seq = store.journal_heads()[ANALYSIS_BASE]
        return _reply({"annotation": rec.to_jsonable(), "journalSeq": seq}, 201)

    return app
