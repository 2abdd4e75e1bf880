"""HTTP operator surface over a Runtime.

Clients call composite services only through this API, never the member
microservices directly: deploy a workflow, register services and
functions, start instances, and watch execution and circuit state.
JSON bodies throughout except workflow deployment/retrieval, which
move raw BPMN XML. Every module error maps to exactly one
(httpStatus, code) pair; see README for the table.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engine import InstanceStatus
from .errors import (CancelError, DeployError, FlowgraftError, JournalError,
                     ParseError, RegistryError, StartError)
from .registry import LocalTarget, RemoteTarget
from .variables import is_tree

_ERROR_STATUS = {
    (DeployError, DeployError.PARSE): 400,
    (DeployError, DeployError.INVALID): 400,
    (DeployError, DeployError.DUPLICATE_VERSION): 409,
    (RegistryError, RegistryError.DUPLICATE_VERSION): 409,
    (RegistryError, RegistryError.MALFORMED_TARGET): 400,
    (RegistryError, RegistryError.NOT_FOUND): 404,
    (RegistryError, RegistryError.DUPLICATE_FUNCTION): 409,
    (RegistryError, RegistryError.SPEC_INVALID): 400,
    (StartError, StartError.UNRESOLVABLE_SERVICE): 409,
    (StartError, StartError.DEFINITION_HAS_ERRORS): 400,
    (StartError, StartError.WORKFLOW_RETIRED): 409,
    (StartError, StartError.UNKNOWN_WORKFLOW): 404,
    (CancelError, CancelError.NOT_RUNNING): 409,
    (CancelError, CancelError.UNKNOWN_INSTANCE): 404,
    (JournalError, JournalError.IO_FAILURE): 500,
    (JournalError, JournalError.CORRUPT): 500,
}


def _error_response(exc: FlowgraftError) -> JSONResponse:
    code = getattr(exc, "code", getattr(exc, "kind", "ERROR"))
    status = _ERROR_STATUS.get((type(exc), code), 500)
    body = {"code": code, "detail": getattr(exc, "message", str(exc))}
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        body["diagnostics"] = [d.to_dict() for d in diagnostics]
    return JSONResponse(body, status_code=status)


def create_app(runtime) -> FastAPI:
    app = FastAPI(title="flowgraft", docs_url=None, redoc_url=None)
    app.state.runtime = runtime
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(FlowgraftError)
    async def flowgraft_error(request: Request, exc: FlowgraftError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse({"code": "BAD_REQUEST", "detail": str(exc)},
                            status_code=400)

    # -- workflows ---------------------------------------------------------

    @app.post("/workflows", status_code=201)
    async def deploy_workflow(request: Request, version: str = "1.0.0"):
        document = await request.body()
        if not document:
            return JSONResponse({"code": "BAD_REQUEST",
                                 "detail": "request body must be BPMN XML"},
                                status_code=400)
        try:
            deployment = runtime.registry.deploy_workflow(document, version)
        except ValueError as exc:
            return JSONResponse({"code": "BAD_REQUEST", "detail": str(exc)},
                                status_code=400)
        return {"definitionId": deployment.definition_id,
                "version": str(deployment.version)}

    @app.get("/workflows")
    def list_workflows():
        return {"workflows": [d.to_dict()
                              for d in runtime.registry.list_workflows()]}

    @app.get("/workflows/{definition_id}/{version}")
    def get_workflow(definition_id: str, version: str):
        deployment = runtime.registry.get_deployment(definition_id, version)
        return Response(content=deployment.definition.raw_document,
                        media_type="application/xml",
                        headers={"X-Flowgraft-State": deployment.state.value})

    @app.delete("/workflows/{definition_id}/{version}")
    def retire_workflow(definition_id: str, version: str):
        deployment = runtime.registry.retire_workflow(definition_id, version)
        return deployment.to_dict()

    # -- services and functions ---------------------------------------------

    @app.post("/services", status_code=201)
    def register_service(body: dict):
        service_id = body.get("serviceId", "")
        version = body.get("version", "")
        if "functionRef" in body:
            target = LocalTarget(body["functionRef"])
        else:
            target = RemoteTarget(body.get("baseUrl", ""),
                                  body.get("path", "/"))
        try:
            reg = runtime.registry.register_service(service_id, version, target)
        except ValueError as exc:
            raise RegistryError(RegistryError.MALFORMED_TARGET, str(exc))
        return reg.to_dict()

    @app.get("/services")
    def list_services():
        circuits = runtime.invoker.breaker_snapshot()
        services = []
        for reg in runtime.registry.list_services():
            entry = reg.to_dict()
            circuit = circuits.get(f"{reg.service_id}@{reg.version}")
            if circuit is not None:  # breaker state is the health signal
                if circuit["state"] == "Open":
                    entry["health"] = "Unhealthy"
                elif circuit["state"] == "Closed" and circuit["totalCalls"] > 0:
                    entry["health"] = "Healthy"
            services.append(entry)
        return {"services": services}

    @app.post("/functions", status_code=201)
    def register_function(body: dict):
        name = body.get("name", "")
        runtime.registry.register_function(name, body.get("spec"))
        return {"functionRef": name}

    # -- instances -------------------------------------------------------------

    @app.post("/instances", status_code=202)
    def start_instance(body: dict):
        definition_id = body.get("definitionId")
        if not definition_id:
            return JSONResponse({"code": "BAD_REQUEST",
                                 "detail": "definitionId is required"},
                                status_code=400)
        variables = body.get("variables") or {}
        if not isinstance(variables, dict) or not is_tree(variables):
            return JSONResponse({"code": "BAD_REQUEST",
                                 "detail": "variables must be a JSON object"},
                                status_code=400)
        try:
            instance = runtime.engine.start_workflow(
                definition_id, body.get("version"), variables)
        except ValueError as exc:
            return JSONResponse({"code": "BAD_REQUEST", "detail": str(exc)},
                                status_code=400)
        runtime.engine.run_async(instance)
        return {"instanceId": instance.instance_id,
                "status": instance.status.value}

    @app.get("/instances")
    def list_instances(status: str | None = None):
        instances = runtime.engine.list_instances()
        if status:
            instances = [i for i in instances if i.status.value == status]
        return {"instances": [i.snapshot() for i in instances]}

    @app.get("/instances/{instance_id}")
    def get_instance(instance_id: str):
        instance = runtime.engine.get_instance(instance_id)
        if instance is None:
            raise CancelError(CancelError.UNKNOWN_INSTANCE, instance_id)
        return instance.snapshot()

    @app.get("/instances/{instance_id}/events")
    def instance_events(instance_id: str):
        if runtime.engine.get_instance(instance_id) is None:
            raise CancelError(CancelError.UNKNOWN_INSTANCE, instance_id)
        events = runtime.journal.replay(instance_id=instance_id)
        return {"events": [
            {"seq": e.seq, "ts": e.ts_ms, "kind": e.kind,
             "instanceId": e.instance_id, "payload": e.payload}
            for e in events if e.instance_id == instance_id]}

    @app.post("/instances/{instance_id}/cancel")
    def cancel_instance(instance_id: str):
        instance = runtime.engine.get_instance(instance_id)
        if instance is None:
            raise CancelError(CancelError.UNKNOWN_INSTANCE, instance_id)
        runtime.engine.cancel_instance(instance)
        return instance.snapshot()

    # -- validation and monitoring ------------------------------------------

    @app.post("/validate")
    async def validate_document(request: Request):
        from .parser import analyze
        document = await request.body()
        try:
            diagnostics = analyze(document,
                                  runtime.registry.known_services())
        except ParseError as exc:
            return JSONResponse({"code": exc.kind, "detail": exc.message},
                                status_code=400)
        return {"diagnostics": [d.to_dict() for d in diagnostics]}

    @app.get("/monitor/circuits")
    def monitor_circuits():
        return {"circuits": runtime.invoker.breaker_snapshot()}

    @app.get("/monitor/health")
    def monitor_health():
        return {"status": "ok", "pid": os.getpid(),
                "lastSeq": runtime.journal.last_seq}

    return app


def serve(runtime, host: str = "127.0.0.1", port: int = 7070) -> None:
    """Run the API in the current process until interrupted."""
    import uvicorn

    app = create_app(runtime)
    uvicorn.run(app, host=host, port=port, log_level="warning")
