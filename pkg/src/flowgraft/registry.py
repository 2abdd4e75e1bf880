"""The versioned catalog of services, local functions, and workflows.

Everything a workflow can call is registered here first: remote HTTP
endpoints, locally executable function specs, and deployed workflow
definitions. Registrations are never deleted, only retired, so any
journal ever written stays resolvable. Reads are concurrent; mutations
serialize under one lock and journal themselves before returning.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass, replace
from enum import Enum
from typing import Union
from urllib.parse import urlsplit

from . import journal as jn
from .clock import Clock
from .errors import DeployError, ParseError, RegistryError
from .functions import validate_spec
from .model import ProcessDefinition, Severity
from .parser import parse_bpmn
from .semver import Version, VersionRequirement, as_version
from .validation import validate


class Health(str, Enum):
    UNKNOWN = "Unknown"
    HEALTHY = "Healthy"
    UNHEALTHY = "Unhealthy"


class DeploymentState(str, Enum):
    ACTIVE = "Active"
    RETIRED = "Retired"


@dataclass(frozen=True)
class RemoteTarget:
    base_url: str
    path: str = "/"

    def to_dict(self) -> dict:
        return {"kind": "remote", "baseUrl": self.base_url, "path": self.path}


@dataclass(frozen=True)
class LocalTarget:
    function_ref: str

    def to_dict(self) -> dict:
        return {"kind": "local", "functionRef": self.function_ref}


Target = Union[RemoteTarget, LocalTarget]


def target_from_dict(data: dict) -> Target:
    if data.get("kind") == "local":
        return LocalTarget(data["functionRef"])
    return RemoteTarget(data["baseUrl"], data.get("path", "/"))


@dataclass(frozen=True)
class ServiceRegistration:
    service_id: str
    version: Version
    target: Target
    registered_at_ms: int
    health: Health = Health.UNKNOWN

    def to_dict(self) -> dict:
        return {"serviceId": self.service_id, "version": str(self.version),
                "target": self.target.to_dict(), "health": self.health.value,
                "registeredAtMs": self.registered_at_ms}


@dataclass(frozen=True)
class WorkflowDeployment:
    definition_id: str
    version: Version
    definition: ProcessDefinition
    deployed_at_ms: int
    state: DeploymentState = DeploymentState.ACTIVE

    def to_dict(self) -> dict:
        return {"definitionId": self.definition_id, "version": str(self.version),
                "name": self.definition.name, "state": self.state.value,
                "deployedAtMs": self.deployed_at_ms}


def _check_remote_url(url: str) -> None:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise RegistryError(RegistryError.MALFORMED_TARGET,
                            f"baseUrl must be an absolute http(s) URL, got {url!r}")


class ServiceRegistry:
    """Repository pool of services plus the workflow catalog."""

    def __init__(self, journal: jn.Journal | None = None,
                 clock: Clock | None = None):
        self._journal = journal
        self._clock = clock or Clock()
        self._lock = threading.RLock()
        self._services: dict[tuple[str, Version], ServiceRegistration] = {}
        self._functions: dict[str, dict] = {}
        self._workflows: dict[tuple[str, Version], WorkflowDeployment] = {}

    # -- services ---------------------------------------------------------

    def register_service(self, service_id: str, version: Version | str,
                         target: Target) -> ServiceRegistration:
        version = as_version(version)
        if not service_id or not service_id.strip():
            raise RegistryError(RegistryError.MALFORMED_TARGET,
                                "serviceId must be nonempty")
        if isinstance(target, RemoteTarget):
            _check_remote_url(target.base_url)
        elif isinstance(target, LocalTarget):
            with self._lock:
                if target.function_ref not in self._functions:
                    raise RegistryError(
                        RegistryError.MALFORMED_TARGET,
                        f"function {target.function_ref!r} is not registered")
        else:
            raise RegistryError(RegistryError.MALFORMED_TARGET,
                                f"unknown target {target!r}")
        with self._lock:
            key = (service_id, version)
            if key in self._services:
                raise RegistryError(RegistryError.DUPLICATE_VERSION,
                                    f"{service_id} {version} already registered")
            event = self._emit(jn.SERVICE_REGISTERED, {
                "serviceId": service_id, "version": str(version),
                "target": target.to_dict()})
            # Journal time is canon so replay rebuilds identical records.
            ts = event.ts_ms if event else self._clock.now_ms()
            reg = ServiceRegistration(service_id, version, target, ts)
            self._services[key] = reg
            return reg

    def resolve(self, service_id: str,
                req: VersionRequirement | str | None = None) -> ServiceRegistration:
        """Highest-precedence registration matching the requirement."""
        if not isinstance(req, VersionRequirement):
            req = VersionRequirement.parse(req)
        with self._lock:
            versions = [v for (sid, v) in self._services if sid == service_id]
            best = req.resolve(versions)
            if best is None:
                raise RegistryError(
                    RegistryError.NOT_FOUND,
                    f"no registration satisfies {service_id!r} {req}")
            return self._services[(service_id, best)]

    def get_service(self, service_id: str,
                    version: Version | str) -> ServiceRegistration:
        version = as_version(version)
        with self._lock:
            reg = self._services.get((service_id, version))
        if reg is None:
            raise RegistryError(RegistryError.NOT_FOUND,
                                f"{service_id} {version} is not registered")
        return reg

    def list_services(self) -> list[ServiceRegistration]:
        with self._lock:
            return [self._services[k] for k in sorted(self._services)]

    def known_services(self) -> set[tuple[str, str]]:
        """(serviceId, version) view for the validator."""
        with self._lock:
            return {(sid, str(v)) for (sid, v) in self._services}

    # -- local functions ----------------------------------------------------

    def register_function(self, function_ref: str, spec: dict) -> None:
        validate_spec(function_ref, spec)
        with self._lock:
            if function_ref in self._functions:
                raise RegistryError(RegistryError.DUPLICATE_FUNCTION,
                                    f"function {function_ref!r} already registered")
            self._functions[function_ref] = spec
            self._emit(jn.FUNCTION_REGISTERED,
                       {"functionRef": function_ref, "spec": spec})

    def get_function(self, function_ref: str) -> dict:
        with self._lock:
            spec = self._functions.get(function_ref)
        if spec is None:
            raise RegistryError(RegistryError.NOT_FOUND,
                                f"function {function_ref!r} is not registered")
        return spec

    def list_functions(self) -> list[str]:
        with self._lock:
            return sorted(self._functions)

    # -- workflows ----------------------------------------------------------

    def deploy_workflow(self, document: bytes,
                        version: Version | str) -> WorkflowDeployment:
        """Parse, validate, and catalog a workflow; startable immediately."""
        version = as_version(version)
        try:
            definition = parse_bpmn(document)
        except ParseError as exc:
            if exc.kind == ParseError.INVARIANT_VIOLATION:
                raise DeployError(DeployError.INVALID, str(exc),
                                  diagnostics=exc.diagnostics) from exc
            raise DeployError(DeployError.PARSE, str(exc)) from exc
        diagnostics = validate(definition, self.known_services())
        errors = [d for d in diagnostics if d.severity is Severity.ERROR]
        if errors:
            raise DeployError(
                DeployError.INVALID,
                "; ".join(f"{d.code.value}({d.subject_id})" for d in errors),
                diagnostics=errors)
        definition = definition.with_version(str(version))
        with self._lock:
            key = (definition.definition_id, version)
            if key in self._workflows:
                raise DeployError(
                    DeployError.DUPLICATE_VERSION,
                    f"{definition.definition_id} {version} already deployed")
            event = self._emit(jn.DEPLOYMENT_RECORDED, {
                "definitionId": definition.definition_id,
                "version": str(version),
                "document": base64.b64encode(document).decode("ascii")})
            ts = event.ts_ms if event else self._clock.now_ms()
            deployment = WorkflowDeployment(definition.definition_id, version,
                                            definition, ts)
            self._workflows[key] = deployment
            return deployment

    def get_deployment(self, definition_id: str,
                       version: Version | str | None = None) -> WorkflowDeployment:
        """Exact version, or the highest Active version when omitted."""
        with self._lock:
            if version is not None:
                dep = self._workflows.get((definition_id, as_version(version)))
                if dep is None:
                    raise RegistryError(
                        RegistryError.NOT_FOUND,
                        f"workflow {definition_id!r} {version} is not deployed")
                return dep
            active = [d for (did, _), d in self._workflows.items()
                      if did == definition_id and d.state is DeploymentState.ACTIVE]
            if not active:
                raise RegistryError(
                    RegistryError.NOT_FOUND,
                    f"workflow {definition_id!r} has no active deployment")
            return max(active, key=lambda d: d.version)

    def list_workflows(self) -> list[WorkflowDeployment]:
        with self._lock:
            return [self._workflows[k] for k in sorted(self._workflows)]

    def retire_workflow(self, definition_id: str,
                        version: Version | str) -> WorkflowDeployment:
        """Stop new instances; existing instances are unaffected."""
        version = as_version(version)
        with self._lock:
            key = (definition_id, version)
            dep = self._workflows.get(key)
            if dep is None:
                raise RegistryError(RegistryError.NOT_FOUND,
                                    f"workflow {definition_id!r} {version} "
                                    f"is not deployed")
            if dep.state is DeploymentState.RETIRED:
                return dep
            dep = replace(dep, state=DeploymentState.RETIRED)
            self._workflows[key] = dep
            self._emit(jn.WORKFLOW_RETIRED, {"definitionId": definition_id,
                                             "version": str(version)})
            return dep

    # -- journal plumbing ---------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> jn.ExecutionEvent | None:
        if self._journal is None:
            return None
        return self._journal.append(kind, payload)

    def apply_event(self, event: jn.ExecutionEvent) -> None:
        """Rebuild one registry event during recovery, without re-journaling."""
        p = event.payload
        if event.kind == jn.SERVICE_REGISTERED:
            reg = ServiceRegistration(p["serviceId"], Version.parse(p["version"]),
                                      target_from_dict(p["target"]), event.ts_ms)
            with self._lock:
                self._services[(reg.service_id, reg.version)] = reg
        elif event.kind == jn.FUNCTION_REGISTERED:
            with self._lock:
                self._functions[p["functionRef"]] = p["spec"]
        elif event.kind == jn.DEPLOYMENT_RECORDED:
            document = base64.b64decode(p["document"])
            definition = parse_bpmn(document).with_version(p["version"])
            dep = WorkflowDeployment(p["definitionId"], Version.parse(p["version"]),
                                     definition, event.ts_ms)
            with self._lock:
                self._workflows[(dep.definition_id, dep.version)] = dep
        elif event.kind == jn.WORKFLOW_RETIRED:
            key = (p["definitionId"], Version.parse(p["version"]))
            with self._lock:
                if key in self._workflows:
                    self._workflows[key] = replace(self._workflows[key],
                                                   state=DeploymentState.RETIRED)
