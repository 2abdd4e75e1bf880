"""flowgraft: a BPMN 2.0 microservice orchestration engine.

Composes independently registered microservices into executable
composite workflows: parse and statically validate BPMN documents,
drive tokens through them in standard order, invoke service tasks with
retries and circuit breaking, pin service versions per instance, and
journal every transition so any run can be tracked, replayed, and
recovered after a crash.
"""

from .clock import Clock, SimClock
from .engine import (Engine, InstanceStatus, ProcessInstance, StepKind,
                     StepOutcome, Token, TokenPhase)
from .errors import (CancelError, DeployError, EvalError, FlowgraftError,
                     HarnessError, JournalError, ParseError, RegistryError,
                     StartError)
from .expressions import Expression, eval_expression, parse_expression
from .invoker import (DEFAULT_POLICY, BackoffPolicy, BreakerPolicy,
                      CircuitBreaker, InvocationPolicy, InvocationResult,
                      Invoker)
from .journal import ExecutionEvent, Journal, replay
from .model import (Code, Diagnostic, Node, NodeKind, ProcessDefinition,
                    SequenceFlow, ServiceRef, Severity)
from .parser import analyze, parse_bpmn
from .recovery import recover
from .registry import (DeploymentState, Health, LocalTarget, RemoteTarget,
                       ServiceRegistration, ServiceRegistry,
                       WorkflowDeployment)
from .runtime import Runtime
from .semver import Version, VersionRequirement
from .validation import validate

__version__ = "0.1.0"

__all__ = [
    "BackoffPolicy", "BreakerPolicy", "CancelError", "CircuitBreaker",
    "Clock", "Code", "DEFAULT_POLICY", "DeployError", "DeploymentState",
    "Diagnostic", "Engine", "EvalError", "ExecutionEvent", "Expression",
    "FlowgraftError", "HarnessError", "Health", "InstanceStatus",
    "InvocationPolicy", "InvocationResult", "Invoker", "Journal",
    "JournalError", "LocalTarget", "Node", "NodeKind", "ParseError",
    "ProcessDefinition", "ProcessInstance", "RegistryError", "RemoteTarget",
    "Runtime", "SequenceFlow", "ServiceRef", "ServiceRegistration",
    "ServiceRegistry", "Severity", "SimClock", "StartError", "StepKind",
    "StepOutcome", "Token", "TokenPhase", "Version", "VersionRequirement",
    "WorkflowDeployment", "analyze", "eval_expression", "parse_bpmn",
    "parse_expression", "recover", "replay", "validate",
]
