"""Exception types shared across the engine."""

from __future__ import annotations


class FlowgraftError(Exception):
    """Base class for all engine errors."""


class ParseError(FlowgraftError):
    """A process document could not be turned into a definition."""

    XML_MALFORMED = "XML_MALFORMED"
    UNSUPPORTED_ELEMENT = "UNSUPPORTED_ELEMENT"
    MISSING_ATTRIBUTE = "MISSING_ATTRIBUTE"
    INVARIANT_VIOLATION = "INVARIANT_VIOLATION"

    def __init__(self, kind: str, message: str = "", diagnostics=None):
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind
        self.message = message
        # Structural diagnostics, populated for INVARIANT_VIOLATION.
        self.diagnostics = list(diagnostics or [])


class EvalError(FlowgraftError):
    """A condition expression could not be evaluated to a boolean."""

    UNKNOWN_VARIABLE = "UNKNOWN_VARIABLE"
    TYPE_MISMATCH = "TYPE_MISMATCH"

    def __init__(self, kind: str, message: str = ""):
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind
        self.message = message


class RegistryError(FlowgraftError):
    DUPLICATE_VERSION = "DUPLICATE_VERSION"
    MALFORMED_TARGET = "MALFORMED_TARGET"
    NOT_FOUND = "NOT_FOUND"
    DUPLICATE_FUNCTION = "DUPLICATE_FUNCTION"
    SPEC_INVALID = "SPEC_INVALID"

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class DeployError(FlowgraftError):
    PARSE = "PARSE_ERROR"
    INVALID = "INVALID_DEFINITION"
    DUPLICATE_VERSION = "DUPLICATE_VERSION"

    def __init__(self, code: str, message: str = "", diagnostics=None):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
        self.diagnostics = list(diagnostics or [])


class StartError(FlowgraftError):
    UNRESOLVABLE_SERVICE = "UNRESOLVABLE_SERVICE"
    DEFINITION_HAS_ERRORS = "DEFINITION_HAS_ERRORS"
    WORKFLOW_RETIRED = "WORKFLOW_RETIRED"
    UNKNOWN_WORKFLOW = "UNKNOWN_WORKFLOW"

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class CancelError(FlowgraftError):
    NOT_RUNNING = "NOT_RUNNING"
    UNKNOWN_INSTANCE = "UNKNOWN_INSTANCE"

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message


class JournalError(FlowgraftError):
    IO_FAILURE = "IO_FAILURE"
    CORRUPT = "CORRUPT"

    def __init__(self, code: str, message: str = "", seq: int | None = None):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
        self.seq = seq


class FunctionEvaluationError(FlowgraftError):
    """A locally registered function failed to produce a response."""


class HarnessError(FlowgraftError):
    PORT_EXHAUSTED = "PORT_EXHAUSTED"

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
