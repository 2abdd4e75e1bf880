"""Locally executable function specs.

These stand in for serverless targets: a registration names either a
declarative response table or an external command, both of which map a
request tree to a response tree with no network hop. Specs are plain
JSON so they journal and replay like any other registration.

Spec shapes:

    {"kind": "echo"}
        Response is the request, unchanged.

    {"kind": "table",
     "rules": [{"when": {"path": "op", "equals": "double"},
                "respond": {"value": {"$mul": [{"$get": "value"}, 2]}}}],
     "default": {"ok": true}}
        First rule whose `when` matches wins ("when" omitted = always);
        `default` answers when no rule matches. Response templates are
        literal JSON except operator objects:
            {"$get": "dotted.path"}   copy from the request ("" = whole tree)
            {"$mul": [a, b]}          numeric product of two sub-templates
            {"$add": [a, b]}          numeric sum of two sub-templates

    {"kind": "command", "argv": ["my-tool", "--flag"], "timeoutMs": 5000}
        Runs argv with the canonical-JSON request on stdin; stdout must
        be a JSON object and becomes the response. Nonzero exit, timeout,
        or unparseable output fails the invocation.
"""

from __future__ import annotations

import json
import subprocess
from typing import Any

from .errors import FunctionEvaluationError, RegistryError
from .variables import (VariablePathError, canonical_dumps, get_path, is_tree)

_OPERATORS = ("$get", "$mul", "$add")
_DEFAULT_COMMAND_TIMEOUT_MS = 10_000


def _invalid(message: str) -> RegistryError:
    return RegistryError(RegistryError.SPEC_INVALID, message)


def _validate_template(template: Any, where: str) -> None:
    if isinstance(template, dict):
        ops = [k for k in template if k.startswith("$")]
        if ops:
            if len(template) != 1:
                raise _invalid(f"{where}: operator object must have exactly "
                               f"one key, got {sorted(template)}")
            op, arg = next(iter(template.items()))
            if op not in _OPERATORS:
                raise _invalid(f"{where}: unknown operator {op!r}")
            if op == "$get":
                if not isinstance(arg, str):
                    raise _invalid(f"{where}: $get takes a path string")
            else:
                if not isinstance(arg, list) or len(arg) != 2:
                    raise _invalid(f"{where}: {op} takes a two-element list")
                for i, sub in enumerate(arg):
                    _validate_template(sub, f"{where}.{op}[{i}]")
            return
        for key, value in template.items():
            _validate_template(value, f"{where}.{key}")
    elif isinstance(template, list):
        for i, value in enumerate(template):
            _validate_template(value, f"{where}[{i}]")
    elif not is_tree(template):
        raise _invalid(f"{where}: not JSON-shaped")


def validate_spec(name: str, spec: Any) -> None:
    """Raise RegistryError(SPEC_INVALID) unless spec is well-formed."""
    if not isinstance(name, str) or not name.strip():
        raise _invalid("function name must be a nonempty string")
    if not isinstance(spec, dict):
        raise _invalid("function spec must be a JSON object")
    kind = spec.get("kind")
    if kind == "echo":
        return
    if kind == "table":
        rules = spec.get("rules", [])
        if not isinstance(rules, list):
            raise _invalid("table rules must be a list")
        for i, rule in enumerate(rules):
            if not isinstance(rule, dict) or "respond" not in rule:
                raise _invalid(f"rules[{i}] needs a 'respond' template")
            when = rule.get("when")
            if when is not None:
                if (not isinstance(when, dict) or "path" not in when
                        or "equals" not in when):
                    raise _invalid(f"rules[{i}].when needs 'path' and 'equals'")
            _validate_template(rule["respond"], f"rules[{i}].respond")
        if "default" in spec:
            _validate_template(spec["default"], "default")
        if not rules and "default" not in spec:
            raise _invalid("table spec needs at least one rule or a default")
        return
    if kind == "command":
        argv = spec.get("argv")
        if (not isinstance(argv, list) or not argv
                or not all(isinstance(a, str) for a in argv)):
            raise _invalid("command spec needs a nonempty argv list of strings")
        timeout = spec.get("timeoutMs", _DEFAULT_COMMAND_TIMEOUT_MS)
        if not isinstance(timeout, int) or timeout <= 0:
            raise _invalid("timeoutMs must be a positive integer")
        return
    raise _invalid(f"unknown function kind {kind!r}")


def _render(template: Any, request: dict) -> Any:
    if isinstance(template, dict):
        if len(template) == 1:
            (op, arg), = template.items()
            if op == "$get":
                try:
                    return get_path(request, arg)
                except VariablePathError:
                    raise FunctionEvaluationError(
                        f"request has no path {arg!r}") from None
            if op in ("$mul", "$add"):
                left = _render(arg[0], request)
                right = _render(arg[1], request)
                for side in (left, right):
                    if isinstance(side, bool) or not isinstance(side, (int, float)):
                        raise FunctionEvaluationError(
                            f"{op} needs numbers, got {side!r}")
                return left * right if op == "$mul" else left + right
        return {k: _render(v, request) for k, v in template.items()}
    if isinstance(template, list):
        return [_render(v, request) for v in template]
    return template


def evaluate(spec: dict, request: dict) -> dict:
    """Run a function spec against a request tree.

    Raises FunctionEvaluationError when the spec cannot answer.
    """
    kind = spec.get("kind")
    if kind == "echo":
        return request
    if kind == "table":
        for rule in spec.get("rules", []):
            when = rule.get("when")
            if when is not None:
                try:
                    actual = get_path(request, when["path"])
                except VariablePathError:
                    continue
                if actual != when["equals"]:
                    continue
            return _as_response(_render(rule["respond"], request))
        if "default" in spec:
            return _as_response(_render(spec["default"], request))
        raise FunctionEvaluationError("no rule matched and no default")
    if kind == "command":
        timeout_ms = spec.get("timeoutMs", _DEFAULT_COMMAND_TIMEOUT_MS)
        try:
            proc = subprocess.run(
                spec["argv"], input=canonical_dumps(request).encode("utf-8"),
                capture_output=True, timeout=timeout_ms / 1000.0)
        except subprocess.TimeoutExpired:
            raise FunctionEvaluationError(
                f"command timed out after {timeout_ms} ms") from None
        except OSError as exc:
            raise FunctionEvaluationError(f"command failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise FunctionEvaluationError(
                f"command exited {proc.returncode}: "
                f"{proc.stderr.decode('utf-8', 'replace')[:200]}")
        try:
            response = json.loads(proc.stdout.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FunctionEvaluationError(f"command output is not JSON: {exc}") from exc
        return _as_response(response)
    raise FunctionEvaluationError(f"unknown function kind {kind!r}")


def _as_response(value: Any) -> dict:
    # Response trees are maps; wrap anything else so it can merge.
    return value if isinstance(value, dict) else {"value": value}
