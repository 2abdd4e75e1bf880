"""Local function specs: tables, echo, and command adapters."""

from __future__ import annotations

import sys

import pytest

from flowgraft.errors import FunctionEvaluationError, RegistryError
from flowgraft.functions import evaluate, validate_spec

DOUBLE = {"kind": "table", "rules": [],
          "default": {"value": {"$mul": [{"$get": "value"}, 2]}}}


class TestTableFunctions:
    def test_double(self):
        # Expected value computed by hand: 4 * 2 = 8.
        assert evaluate(DOUBLE, {"value": 4}) == {"value": 8}

    def test_rule_matching_in_order(self):
        spec = {"kind": "table", "rules": [
            {"when": {"path": "op", "equals": "add"},
             "respond": {"out": {"$add": [{"$get": "x"}, {"$get": "y"}]}}},
            {"when": {"path": "op", "equals": "mul"},
             "respond": {"out": {"$mul": [{"$get": "x"}, {"$get": "y"}]}}},
        ], "default": {"out": 0}}
        assert evaluate(spec, {"op": "add", "x": 2, "y": 3}) == {"out": 5}
        assert evaluate(spec, {"op": "mul", "x": 2, "y": 3}) == {"out": 6}
        assert evaluate(spec, {"op": "?", "x": 2, "y": 3}) == {"out": 0}

    def test_get_whole_request(self):
        spec = {"kind": "table", "rules": [],
                "default": {"copy": {"$get": ""}}}
        assert evaluate(spec, {"a": 1}) == {"copy": {"a": 1}}

    def test_no_match_without_default_fails(self):
        spec = {"kind": "table", "rules": [
            {"when": {"path": "op", "equals": "x"}, "respond": {}}]}
        with pytest.raises(FunctionEvaluationError):
            evaluate(spec, {"op": "y"})

    def test_missing_get_path_fails(self):
        with pytest.raises(FunctionEvaluationError):
            evaluate(DOUBLE, {"other": 1})

    def test_non_map_response_is_wrapped(self):
        spec = {"kind": "table", "rules": [], "default": {"$get": "n"}}
        assert evaluate(spec, {"n": 7}) == {"value": 7}


class TestEcho:
    def test_echo_returns_request(self):
        request = {"nested": {"x": [1, 2]}}
        assert evaluate({"kind": "echo"}, request) == request


class TestCommandFunctions:
    def test_command_pipes_json(self):
        spec = {"kind": "command", "argv": [
            sys.executable, "-c",
            "import json,sys; d=json.load(sys.stdin); "
            "print(json.dumps({'doubled': d['value']*2}))"]}
        assert evaluate(spec, {"value": 21}) == {"doubled": 42}

    def test_nonzero_exit_fails(self):
        spec = {"kind": "command",
                "argv": [sys.executable, "-c", "raise SystemExit(3)"]}
        with pytest.raises(FunctionEvaluationError) as exc:
            evaluate(spec, {})
        assert "exited 3" in str(exc.value)

    def test_non_json_output_fails(self):
        spec = {"kind": "command",
                "argv": [sys.executable, "-c", "print('not json')"]}
        with pytest.raises(FunctionEvaluationError):
            evaluate(spec, {})

    def test_timeout(self):
        spec = {"kind": "command", "timeoutMs": 200,
                "argv": [sys.executable, "-c", "import time; time.sleep(5)"]}
        with pytest.raises(FunctionEvaluationError) as exc:
            evaluate(spec, {})
        assert "timed out" in str(exc.value)


class TestSpecValidation:
    @pytest.mark.parametrize("name,spec", [
        ("", {"kind": "echo"}),
        ("  ", {"kind": "echo"}),
        ("f", {"kind": "nope"}),
        ("f", {"kind": "table", "rules": []}),  # no rule, no default
        ("f", {"kind": "table", "rules": [{"respond": {"$bad": 1}}]}),
        ("f", {"kind": "table", "rules": [{"when": {"path": "x"},
                                           "respond": {}}]}),
        ("f", {"kind": "command", "argv": []}),
        ("f", {"kind": "command", "argv": ["x"], "timeoutMs": -1}),
        ("f", "not-a-dict"),
    ])
    def test_invalid_specs(self, name, spec):
        with pytest.raises(RegistryError) as exc:
            validate_spec(name, spec)
        assert exc.value.code == RegistryError.SPEC_INVALID

    def test_valid_specs_pass(self):
        validate_spec("f", {"kind": "echo"})
        validate_spec("f", DOUBLE)
        validate_spec("f", {"kind": "command", "argv": ["tool"],
                            "timeoutMs": 100})
