"""Boolean condition language for sequence-flow guards.

Grammar, lowest precedence first:

    expr  := or
    or    := and ("||" and)*
    and   := not ("&&" not)*
    not   := "!" not | cmp
    cmp   := term (("==" | "!=" | "<" | "<=" | ">" | ">=") term)?
    term  := number | string | "true" | "false" | "null"
           | path | "(" expr ")"
    path  := segment ("." segment)*

Strings are double- or single-quoted with backslash escapes; numbers are
ints or floats with an optional leading minus. Evaluation is total and
strict about types: ordering operators need two numbers or two strings,
equality needs both sides of the same type, boolean operators need
booleans, and the whole expression must come out boolean. Violations
raise EvalError(TYPE_MISMATCH); a path absent from the variable tree
raises EvalError(UNKNOWN_VARIABLE). "&&" and "||" short-circuit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from .errors import EvalError
from .variables import VariablePathError, get_path


@dataclass(frozen=True)
class Literal:
    value: Any


@dataclass(frozen=True)
class Var:
    path: str


@dataclass(frozen=True)
class Compare:
    op: str
    left: "AstNode"
    right: "AstNode"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "&&" or "||"
    left: "AstNode"
    right: "AstNode"


@dataclass(frozen=True)
class Not:
    operand: "AstNode"


AstNode = Union[Literal, Var, Compare, BoolOp, Not]

_COMPARE_OPS = ("==", "!=", "<=", ">=", "<", ">")


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Expression:
    """A parsed condition; evaluate() never diverges."""

    root: AstNode
    source: str

    def evaluate(self, variables: dict) -> bool:
        result = _eval(self.root, variables)
        if not isinstance(result, bool):
            raise EvalError(EvalError.TYPE_MISMATCH,
                            f"condition {self.source!r} is not boolean")
        return result


# --- tokenizer ---------------------------------------------------------

_PUNCT = ("||", "&&", "==", "!=", "<=", ">=", "<", ">", "!", "(", ")")


def _tokenize(text: str) -> list[tuple[str, Any, int]]:
    """Yields (kind, value, pos) tokens; kind in {lit, path, op}."""
    tokens: list[tuple[str, Any, int]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        matched = False
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(("op", p, i))
                i += len(p)
                matched = True
                break
        if matched:
            continue
        if c in "\"'":
            j = i + 1
            out = []
            while j < n and text[j] != c:
                if text[j] == "\\":
                    if j + 1 >= n:
                        raise ExpressionSyntaxError("unterminated escape", j)
                    esc = text[j + 1]
                    out.append({"n": "\n", "t": "\t", "\\": "\\",
                                '"': '"', "'": "'"}.get(esc, esc))
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise ExpressionSyntaxError("unterminated string", i)
            tokens.append(("lit", "".join(out), i))
            i = j + 1
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            raw = text[i:j]
            try:
                value = float(raw) if "." in raw else int(raw)
            except ValueError:
                raise ExpressionSyntaxError(f"bad number {raw!r}", i) from None
            tokens.append(("lit", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_."):
                j += 1
            word = text[i:j]
            if word == "true":
                tokens.append(("lit", True, i))
            elif word == "false":
                tokens.append(("lit", False, i))
            elif word == "null":
                tokens.append(("lit", None, i))
            else:
                if word.startswith(".") or word.endswith(".") or ".." in word:
                    raise ExpressionSyntaxError(f"bad path {word!r}", i)
                tokens.append(("path", word, i))
            i = j
            continue
        raise ExpressionSyntaxError(f"unexpected character {c!r}", i)
    return tokens


# --- parser -------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[tuple[str, Any, int]], source: str):
        self.tokens = tokens
        self.pos = 0
        self.source = source

    def peek(self) -> tuple[str, Any, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, Any, int]:
        tok = self.peek()
        if tok is None:
            raise ExpressionSyntaxError("unexpected end of expression",
                                        len(self.source))
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise ExpressionSyntaxError(f"expected {op!r}", tok[2])

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == "op" and tok[1] in ops

    def parse(self) -> AstNode:
        node = self.parse_or()
        tok = self.peek()
        if tok is not None:
            raise ExpressionSyntaxError(f"trailing input {tok[1]!r}", tok[2])
        return node

    def parse_or(self) -> AstNode:
        node = self.parse_and()
        while self.at_op("||"):
            self.take()
            node = BoolOp("||", node, self.parse_and())
        return node

    def parse_and(self) -> AstNode:
        node = self.parse_not()
        while self.at_op("&&"):
            self.take()
            node = BoolOp("&&", node, self.parse_not())
        return node

    def parse_not(self) -> AstNode:
        if self.at_op("!"):
            self.take()
            return Not(self.parse_not())
        return self.parse_cmp()

    def parse_cmp(self) -> AstNode:
        left = self.parse_term()
        if self.at_op(*_COMPARE_OPS):
            op = self.take()[1]
            right = self.parse_term()
            return Compare(op, left, right)
        return left

    def parse_term(self) -> AstNode:
        if self.at_op("("):
            self.take()
            node = self.parse_or()
            self.expect_op(")")
            return node
        kind, value, pos = self.take()
        if kind == "lit":
            return Literal(value)
        if kind == "path":
            return Var(value)
        raise ExpressionSyntaxError(f"unexpected {value!r}", pos)


def parse_expression(text: str) -> Expression:
    """Parse the condition text; raises ExpressionSyntaxError."""
    tokens = _tokenize(text)
    if not tokens:
        raise ExpressionSyntaxError("empty expression", 0)
    return Expression(_Parser(tokens, text).parse(), text)


# --- evaluator ----------------------------------------------------------


def _type_name(value: Any) -> str:
    if isinstance(value, bool):
        return "boolean"
    if value is None:
        return "null"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "list"
    return "map"


def _eval(node: AstNode, variables: dict) -> Any:
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Var):
        try:
            return get_path(variables, node.path)
        except VariablePathError:
            raise EvalError(EvalError.UNKNOWN_VARIABLE, node.path) from None
    if isinstance(node, Not):
        operand = _eval(node.operand, variables)
        if not isinstance(operand, bool):
            raise EvalError(EvalError.TYPE_MISMATCH,
                            f"! needs a boolean, got {_type_name(operand)}")
        return not operand
    if isinstance(node, BoolOp):
        left = _eval(node.left, variables)
        if not isinstance(left, bool):
            raise EvalError(EvalError.TYPE_MISMATCH,
                            f"{node.op} needs booleans, got {_type_name(left)}")
        if node.op == "&&" and not left:
            return False
        if node.op == "||" and left:
            return True
        right = _eval(node.right, variables)
        if not isinstance(right, bool):
            raise EvalError(EvalError.TYPE_MISMATCH,
                            f"{node.op} needs booleans, got {_type_name(right)}")
        return right
    if isinstance(node, Compare):
        return _compare(node.op, _eval(node.left, variables),
                        _eval(node.right, variables))
    raise TypeError(f"unknown node {node!r}")


def _compare(op: str, left: Any, right: Any) -> bool:
    lt, rt = _type_name(left), _type_name(right)
    if op in ("==", "!="):
        if lt != rt:
            raise EvalError(EvalError.TYPE_MISMATCH,
                            f"cannot compare {lt} {op} {rt}")
        return (left == right) if op == "==" else (left != right)
    if lt != rt or lt not in ("number", "string"):
        raise EvalError(EvalError.TYPE_MISMATCH,
                        f"cannot order {lt} {op} {rt}")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def eval_expression(expr: Expression | str, variables: dict) -> bool:
    """Evaluate a parsed or textual condition against a variable tree."""
    if isinstance(expr, str):
        expr = parse_expression(expr)
    return expr.evaluate(variables)
