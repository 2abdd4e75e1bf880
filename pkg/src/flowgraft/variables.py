"""Variable trees: the JSON-shaped data chained between workflow tasks.

A variable tree is any composition of dict / list / str / int / float /
bool / None with string keys. Paths are dot-separated key sequences;
a purely numeric segment indexes into a list. The canonical text form
(sorted keys, compact separators, UTF-8, LF) is what goes on the wire
and into the journal, so two structurally equal trees always serialize
to identical bytes.
"""

from __future__ import annotations

import copy
import json
from typing import Any


class VariablePathError(LookupError):
    """A dotted path does not exist in (or cannot traverse) a tree."""

    def __init__(self, path: str, message: str = ""):
        super().__init__(message or f"path not found: {path!r}")
        self.path = path


def canonical_dumps(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")


def is_tree(value: Any) -> bool:
    """True when value is JSON-shaped (bool checked before int on purpose)."""
    if value is None or isinstance(value, (bool, str)):
        return True
    if isinstance(value, (int, float)):
        return True
    if isinstance(value, list):
        return all(is_tree(v) for v in value)
    if isinstance(value, dict):
        return all(isinstance(k, str) and is_tree(v) for k, v in value.items())
    return False


def split_path(path: str) -> list[str]:
    if not path:
        return []
    segments = path.split(".")
    if any(not s for s in segments):
        raise VariablePathError(path, f"empty segment in path {path!r}")
    return segments


def get_path(tree: Any, path: str) -> Any:
    """Read the value at a dotted path; empty path returns the whole tree."""
    node = tree
    for seg in split_path(path):
        if isinstance(node, dict):
            if seg not in node:
                raise VariablePathError(path)
            node = node[seg]
        elif isinstance(node, list) and seg.isdigit():
            idx = int(seg)
            if idx >= len(node):
                raise VariablePathError(path)
            node = node[idx]
        else:
            raise VariablePathError(path)
    return node


def has_path(tree: Any, path: str) -> bool:
    try:
        get_path(tree, path)
        return True
    except VariablePathError:
        return False


def set_path(tree: dict, path: str, value: Any) -> None:
    """Write value at a dotted path, creating intermediate dicts.

    Traversing through an existing non-dict value raises; list elements
    are not assignable through paths.
    """
    segments = split_path(path)
    if not segments:
        raise VariablePathError(path, "cannot assign to the root path")
    node = tree
    for seg in segments[:-1]:
        if not isinstance(node, dict):
            raise VariablePathError(path, f"cannot traverse {seg!r} in {path!r}")
        nxt = node.get(seg)
        if nxt is None and seg not in node:
            nxt = {}
            node[seg] = nxt
        node = nxt
    if not isinstance(node, dict):
        raise VariablePathError(path, f"cannot assign into non-map at {path!r}")
    node[segments[-1]] = value


def deep_copy(tree: Any) -> Any:
    return copy.deepcopy(tree)
