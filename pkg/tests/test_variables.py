"""Variable trees: paths and canonical serialization."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowgraft.variables import (VariablePathError, canonical_dumps, get_path,
                                 has_path, is_tree, set_path)


class TestPaths:
    def test_get_nested(self):
        tree = {"order": {"items": [{"sku": "a"}, {"sku": "b"}]}}
        assert get_path(tree, "order.items.1.sku") == "b"

    def test_empty_path_returns_root(self):
        tree = {"x": 1}
        assert get_path(tree, "") is tree

    def test_missing_raises(self):
        with pytest.raises(VariablePathError):
            get_path({"x": 1}, "y")
        with pytest.raises(VariablePathError):
            get_path({"x": 1}, "x.deep")
        assert not has_path({"x": 1}, "y")

    def test_set_creates_intermediate_maps(self):
        tree = {}
        set_path(tree, "a.b.c", 3)
        assert tree == {"a": {"b": {"c": 3}}}

    def test_set_refuses_non_map_traversal(self):
        tree = {"a": 5}
        with pytest.raises(VariablePathError):
            set_path(tree, "a.b", 1)
        with pytest.raises(VariablePathError):
            set_path(tree, "", 1)


class TestCanonicalJson:
    def test_sorted_compact(self):
        assert canonical_dumps({"b": 1, "a": [True, None]}) == \
            '{"a":[true,null],"b":1}'

    def test_unicode_passthrough(self):
        assert canonical_dumps({"name": "café"}) == '{"name":"café"}'

    def test_is_tree(self):
        assert is_tree({"a": [1, "x", None, {"b": False}]})
        assert not is_tree({"a": object()})
        assert not is_tree({1: "non-string key"})


_json_trees = st.recursive(
    st.one_of(st.none(), st.booleans(), st.integers(-10**6, 10**6),
              st.floats(allow_nan=False, allow_infinity=False, width=32),
              st.text(max_size=8)),
    lambda children: st.one_of(
        st.lists(children, max_size=4),
        st.dictionaries(st.text(max_size=6), children, max_size=4)),
    max_leaves=20)


@settings(max_examples=300, deadline=None)
@given(tree=_json_trees)
def test_canonical_roundtrip_preserves_structure(tree):
    text = canonical_dumps(tree)
    assert json.loads(text) == tree
    # Serializing the reload gives identical bytes (canonical form is a fixpoint).
    assert canonical_dumps(json.loads(text)) == text
