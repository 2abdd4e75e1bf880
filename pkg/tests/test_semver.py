"""Version parsing and requirement resolution."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowgraft import Version, VersionRequirement


class TestVersion:
    def test_parse_and_str(self):
        v = Version.parse("1.2.3")
        assert (v.major, v.minor, v.patch) == (1, 2, 3)
        assert str(v) == "1.2.3"

    @pytest.mark.parametrize("text", ["1.2", "1", "v1.2.3", "1.2.3-rc1", "x"])
    def test_rejects_non_triples(self, text):
        with pytest.raises(ValueError):
            Version.parse(text)

    def test_numeric_precedence(self):
        assert Version.parse("1.10.0") > Version.parse("1.9.9")
        assert Version.parse("2.0.0") > Version.parse("1.99.99")


class TestRequirementForms:
    def test_exact(self):
        req = VersionRequirement.parse("1.0.0")
        assert req.matches(Version.parse("1.0.0"))
        assert not req.matches(Version.parse("1.0.1"))

    def test_major_line(self):
        req = VersionRequirement.parse("1.x")
        assert req.matches(Version.parse("1.9.0"))
        assert not req.matches(Version.parse("2.0.0"))

    def test_minor_line(self):
        req = VersionRequirement.parse("1.2.x")
        assert req.matches(Version.parse("1.2.9"))
        assert not req.matches(Version.parse("1.3.0"))

    @pytest.mark.parametrize("text", ["latest", "*", "", None])
    def test_latest_spellings(self, text):
        assert VersionRequirement.parse(text).kind == VersionRequirement.LATEST

    @pytest.mark.parametrize("text", ["1.x.x", "x", "1.2.3.4", ">=1.0.0"])
    def test_rejects_unknown_forms(self, text):
        with pytest.raises(ValueError):
            VersionRequirement.parse(text)

    def test_resolve_picks_highest_match(self):
        versions = [Version.parse(v) for v in ("1.0.0", "1.1.0", "2.0.0")]
        assert str(VersionRequirement.parse("1.x").resolve(versions)) == "1.1.0"
        assert str(VersionRequirement.parse("latest").resolve(versions)) == "2.0.0"
        assert VersionRequirement.parse("3.x").resolve(versions) is None


def _oracle_resolve(versions: list[tuple[int, int, int]],
                    req_kind: str, anchor: tuple[int, int, int]):
    """Brute force: filter by requirement semantics, take numeric max."""
    if req_kind == "exact":
        matches = [v for v in versions if v == anchor]
    elif req_kind == "major":
        matches = [v for v in versions if v[0] == anchor[0]]
    elif req_kind == "minor":
        matches = [v for v in versions if v[:2] == anchor[:2]]
    else:
        matches = list(versions)
    return max(matches) if matches else None


_triples = st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))


@settings(max_examples=1000, deadline=None)
@given(versions=st.lists(_triples, min_size=0, max_size=12, unique=True),
       req_kind=st.sampled_from(["exact", "major", "minor", "latest"]),
       anchor=_triples)
def test_resolve_matches_bruteforce_oracle(versions, req_kind, anchor):
    vs = [Version(*t) for t in versions]
    req = {"exact": VersionRequirement.exact(Version(*anchor)),
           "major": VersionRequirement.major_line(anchor[0]),
           "minor": VersionRequirement.minor_line(anchor[0], anchor[1]),
           "latest": VersionRequirement.latest()}[req_kind]
    expected = _oracle_resolve(versions, req_kind, anchor)
    actual = req.resolve(vs)
    if expected is None:
        assert actual is None
    else:
        assert (actual.major, actual.minor, actual.patch) == expected


def test_resolution_monotonicity():
    """Adding a version the requirement does not match never changes resolve."""
    rng = random.Random(7)
    for _ in range(300):
        versions = {Version(rng.randint(0, 3), rng.randint(0, 3),
                            rng.randint(0, 3)) for _ in range(rng.randint(1, 8))}
        req = VersionRequirement.major_line(rng.randint(0, 3))
        before = req.resolve(versions)
        extra = Version(req.major + 1 + rng.randint(0, 2), rng.randint(0, 3),
                        rng.randint(0, 3))
        assert not req.matches(extra)
        after = req.resolve(versions | {extra})
        assert before == after
