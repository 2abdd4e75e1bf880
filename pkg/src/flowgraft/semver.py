"""Semantic versions and the requirement forms the registry resolves.

Versions are strict numeric major.minor.patch triples. A requirement is
one of: exact ("1.2.3"), a major line ("1.x"), a minor line ("1.2.x"),
or latest ("latest", "*", or empty). Resolution over a version set is
always the highest matching version by numeric precedence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

_VERSION_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")
_MAJOR_RE = re.compile(r"^(\d+)\.x$")
_MINOR_RE = re.compile(r"^(\d+)\.(\d+)\.x$")


@dataclass(frozen=True, order=True)
class Version:
    major: int
    minor: int
    patch: int

    @classmethod
    def parse(cls, text: str) -> "Version":
        m = _VERSION_RE.match(text.strip())
        if not m:
            raise ValueError(f"not a semantic version: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)))

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


def as_version(v: "Version | str") -> Version:
    return v if isinstance(v, Version) else Version.parse(v)


@dataclass(frozen=True)
class VersionRequirement:
    EXACT = "exact"
    MAJOR_LINE = "major"
    MINOR_LINE = "minor"
    LATEST = "latest"

    kind: str
    major: int | None = None
    minor: int | None = None
    patch: int | None = None

    @classmethod
    def exact(cls, version: Version | str) -> "VersionRequirement":
        v = as_version(version)
        return cls(cls.EXACT, v.major, v.minor, v.patch)

    @classmethod
    def major_line(cls, major: int) -> "VersionRequirement":
        return cls(cls.MAJOR_LINE, major)

    @classmethod
    def minor_line(cls, major: int, minor: int) -> "VersionRequirement":
        return cls(cls.MINOR_LINE, major, minor)

    @classmethod
    def latest(cls) -> "VersionRequirement":
        return cls(cls.LATEST)

    @classmethod
    def parse(cls, text: str | None) -> "VersionRequirement":
        if text is None:
            return cls.latest()
        text = text.strip()
        if text in ("", "*", "latest"):
            return cls.latest()
        m = _MAJOR_RE.match(text)
        if m:
            return cls.major_line(int(m.group(1)))
        m = _MINOR_RE.match(text)
        if m:
            return cls.minor_line(int(m.group(1)), int(m.group(2)))
        m = _VERSION_RE.match(text)
        if m:
            return cls(cls.EXACT, int(m.group(1)), int(m.group(2)), int(m.group(3)))
        raise ValueError(f"not a version requirement: {text!r}")

    def matches(self, version: Version) -> bool:
        if self.kind == self.LATEST:
            return True
        if self.kind == self.MAJOR_LINE:
            return version.major == self.major
        if self.kind == self.MINOR_LINE:
            return version.major == self.major and version.minor == self.minor
        return (version.major, version.minor, version.patch) == (
            self.major, self.minor, self.patch)

    def resolve(self, versions: Iterable[Version]) -> Version | None:
        """Highest matching version, or None when nothing matches."""
        matching = [v for v in versions if self.matches(v)]
        return max(matching) if matching else None

    def __str__(self) -> str:
        if self.kind == self.LATEST:
            return "latest"
        if self.kind == self.MAJOR_LINE:
            return f"{self.major}.x"
        if self.kind == self.MINOR_LINE:
            return f"{self.major}.{self.minor}.x"
        return f"{self.major}.{self.minor}.{self.patch}"
