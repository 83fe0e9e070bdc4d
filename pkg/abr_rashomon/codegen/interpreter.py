"""A tiny evaluator for the code text `tree_to_code` emits.

Only three statement forms exist: `if <name> < <number>:`, `else:` and `return <kbps>`. Blocks are delimited by
four-space indentation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from abr_rashomon.errors import MalformedTreeError
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.sim.player import Observation

_IF = re.compile(r"^(?P<pad> *)if (?P<name>[a-z_]+(?:\[\d+\])?) < (?P<threshold>\S+):$")
_ELSE = re.compile(r"^(?P<pad> *)else:$")
_RETURN = re.compile(r"^(?P<pad> *)return (?P<kbps>\d+)$")
_INDEXED = re.compile(r"^(?P<base>[a-z_]+)\[(?P<index>\d+)\]$")


@dataclass(frozen=True)
class _Return:
    kbps: int


@dataclass(frozen=True)
class _Branch:
    name: str
    threshold: float
    then: _Return | _Branch
    otherwise: _Return | _Branch


def _lines(text: str) -> list[str]:
    return [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]


def parse_code(text: str) -> _Return | _Branch:
    """Parse exported code into a nested branch structure.

    Raises:
        MalformedTreeError: On any line that does not fit the grammar or indentation.
    """
    lines = _lines(text)
    position = 0

    def block(depth: int) -> _Return | _Branch:
        nonlocal position
        if position >= len(lines):
            raise MalformedTreeError("unexpected end of code")
        line = lines[position]
        expected_pad = " " * (4 * depth)
        if match := _RETURN.match(line):
            if match["pad"] != expected_pad:
                raise MalformedTreeError(f"bad indentation: {line!r}")
            position += 1
            return _Return(int(match["kbps"]))
        if match := _IF.match(line):
            if match["pad"] != expected_pad:
                raise MalformedTreeError(f"bad indentation: {line!r}")
            position += 1
            then = block(depth + 1)
            if position >= len(lines) or not (else_match := _ELSE.match(lines[position])):
                raise MalformedTreeError(f"missing else for {line.strip()!r}")
            if else_match["pad"] != expected_pad:
                raise MalformedTreeError(f"bad indentation: {lines[position]!r}")
            position += 1
            otherwise = block(depth + 1)
            return _Branch(match["name"], float(match["threshold"]), then, otherwise)
        raise MalformedTreeError(f"cannot parse {line!r}")

    root = block(0)
    if position != len(lines):
        raise MalformedTreeError(f"trailing code: {lines[position]!r}")
    return root


def resolve_name(name: str, observation: Observation) -> float:
    """The observation value an exported short name refers to."""
    scalars = {"last_q": observation.last_quality, "b": observation.buffer, "rem": observation.chunks_remaining}
    if name in scalars:
        return scalars[name]
    match = _INDEXED.match(name)
    if match is None:
        raise MalformedTreeError(f"unknown name {name!r}")
    vectors = {"tput": observation.tput_hist, "d": observation.delay_hist, "s": observation.next_sizes}
    if match["base"] not in vectors:
        raise MalformedTreeError(f"unknown name {name!r}")
    values = vectors[match["base"]]
    index = int(match["index"])
    if index >= len(values):
        raise MalformedTreeError(f"{name} is out of range")
    return values[index]


def evaluate_code(text: str, observation: Observation, manifest: VideoManifest) -> int:
    """Run exported code on one observation and return the chosen ladder level."""
    node = parse_code(text)
    while isinstance(node, _Branch):
        node = node.then if resolve_name(node.name, observation) < node.threshold else node.otherwise
    if node.kbps not in manifest.ladder_kbps:
        raise MalformedTreeError(f"returned bitrate {node.kbps} is not on the ladder")
    return manifest.level_of(node.kbps)
