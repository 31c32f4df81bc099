"""Scenario files: a character grid plus a legend of marker definitions.

A scenario file has two sections::

    [grid]
    ##########
    #SSSSSSSS#
    #........#
    ####aa####
    #.......1#
    ##########
    [legend]
    S.inflow = 4.0

Default symbols: ``#`` obstacle, ``.`` walkable floor, ``S`` start area,
digits are final destinations (the digit is the id), lowercase letters are
openings, any other uppercase letter is a region-type label. The legend may
bind extra symbols (``* = obstacle``, ``T = start:north``) and set marker
attributes (``S.inflow``, ``S.speed``, ``S.destination``, ``R.label``).
"""

from __future__ import annotations

import enum
import string
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .grid import CELL_SIZE, Cell, is_edge_connected, neighbours8


class ScenarioSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class MarkerKind(str, enum.Enum):
    OBSTACLE = "obstacle"
    START = "start"
    OPENING = "opening"
    DESTINATION = "destination"
    REGION = "region"


# attribute name -> parser, per marker kind
_ATTRIBUTES: dict[MarkerKind, dict[str, Any]] = {
    MarkerKind.START: {"inflow": float, "speed": float, "destination": str},
    MarkerKind.REGION: {"label": str},
    MarkerKind.OPENING: {},
    MarkerKind.DESTINATION: {},
    MarkerKind.OBSTACLE: {},
}


@dataclass(frozen=True)
class GridGeometry:
    width: int
    height: int
    cell_size: float = CELL_SIZE

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.cell_size != CELL_SIZE:
            raise ValueError(f"cell size is fixed at {CELL_SIZE} m")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class Marker:
    kind: MarkerKind
    id: str
    cells: frozenset[Cell]
    attributes: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Scenario:
    geometry: GridGeometry
    markers: tuple[Marker, ...]

    def __post_init__(self):
        walkable = np.ones(self.geometry.shape, dtype=bool)
        for m in self.markers:
            if m.kind is MarkerKind.OBSTACLE:
                for x, y in m.cells:
                    walkable[y, x] = False
        walkable.setflags(write=False)
        object.__setattr__(self, "walkable", walkable)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        key = lambda m: (m.kind.value, m.id)  # noqa: E731
        return self.geometry == other.geometry and sorted(self.markers, key=key) == sorted(
            other.markers, key=key
        )

    def of_kind(self, kind: MarkerKind) -> dict[str, Marker]:
        return {m.id: m for m in self.markers if m.kind is kind}

    @property
    def openings(self) -> dict[str, Marker]:
        return self.of_kind(MarkerKind.OPENING)

    @property
    def destinations(self) -> dict[str, Marker]:
        return self.of_kind(MarkerKind.DESTINATION)

    @property
    def start_areas(self) -> dict[str, Marker]:
        return self.of_kind(MarkerKind.START)

    def opening_mask(self) -> np.ndarray:
        mask = np.zeros(self.geometry.shape, dtype=bool)
        for m in self.openings.values():
            for x, y in m.cells:
                mask[y, x] = True
        return mask


def _default_binding(ch: str) -> tuple[MarkerKind | None, str] | None:
    if ch == "#":
        return (MarkerKind.OBSTACLE, "obstacles")
    if ch == ".":
        return (None, "")
    if ch == "S":
        return (MarkerKind.START, "S")
    if ch in string.digits:
        return (MarkerKind.DESTINATION, ch)
    if ch in string.ascii_lowercase:
        return (MarkerKind.OPENING, ch)
    if ch in string.ascii_uppercase:
        return (MarkerKind.REGION, ch)
    return None


def _strip_comment(line: str) -> str:
    # a '#' starts a trailing comment only at line start or after whitespace
    for i, ch in enumerate(line):
        if ch == "#" and (i == 0 or line[i - 1].isspace()):
            return line[:i]
    return line


def _parse_binding(value: str, lineno: int, col: int) -> tuple[MarkerKind | None, str | None]:
    kind_name, _, ident = value.partition(":")
    kind_name = kind_name.strip().lower()
    ident = ident.strip() or None
    if kind_name == "walkable":
        return (None, None)
    try:
        kind = MarkerKind(kind_name)
    except ValueError:
        raise ScenarioSyntaxError(f"unknown marker kind {kind_name!r}", lineno, col) from None
    if kind is MarkerKind.OBSTACLE:
        ident = "obstacles"
    return (kind, ident)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario-file contents into a :class:`Scenario`.

    Raises :class:`ScenarioSyntaxError` (with line/column) for malformed
    input, unknown symbols or keys, duplicate destination ids, and an
    empty grid. Semantic checks live in :func:`validate_scenario`.
    """
    lines = text.splitlines()
    section = None
    grid_rows: list[tuple[int, str]] = []
    bindings: dict[str, tuple[MarkerKind | None, str | None]] = {}
    attr_lines: list[tuple[int, int, str, str, str]] = []

    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped in ("[grid]", "[legend]"):
            section = stripped[1:-1]
            continue
        if section is None:
            if not stripped or stripped.startswith("#") and not grid_rows:
                continue
            raise ScenarioSyntaxError("content before the [grid] section", lineno, 1)
        if section == "grid":
            if not stripped:
                continue
            grid_rows.append((lineno, raw.rstrip("\r\n")))
            continue
        body = _strip_comment(raw).strip()
        if not body:
            continue
        key, eq, value = body.partition("=")
        col = raw.index(body[0]) + 1
        if not eq:
            raise ScenarioSyntaxError("expected 'key = value'", lineno, col)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ScenarioSyntaxError("empty key or value", lineno, col)
        if len(key) == 1:
            if key in bindings:
                raise ScenarioSyntaxError(f"symbol {key!r} bound twice", lineno, col)
            bindings[key] = _parse_binding(value, lineno, col + raw[col - 1 :].index("=") + 1)
        elif len(key) > 2 and key[1] == ".":
            attr_lines.append((lineno, col, key[0], key[2:], value))
        else:
            raise ScenarioSyntaxError(f"unknown key {key!r}", lineno, col)

    if not grid_rows:
        raise ScenarioSyntaxError("empty grid")
    width = len(grid_rows[0][1])
    for lineno, row in grid_rows:
        if len(row) != width:
            raise ScenarioSyntaxError(
                f"row has {len(row)} characters, expected {width}", lineno, min(len(row), width) + 1
            )

    def resolve(ch: str) -> tuple[MarkerKind | None, str] | None:
        if ch in bindings:
            kind, ident = bindings[ch]
            return (kind, ident if ident is not None else ch)
        return _default_binding(ch)

    cells: dict[tuple[MarkerKind, str], set[Cell]] = {}
    symbol_of: dict[tuple[MarkerKind, str], set[str]] = {}
    for y, (lineno, row) in enumerate(grid_rows):
        for x, ch in enumerate(row):
            b = resolve(ch)
            if b is None:
                raise ScenarioSyntaxError(f"unknown legend symbol {ch!r}", lineno, x + 1)
            kind, ident = b
            if kind is None:
                continue
            cells.setdefault((kind, ident), set()).add((x, y))
            symbol_of.setdefault((kind, ident), set()).add(ch)

    for (kind, ident), syms in symbol_of.items():
        if kind is MarkerKind.DESTINATION and len(syms) > 1:
            raise ScenarioSyntaxError(
                f"duplicate destination id {ident!r} (symbols {''.join(sorted(syms))})"
            )

    attributes: dict[tuple[MarkerKind, str], dict[str, Any]] = {k: {} for k in cells}
    for lineno, col, sym, name, value in attr_lines:
        b = resolve(sym)
        if b is None or b[0] is None:
            raise ScenarioSyntaxError(f"unknown legend symbol {sym!r}", lineno, col)
        kind, ident = b
        allowed = _ATTRIBUTES[kind]
        if name not in allowed:
            raise ScenarioSyntaxError(f"unknown key {sym}.{name}", lineno, col)
        try:
            parsed = allowed[name](value)
        except ValueError:
            raise ScenarioSyntaxError(f"bad value {value!r} for {sym}.{name}", lineno, col) from None
        attributes.setdefault((kind, ident), {})[name] = parsed

    markers = []
    for key in sorted(cells, key=lambda k: (k[0].value, k[1])):
        kind, ident = key
        attrs = attributes.get(key, {})
        if kind is MarkerKind.REGION:
            attrs.setdefault("label", ident)
        markers.append(Marker(kind, ident, frozenset(cells[key]), attrs))
    return Scenario(GridGeometry(width, len(grid_rows)), tuple(markers))


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


_SPARE_SYMBOLS = "@%&*+~^!?$;<>/|(){}_-,"


def serialize_scenario(s: Scenario) -> str:
    """Render a scenario back to the file format (inverse of :func:`parse_scenario`)."""
    h, w = s.geometry.shape
    rows = [["." for _ in range(w)] for _ in range(h)]
    legend: list[str] = []
    spare = iter(_SPARE_SYMBOLS)
    for m in s.markers:
        default = m.id if _default_binding(m.id) == (m.kind, m.id) else None
        if m.kind is MarkerKind.OBSTACLE:
            default = "#"
        sym = default or next(spare)
        if default is None:
            legend.append(f"{sym} = {m.kind.value}:{m.id}")
        for name, value in sorted(m.attributes.items()):
            if m.kind is MarkerKind.REGION and name == "label" and value == m.id:
                continue
            legend.append(f"{sym}.{name} = {value!r}" if isinstance(value, float) else f"{sym}.{name} = {value}")
        for x, y in m.cells:
            rows[y][x] = sym
    return "[grid]\n" + "\n".join("".join(r) for r in rows) + "\n[legend]\n" + "\n".join(legend) + (
        "\n" if legend else ""
    )


def reachable_from(s: Scenario, sources) -> np.ndarray:
    """8-connected reachability over walkable cells (corner rule applied)."""
    seen = np.zeros(s.geometry.shape, dtype=bool)
    queue = deque()
    for x, y in sources:
        if s.walkable[y, x] and not seen[y, x]:
            seen[y, x] = True
            queue.append((x, y))
    while queue:
        c = queue.popleft()
        for (nx, ny), _ in neighbours8(s.walkable, c):
            if not seen[ny, nx]:
                seen[ny, nx] = True
                queue.append((nx, ny))
    return seen


def validate_scenario(s: Scenario) -> list[str]:
    """Check the scenario invariants; returns violation messages (empty = valid)."""
    out: list[str] = []
    h, w = s.geometry.shape
    for m in s.markers:
        for x, y in m.cells:
            if not (0 <= x < w and 0 <= y < h):
                out.append(f"out of bounds: {m.kind.value} {m.id!r} cell {(x, y)}")
                break

    obstacle_cells = set()
    for m in s.of_kind(MarkerKind.OBSTACLE).values():
        obstacle_cells |= m.cells
    for m in s.markers:
        if m.kind is MarkerKind.OBSTACLE:
            continue
        if m.cells & obstacle_cells:
            out.append(f"{m.kind.value}/obstacle overlap: {m.id!r}")

    for m in s.openings.values():
        if not is_edge_connected(m.cells):
            out.append(f"opening not edge-connected: {m.id!r}")
    for kind in (MarkerKind.START, MarkerKind.DESTINATION):
        for m in s.of_kind(kind).values():
            if not m.cells:
                out.append(f"empty {kind.value} marker: {m.id!r}")

    opening_cells = set()
    for m in s.openings.values():
        opening_cells |= m.cells
    for m in s.start_areas.values():
        if m.cells & opening_cells:
            out.append(f"start/opening overlap: {m.id!r}")
    for m in s.destinations.values():
        if m.cells & opening_cells:
            out.append(f"destination/opening overlap: {m.id!r}")

    if not s.start_areas:
        out.append("missing start area")
    if not s.destinations:
        out.append("missing final destination")

    if not (s.walkable & ~s.opening_mask()).any():
        out.append("no region: every walkable cell is an opening")

    for sm in s.start_areas.values():
        if not sm.cells:
            continue
        seen = reachable_from(s, sm.cells)
        for dm in s.destinations.values():
            if dm.cells and not any(seen[y, x] for x, y in dm.cells):
                out.append(f"unreachable destination: {dm.id!r} from start area {sm.id!r}")
        target = sm.attributes.get("destination")
        if target is not None and target not in s.destinations:
            out.append(f"start area {sm.id!r} names unknown destination {target!r}")
    return out
