"""Cognitive map (regions joined by openings) and the per-destination paths tree."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import FloorField
from .grid import CELL_SIZE, ORTHOGONAL, Cell, components4
from .scenario import MarkerKind, Scenario


class TopologyError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Region:
    id: int
    cells: frozenset[Cell]
    labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class OpeningEdge:
    id: str
    regions: tuple[int, int]
    width: float  # metres
    cells: frozenset[Cell]
    representative: Cell

    def other_side(self, region: int) -> int:
        a, b = self.regions
        if region == a:
            return b
        if region == b:
            return a
        raise KeyError(f"opening {self.id!r} does not touch region {region}")


@dataclass(frozen=True, eq=False)
class CognitiveMap:
    regions: dict[int, Region]
    openings: dict[str, OpeningEdge]
    destination_locations: dict[str, int]
    region_of: np.ndarray  # [y, x] region id, -1 on obstacles and opening cells
    opening_of: dict[Cell, str] = field(default_factory=dict)

    def region_openings(self, region: int) -> list[str]:
        if region not in self.regions:
            raise KeyError(f"unknown region {region}")
        return sorted(o.id for o in self.openings.values() if region in o.regions)

    def region_at(self, cell: Cell) -> int:
        return int(self.region_of[cell[1], cell[0]])


def representative_cell(cells) -> Cell:
    """Member cell nearest the centroid (ties broken row-major)."""
    cells = sorted(cells, key=lambda c: (c[1], c[0]))
    cx = sum(c[0] for c in cells) / len(cells)
    cy = sum(c[1] for c in cells) / len(cells)
    return min(cells, key=lambda c: (c[0] - cx) ** 2 + (c[1] - cy) ** 2)


def opening_width(cells) -> float:
    """Cells across the opening (long side of its bounding box) times the cell size."""
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    return CELL_SIZE * max(max(xs) - min(xs) + 1, max(ys) - min(ys) + 1)


def build_cognitive_map(scenario: Scenario) -> CognitiveMap:
    """Regions are the edge-connected components of walkable minus opening cells.

    Raises :class:`TopologyError` if an opening does not separate exactly two
    regions or a destination straddles regions.
    """
    h, w = scenario.geometry.shape
    opening_mask = scenario.opening_mask()
    labels, count = components4(scenario.walkable & ~opening_mask)
    labels.setflags(write=False)

    region_markers = scenario.of_kind(MarkerKind.REGION)
    cells_by_region: dict[int, list[Cell]] = {i: [] for i in range(count)}
    for y, x in zip(*np.nonzero(labels >= 0)):
        cells_by_region[int(labels[y, x])].append((int(x), int(y)))
    regions = {}
    for rid, cells in cells_by_region.items():
        cs = frozenset(cells)
        tags = tuple(
            sorted(str(m.attributes.get("label", m.id)) for m in region_markers.values() if m.cells & cs)
        )
        regions[rid] = Region(rid, cs, tags)

    violations = []
    openings = {}
    opening_of = {}
    for oid, m in sorted(scenario.openings.items()):
        touching = set()
        for x, y in m.cells:
            opening_of[(x, y)] = oid
            for dx, dy in ORTHOGONAL:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and labels[ny, nx] >= 0:
                    touching.add(int(labels[ny, nx]))
        if len(touching) != 2:
            violations.append(f"opening {oid!r} touches {len(touching)} regions (expected 2)")
            continue
        a, b = sorted(touching)
        openings[oid] = OpeningEdge(oid, (a, b), opening_width(m.cells), m.cells, representative_cell(m.cells))

    dest_loc = {}
    for did, m in sorted(scenario.destinations.items()):
        rs = {int(labels[y, x]) for x, y in m.cells}
        if len(rs) != 1 or -1 in rs:
            violations.append(f"destination {did!r} spans regions {sorted(rs)}")
            continue
        dest_loc[did] = rs.pop()
    if violations:
        raise TopologyError(violations)
    return CognitiveMap(regions, openings, dest_loc, labels, opening_of)


@dataclass(frozen=True)
class PathOption:
    path: tuple[str, ...]  # opening ids ..., ending with the destination id
    tt: float  # free-flow seconds at the tree's reference speed
    origin: int  # region the path is entered from
    regions: tuple[int, ...] = ()  # regions visited, origin first

    @property
    def first_opening(self) -> str:
        return self.path[0]


@dataclass(frozen=True, eq=False)
class PathsTree:
    destination: str
    speed_ref: float
    entries: dict[str, list[PathOption]]  # opening id -> options (both directions)

    def options_from(self, opening: str, origin: int) -> list[PathOption]:
        return [p for p in self.entries.get(opening, []) if p.origin == origin]

    def all_options(self) -> list[PathOption]:
        return [p for opts in self.entries.values() for p in opts]


def _leg(fields: dict[str, FloorField], target: str, cell: Cell) -> float:
    return fields[target].at(cell)


def enumerate_paths(cm: CognitiveMap, fields: dict[str, FloorField], end: str):
    """Yield ``(opening, origin, path, regions, distance_m)`` for every region-loop-free route to ``end``."""
    end_region = cm.destination_locations[end]

    def walk(current: str, region: int, visited: tuple[int, ...], path: tuple[str, ...], dist: float):
        rep = cm.openings[current].representative
        if region == end_region:
            d = _leg(fields, end, rep)
            if math.isfinite(d):
                yield path + (end,), visited, dist + d
            return
        for nxt in cm.region_openings(region):
            if nxt == current:
                continue
            beyond = cm.openings[nxt].other_side(region)
            if beyond in visited:
                continue
            d = _leg(fields, nxt, rep)
            if not math.isfinite(d):
                continue
            yield from walk(nxt, beyond, visited + (beyond,), path + (nxt,), dist + d)

    for oid in sorted(cm.openings):
        edge = cm.openings[oid]
        for origin in edge.regions:
            entered = edge.other_side(origin)
            for path, regions, dist in walk(oid, entered, (origin, entered), (oid,), 0.0):
                yield oid, origin, path, regions, dist


def build_paths_tree(
    cm: CognitiveMap,
    fields: dict[str, FloorField],
    end: str,
    speed_ref: float,
    plausibility_factor: float = 3.0,
) -> PathsTree:
    if end not in cm.destination_locations:
        raise KeyError(f"unknown destination {end!r}")
    if plausibility_factor < 1:
        raise ValueError("plausibility_factor must be >= 1")
    groups: dict[tuple[str, int], list[PathOption]] = {}
    for oid, origin, path, regions, dist in enumerate_paths(cm, fields, end):
        groups.setdefault((oid, origin), []).append(PathOption(path, dist / speed_ref, origin, regions))
    entries: dict[str, list[PathOption]] = {}
    for (oid, _), opts in sorted(groups.items()):
        best = min(p.tt for p in opts)
        kept = [p for p in opts if p.tt <= plausibility_factor * best]
        kept.sort(key=lambda p: (p.tt, p.path))
        entries.setdefault(oid, []).extend(kept)
    return PathsTree(end, speed_ref, entries)


def paths(pt: PathsTree, region: int, cm: CognitiveMap) -> list[PathOption]:
    """Path options open to an agent standing in ``region``; empty when the destination is here."""
    openings = cm.region_openings(region)
    if cm.destination_locations[pt.destination] == region:
        return []
    out = []
    for oid in openings:
        out.extend(pt.options_from(oid, region))
    return out


def remaining_time(pt: PathsTree, cm: CognitiveMap) -> dict[int, float]:
    """Best free-flow time from each region's openings onward (0 in the destination region)."""
    out = {}
    for rid in cm.regions:
        if cm.destination_locations[pt.destination] == rid:
            out[rid] = 0.0
        else:
            out[rid] = min((p.tt for p in paths(pt, rid, cm)), default=math.inf)
    return out


def localize(cell: Cell, cm: CognitiveMap, pt: PathsTree, remaining: dict[int, float] | None = None) -> int | None:
    """Region an agent at ``cell`` considers itself in.

    Opening cells belong to no region; an agent on one is taken to be
    crossing towards the destination, i.e. into the side with the smaller
    remaining free-flow time.
    """
    r = cm.region_at(cell)
    if r >= 0:
        return r
    oid = cm.opening_of.get(cell)
    if oid is None or oid not in cm.openings:
        return None
    if remaining is None:
        remaining = remaining_time(pt, cm)
    a, b = cm.openings[oid].regions
    return a if (remaining[a], a) <= (remaining[b], b) else b


def topology_report(cm: CognitiveMap, trees: dict[str, PathsTree]) -> str:
    lines = [f"regions: {len(cm.regions)}"]
    for rid, reg in cm.regions.items():
        tag = f" labels={','.join(reg.labels)}" if reg.labels else ""
        lines.append(f"  region {rid}: {len(reg.cells)} cells{tag}")
    lines.append(f"openings: {len(cm.openings)}")
    for oid, e in cm.openings.items():
        lines.append(f"  opening {oid}: regions {e.regions[0]}-{e.regions[1]} width {e.width:.2f} m rep {e.representative}")
    for did, rid in cm.destination_locations.items():
        lines.append(f"destination {did}: region {rid}")
    for did, pt in trees.items():
        lines.append(f"paths tree -> {did} (speed_ref {pt.speed_ref:.4f} m/s)")
        for oid, opts in pt.entries.items():
            for p in opts:
                lines.append(f"  {oid} from region {p.origin}: {' > '.join(p.path)}  tt={p.tt:.3f} s")
    return "\n".join(lines) + "\n"
