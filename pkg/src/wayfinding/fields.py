"""Floor fields and the choice-propagation grid.

Static fields (one path field per opening/destination, one obstacle field)
are computed once. The proxemic field is rebuilt every step and the
:class:`ChoiceField` carries recently diffused plan changes.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .grid import CELL_SIZE, SQRT2, Cell, disc_offsets, neighbours8

UNREACHABLE = math.inf


class FieldKind(str, enum.Enum):
    PATH = "path"
    OBSTACLE = "obstacle"
    PROXEMIC = "proxemic"


@dataclass(frozen=True, eq=False)
class FloorField:
    target_id: str
    values: np.ndarray  # [y, x], metres (proxemic: dimensionless), inf = unreachable
    kind: FieldKind = FieldKind.PATH

    def at(self, cell: Cell) -> float:
        return float(self.values[cell[1], cell[0]])


def metric_length(n_orth: int, n_diag: int) -> float:
    """Length in metres of a path with the given orthogonal/diagonal step counts."""
    return CELL_SIZE * (n_orth + SQRT2 * n_diag)


def _spread(passable: np.ndarray, sources: Iterable[Cell]) -> np.ndarray:
    # Dijkstra keyed on (orth, diag) step counts. a + b*sqrt(2) has no exact
    # ties between distinct count pairs, so the float key orders correctly and
    # the final metre value is a pure function of the counts.
    h, w = passable.shape
    counts = {}
    heap = []
    for c in sources:
        counts[c] = (0, 0)
        heap.append((0.0, 0, 0, c))
    heapq.heapify(heap)
    done = set()
    out = np.full((h, w), UNREACHABLE)
    while heap:
        _, a, b, c = heapq.heappop(heap)
        if c in done:
            continue
        done.add(c)
        out[c[1], c[0]] = metric_length(a, b)
        for n, diag in neighbours8(passable, c):
            if n in done:
                continue
            na, nb = (a, b + 1) if diag else (a + 1, b)
            key = na + SQRT2 * nb
            old = counts.get(n)
            if old is None or key < old[0] + SQRT2 * old[1]:
                counts[n] = (na, nb)
                heapq.heappush(heap, (key, na, nb, n))
    return out


def spread_path_field(scenario, target_cells, target_id: str) -> FloorField:
    """Shortest 8-connected walking distance (metres) to the nearest target cell."""
    target_cells = list(target_cells)
    if not target_cells:
        raise ValueError(f"empty target set for field {target_id!r}")
    walk = scenario.walkable
    for x, y in target_cells:
        if not walk[y, x]:
            raise ValueError(f"target cell {(x, y)} of {target_id!r} is not walkable")
    values = _spread(walk, target_cells)
    values.setflags(write=False)
    return FloorField(target_id, values, FieldKind.PATH)


def spread_obstacle_field(scenario) -> FloorField:
    """Distance to the nearest obstacle cell, the area outside the grid counting as obstacle."""
    h, w = scenario.geometry.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = scenario.walkable
    sources = [(int(x), int(y)) for y, x in zip(*np.nonzero(~padded))]
    # the walk starts on blocked cells and only expands into free ones
    values = _spread(padded, sources)[1:-1, 1:-1].copy()
    values.setflags(write=False)
    return FloorField("obstacles", values, FieldKind.OBSTACLE)


def proxemic_kernel(distance: float) -> float:
    return 1.0 / (1.0 + distance)


def update_proxemic_field(agent_positions, radius: float, shape: tuple[int, int]) -> FloorField:
    """Sum of 1/(1+d) over agents within ``radius`` cells (Euclidean)."""
    h, w = shape
    values = np.zeros(shape)
    offsets = disc_offsets(radius)
    for ax, ay in agent_positions:
        for dx, dy, d in offsets:
            x, y = ax + dx, ay + dy
            if 0 <= x < w and 0 <= y < h:
                values[y, x] += proxemic_kernel(d)
    return FloorField("proxemic", values, FieldKind.PROXEMIC)


def diffuse_value(distance: float) -> float:
    return 1.0 if distance == 0 else 1.0 / distance


@dataclass
class ChoiceEntry:
    opening: str
    diff: float
    age: int
    source: int


class ChoiceField:
    """Per-cell influence entries left by agents that changed their plan.

    Entries are keyed by ``(opening, source agent)`` within a cell: a repeated
    spread by the same agent refreshes its entry, while entries from distinct
    agents for the same opening add up in :meth:`influence`.
    """

    def __init__(self, shape: tuple[int, int], openings: Iterable[str], walkable: np.ndarray | None = None):
        self.shape = shape
        self.openings = frozenset(openings)
        self.walkable = walkable
        self.cells: dict[Cell, dict[tuple[str, int], ChoiceEntry]] = {}

    def copy(self) -> "ChoiceField":
        other = ChoiceField(self.shape, self.openings, self.walkable)
        other.cells = {
            c: {k: ChoiceEntry(e.opening, e.diff, e.age, e.source) for k, e in entries.items()}
            for c, entries in self.cells.items()
        }
        return other

    def entries(self, cell: Cell) -> list[ChoiceEntry]:
        return list(self.cells.get(cell, {}).values())

    def influence(self, cell: Cell) -> dict[str, float]:
        """Summed diff per opening at ``cell`` (only positive totals)."""
        out: dict[str, float] = {}
        for e in self.cells.get(cell, {}).values():
            out[e.opening] = out.get(e.opening, 0.0) + e.diff
        return {k: v for k, v in sorted(out.items()) if v > 0}

    def total_mass(self) -> float:
        return sum(e.diff for entries in self.cells.values() for e in entries.values())

    def __len__(self) -> int:
        return sum(len(v) for v in self.cells.values())

    def clear(self) -> None:
        self.cells.clear()


def diffuse_choice(cf: ChoiceField, pos: Cell, source: int, new_opening: str, rho_c: float) -> ChoiceField:
    """Spread 1/Dist (1 on the agent's own cell) over the disc of radius ``rho_c``."""
    if new_opening not in cf.openings:
        raise KeyError(f"unknown opening {new_opening!r}")
    h, w = cf.shape
    ax, ay = pos
    for dx, dy, d in disc_offsets(rho_c):
        x, y = ax + dx, ay + dy
        if not (0 <= x < w and 0 <= y < h):
            continue
        if cf.walkable is not None and not cf.walkable[y, x]:
            continue
        cf.cells.setdefault((x, y), {})[(new_opening, source)] = ChoiceEntry(
            new_opening, diffuse_value(d), 0, source
        )
    return cf


def decay_choice(cf: ChoiceField, tau_c: int) -> ChoiceField:
    """Age every entry by one step and drop those that reached ``tau_c``."""
    for cell in list(cf.cells):
        entries = cf.cells[cell]
        for key in list(entries):
            e = entries[key]
            e.age += 1
            if e.age >= tau_c:
                del entries[key]
        if not entries:
            del cf.cells[cell]
    return cf


def export_field_csv(field: FloorField, path, sentinel: float = -1.0) -> None:
    """Debug dump of a field in the entropy-map CSV layout."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# field id={field.target_id} kind={field.kind.value}\n")
        for row in field.values:
            fh.write(",".join(f"{(v if math.isfinite(v) else sentinel):.6f}" for v in row) + "\n")
