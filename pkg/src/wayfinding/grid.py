"""Low-level helpers shared by every grid consumer.

Cells are addressed as ``(x, y)`` tuples with the origin at the top-left;
numpy arrays are stored row-major and indexed ``[y, x]``.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Iterator

import numpy as np

CELL_SIZE = 0.4
SQRT2 = math.sqrt(2.0)

Cell = tuple[int, int]

ORTHOGONAL = ((1, 0), (-1, 0), (0, 1), (0, -1))
DIAGONAL = ((1, 1), (1, -1), (-1, 1), (-1, -1))
# Moore neighbourhood plus the centre cell, in a fixed order.
MOORE9 = ((0, 0),) + ORTHOGONAL + DIAGONAL


def in_bounds(cell: Cell, shape: tuple[int, int]) -> bool:
    x, y = cell
    return 0 <= y < shape[0] and 0 <= x < shape[1]


def step_allowed(passable: np.ndarray, x: int, y: int, dx: int, dy: int) -> bool:
    """True when a single 8-connected move from (x, y) by (dx, dy) is legal.

    The destination must be passable. A diagonal move is refused only when
    *both* orthogonal cells it skirts are blocked (no squeezing through a
    closed corner).
    """
    h, w = passable.shape
    nx, ny = x + dx, y + dy
    if not (0 <= nx < w and 0 <= ny < h) or not passable[ny, nx]:
        return False
    if dx and dy:
        side_a = passable[y, nx]
        side_b = passable[ny, x]
        if not side_a and not side_b:
            return False
    return True


def neighbours8(passable: np.ndarray, cell: Cell) -> Iterator[tuple[Cell, bool]]:
    """Yield ``(neighbour, is_diagonal)`` for every legal move out of ``cell``."""
    x, y = cell
    for dx, dy in ORTHOGONAL:
        if step_allowed(passable, x, y, dx, dy):
            yield (x + dx, y + dy), False
    for dx, dy in DIAGONAL:
        if step_allowed(passable, x, y, dx, dy):
            yield (x + dx, y + dy), True


def components4(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Label the edge-connected components of ``mask``.

    Returns ``(labels, count)``; labels are -1 outside the mask and numbered
    in row-major order of each component's first cell.
    """
    h, w = mask.shape
    labels = np.full(mask.shape, -1, dtype=np.int64)
    count = 0
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or labels[y, x] >= 0:
                continue
            labels[y, x] = count
            queue = deque([(x, y)])
            while queue:
                cx, cy = queue.popleft()
                for dx, dy in ORTHOGONAL:
                    nx, ny = cx + dx, cy + dy
                    if 0 <= nx < w and 0 <= ny < h and mask[ny, nx] and labels[ny, nx] < 0:
                        labels[ny, nx] = count
                        queue.append((nx, ny))
            count += 1
    return labels, count


def is_edge_connected(cells: Iterable[Cell]) -> bool:
    cells = set(cells)
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in ORTHOGONAL:
            n = (x + dx, y + dy)
            if n in cells and n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == len(cells)


def euclid(a: Cell, b: Cell) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def disc_offsets(radius: float) -> list[tuple[int, int, float]]:
    """All integer offsets within Euclidean ``radius`` (in cells), with their length."""
    r = int(math.floor(radius))
    out = []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            d = math.hypot(dx, dy)
            if d <= radius:
                out.append((dx, dy, d))
    return out
