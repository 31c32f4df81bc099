"""Four-room benchmark layout.

Rooms are stacked top to bottom, each ``ROOM_W`` x ``ROOM_H`` cells inside
one-cell walls. Room 1 holds the start area along its top row; a single
6-cell (2.4 m) opening leads to room 2; rooms 2->3 and 3->4 are joined by
three 2-cell (0.8 m) openings each, the second row mirroring the first; the
destination sits in the bottom-right corner of room 4. Dimensions and door
positions are approximations of the published figure, not measurements.
"""

from __future__ import annotations

ROOM_W = 30
ROOM_H = 18
WIDE_DOOR = 6
NARROW_DOOR = 2
# left edge (interior x, 1-based) of each narrow door between rooms 2 and 3;
# the doors between rooms 3 and 4 are their mirror images
NARROW_DOORS_23 = (6, 14, 22)
DEST_W, DEST_H = 3, 2
INFLOW = 4.0  # persons per second


def mirror(x0: int, width: int = NARROW_DOOR, room_w: int = ROOM_W) -> int:
    return room_w + 1 - (x0 + width - 1)


def benchmark_text(
    room_w: int = ROOM_W,
    room_h: int = ROOM_H,
    doors_23=NARROW_DOORS_23,
    inflow: float = INFLOW,
) -> str:
    W = room_w + 2
    rows: list[list[str]] = []

    def wall(doors: dict[str, tuple[int, int]]):
        row = ["#"] * W
        for sym, (x0, width) in doors.items():
            for x in range(x0, x0 + width):
                row[x] = sym
        rows.append(row)

    def room(fill_top: str | None = None, dest: bool = False):
        for j in range(room_h):
            row = ["#"] + ["."] * room_w + ["#"]
            if fill_top and j == 0:
                row[1 : room_w + 1] = [fill_top] * room_w
            if dest and j >= room_h - DEST_H:
                for x in range(room_w + 1 - DEST_W, room_w + 1):
                    row[x] = "1"
            rows.append(row)

    wide_x0 = (room_w - WIDE_DOOR) // 2 + 1
    wall({})
    room(fill_top="S")
    wall({"a": (wide_x0, WIDE_DOOR)})
    room()
    wall({s: (x0, NARROW_DOOR) for s, x0 in zip("bcd", doors_23)})
    room()
    wall({s: (mirror(x0, NARROW_DOOR, room_w), NARROW_DOOR) for s, x0 in zip("efg", doors_23)})
    room(dest=True)
    wall({})

    header = [
        "# four-room benchmark: start area on top, destination bottom right",
        f"# rooms {room_w}x{room_h} cells ({room_w * 0.4:.1f} m x {room_h * 0.4:.1f} m), 1-cell walls",
        f"# room1->room2: one {WIDE_DOOR}-cell opening ({WIDE_DOOR * 0.4:.1f} m) 'a'",
        f"# room2->room3: openings b,c,d of {NARROW_DOOR} cells ({NARROW_DOOR * 0.4:.1f} m) at x={list(doors_23)}",
        "# room3->room4: openings e,f,g mirrored left-right",
        "# dimensions and door positions approximate the published figure",
    ]
    return (
        "\n".join(header)
        + "\n[grid]\n"
        + "\n".join("".join(r) for r in rows)
        + f"\n[legend]\nS.inflow = {inflow!r}\nS.destination = 1\n"
    )
