"""Entropy maps: per-cell uncertainty of the next-opening choice.

For every walkable cell a phantom agent (reference speed, no footprint) is
placed in the snapshot and its choice distribution over next openings is
computed exactly as a live agent would see it, except that the following
stimulus is averaged over analytically instead of sampled.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .route_choice import softmax
from .topology import localize, paths, remaining_time

SENTINEL = -1.0


@dataclass(frozen=True, eq=False)
class EntropyMap:
    step: int
    destination: str
    values: np.ndarray  # [y, x] bits, SENTINEL off the walkable area
    h_max: float


def entropy_of(probs) -> float:
    """Shannon entropy in bits; zero-probability terms contribute nothing."""
    p = np.asarray(probs, dtype=float)
    if p.size == 0:
        raise ValueError("empty distribution")
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a probability vector: {p}")
    nz = p[p > 0]
    # -p*log2(p) rather than p*log2(1/p): 1/p overflows for subnormal p
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def _option_table(tree, region, cm):
    """First openings available from ``region`` with their best free-flow time."""
    best: dict[str, float] = {}
    for opt in paths(tree, region, cm):
        t = best.get(opt.first_opening)
        if t is None or opt.tt < t:
            best[opt.first_opening] = opt.tt
    keys = sorted(best)
    return keys, np.array([best[k] for k in keys])


def max_option_count(snapshot, destination: str) -> int:
    cm = snapshot.cognitive_map
    tree = snapshot.paths_trees[destination]
    return max([1] + [len(_option_table(tree, r, cm)[0]) for r in cm.regions])


def _region_probs(snapshot, destination: str, region: int, cells: list) -> tuple[list[str], np.ndarray]:
    """Choice probabilities (cells x openings) for phantom agents at ``cells`` in ``region``."""
    cm = snapshot.cognitive_map
    params = snapshot.params
    fields = snapshot.path_fields
    tree = snapshot.paths_trees[destination]
    keys, tt = _option_table(tree, region, cm)
    n = len(cells)
    if not keys:
        return [], np.zeros((n, 0))
    xs = np.array([c[0] for c in cells])
    ys = np.array([c[1] for c in cells])
    speed = params.speed_ref
    pf = np.stack([fields[k].values[ys, xs] for k in keys], axis=1)
    times = tt[None, :] * (tree.speed_ref / speed) + pf / speed
    e_tt = np.where(np.isfinite(times), times.min(axis=1, keepdims=True) / times, 0.0)

    e_q = np.zeros((n, len(keys)))
    if params.k_q != 0 and snapshot.agents:
        ax = np.array([a.pos[0] for a in snapshot.agents])
        ay = np.array([a.pos[1] for a in snapshot.agents])
        adest = np.array([a.dest if a.dest is not None else "" for a in snapshot.agents], dtype=object)
        raw = {}
        for oid in cm.region_openings(region):
            vals = fields[oid].values
            ahead = np.sort(vals[ay[adest == oid], ax[adest == oid]])
            mine = vals[ys, xs]
            count = np.searchsorted(ahead, mine, side="left")
            raw[oid] = np.where(mine < params.gamma, count, 0) / cm.openings[oid].width
        top = np.max(np.stack(list(raw.values()), axis=1), axis=1)
        for j, k in enumerate(keys):
            e_q[:, j] = np.where(top > 0, raw[k] / np.where(top > 0, top, 1.0), 0.0)

    base = params.k_tt * e_tt - params.k_q * e_q
    reachable = np.isfinite(times)
    probs = np.zeros((n, len(keys)))
    for i in range(n):
        ok = reachable[i]
        if not ok.any():
            continue
        u = base[i, ok]
        p = softmax(u)
        if params.k_f != 0:
            # average over which opening the following stimulus would pick
            names = [k for k, m in zip(keys, ok) if m]
            infl = snapshot.choice_field.influence(cells[i])
            picks = [j for j, k in enumerate(names) if k in infl]
            if picks:
                weights = np.array([infl[names[j]] for j in picks])
                weights /= weights.sum()
                p = np.zeros(len(u))
                for j, wj in zip(picks, weights):
                    bumped = u.copy()
                    bumped[j] += params.k_f
                    p += wj * softmax(bumped)
        probs[i, ok] = p
    return keys, probs


def _cells_by_region(snapshot, destination: str) -> dict[int, list]:
    cm = snapshot.cognitive_map
    tree = snapshot.paths_trees[destination]
    remaining = remaining_time(tree, cm)
    walk = snapshot.scenario.walkable
    groups: dict[int, list] = {}
    for y, x in zip(*np.nonzero(walk)):
        cell = (int(x), int(y))
        r = localize(cell, cm, tree, remaining)
        if r is not None:
            groups.setdefault(r, []).append(cell)
    return groups


def choice_distribution_at(cell, destination: str, snapshot) -> tuple[list[str], np.ndarray]:
    """Next-opening distribution of a phantom agent at ``cell`` (``[destination]`` inside its region)."""
    cm = snapshot.cognitive_map
    tree = snapshot.paths_trees[destination]
    region = localize(cell, cm, tree)
    if region is None:
        return [], np.zeros(0)
    if cm.destination_locations[destination] == region:
        return [destination], np.ones(1)
    keys, probs = _region_probs(snapshot, destination, region, [cell])
    mask = probs[0] > 0
    return [k for k, m in zip(keys, mask) if m], probs[0][mask]


def entropy_map(snapshot, destination: str | None = None) -> EntropyMap:
    if destination is None:
        destination = sorted(snapshot.paths_trees)[0]
    cm = snapshot.cognitive_map
    values = np.full(snapshot.scenario.geometry.shape, SENTINEL)
    for region, cells in sorted(_cells_by_region(snapshot, destination).items()):
        if cm.destination_locations[destination] == region:
            for x, y in cells:
                values[y, x] = 0.0
            continue
        keys, probs = _region_probs(snapshot, destination, region, cells)
        for (x, y), p in zip(cells, probs):
            if p.sum() > 0:
                values[y, x] = entropy_of(p)
    h_max = math.log2(max_option_count(snapshot, destination))
    return EntropyMap(snapshot.step, destination, values, h_max)


def export_csv(m: EntropyMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# entropy-map step={m.step} dest={m.destination} hmax={m.h_max:.6f}\n")
        for row in m.values:
            fh.write(",".join(f"{v + 0.0:.6f}" for v in row) + "\n")


def _pgm_bytes(pixels: np.ndarray, comments: list[str]) -> bytes:
    h, w = pixels.shape
    header = "P5\n" + "".join(f"# {c}\n" for c in comments) + f"{w} {h}\n255\n"
    return header.encode("ascii") + pixels.astype(np.uint8).tobytes()


def to_pixels(m: EntropyMap) -> np.ndarray:
    walk = m.values != SENTINEL
    if m.h_max > 0:
        scaled = np.rint(255.0 * np.where(walk, m.values, 0.0) / m.h_max)
    else:
        scaled = np.zeros(m.values.shape)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def export_image(m: EntropyMap, path) -> None:
    """Binary graymap (P5) scaled so ``h_max`` is 255, plus a ``_mask`` companion.

    Non-walkable cells are 0 in the image; the mask image is 255 on walkable
    cells and 0 elsewhere so they can be told apart from zero entropy.
    """
    root, ext = os.path.splitext(str(path))
    mask_path = f"{root}_mask{ext or '.pgm'}"
    comments = [
        f"entropy-map step={m.step} dest={m.destination} hmax={m.h_max:.6f}",
        f"value = round(255*H/hmax); non-walkable cells are 0, see {os.path.basename(mask_path)}",
    ]
    with open(path, "wb") as fh:
        fh.write(_pgm_bytes(to_pixels(m), comments))
    mask = np.where(m.values != SENTINEL, 255, 0)
    with open(mask_path, "wb") as fh:
        fh.write(_pgm_bytes(mask, ["walkable mask: 255 walkable, 0 obstacle"]))


def read_pgm(path) -> tuple[np.ndarray, list[str]]:
    """Minimal P5 reader (used by the tests and for round-tripping exports)."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    comments = []
    pos = 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1 : end].decode().strip())
            pos = end + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError("not a binary graymap")
    w, h = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return pixels, comments
