"""Stand-in operational layer: a floor-field walker with cell exclusion.

Each step an agent passes a speed gate and then samples one of its nine
Moore cells (staying included) with probability proportional to
``exp(-k_pf*PF + k_obs*OF - k_prox*ProxF)``. Proposals are made in parallel
and conflicts on the same target cell are resolved by a uniform draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import FloorField, proxemic_kernel
from .grid import CELL_SIZE, MOORE9, Cell, step_allowed
from .params import ModelParams
from .topology import PathOption


@dataclass
class AgentState:
    id: int
    pos: Cell
    speed: float
    end: str
    region: int
    current_option: Optional[PathOption] = None  # None while heading straight for ``end``
    dest: Optional[str] = None
    last_decision_step: int = 0
    inertia_window: int = 0
    spread_until: int = 0
    entered_new_region: bool = True
    region_choices: set = field(default_factory=set)
    spawn_step: int = 0

    @property
    def direct(self) -> bool:
        return self.current_option is None and self.dest == self.end


def gate_probability(speed: float, dt: float) -> float:
    # rounded so that 4/3 m/s at 0.3 s is exactly one cell per step
    return min(1.0, round(speed * dt / CELL_SIZE, 12))


def step_move(
    agent: AgentState,
    target: FloorField,
    obstacle: FloorField,
    proxemic: FloorField,
    occupied: set,
    walkable: np.ndarray,
    params: ModelParams,
    rng,
) -> Cell:
    """Proposed next cell for ``agent`` (its own cell when it stays)."""
    p_gate = gate_probability(agent.speed, params.dt)
    if p_gate < 1.0 and rng.random() >= p_gate:
        return agent.pos
    x, y = agent.pos
    cands = []
    for dx, dy in MOORE9:
        c = (x + dx, y + dy)
        if (dx or dy) and (not step_allowed(walkable, x, y, dx, dy) or c in occupied):
            continue
        pf = target.values[c[1], c[0]]
        if math.isfinite(pf):
            cands.append((c, pf))
    if not cands:
        return agent.pos
    if math.isinf(params.k_pf):
        return min(cands, key=lambda t: t[1])[0]
    scores = []
    for c, pf in cands:
        # remove the agent's own contribution to the proxemic field
        own = proxemic_kernel(math.hypot(c[0] - x, c[1] - y))
        prox = proxemic.values[c[1], c[0]] - own if params.k_prox else 0.0
        scores.append(-params.k_pf * pf + params.k_obs * obstacle.values[c[1], c[0]] - params.k_prox * prox)
    scores = np.array(scores)
    w = np.exp(scores - scores.max())
    cdf = np.cumsum(w)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return cands[min(i, len(cands) - 1)][0]


def resolve_conflicts(proposals: dict[int, Cell], positions: dict[int, Cell], rng) -> dict[int, Cell]:
    """Accepted final cell per agent: one uniform winner per contested cell, losers stay."""
    by_cell: dict[Cell, list[int]] = {}
    out = {}
    for aid, cell in proposals.items():
        if cell == positions[aid]:
            out[aid] = cell
        else:
            by_cell.setdefault(cell, []).append(aid)
    for cell in sorted(by_cell, key=lambda c: (c[1], c[0])):
        contenders = sorted(by_cell[cell])
        winner = contenders[0] if len(contenders) == 1 else contenders[int(rng.integers(len(contenders)))]
        for aid in contenders:
            out[aid] = cell if aid == winner else positions[aid]
    return out
