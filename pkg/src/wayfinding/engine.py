"""World state and the per-step agent lifecycle.

One :func:`tick` runs, in order: choice-field decay, arrivals, the tactical
pass (per agent, in a fresh random order), movement with conflict
resolution, the proxemic rebuild, and removal of agents that reached their
destination.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import fields as ff
from .operational import AgentState, resolve_conflicts, step_move
from .params import ModelParams
from .route_choice import Reason, apply_decision, evaluate, should_reevaluate
from .scenario import Scenario, validate_scenario
from .topology import CognitiveMap, PathsTree, build_cognitive_map, build_paths_tree, paths

log = logging.getLogger(__name__)


class ScenarioInvalid(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class SpawnConfig:
    start_area: str
    rate: float  # persons per second
    destination: str
    speed: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("spawn rate must be non-negative")


@dataclass(frozen=True, eq=False)
class AgentView:
    id: int
    pos: tuple[int, int]
    speed: float
    dest: Optional[str]
    region: int
    end: str


@dataclass(frozen=True, eq=False)
class WorldSnapshot:
    """Immutable view of a world between ticks, as handed to exporters."""

    step: int
    scenario: Scenario
    path_fields: dict
    cognitive_map: CognitiveMap
    paths_trees: dict
    params: ModelParams
    agents: tuple[AgentView, ...]
    choice_field: ff.ChoiceField


@dataclass
class StepLog:
    step: int
    agents: int
    reevaluations: int
    changes: int


@dataclass(eq=False)
class WorldState:
    scenario: Scenario
    params: ModelParams
    path_fields: dict[str, ff.FloorField]
    obstacle_field: ff.FloorField
    proxemic_field: ff.FloorField
    choice_field: ff.ChoiceField
    cognitive_map: CognitiveMap
    paths_trees: dict[str, PathsTree]
    spawns: list[SpawnConfig]
    rng: np.random.Generator
    arrivals: str = "poisson"
    step: int = 0
    agents: list[AgentState] = field(default_factory=list)
    next_id: int = 0
    spawned: int = 0
    despawned: int = 0
    backlog: dict[str, int] = field(default_factory=dict)
    accrued: dict[str, float] = field(default_factory=dict)
    crossings: dict[str, int] = field(default_factory=dict)
    history: list[StepLog] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    choice_updates: bool = True  # False keeps the choice field empty (ablation)
    snapshotted: set = field(default_factory=set)  # steps already handed to hooks

    def snapshot(self) -> WorldSnapshot:
        views = tuple(AgentView(a.id, a.pos, a.speed, a.dest, a.region, a.end) for a in self.agents)
        return WorldSnapshot(
            self.step,
            self.scenario,
            self.path_fields,
            self.cognitive_map,
            self.paths_trees,
            self.params,
            views,
            self.choice_field.copy(),
        )


def default_spawns(scenario: Scenario, params: ModelParams) -> list[SpawnConfig]:
    dests = sorted(scenario.destinations)
    out = []
    for sid, m in sorted(scenario.start_areas.items()):
        out.append(
            SpawnConfig(
                sid,
                float(m.attributes.get("inflow", 0.0)),
                str(m.attributes.get("destination", dests[0])),
                float(m.attributes.get("speed", params.speed_ref)),
            )
        )
    return out


def init(
    scenario: Scenario,
    params: ModelParams | None = None,
    seed: int = 0,
    spawns: Iterable[SpawnConfig] | None = None,
    arrivals: str = "poisson",
) -> WorldState:
    """Spread all fields, build the cognitive map and paths trees; no agents yet."""
    params = params or ModelParams()
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioInvalid(violations)
    if arrivals not in ("poisson", "constant"):
        raise ValueError(f"unknown arrival process {arrivals!r}")
    path_fields = {}
    for oid, m in sorted(scenario.openings.items()):
        path_fields[oid] = ff.spread_path_field(scenario, m.cells, oid)
    for did, m in sorted(scenario.destinations.items()):
        path_fields[did] = ff.spread_path_field(scenario, m.cells, did)
    cm = build_cognitive_map(scenario)
    trees = {
        did: build_paths_tree(cm, path_fields, did, params.speed_ref, params.plausibility_factor)
        for did in sorted(scenario.destinations)
    }
    shape = scenario.geometry.shape
    return WorldState(
        scenario=scenario,
        params=params,
        path_fields=path_fields,
        obstacle_field=ff.spread_obstacle_field(scenario),
        proxemic_field=ff.update_proxemic_field([], params.proxemic_radius, shape),
        choice_field=ff.ChoiceField(shape, scenario.openings, scenario.walkable),
        cognitive_map=cm,
        paths_trees=trees,
        spawns=list(spawns) if spawns is not None else default_spawns(scenario, params),
        rng=np.random.default_rng(seed),
        arrivals=arrivals,
    )


def _spawn(w: WorldState) -> None:
    occupied = {a.pos for a in w.agents}
    cm = w.cognitive_map
    for sc in w.spawns:
        if sc.rate > 0:
            mean = sc.rate * w.params.dt
            if w.arrivals == "poisson":
                new = int(w.rng.poisson(mean))
            else:
                acc = w.accrued.get(sc.start_area, 0.0) + mean
                new = int(math.floor(acc + 1e-12))
                w.accrued[sc.start_area] = acc - new
            w.backlog[sc.start_area] = w.backlog.get(sc.start_area, 0) + new
        want = w.backlog.get(sc.start_area, 0)
        if not want:
            continue
        cells = sorted(w.scenario.start_areas[sc.start_area].cells, key=lambda c: (c[1], c[0]))
        free = [c for c in cells if c not in occupied]
        if not free:
            continue
        order = w.rng.permutation(len(free))
        placed = 0
        for i in order[:want]:
            cell = free[int(i)]
            occupied.add(cell)
            w.agents.append(
                AgentState(
                    id=w.next_id,
                    pos=cell,
                    speed=sc.speed,
                    end=sc.destination,
                    region=cm.region_at(cell),  # localization from the static map
                    spawn_step=w.step,
                )
            )
            w.next_id += 1
            placed += 1
        w.backlog[sc.start_area] = want - placed
        w.spawned += placed


def _tactical(w: WorldState, order: np.ndarray) -> tuple[int, int]:
    p = w.params
    cm = w.cognitive_map
    agents = w.agents
    xs = np.array([a.pos[0] for a in agents], dtype=np.int64)
    ys = np.array([a.pos[1] for a in agents], dtype=np.int64)
    dests = np.array([a.dest if a.dest is not None else "" for a in agents], dtype=object)
    reevals = changes = 0

    def congested(i: int, a: AgentState) -> bool:
        fld = w.path_fields[a.dest]
        mine = fld.values[a.pos[1], a.pos[0]]
        if not mine < p.gamma:
            return False
        ahead = (dests == a.dest) & (fld.values[ys, xs] < mine)
        ahead[i] = False
        return bool(ahead.any())

    for i in order:
        i = int(i)
        a = agents[i]
        tree = w.paths_trees[a.end]
        if cm.destination_locations[a.end] == a.region:
            if a.dest != a.end:
                a.current_option = None
                a.dest = a.end
                dests[i] = a.end
            a.entered_new_region = False
            continue
        if not a.entered_new_region and a.dest is not None:
            window_open = w.step - a.last_decision_step >= a.inertia_window
            go, reason = should_reevaluate(a, w.step, window_open and congested(i, a))
        else:
            go, reason = True, Reason.NEW_REGION
        if go:
            options = paths(tree, a.region, cm)
            if not options:
                a.dest = None
                a.current_option = None
                dests[i] = ""
                continue
            _, choice = evaluate(
                a,
                options,
                agents=agents,
                cm=cm,
                fields=w.path_fields,
                choice_field=w.choice_field,
                params=p,
                rng=w.rng,
            )
            changed = apply_decision(a, choice, w.step, reason, p)
            dests[i] = a.dest
            reevals += 1
            if changed:
                changes += 1
                a.spread_until = w.step + p.tau_a
        if w.choice_updates and w.step < a.spread_until and a.dest in w.choice_field.openings:
            ff.diffuse_choice(w.choice_field, a.pos, a.id, a.dest, p.rho_c)
    return reevals, changes


def _move(w: WorldState, order: np.ndarray) -> None:
    occupied = {a.pos for a in w.agents}
    proposals = {}
    positions = {}
    walk = w.scenario.walkable
    for i in order:
        a = w.agents[int(i)]
        positions[a.id] = a.pos
        if a.dest is None:
            proposals[a.id] = a.pos
            continue
        proposals[a.id] = step_move(
            a, w.path_fields[a.dest], w.obstacle_field, w.proxemic_field, occupied, walk, w.params, w.rng
        )
    accepted = resolve_conflicts(proposals, positions, w.rng)
    cm = w.cognitive_map
    for a in w.agents:
        new = accepted[a.id]
        if new == a.pos:
            continue
        a.pos = new
        oid = cm.opening_of.get(new)
        if oid is not None:
            if oid == a.dest and oid in cm.openings:
                w.crossings[oid] = w.crossings.get(oid, 0) + 1
                a.region = cm.openings[oid].other_side(a.region)
                a.entered_new_region = True
            continue
        r = cm.region_at(new)
        if r != a.region:
            a.region = r
            a.entered_new_region = True


def tick(w: WorldState) -> WorldState:
    p = w.params
    ff.decay_choice(w.choice_field, p.tau_c)
    _spawn(w)
    order = w.rng.permutation(len(w.agents))
    reevals, changes = _tactical(w, order)
    _move(w, order)
    w.proxemic_field = ff.update_proxemic_field([a.pos for a in w.agents], p.proxemic_radius, w.scenario.geometry.shape)
    kept = []
    for a in w.agents:
        if a.pos in w.scenario.destinations[a.end].cells:
            w.despawned += 1
        else:
            kept.append(a)
    w.agents = kept
    w.history.append(StepLog(w.step, len(w.agents), reevals, changes))
    log.info("step=%d agents=%d reevaluations=%d changes=%d", w.step, len(w.agents), reevals, changes)
    w.step += 1
    return w


Hook = Callable[[WorldSnapshot], None]


def emit(w: WorldState, hooks: Iterable[Hook]) -> None:
    """Hand one snapshot of the current step to every hook, recording I/O failures."""
    w.snapshotted.add(w.step)
    snap = w.snapshot()
    for hook in hooks:
        try:
            hook(snap)
        except OSError as exc:
            msg = f"step {w.step}: {exc}"
            w.errors.append(msg)
            log.error("artifact export failed: %s", msg)


def run(
    w: WorldState,
    n_steps: int,
    snapshot_steps: Iterable[int] = (),
    hooks: Iterable[Hook] = (),
) -> WorldState:
    """Advance ``n_steps`` ticks, calling every hook on a snapshot at each requested step.

    Steps are absolute world steps, each snapshotted at most once per world,
    so back-to-back runs do not repeat the boundary step. ``n_steps = 0``
    is a no-op. Hook I/O failures are recorded in ``w.errors`` and do not
    stop the run.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if n_steps == 0:
        return w
    wanted = set(snapshot_steps)
    hooks = list(hooks)
    last = w.step + n_steps
    while True:
        if hooks and w.step in wanted and w.step not in w.snapshotted:
            emit(w, hooks)
        if w.step >= last:
            break
        tick(w)
    return w
