"""Tactical route choice: utility components, softmax choice and plan inertia.

Agents are duck-typed: anything with ``id``, ``pos``, ``speed``, ``dest``
and ``region`` attributes can be evaluated, which lets the entropy map use
phantom agents that never enter the world.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import ChoiceField, FloorField
from .params import ModelParams
from .topology import CognitiveMap, PathOption


class Reason(str, enum.Enum):
    NEW_REGION = "new-region"
    CONGESTION = "congestion"
    NONE = "none"


@dataclass(frozen=True)
class ChoiceDistribution:
    options: tuple[PathOption, ...]
    utilities: np.ndarray
    probabilities: np.ndarray

    def probability_of(self, opening: str) -> float:
        for opt, p in zip(self.options, self.probabilities):
            if opt.first_opening == opening:
                return float(p)
        return 0.0


def travel_time(option: PathOption, pos, speed: float, fields: dict[str, FloorField], speed_ref: float) -> float:
    """Free-flow time of ``option`` rescaled to ``speed`` plus the walk to its first opening."""
    pf = fields[option.first_opening].at(pos)
    if not math.isfinite(pf):
        raise ValueError(f"position {pos} cannot reach opening {option.first_opening!r}")
    return option.tt * (speed_ref / speed) + pf / speed


def aggregate_by_first_opening(options: Sequence[PathOption], times: Sequence[float]):
    """Keep only the fastest option per first opening, ordered by opening id."""
    best: dict[str, tuple[float, PathOption]] = {}
    for opt, t in zip(options, times):
        cur = best.get(opt.first_opening)
        if cur is None or t < cur[0]:
            best[opt.first_opening] = (t, opt)
    keys = sorted(best)
    return [best[k][1] for k in keys], np.array([best[k][0] for k in keys])


def eval_tt(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return times.min() / times


def forward(opening: str, agent, agents, field: FloorField) -> int:
    """Agents other than ``agent`` heading to ``opening`` and closer to it."""
    mine = field.at(agent.pos)
    return sum(1 for other in agents if other.id != agent.id and other.dest == opening and field.at(other.pos) < mine)


def perceive_forward(opening: str, agent, gamma: float, agents, field: FloorField) -> int:
    if field.at(agent.pos) < gamma:
        return forward(opening, agent, agents, field)
    return 0


def eval_q(options: Sequence[PathOption], agent, agents, cm: CognitiveMap, fields, gamma: float) -> np.ndarray:
    """Perceived queue per metre of door width, max-normalised over the region's openings."""
    raw = {}
    for oid in cm.region_openings(agent.region):
        raw[oid] = perceive_forward(oid, agent, gamma, agents, fields[oid]) / cm.openings[oid].width
    top = max(raw.values(), default=0.0)
    if top <= 0:
        return np.zeros(len(options))
    return np.array([raw[o.first_opening] / top for o in options])


def sample_index(probs, rng) -> int:
    cdf = np.cumsum(probs)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, len(probs) - 1)


def eval_f(options: Sequence[PathOption], pos, choice_field: ChoiceField, rng) -> np.ndarray:
    """1 for the single option picked by the following stimulus at ``pos``, else 0."""
    out = np.zeros(len(options))
    available = {o.first_opening for o in options}
    infl = {k: v for k, v in choice_field.influence(pos).items() if k in available}
    if not infl:
        return out
    keys = sorted(infl)
    picked = keys[sample_index([infl[k] for k in keys], rng)]
    for i, o in enumerate(options):
        if o.first_opening == picked:
            out[i] = 1.0
    return out


def utility(e_tt, e_q, e_f, params: ModelParams) -> np.ndarray:
    return params.k_tt * np.asarray(e_tt) - params.k_q * np.asarray(e_q) + params.k_f * np.asarray(e_f)


def softmax(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    e = np.exp(u - u.max())
    return e / e.sum()


def choose_path(options: Sequence[PathOption], utilities, rng) -> tuple[ChoiceDistribution, PathOption]:
    if not options:
        raise ValueError("no options to choose from")
    probs = softmax(utilities)
    dist = ChoiceDistribution(tuple(options), np.asarray(utilities, dtype=float), probs)
    return dist, options[sample_index(probs, rng)]


def evaluate(agent, options, *, agents, cm, fields, choice_field, params: ModelParams, rng):
    """Full evaluation for a live agent: aggregate, score, and sample a plan."""
    times = [travel_time(o, agent.pos, agent.speed, fields, params.speed_ref) for o in options]
    opts, times = aggregate_by_first_opening(options, times)
    e_tt = eval_tt(times)
    e_q = eval_q(opts, agent, agents, cm, fields, params.gamma) if params.k_q != 0 else np.zeros(len(opts))
    # no draw when following is switched off, so the random stream does not depend on the field
    e_f = eval_f(opts, agent.pos, choice_field, rng) if params.k_f != 0 else np.zeros(len(opts))
    return choose_path(opts, utility(e_tt, e_q, e_f, params), rng)


def should_reevaluate(agent, step: int, congested: bool) -> tuple[bool, Reason]:
    """Lifecycle gate: a new region always re-plans, congestion only outside the inertia window."""
    if agent.entered_new_region or agent.current_option is None and agent.dest is None:
        return True, Reason.NEW_REGION
    if congested and step - agent.last_decision_step >= agent.inertia_window:
        return True, Reason.CONGESTION
    return False, Reason.NONE


def apply_decision(agent, option: PathOption, step: int, reason: Reason, params: ModelParams) -> bool:
    """Commit a decision and set the next inertia window; returns True if the plan changed.

    Re-picking the current opening, or one already tried in this region,
    earns the long window; a fresh decision the short one.
    """
    previous = agent.dest
    new = option.first_opening
    if reason is Reason.NEW_REGION:
        agent.region_choices = {new}
        agent.inertia_window = params.tau_short
    else:
        agent.inertia_window = params.tau_long if new in agent.region_choices else params.tau_short
        agent.region_choices.add(new)
    agent.entered_new_region = False
    agent.last_decision_step = step
    agent.current_option = option
    agent.dest = new
    return reason is Reason.CONGESTION and new != previous
