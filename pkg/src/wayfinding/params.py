"""Model parameters.

All defaults are UNCALIBRATED: they make travel time the dominant route
criterion with congestion and following as secondary effects. The walker
constants (``k_pf``, ``k_obs``, ``k_prox``, ``proxemic_radius``) belong to a
simplified stand-in operational model.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

DT = 0.3  # seconds per step; 4/3 m/s is exactly one 0.4 m cell per step
LOG_BASE = 2


@dataclass(frozen=True)
class ModelParams:
    # tactical level
    k_tt: float = 100.0
    k_q: float = 20.0
    k_f: float = 5.0
    gamma: float = 4.0  # metres of path-field value; math.inf disables the cut-off
    rho_c: float = 5.0  # cells
    tau_c: int = 20
    tau_a: int = 10
    tau_short: int = 10
    tau_long: int = 60
    speed_ref: float = 4.0 / 3.0
    plausibility_factor: float = 3.0
    # operational level (stand-in walker); k_pf = inf means greedy descent
    k_pf: float = 3.0
    k_obs: float = 0.2
    k_prox: float = 1.0
    proxemic_radius: float = 5.0
    dt: float = DT

    def __post_init__(self):
        if self.tau_short > self.tau_long:
            raise ValueError("tau_short must not exceed tau_long")
        if self.rho_c < 0 or self.gamma < 0:
            raise ValueError("rho_c and gamma must be non-negative")
        if self.tau_c < 1:
            raise ValueError("tau_c must be at least one step")
        if self.speed_ref <= 0 or self.dt <= 0:
            raise ValueError("speed_ref and dt must be positive")
        if self.plausibility_factor < 1:
            raise ValueError("plausibility_factor must be >= 1")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: (int if f.type in ("int", int) else float) for f in fields(cls)}


def parse_number(text: str) -> float:
    """Parse a config number; accepts ``inf``/``+inf``."""
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    return float(t)
