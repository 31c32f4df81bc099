"""Command-line entry point.

Subcommands: ``generate-benchmark``, ``run``, ``validate``, ``dump-topology``.
``run`` reads an optional flat ``key = value`` config file; every key can
also be given as a flag of the same name, which takes precedence.
Exit codes: 0 ok, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace

from . import engine
from .benchmark import benchmark_text
from .entropy import entropy_map, export_csv, export_image
from .params import ModelParams, parse_number
from .scenario import ScenarioSyntaxError, load_scenario, validate_scenario
from .topology import TopologyError, build_cognitive_map, topology_report

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

UNCALIBRATED = "UNCALIBRATED default"


@dataclass
class RunConfig:
    scenario: str = ""
    seed: int = 0
    steps: int = 0
    snapshot_steps: list[int] = field(default_factory=lambda: [0])
    output: str = "out"
    arrivals: str = "poisson"
    images: bool = True
    params: ModelParams = field(default_factory=ModelParams)

    def validate(self) -> list[str]:
        out = []
        if not self.scenario:
            out.append("no scenario given")
        if self.steps < 0:
            out.append("steps must be >= 0")
        bad = [s for s in self.snapshot_steps if not 0 <= s <= self.steps]
        if bad:
            out.append(f"snapshot steps {bad} outside [0, {self.steps}]")
        return out

    def dump(self) -> str:
        lines = [
            f"scenario = {self.scenario}",
            f"seed = {self.seed}",
            f"steps = {self.steps}",
            f"snapshot_steps = {','.join(str(s) for s in self.snapshot_steps)}",
            f"output = {self.output}",
            f"arrivals = {self.arrivals}",
            f"images = {str(self.images).lower()}",
        ]
        for k, v in self.params.as_dict().items():
            lines.append(f"{k} = {v!r}")
        return "\n".join(lines) + "\n"


_RUN_KEYS = {"scenario", "seed", "steps", "snapshot_steps", "output", "arrivals", "images"}
_PARAM_TYPES = ModelParams.field_types()


def _coerce(key: str, value: str):
    if key in ("seed", "steps"):
        return int(value)
    if key == "snapshot_steps":
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    if key == "images":
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"bad boolean {value!r}")
        return value.lower() in ("true", "1", "yes")
    if key in _PARAM_TYPES:
        if _PARAM_TYPES[key] is int:
            return int(value)
        return parse_number(value)
    return value


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        if key not in _RUN_KEYS and key not in _PARAM_TYPES:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: {exc}") from None
    return out


def build_config(values: dict) -> RunConfig:
    cfg = RunConfig()
    param_changes = {k: v for k, v in values.items() if k in _PARAM_TYPES}
    run_changes = {k: v for k, v in values.items() if k in _RUN_KEYS}
    cfg = replace(cfg, **run_changes)
    cfg.params = replace(cfg.params, **param_changes)
    return cfg


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--scenario")
    p.add_argument("--seed")
    p.add_argument("--steps")
    p.add_argument("--snapshot_steps", help="comma-separated steps, e.g. 0,325,625,650")
    p.add_argument("--output", help="artifact directory")
    p.add_argument("--arrivals", choices=["poisson", "constant"])
    p.add_argument("--images", help="true/false: also write graymap images")
    p.add_argument("-v", "--verbose", action="store_true", help="per-step run log on stdout")
    defaults = ModelParams()
    for f in fields(ModelParams):
        p.add_argument(f"--{f.name}", help=f"{UNCALIBRATED}: {getattr(defaults, f.name)!r}")


def _load(path: str):
    """(scenario, exit code, message)."""
    try:
        return load_scenario(path), EXIT_OK, ""
    except OSError as exc:
        return None, EXIT_IO, f"cannot read scenario: {exc}"
    except ScenarioSyntaxError as exc:
        return None, EXIT_INVALID, f"scenario syntax error: {exc}"


def _violations(scenario) -> list[str]:
    out = validate_scenario(scenario)
    if not out:
        try:
            build_cognitive_map(scenario)
        except TopologyError as exc:
            out.extend(exc.violations)
    return out


def cmd_generate_benchmark(args) -> int:
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(benchmark_text())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario, code, msg = _load(args.scenario)
    if scenario is None:
        print(msg, file=sys.stderr)
        return code
    problems = _violations(scenario)
    for v in problems:
        print(v)
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_dump_topology(args) -> int:
    scenario, code, msg = _load(args.scenario)
    if scenario is None:
        print(msg, file=sys.stderr)
        return code
    try:
        w = engine.init(scenario, ModelParams())
    except (engine.ScenarioInvalid, TopologyError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = topology_report(w.cognitive_map, w.paths_trees)
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(report)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(report)
    return EXIT_OK


def resolve_run_config(args) -> RunConfig:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(parse_config(fh.read()))
    for key in list(_RUN_KEYS) + list(_PARAM_TYPES):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _coerce(key, v)
    return build_config(values)


def artifact_name(step: int, dest: str, ext: str) -> str:
    return f"entropy_step{step:05d}_dest{dest}.{ext}"


def execute(cfg: RunConfig, verbose: bool = False) -> tuple[int, engine.WorldState | None]:
    """Run a configured simulation, writing every artifact into ``cfg.output``."""
    problems = cfg.validate()
    if problems:
        for p in problems:
            print(f"invalid config: {p}", file=sys.stderr)
        return EXIT_INVALID, None
    scenario, code, msg = _load(cfg.scenario)
    if scenario is None:
        print(msg, file=sys.stderr)
        return code, None
    try:
        w = engine.init(scenario, cfg.params, cfg.seed, arrivals=cfg.arrivals)
    except (engine.ScenarioInvalid, TopologyError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID, None
    try:
        os.makedirs(cfg.output, exist_ok=True)
        with open(os.path.join(cfg.output, "config.txt"), "w", encoding="utf-8") as fh:
            fh.write(cfg.dump())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO, None

    def export(snap):
        for dest in sorted(snap.paths_trees):
            m = entropy_map(snap, dest)
            export_csv(m, os.path.join(cfg.output, artifact_name(snap.step, dest, "csv")))
            if cfg.images:
                export_image(m, os.path.join(cfg.output, artifact_name(snap.step, dest, "pgm")))

    if verbose:
        print("step,agents,reevaluations,changes")
    wanted = set(cfg.snapshot_steps)
    while True:
        if w.step in wanted:
            engine.emit(w, [export])
        if w.step >= cfg.steps:
            break
        engine.tick(w)
        if verbose:
            h = w.history[-1]
            print(f"{h.step},{h.agents},{h.reevaluations},{h.changes}")

    summary = [
        f"steps = {w.step}",
        f"spawned = {w.spawned}",
        f"despawned = {w.despawned}",
        f"in_world = {len(w.agents)}",
    ]
    for oid in sorted(w.cognitive_map.openings):
        summary.append(f"crossings.{oid} = {w.crossings.get(oid, 0)}")
    for err in w.errors:
        summary.append(f"error = {err}")
    try:
        with open(os.path.join(cfg.output, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(summary) + "\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO, w
    print("\n".join(summary))
    if w.errors:
        for err in w.errors:
            print(f"artifact error: {err}", file=sys.stderr)
        return EXIT_IO, w
    return EXIT_OK, w


def cmd_run(args) -> int:
    try:
        cfg = resolve_run_config(args)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    code, _ = execute(cfg, verbose=args.verbose)
    return code


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wayfinding",
        description="Grid pedestrian wayfinding simulator with entropy-map export. "
        "All model parameter defaults are UNCALIBRATED.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-benchmark", help="write the four-room benchmark scenario")
    p.add_argument("out")
    p.set_defaults(func=cmd_generate_benchmark)

    p = sub.add_parser("run", help="simulate and export entropy maps")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dump-topology", help="print the cognitive map and paths trees")
    p.add_argument("scenario")
    p.add_argument("--output")
    p.set_defaults(func=cmd_dump_topology)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
