"""Run configs (YAML), program registry, and JSON-Lines traces and scripts.

Trace files: line 1 is the metadata object, line 2 the initial
configuration, then one ``{t, s, r, flavor, pre, post}`` object per event.
Verification summaries are appended as ``{"summary": ...}`` lines. Attack
scripts use the same layout without ``post``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from . import protocols as pr
from .scheduling import (
    FiniteBudget,
    LeaderBounded,
    Never,
    NoOmissions,
    RandomOmissions,
    RoundRobinPairs,
    Scripted,
    ScriptedOmissions,
    Trace,
    UniformRandom,
    Unrestricted,
)
from .semantics import (
    AgentProgram,
    Configuration,
    Flavor,
    InteractionEvent,
    ModelSemantics,
    ProtocolTable,
    preset_semantics,
    table_program,
)


class ConfigError(ValueError):
    pass


# -- protocol tables ---------------------------------------------------------

def table_to_dict(table: ProtocolTable) -> dict:
    return {
        "name": table.name,
        "states": sorted(table.states, key=str),
        "initial": sorted(table.initial_states, key=str),
        "rules": [[qs, qr, fs, fr] for (qs, qr), (fs, fr) in sorted(table.rules.items(), key=str)],
    }


def table_from_dict(d) -> ProtocolTable:
    if d in (None, "pairing"):
        return pr.pairing_program()
    if isinstance(d, str):
        raise ConfigError(f"unknown protocol {d!r}; give 'pairing' or an inline table")
    try:
        rules = {(qs, qr): (fs, fr) for qs, qr, fs, fr in d["rules"]}
        return ProtocolTable(d["states"], d["initial"], rules, d.get("name", "P"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad protocol table: {exc}") from exc


# -- programs ----------------------------------------------------------------

PROGRAMS = ("pairing", "table", "naming_unbounded", "naming_i12", "naming_t1", "it_token", "strawman", "strawman_t1")


def build_program(spec: dict) -> AgentProgram:
    name = spec.get("name")
    if name == "pairing":
        return table_program(pr.pairing_program())
    if name == "table":
        return table_program(table_from_dict(spec.get("protocol")))
    if name == "naming_unbounded":
        return pr.naming_unbounded_program()
    if name in ("naming_i12", "naming_t1"):
        if "L" not in spec:
            raise ConfigError(f"program {name} needs the omission bound L")
        maker = pr.naming_i12_program if name == "naming_i12" else pr.naming_t1_program
        return maker(int(spec["L"]))
    if name == "it_token":
        return pr.it_token_simulator(table_from_dict(spec.get("protocol")),
                                     literal_token_copy=bool(spec.get("literal_token_copy", False)))
    if name == "strawman":
        return pr.strawman_simulator(table_from_dict(spec.get("protocol")), int(spec.get("alarm_levels", 0)))
    if name == "strawman_t1":
        return pr.strawman_t1_simulator(table_from_dict(spec.get("protocol")))
    raise ConfigError(f"unknown program {name!r}; expected one of {', '.join(PROGRAMS)}")


def program_spec(prog: AgentProgram) -> dict:
    """Inverse of :func:`build_program` for the shipped programs."""
    p = prog.params
    if prog.name.startswith("table:"):
        return {"name": "table", "protocol": table_to_dict(p["table"])}
    if prog.name in ("naming_i12", "naming_t1"):
        return {"name": prog.name, "L": p["L"]}
    if prog.name == "naming_unbounded":
        return {"name": prog.name}
    if prog.name == "it_token":
        return {"name": "it_token", "protocol": table_to_dict(p["table"]),
                "literal_token_copy": p["literal_token_copy"]}
    if prog.name == "strawman":
        return {"name": "strawman", "protocol": table_to_dict(p["table"]), "alarm_levels": p["alarm_levels"]}
    raise ConfigError(f"program {prog.name!r} cannot be serialised")


def semantics_from(obj) -> ModelSemantics:
    if isinstance(obj, str):
        try:
            return preset_semantics(obj)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if isinstance(obj, dict):
        d = dict(obj)
        preset = d.pop("preset", None)
        base = preset_semantics(preset).to_dict() if preset else {}
        base.update(d)
        try:
            return ModelSemantics.from_dict(base)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad semantics: {exc}") from exc
    raise ConfigError("semantics must be a preset name or a mapping of flags")


# -- populations, schedulers, adversaries ------------------------------------

def _simulated(pop: dict, n: Optional[int]) -> list:
    sim = pop.get("simulated")
    if sim is None:
        raise ConfigError("population.simulated is required for this program")
    if isinstance(sim, dict):
        out = [q for q, count in sim.items() for _ in range(int(count))]
    else:
        out = list(sim)
    if n is not None and len(out) != n:
        raise ConfigError(f"population.n = {n} but {len(out)} simulated states given")
    return out


def build_population(prog_spec: dict, pop: dict, prog: AgentProgram) -> Configuration:
    name = prog_spec["name"]
    n = pop.get("n")
    leader = pop.get("leader", 0)
    if name in ("naming_unbounded", "naming_i12", "naming_t1"):
        if n is None:
            raise ConfigError("population.n is required")
        if leader is None or not 0 <= leader < n:
            raise ConfigError(f"{name} needs a leader index in [0, {n})")
        if name == "naming_unbounded":
            return pr.naming_unbounded_population(n, leader)
        maker = pr.naming_i12_population if name == "naming_i12" else pr.naming_t1_population
        return maker(n, int(prog_spec["L"]), leader)
    sim = _simulated(pop, n)
    table = prog.params.get("table")
    bad = [q for q in sim if q not in table.initial_states]
    if bad:
        raise ConfigError(f"states {sorted(set(bad))} are not initial states of {table.name}")
    if name in ("pairing", "table"):
        if pop.get("leader") is not None:
            raise ConfigError("plain protocol tables have no leader")
        return Configuration(sim)
    if leader is None or not 0 <= leader < len(sim):
        raise ConfigError(f"{name} needs a leader index in [0, {len(sim)})")
    if name == "it_token":
        return pr.it_token_population(sim, leader)
    return pr.strawman_population(sim, leader)


def scheduler_from(obj):
    if obj is None or obj == "uniform":
        return UniformRandom()
    if obj == "roundrobin":
        return RoundRobinPairs()
    if isinstance(obj, dict):
        kind = obj.get("kind", "uniform")
        if kind == "uniform":
            return UniformRandom(obj.get("seed"))
        if kind == "roundrobin":
            return RoundRobinPairs()
        if kind == "scripted":
            return Scripted(obj["pairs"])
    raise ConfigError(f"unknown scheduler {obj!r}")


def _policy_from(d: dict):
    policy = d.get("policy", "never")
    if policy == "never":
        return Never()
    if policy == "random":
        flavors = tuple(Flavor(f) for f in d["flavors"]) if d.get("flavors") else RandomOmissions.flavors
        return RandomOmissions(float(d.get("rate", 0.1)), d.get("seed"), flavors)
    if policy == "scripted":
        return ScriptedOmissions({int(t): Flavor(f) for t, f in d.get("steps", {}).items()})
    raise ConfigError(f"unknown omission policy {policy!r}")


def adversary_from(obj):
    if obj is None or obj == "none":
        return NoOmissions()
    if not isinstance(obj, dict):
        raise ConfigError(f"unknown adversary {obj!r}")
    kind = obj.get("kind", "none")
    policy = _policy_from(obj)
    if kind == "none":
        return NoOmissions()
    if kind == "finite":
        return FiniteBudget(int(obj["budget"]), policy)
    if kind == "unrestricted":
        return Unrestricted(policy)
    if kind == "leader_bounded":
        return LeaderBounded(int(obj["budget"]), policy)
    raise ConfigError(f"unknown adversary kind {kind!r}")


# -- run configs -------------------------------------------------------------

@dataclass
class RunConfig:
    program: dict
    semantics: ModelSemantics
    population: dict
    scheduler: Any = None
    adversary: Any = None
    horizon: int = 100_000
    seed: int = 0
    window: int = 10_000
    out: Optional[str] = None
    raw: dict = field(default_factory=dict)

    def build(self):
        prog = build_program(self.program)
        init = build_population(self.program, self.population, prog)
        return prog, init


def load_config(path) -> RunConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict) or "program" not in raw:
        raise ConfigError("config needs a 'program' section")
    prog = raw["program"]
    if isinstance(prog, str):
        prog = {"name": prog}
    run = raw.get("run", {}) or {}
    horizon = int(run.get("horizon", 100_000))
    if horizon < 0:
        raise ConfigError("run.horizon must be non-negative")
    cfg = RunConfig(
        program=dict(prog),
        semantics=semantics_from(raw.get("semantics", "TW")),
        population=dict(raw.get("population", {}) or {}),
        scheduler=scheduler_from(raw.get("scheduler")),
        adversary=adversary_from(raw.get("adversary")),
        horizon=horizon,
        seed=int(run.get("seed", 0)),
        window=int(run.get("window", 10_000)),
        out=run.get("out"),
        raw=raw,
    )
    cfg.build()          # resolve every reference up front
    return cfg


# -- traces and scripts ------------------------------------------------------

def _event_line(prog, ev: InteractionEvent, with_post=True) -> dict:
    line = {"t": ev.time, "s": ev.starter, "r": ev.reactor, "flavor": ev.flavor.value,
            "pre": [prog.encode(q) for q in ev.pre]}
    if with_post:
        line["post"] = [prog.encode(q) for q in ev.post]
    return line


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), sort_keys=True)


def write_trace(trace: Trace, prog: AgentProgram, path, with_post: bool = True) -> Path:
    path = Path(path)
    meta = dict(trace.meta)
    meta.setdefault("program_spec", program_spec(prog))
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_dumps(meta) + "\n")
        fh.write(_dumps({"agents": [prog.encode(q) for q in trace.initial.agents],
                         "leader": trace.initial.leader_index}) + "\n")
        for ev in trace.events:
            fh.write(_dumps(_event_line(prog, ev, with_post)) + "\n")
    return path


def read_trace(path, prog: Optional[AgentProgram] = None) -> tuple:
    """Load a trace (or script) file; returns ``(trace, prog, sem, summaries)``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 2:
        raise ConfigError(f"{path}: not a trace file (needs metadata and initial configuration)")
    meta = json.loads(lines[0])
    if prog is None:
        prog = build_program(meta["program_spec"])
    sem = ModelSemantics.from_dict(meta["semantics"])
    first = json.loads(lines[1])
    init = Configuration([prog.decode(q) for q in first["agents"]], first.get("leader"))
    events, summaries = [], []
    for raw in lines[2:]:
        obj = json.loads(raw)
        if "summary" in obj:
            summaries.append(obj["summary"])
            continue
        pre = tuple(prog.decode(q) for q in obj["pre"])
        post = tuple(prog.decode(q) for q in obj["post"]) if "post" in obj else None
        events.append(InteractionEvent(obj["t"], obj["s"], obj["r"], Flavor(obj["flavor"]), pre, post))
    return Trace(meta, init, events), prog, sem, summaries


def append_summary(path, summary: dict):
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(_dumps({"summary": summary}) + "\n")


def write_script(script, prog: AgentProgram, sem: ModelSemantics, path) -> Path:
    """Write an attack script; pre-states come from replaying it."""
    trace = script.replay(prog, sem)
    trace.meta["attack"] = dict(script.notes)
    trace.meta["mirror_checks"] = [[k, list(g)] for k, g in script.mirror_checks]
    return write_trace(trace, prog, path, with_post=False)


def read_script(path):
    """Load a script file as ``(initial, steps, meta, prog, sem)``."""
    trace, prog, sem, _ = read_trace(path)
    steps = [(ev.starter, ev.reactor, ev.flavor) for ev in trace.events]
    return trace.initial, steps, trace.meta, prog, sem
