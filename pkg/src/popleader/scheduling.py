"""Schedulers, omission adversaries, the execution engine and traces."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .semantics import (
    OMISSIVE_FLAVORS,
    AgentProgram,
    Configuration,
    Flavor,
    InteractionEvent,
    ModelSemantics,
    outcome,
    stepper,
)


class ScheduleError(ValueError):
    pass


# -- schedulers --------------------------------------------------------------

@dataclass(frozen=True)
class UniformRandom:
    """Ordered pairs drawn uniformly from all n(n-1) pairs."""

    seed: Optional[int] = None

    def pairs(self, n: int, horizon: int, rng: np.random.Generator) -> Iterator[tuple]:
        if self.seed is not None:
            rng = np.random.default_rng(self.seed)
        chunk = 1 << 14
        done = 0
        while done < horizon:
            size = min(chunk, horizon - done)
            s = rng.integers(0, n, size=size)
            r = rng.integers(0, n - 1, size=size)
            r = r + (r >= s)
            yield from zip(s.tolist(), r.tolist())
            done += size

    def to_dict(self):
        return {"kind": "uniform", "seed": self.seed}


@dataclass(frozen=True)
class RoundRobinPairs:
    """Cycles through the ordered pairs in lexicographic order."""

    def pairs(self, n, horizon, rng=None):
        cycle = [(s, r) for s in range(n) for r in range(n) if s != r]
        return itertools.islice(itertools.cycle(cycle), horizon)

    def to_dict(self):
        return {"kind": "roundrobin"}


@dataclass(frozen=True)
class Scripted:
    script: tuple

    def __post_init__(self):
        object.__setattr__(self, "script", tuple(tuple(p) for p in self.script))

    def pairs(self, n, horizon, rng=None):
        if len(self.script) < horizon:
            raise ScheduleError(f"scheduler script has {len(self.script)} pairs, horizon is {horizon}")
        for s, r in self.script[:horizon]:
            if not (0 <= s < n and 0 <= r < n) or s == r:
                raise ScheduleError(f"scripted pair {(s, r)} invalid for {n} agents")
        return iter(self.script[:horizon])

    def to_dict(self):
        return {"kind": "scripted", "pairs": [list(p) for p in self.script]}


# -- omission policies and adversaries ---------------------------------------

@dataclass(frozen=True)
class Never:
    def proposer(self, rng):
        return lambda t, s, r, agents: Flavor.NON_OMISSIVE

    def check(self, horizon):
        pass

    def to_dict(self):
        return {"policy": "never"}


@dataclass(frozen=True)
class RandomOmissions:
    """Each interaction is proposed omissive with probability ``rate``."""

    rate: float
    seed: Optional[int] = None
    flavors: tuple = OMISSIVE_FLAVORS

    def proposer(self, rng):
        if self.seed is not None:
            rng = np.random.default_rng(self.seed)
        flavors = tuple(self.flavors)
        rate = self.rate

        def propose(t, s, r, agents):
            if rng.random() < rate:
                return flavors[int(rng.integers(len(flavors)))]
            return Flavor.NON_OMISSIVE

        return propose

    def check(self, horizon):
        if not 0.0 <= self.rate <= 1.0:
            raise ScheduleError(f"omission rate {self.rate} outside [0, 1]")

    def to_dict(self):
        return {"policy": "random", "rate": self.rate, "seed": self.seed,
                "flavors": [f.value for f in self.flavors]}


@dataclass(frozen=True)
class ScriptedOmissions:
    steps: Mapping[int, Flavor]

    def proposer(self, rng):
        steps = dict(self.steps)
        return lambda t, s, r, agents: steps.get(t, Flavor.NON_OMISSIVE)

    def check(self, horizon):
        late = [t for t in self.steps if t >= horizon or t < 0]
        if late:
            raise ScheduleError(f"omission script references steps {sorted(late)[:5]} beyond horizon {horizon}")

    def to_dict(self):
        return {"policy": "scripted", "steps": {str(t): f.value for t, f in sorted(self.steps.items())}}


@dataclass(frozen=True)
class NoOmissions:
    policy: object = Never()

    def limits(self):
        return None, None

    def to_dict(self):
        return {"kind": "none"}


@dataclass(frozen=True)
class FiniteBudget:
    """Eventually non-omissive adversary: at most ``budget`` omissions in the run."""

    budget: int
    policy: object = Never()

    def limits(self):
        return self.budget, None

    def to_dict(self):
        return {"kind": "finite", "budget": self.budget, **self.policy.to_dict()}


@dataclass(frozen=True)
class Unrestricted:
    policy: object = Never()

    def limits(self):
        return None, None

    def to_dict(self):
        return {"kind": "unrestricted", **self.policy.to_dict()}


@dataclass(frozen=True)
class LeaderBounded:
    """At most ``budget`` omissions on interactions that involve the leader."""

    budget: int
    policy: object = Never()

    def limits(self):
        return None, self.budget

    def to_dict(self):
        return {"kind": "leader_bounded", "budget": self.budget, **self.policy.to_dict()}


# -- traces ------------------------------------------------------------------

@dataclass
class Trace:
    meta: dict
    initial: Configuration
    events: list = field(default_factory=list)

    def __len__(self):
        return len(self.events)

    def configurations(self, start: int = 0) -> Iterator[tuple]:
        """Yield agent-state tuples C_start, ..., C_T (C_0 is the initial one)."""
        agents = list(self.initial.agents)
        if start == 0:
            yield tuple(agents)
        for k, ev in enumerate(self.events, 1):
            agents[ev.starter], agents[ev.reactor] = ev.post
            if k >= start:
                yield tuple(agents)

    @property
    def final(self) -> Configuration:
        agents = list(self.initial.agents)
        for ev in self.events:
            agents[ev.starter], agents[ev.reactor] = ev.post
        return self.initial.with_agents(agents)

    def omission_count(self, leader_only: bool = False) -> int:
        lead = self.initial.leader_index
        return sum(1 for ev in self.events if ev.flavor.omissive
                   and (not leader_only or lead in (ev.starter, ev.reactor)))

    def replay(self, prog: AgentProgram, sem: ModelSemantics) -> Configuration:
        """Re-execute every event and check it against the recorded states."""
        agents = list(self.initial.agents)
        for k, ev in enumerate(self.events):
            if ev.time != k:
                raise ScheduleError(f"event {k} carries time {ev.time}")
            pre = (agents[ev.starter], agents[ev.reactor])
            if pre != tuple(ev.pre):
                raise ScheduleError(f"event {k}: recorded pre-states differ from replay")
            post = outcome(sem, prog, pre[0], pre[1], ev.flavor)
            if post != tuple(ev.post):
                raise ScheduleError(f"event {k}: recorded post-states differ from replay")
            agents[ev.starter], agents[ev.reactor] = post
        return self.initial.with_agents(agents)


# -- engine ------------------------------------------------------------------

def _streams(seed: int):
    sched_seq, adv_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(sched_seq), np.random.default_rng(adv_seq)


def run(prog: AgentProgram, sem: ModelSemantics, init: Configuration, sched=None,
        adv=None, horizon: int = 100_000, seed: int = 0, meta: Optional[dict] = None) -> Trace:
    """Execute ``horizon`` interactions and return the full trace.

    The adversary sees the scheduled pair and the current configuration
    before choosing the flavor. Omission requests under a non-omissive
    model are ignored.
    """
    if horizon < 0:
        raise ScheduleError("horizon must be non-negative")
    sched = sched if sched is not None else UniformRandom()
    adv = adv if adv is not None else NoOmissions()
    n = len(init)
    if n < 2:
        raise ScheduleError("a population needs at least two agents")
    init.check_leader(prog)
    sched_rng, adv_rng = _streams(seed)
    adv.policy.check(horizon)
    propose = adv.policy.proposer(adv_rng)
    total_cap, leader_cap = adv.limits()
    if leader_cap is not None and init.leader_index is None:
        raise ScheduleError("a leader-bounded adversary needs a leader")
    lead = init.leader_index
    allow = sem.omissive
    used = used_leader = 0
    non = Flavor.NON_OMISSIVE

    step = stepper(sem, prog)
    agents = list(init.agents)
    events = []
    append = events.append
    for t, (s, r) in enumerate(sched.pairs(n, horizon, sched_rng)):
        flavor = propose(t, s, r, agents) if allow else non
        if flavor is not non:
            if total_cap is not None and used >= total_cap:
                flavor = non
            elif leader_cap is not None and (s == lead or r == lead):
                if used_leader >= leader_cap:
                    flavor = non
                else:
                    used_leader += 1
            if flavor is not non:
                used += 1
        pre = (agents[s], agents[r])
        post = step(pre[0], pre[1], flavor)
        agents[s], agents[r] = post
        append(InteractionEvent(t, s, r, flavor, pre, post))

    info = {
        "semantics": sem.to_dict(),
        "program": prog.name,
        "program_params": _plain_params(prog),
        "seed": seed,
        "horizon": horizon,
        "scheduler": sched.to_dict(),
        "adversary": adv.to_dict(),
    }
    info.update(meta or {})
    return Trace(info, init, events)


def scripted_run(prog: AgentProgram, sem: ModelSemantics, init: Configuration,
                 script: Sequence[tuple], meta: Optional[dict] = None) -> Trace:
    """Execute an explicit list of ``(starter, reactor, flavor)`` steps."""
    n = len(init)
    agents = list(init.agents)
    events = []
    for t, (s, r, flavor) in enumerate(script):
        flavor = Flavor(flavor)
        if not (0 <= s < n and 0 <= r < n) or s == r:
            raise ScheduleError(f"script step {t}: pair {(s, r)} invalid for {n} agents")
        sem.check_flavor(flavor)
        pre = (agents[s], agents[r])
        post = outcome(sem, prog, pre[0], pre[1], flavor)
        agents[s], agents[r] = post
        events.append(InteractionEvent(t, s, r, flavor, pre, post))
    info = {
        "semantics": sem.to_dict(),
        "program": prog.name,
        "program_params": _plain_params(prog),
        "horizon": len(events),
        "scheduler": {"kind": "script"},
        "adversary": {"kind": "script"},
    }
    info.update(meta or {})
    return Trace(info, init, events)


def is_stably(trace: Trace, predicate: Callable[[tuple], bool], window: int) -> bool:
    """True iff ``predicate`` holds on each of the last ``window`` configurations."""
    if window > len(trace):
        raise ValueError(f"window {window} longer than trace ({len(trace)} steps)")
    if window <= 0:
        return True
    return all(predicate(c) for c in trace.configurations(start=len(trace) - window + 1))


def _plain_params(prog: AgentProgram) -> dict:
    out = {}
    for key, value in prog.params.items():
        if isinstance(value, (int, float, str, bool)) or value is None:
            out[key] = value
    return out
