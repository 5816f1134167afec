"""Trace checks: two-way simulation matching, pairing, naming and memory footprint."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .protocols import CS, PairingInstance
from .scheduling import Trace
from .semantics import AgentProgram, ProtocolTable


@dataclass(frozen=True)
class SimulatedEvent:
    agent: int
    time: int
    from_: object
    to: object


def extract_simulated_events(trace: Trace, prog: AgentProgram) -> list:
    """Every change of an agent's simulated state, in time order (starter first)."""
    if prog.projection is None:
        raise ValueError(f"program {prog.name!r} has no simulated projection")
    proj = prog.projection
    out = []
    for ev in trace.events:
        for agent, before, after in ((ev.starter, ev.pre[0], ev.post[0]), (ev.reactor, ev.pre[1], ev.post[1])):
            if before is after:
                continue
            a, b = proj(before), proj(after)
            if a != b:
                out.append(SimulatedEvent(agent, ev.time, a, b))
    return out


@dataclass
class MatchingVerdict:
    success: bool
    matching: list = field(default_factory=list)
    linearization: list = field(default_factory=list)
    counterexample: Optional[str] = None
    budget_exhausted: bool = False
    nodes: int = 0

    def __bool__(self):
        return self.success


def check_simulation(trace: Trace, prog: AgentProgram, P: ProtocolTable, budget: int = 1_000_000) -> MatchingVerdict:
    return match_simulated_events(extract_simulated_events(trace, prog), P, budget)


def match_simulated_events(events: Sequence[SimulatedEvent], P: ProtocolTable,
                           budget: int = 1_000_000) -> MatchingVerdict:
    """Search for a perfect, temporally consistent matching into rules of ``P``.

    Each pair is ``(starter_event, reactor_event, rule)`` with the rule
    ``(from_s, from_r) -> (to_s, to_r)``. Pairs must admit a linear order
    in which every agent's events appear in their original order. The
    earliest unmatched event is always matched next; candidates are tried
    nearest-in-time first, with full backtracking up to ``budget`` nodes.
    """
    if budget <= 0:
        raise ValueError("search budget must be positive")
    events = sorted(events, key=lambda e: e.time)
    n = len(events)
    if n == 0:
        return MatchingVerdict(True)
    if n % 2:
        return MatchingVerdict(False, counterexample=f"odd number of simulated events ({n})")

    rules = P.rules
    by_agent = defaultdict(list)
    for i, e in enumerate(events):
        by_agent[e.agent].append(i)
    position = {}
    for agent, idxs in by_agent.items():
        idxs.sort(key=lambda i: (events[i].time, i))
        for k, i in enumerate(idxs):
            position[i] = k

    # candidates[i]: (j, i_is_starter) such that events i and j instantiate a rule
    by_change = defaultdict(list)
    for i, e in enumerate(events):
        by_change[(e.from_, e.to)].append(i)
    candidates = [[] for _ in range(n)]
    for (a, b), (c, d) in rules.items():
        for i in by_change.get((a, c), ()):
            for j in by_change.get((b, d), ()):
                if events[i].agent != events[j].agent:
                    candidates[i].append((j, True))
                    candidates[j].append((i, False))
    for i, cands in enumerate(candidates):
        e = events[i]
        if not cands:
            return MatchingVerdict(False, counterexample=(
                f"agent {e.agent} at step {e.time}: {e.from_!r}->{e.to!r} has no possible partner"))
        cands.sort(key=lambda c: (abs(events[c[0]].time - e.time), events[c[0]].time, c[0], not c[1]))

    pair_of = [None] * n      # event -> pair id
    pairs = []                # pair id -> (starter_event, reactor_event)

    def neighbours(pid, forward):
        out = []
        for i in pairs[pid]:
            idxs = by_agent[events[i].agent]
            k = position[i]
            rng = range(k + 1, len(idxs)) if forward else range(k - 1, -1, -1)
            for kk in rng:
                q = pair_of[idxs[kk]]
                if q is not None:
                    out.append(q)
                    break
        return out

    def creates_cycle(pid):
        # pid precedes its successors; a cycle means pid is reachable from them
        stack = neighbours(pid, True)
        seen = set()
        while stack:
            q = stack.pop()
            if q == pid:
                return True
            if q in seen:
                continue
            seen.add(q)
            stack.extend(neighbours(q, True))
        return False

    def next_unmatched(i):
        while i < n and pair_of[i] is not None:
            i += 1
        return i

    def unpair(i, j):
        pair_of[i] = pair_of[j] = None
        pairs.pop()

    nodes = 0
    exhausted = False
    deepest = 0

    def search():
        nonlocal nodes, exhausted, deepest
        frames = [[0, 0, None]]   # [event, next candidate, chosen partner]
        while frames:
            frame = frames[-1]
            i = frame[0]
            deepest = max(deepest, i)
            if frame[2] is not None:
                unpair(i, frame[2])
                frame[2] = None
            cands = candidates[i]
            pushed = False
            while frame[1] < len(cands):
                j, i_starter = cands[frame[1]]
                frame[1] += 1
                if pair_of[j] is not None:
                    continue
                nodes += 1
                if nodes > budget:
                    exhausted = True
                    return False
                pid = len(pairs)
                pairs.append((i, j) if i_starter else (j, i))
                pair_of[i] = pair_of[j] = pid
                if creates_cycle(pid):
                    unpair(i, j)
                    continue
                frame[2] = j
                nxt = next_unmatched(i + 1)
                if nxt == n:
                    return True
                frames.append([nxt, 0, None])
                pushed = True
                break
            if not pushed:
                frames.pop()
        return False

    found = search()
    if not found:
        if exhausted:
            return MatchingVerdict(False, counterexample="search budget exhausted", budget_exhausted=True, nodes=nodes)
        e = events[deepest]
        return MatchingVerdict(False, nodes=nodes, counterexample=(
            f"no temporally consistent perfect matching; stuck at agent {e.agent} step {e.time} "
            f"{e.from_!r}->{e.to!r}"))

    order = _topological_order(len(pairs), lambda pid: neighbours(pid, True))
    matching = []
    for s, r in pairs:
        es, er = events[s], events[r]
        matching.append((es, er, ((es.from_, er.from_), (es.to, er.to))))
    return MatchingVerdict(True, matching=matching, linearization=order, nodes=nodes)


def _topological_order(count, successors):
    indeg = [0] * count
    succ = [successors(p) for p in range(count)]
    for outs in succ:
        for q in outs:
            indeg[q] += 1
    ready = sorted(p for p in range(count) if indeg[p] == 0)
    order = []
    while ready:
        p = ready.pop(0)
        order.append(p)
        for q in succ[p]:
            indeg[q] -= 1
            if indeg[q] == 0:
                ready.append(q)
    return order


# -- pairing -----------------------------------------------------------------

def default_window(steps: int) -> int:
    """Trailing stabilization window: the last tenth of the run, at most 10^4 steps."""
    return min(10_000, steps // 10)


@dataclass
class PairingReport:
    irrevocability: bool
    safety: bool
    liveness: bool
    first_irrevocability_violation: Optional[int] = None
    first_safety_violation: Optional[int] = None
    final_cs: int = 0
    max_cs: int = 0
    stabilized_at: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.irrevocability and self.safety and self.liveness


def check_pairing(trace: Trace, inst: PairingInstance, prog: AgentProgram,
                  window: Optional[int] = None) -> PairingReport:
    """Irrevocability and safety at every step; liveness over the final ``window`` steps.

    ``stabilized_at`` is the first step after which the ``cs`` count stays
    at its target for the rest of the trace.
    """
    proj = prog.project
    if window is None:
        window = default_window(len(trace))
    cs_count = sum(1 for q in trace.initial.agents if proj(q) == CS)
    irrev_at = safety_at = None
    if cs_count > inst.n_p:
        safety_at = 0
    max_cs = cs_count
    target = inst.target
    last_off = None if cs_count == target else 0
    for ev in trace.events:
        for before, after in ((ev.pre[0], ev.post[0]), (ev.pre[1], ev.post[1])):
            if before is after:
                continue
            a, b = proj(before), proj(after)
            if a == b:
                continue
            if a == CS:
                cs_count -= 1
                if irrev_at is None:
                    irrev_at = ev.time
            if b == CS:
                cs_count += 1
                if a != "c" and irrev_at is None:
                    irrev_at = ev.time
        if cs_count > inst.n_p and safety_at is None:
            safety_at = ev.time
        if cs_count != target:
            last_off = ev.time + 1
        max_cs = max(max_cs, cs_count)
    if window > len(trace):
        window = len(trace)
    live = last_off is None or last_off <= len(trace) - window
    if window == 0:
        live = cs_count == target
    return PairingReport(
        irrevocability=irrev_at is None,
        safety=safety_at is None,
        liveness=live,
        first_irrevocability_violation=irrev_at,
        first_safety_violation=safety_at,
        final_cs=cs_count,
        max_cs=max_cs,
        stabilized_at=None if cs_count != target else (last_off or 0),
    )


# -- naming ------------------------------------------------------------------

@dataclass
class NamingReport:
    unique: bool
    all_named: bool
    max_id: Optional[int]
    counter_max: Optional[int]
    monotone: bool = True
    congruent: bool = True
    first_duplicate: Optional[int] = None
    named: int = 0
    bounds: dict = field(default_factory=dict)

    @property
    def within_bounds(self) -> bool:
        return all(self.bounds.values())


def _id_value(identity) -> Optional[int]:
    if identity is None:
        return None
    if isinstance(identity, tuple):
        return max(identity)
    return identity


def check_naming(trace: Trace, prog: AgentProgram, window: Optional[int] = None) -> NamingReport:
    """Uniqueness at every step, stable naming over the final window, counter bounds.

    For the I1/I2 program the slot discipline is checked as well: each
    leader entry ``j`` stays congruent to ``j+1`` mod ``L+1`` and every
    assigned ID equals the entry it was read from.
    """
    if prog.identity is None:
        raise ValueError(f"{prog.name!r} is not a naming program")
    ident = prog.identity
    counter = prog.params.get("counter")
    lead = trace.initial.leader_index
    n = len(trace.initial)
    L = prog.params.get("L")
    i12 = prog.name.startswith("naming_i12")
    if window is None:
        window = default_window(len(trace))

    ids = [ident(q) if i != lead else None for i, q in enumerate(trace.initial.agents)]
    holders = Counter(x for x in ids if x is not None)
    duplicate_at = next((0 for c in holders.values() if c > 1), None)
    max_id = max((_id_value(x) for x in ids if x is not None), default=None)
    counter_max = counter(trace.initial.agents[lead]) if (counter and lead is not None) else None
    monotone = congruent = True
    last_unnamed = 0 if any(x is None for i, x in enumerate(ids) if i != lead) else None

    def leader_state(q):
        return q[0] if isinstance(q, tuple) and not hasattr(q, "my_ID") else q

    for ev in trace.events:
        for slot, (agent, before, after) in enumerate(((ev.starter, ev.pre[0], ev.post[0]),
                                                       (ev.reactor, ev.pre[1], ev.post[1]))):
            if before is after:
                continue
            if agent == lead:
                if counter is not None:
                    old, new = leader_state(before), leader_state(after)
                    if i12:
                        if any(b < a for a, b in zip(old.next_ID, new.next_ID)):
                            monotone = False
                        if any(v % (L + 1) != (j + 1) % (L + 1) for j, v in enumerate(new.next_ID)):
                            congruent = False
                    else:
                        if counter(new) < counter(old):
                            monotone = False
                    c = counter(new)
                    counter_max = c if counter_max is None else max(counter_max, c)
                continue
            old_id, new_id = ids[agent], ident(after)
            if new_id == old_id:
                continue
            if old_id is not None:
                monotone = False
                holders[old_id] -= 1
            ids[agent] = new_id
            if new_id is not None:
                holders[new_id] += 1
                if holders[new_id] > 1 and duplicate_at is None:
                    duplicate_at = ev.time
                v = _id_value(new_id)
                max_id = v if max_id is None else max(max_id, v)
                if i12 and slot == 1 and ev.starter == lead:
                    entry = leader_state(ev.pre[0])
                    j = next(k for k, lock in enumerate(entry.locked) if not lock)
                    if entry.next_ID[j] != new_id or new_id % (L + 1) != (j + 1) % (L + 1):
                        congruent = False
        if any(x is None for i, x in enumerate(ids) if i != lead):
            last_unnamed = ev.time + 1

    named = sum(1 for i, x in enumerate(ids) if i != lead and x is not None)
    all_named = named == n - (lead is not None) and (last_unnamed is None or last_unnamed <= len(trace) - window)
    if len(trace) == 0:
        all_named = False

    bounds = {}
    if L is not None and i12 and max_id is not None:
        bounds["max_id <= (L+1)n"] = max_id <= (L + 1) * n
    if L is not None and prog.name.startswith("naming_t1") and counter_max is not None:
        bounds["counter <= 1+(n-1)(L+1)+L"] = counter_max <= 1 + (n - 1) * (L + 1) + L
    return NamingReport(
        unique=duplicate_at is None,
        all_named=all_named,
        max_id=max_id,
        counter_max=counter_max,
        monotone=monotone,
        congruent=congruent,
        first_duplicate=duplicate_at,
        named=named,
        bounds=bounds,
    )


# -- memory footprint --------------------------------------------------------

@dataclass
class Footprint:
    per_agent: list
    per_class: dict
    bits: dict

    @property
    def max_per_agent(self) -> int:
        return max(self.per_agent, default=0)


def _bits(count: int) -> int:
    return math.ceil(math.log2(count)) if count > 1 else 0


def measure_state_footprint(trace: Trace) -> Footprint:
    """Distinct local states observed per agent, and per leader / non-leader class."""
    n = len(trace.initial)
    seen = [{q} for q in trace.initial.agents]
    for ev in trace.events:
        seen[ev.starter].add(ev.post[0])
        seen[ev.reactor].add(ev.post[1])
    lead = trace.initial.leader_index
    classes = {"leader": set(), "non-leader": set()}
    for i in range(n):
        classes["leader" if i == lead else "non-leader"] |= seen[i]
    per_class = {k: len(v) for k, v in classes.items() if v}
    per_agent = [len(s) for s in seen]
    bits = {k: _bits(v) for k, v in per_class.items()}
    bits["per-agent max"] = _bits(max(per_agent, default=0))
    return Footprint(per_agent, per_class, bits)


__all__ = [
    "SimulatedEvent", "extract_simulated_events", "default_window", "MatchingVerdict", "check_simulation",
    "match_simulated_events", "PairingReport", "check_pairing", "NamingReport", "check_naming",
    "Footprint", "measure_state_footprint",
]
