"""Adversarial interaction sequences that break would-be simulators.

Two-agent systems use index 0 for the leader and 1 for its partner.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .protocols import BOT, CS
from .scheduling import Trace, scripted_run
from .semantics import AgentProgram, Configuration, Flavor, ModelSemantics, outcome

LEADER, PARTNER = 0, 1
NON = Flavor.NON_OMISSIVE
BOTH = Flavor.BOTH_SIDES


class AttackError(RuntimeError):
    pass


def _step(sem, prog, config: tuple, s: int, r: int, flavor: Flavor) -> tuple:
    post = outcome(sem, prog, config[s], config[r], flavor)
    out = list(config)
    out[s], out[r] = post
    return tuple(out)


def _moves(sem):
    return [(s, r, f) for s, r in ((LEADER, PARTNER), (PARTNER, LEADER)) for f in sem.admissible_flavors()]


# -- omission recurrence ----------------------------------------------------

@dataclass
class Recurrence:
    recurrent: bool
    sequence: list = field(default_factory=list)
    exact: bool = True
    explored: int = 0

    def __bool__(self):
        return self.recurrent

    def __str__(self):
        if self.recurrent:
            return f"recurrent, t={len(self.sequence)}"
        return "not recurrent" if self.exact else "not recurrent within bounds"


def find_omission_recurrent(prog: AgentProgram, sem: ModelSemantics, config: Sequence, leader_role: str = "starter",
                            depth_bound: int = 16, cap: int = 100_000) -> Recurrence:
    """Shortest sequence, opening with a both-sides omission, that returns the leader to its state.

    Breadth-first search over two-agent configurations. A negative answer
    is exact only when the reachable graph was exhausted inside both
    ``depth_bound`` and ``cap``.
    """
    if depth_bound < 1:
        raise ValueError("depth_bound must be at least 1")
    if leader_role not in ("starter", "reactor"):
        raise ValueError(f"leader_role must be 'starter' or 'reactor', not {leader_role!r}")
    if not sem.omissive:
        raise AttackError(f"{sem.label} admits no omissions")
    start = tuple(config)
    target = start[LEADER]
    first = (LEADER, PARTNER, BOTH) if leader_role == "starter" else (PARTNER, LEADER, BOTH)
    c1 = _step(sem, prog, start, *first)
    if c1[LEADER] == target:
        return Recurrence(True, [first], True, 1)

    moves = _moves(sem)
    parent = {c1: None}
    frontier = deque([(c1, 1)])
    truncated = False
    while frontier:
        cfg, depth = frontier.popleft()
        if depth >= depth_bound:
            if any(_step(sem, prog, cfg, *mv) not in parent for mv in moves):
                truncated = True
            continue
        for move in moves:
            nxt = _step(sem, prog, cfg, *move)
            if nxt in parent:
                continue
            parent[nxt] = (cfg, move)
            if nxt[LEADER] == target:
                seq = [move]
                back = cfg
                while parent[back] is not None:
                    back, mv = parent[back]
                    seq.append(mv)
                seq.append(first)
                return Recurrence(True, seq[::-1], True, len(parent))
            if len(parent) >= cap:
                return Recurrence(False, [], False, len(parent))
            frontier.append((nxt, depth + 1))
    return Recurrence(False, [], not truncated, len(parent))


def reachable_states(prog: AgentProgram, sem: ModelSemantics, configs: Sequence, cap: int = 100_000) -> set:
    """Local states reachable in two-agent systems from the given configurations."""
    seen = {tuple(c) for c in configs}
    frontier = deque(seen)
    moves = _moves(sem)
    while frontier:
        cfg = frontier.popleft()
        for move in moves:
            nxt = _step(sem, prog, cfg, *move)
            if nxt not in seen:
                if len(seen) >= cap:
                    raise AttackError(f"more than {cap} reachable configurations")
                seen.add(nxt)
                frontier.append(nxt)
    return {q for cfg in seen for q in cfg}


# -- scripts -----------------------------------------------------------------

@dataclass
class AttackScript:
    initial: Configuration
    steps: list
    notes: dict = field(default_factory=dict)
    mirror_checks: list = field(default_factory=list)   # (prefix length, agents that must be equal)

    @property
    def n(self) -> int:
        return len(self.initial)

    @property
    def omissions(self) -> int:
        return sum(1 for _, _, f in self.steps if f.omissive)

    def replay(self, prog: AgentProgram, sem: ModelSemantics) -> Trace:
        return scripted_run(prog, sem, self.initial, self.steps, meta={"attack": dict(self.notes)})

    def mirror_violations(self, trace: Trace) -> list:
        """Prefix lengths at which agents required to be identical differ."""
        checks = dict()
        for k, group in self.mirror_checks:
            checks.setdefault(k, []).append(group)
        bad = []
        for k, cfg in enumerate(trace.configurations()):
            for group in checks.get(k, ()):
                if len({cfg[i] for i in group}) > 1:
                    bad.append(k)
        return bad


def fair_base_sequence(prog: AgentProgram, sem: ModelSemantics, c0: Sequence, goal: tuple,
                       seed: int = 0, max_steps: int = 10_000) -> list:
    """Omission-free two-agent interactions from a seeded fair coin, up to the goal projection."""
    rng = np.random.default_rng(seed)
    cfg = tuple(c0)
    seq = []
    for _ in range(max_steps):
        if (prog.project(cfg[LEADER]), prog.project(cfg[PARTNER])) == tuple(goal):
            return seq
        move = (LEADER, PARTNER, NON) if rng.random() < 0.5 else (PARTNER, LEADER, NON)
        seq.append(move)
        cfg = _step(sem, prog, cfg, *move)
    if (prog.project(cfg[LEADER]), prog.project(cfg[PARTNER])) == tuple(goal):
        return seq
    raise AttackError(f"goal {goal} not reached within {max_steps} fair steps")


def build_duplication_attack(prog: AgentProgram, sem: ModelSemantics, c0: Sequence,
                             base: Sequence) -> AttackScript:
    """Three-agent script in which b shadows a by reading the leader through leader-side omissions.

    Before every base step between the leader and ``a`` the same step is
    played with ``b`` in ``a``'s place, omissive on the leader's side. The
    leader cannot tell, so ``a`` and ``b`` see identical leader states.
    """
    if sem.omissive is False or sem.starter_detects_omission or sem.reactor_detects_omission:
        raise AttackError("the duplication attack needs undetectable omissions (T1)")
    b = 2
    cfg = tuple(c0)
    steps, checks = [], [(0, (1, 2))]
    for s, r, flavor in base:
        if flavor.omissive or {s, r} != {LEADER, PARTNER}:
            raise AttackError("base sequence must be omission-free leader/partner interactions")
        if s == LEADER:
            steps.append((LEADER, b, Flavor.STARTER_SIDE))
        else:
            steps.append((b, LEADER, Flavor.REACTOR_SIDE))
        steps.append((s, r, NON))
        checks.append((len(steps), (1, 2)))
        cfg = _step(sem, prog, cfg, s, r, NON)
    if (prog.project(cfg[LEADER]), prog.project(cfg[PARTNER])) != (BOT, CS):
        raise AttackError("base sequence never brings (leader, a) to simulated states (⊥, cs)")
    initial = Configuration((c0[LEADER], c0[PARTNER], c0[PARTNER]), LEADER)
    notes = {"construction": "duplication", "base_length": len(base), "omissions": len(base)}
    return AttackScript(initial, steps, notes, checks)


# -- bounded-memory construction ---------------------------------------------

@dataclass
class LemmaSequence:
    steps: list
    insertions: int
    consumed: int
    configurations: list
    recurrences: list

    @property
    def t(self) -> int:
        return len(self.steps)


def build_lemma_sequence(prog: AgentProgram, sem: ModelSemantics, c0: Sequence, base: Sequence, k: int,
                         depth_bound: int = 16, cap: int = 100_000) -> LemmaSequence:
    """Insert both-sides omissions into ``base`` until every clean step starts from a recurrent configuration.

    Construction stops as soon as both agents have changed simulated
    state. ``recurrences[j]`` holds the recurrence witness for the
    configuration before step ``j`` when that step is non-omissive.
    """
    cfg = tuple(c0)
    start_proj = tuple(prog.project(q) for q in cfg)
    steps, configs, witnesses = [], [cfg], []
    v = inserted = 0
    while True:
        if all(prog.project(cfg[i]) != start_proj[i] for i in (LEADER, PARTNER)):
            return LemmaSequence(steps, inserted, v, configs, witnesses)
        if v >= len(base):
            raise AttackError("base sequence exhausted before both agents changed simulated state")
        s, r, flavor = base[v]
        if flavor.omissive:
            raise AttackError("base sequence must be omission-free")
        role = "starter" if s == LEADER else "reactor"
        rec = find_omission_recurrent(prog, sem, cfg, role, depth_bound, cap)
        if rec.recurrent:
            move = (s, r, NON)
            v += 1
            witnesses.append(rec)
        elif rec.exact:
            move = (s, r, BOTH)
            inserted += 1
            witnesses.append(None)
            if inserted > k:
                raise AttackError(f"more than k={k} omissions inserted")
        else:
            raise AttackError(f"recurrence search hit its bounds at step {len(steps)}")
        steps.append(move)
        cfg = _step(sem, prog, cfg, *move)
        configs.append(cfg)


def build_bounded_memory_attack(prog: AgentProgram, sem: ModelSemantics, c0: Sequence, lemma: LemmaSequence,
                                t_cap: int = 12) -> AttackScript:
    """Replay the lemma sequence on a population of 2^t shadows of ``a`` plus a dummy ``d``.

    Agents: 0 = leader, 1 = a, 2..m+1 = b_1..b_m, m+2 = d. Before each
    lemma step half of the remaining shadows are spent: on an omissive step
    they copy ``a``'s omission against ``d``; on a clean step each spent
    pair replays the recurrence witness so the leader returns to its state
    while the kept shadow sees the leader exactly as ``a`` will.
    """
    t = lemma.t
    if t > t_cap:
        raise AttackError(f"t={t} exceeds the cap of {t_cap} (would need 2^{t} shadow agents)")
    m = 2 ** t
    a, d = PARTNER, m + 2

    def b(x):                      # 1-based shadow index
        return x + 1

    initial = Configuration([c0[LEADER]] + [c0[PARTNER]] * (m + 2), LEADER)
    steps = []
    checks = [(0, (a, *map(b, range(1, m + 1))))]
    pair_checks = []
    w = m
    for j, (s, r, flavor) in enumerate(lemma.steps):
        leader_starts = s == LEADER
        half = w // 2
        if flavor.omissive:
            for x in range(1, half + 1):
                steps.append((d, b(x), BOTH) if leader_starts else (b(x), d, BOTH))
        else:
            rec = lemma.recurrences[j]
            if rec is None or not rec.recurrent:
                raise AttackError(f"no recurrence witness before lemma step {j}")
            for x in range(1, half + 1):
                twin = b(x + half)
                if leader_starts:
                    steps.append((LEADER, b(x), Flavor.STARTER_SIDE))
                    steps.append((d, twin, BOTH))
                else:
                    steps.append((b(x), LEADER, Flavor.REACTOR_SIDE))
                    steps.append((twin, d, BOTH))
                for rs, rr, rf in rec.sequence[1:]:
                    steps.append((twin if rs == PARTNER else LEADER, twin if rr == PARTNER else LEADER, rf))
        steps.append((s, r, flavor))
        w = half
        checks.append((len(steps), (a, *map(b, range(1, w + 1)))))
        pair_checks.append((len(steps), j + 1))
    notes = {"construction": "bounded-memory", "t": t, "m": m, "agents": m + 3,
             "lemma_insertions": lemma.insertions, "omissions": sum(1 for *_, f in steps if f.omissive)}
    script = AttackScript(initial, steps, notes, checks)
    script.notes["checkpoints"] = [k for k, _ in pair_checks]
    return script


def checkpoint_agreement(script: AttackScript, trace: Trace, lemma: LemmaSequence) -> bool:
    """Leader and ``a`` at each checkpoint C'_j equal the two-agent configuration C_j."""
    wanted = dict(zip(script.notes["checkpoints"], lemma.configurations[1:]))
    wanted[0] = lemma.configurations[0]
    for k, cfg in enumerate(trace.configurations()):
        if k in wanted and (cfg[LEADER], cfg[PARTNER]) != tuple(wanted[k]):
            return False
    return True


__all__ = [
    "AttackError", "Recurrence", "find_omission_recurrent", "reachable_states", "AttackScript",
    "fair_base_sequence", "build_duplication_attack", "LemmaSequence", "build_lemma_sequence",
    "build_bounded_memory_attack", "checkpoint_agreement",
]
