"""Brute-force reference implementations used to cross-check the fast searches."""

from popleader.scheduling import scripted_run
from popleader.semantics import Configuration, Flavor, outcome

LEADER, PARTNER = 0, 1


# -- simulation matching -----------------------------------------------------

def exhaustive_simulation(events, P):
    """True iff the events admit a perfect rule matching with a consistent linear order.

    A matching plus a linear order is the same thing as a sequence of pairs
    in which each pair consumes the next pending event of two different
    agents. Every such sequence is explored over per-agent progress
    vectors, so no candidate matching or ordering is skipped.
    """
    queues = {}
    for e in sorted(events, key=lambda e: e.time):
        queues.setdefault(e.agent, []).append(e)
    lists = [queues[a] for a in sorted(queues)]
    goal = tuple(len(q) for q in lists)
    dead = set()

    def explore(pos):
        if pos == goal:
            return True
        if pos in dead:
            return False
        heads = [(i, lists[i][pos[i]]) for i in range(len(lists)) if pos[i] < goal[i]]
        for i, es in heads:
            for j, er in heads:
                if i != j and P.rules.get((es.from_, er.from_)) == (es.to, er.to):
                    nxt = list(pos)
                    nxt[i] += 1
                    nxt[j] += 1
                    if explore(tuple(nxt)):
                        return True
        dead.add(pos)
        return False

    return explore(tuple(0 for _ in lists))


def certificate_ok(events, P, verdict):
    """Check a successful verdict's matching and linearization independently."""
    key = lambda e: (e.agent, e.time)
    used = [key(e) for pair in verdict.matching for e in pair[:2]]
    if sorted(used) != sorted(map(key, events)) or len(set(used)) != len(events):
        return False
    for es, er, rule in verdict.matching:
        if es.agent == er.agent or P.rules.get((es.from_, er.from_)) != (es.to, er.to):
            return False
        if rule != ((es.from_, er.from_), (es.to, er.to)):
            return False
    if sorted(verdict.linearization) != list(range(len(verdict.matching))):
        return False
    position = {}
    for k, pid in enumerate(verdict.linearization):
        es, er, _ = verdict.matching[pid]
        position[key(es)] = position[key(er)] = k
    by_agent = {}
    for e in sorted(events, key=lambda e: e.time):
        by_agent.setdefault(e.agent, []).append(position[key(e)])
    return all(seq == sorted(seq) for seq in by_agent.values())


# -- omission recurrence -----------------------------------------------------

def _moves(sem):
    return [(s, r, f) for s, r in ((LEADER, PARTNER), (PARTNER, LEADER)) for f in sem.admissible_flavors()]


def _apply(sem, prog, cfg, move):
    s, r, f = move
    post = outcome(sem, prog, cfg[s], cfg[r], f)
    out = list(cfg)
    out[s], out[r] = post
    return tuple(out)


def shortest_recurrence(prog, sem, config, leader_role, depth_bound):
    """Length of the shortest recurrence witness of length <= depth_bound, else None.

    Iterative deepening over interaction sequences. A (configuration,
    remaining length) pair that already failed is not re-expanded, which
    keeps the enumeration exhaustive without a global visited set.
    """
    target = config[LEADER]
    first = (LEADER, PARTNER, Flavor.BOTH_SIDES) if leader_role == "starter" else (PARTNER, LEADER, Flavor.BOTH_SIDES)
    moves = _moves(sem)
    c1 = _apply(sem, prog, tuple(config), first)

    def reaches(cfg, remaining, failed):
        if cfg[LEADER] == target:
            return True
        if remaining == 0 or (cfg, remaining) in failed:
            return False
        for mv in moves:
            if reaches(_apply(sem, prog, cfg, mv), remaining - 1, failed):
                return True
        failed.add((cfg, remaining))
        return False

    for length in range(1, depth_bound + 1):
        if reaches(c1, length - 1, set()):
            return length
    return None


# -- lemma sequence ------------------------------------------------------------

def lemma_properties_hold(prog, sem, c0, base, lemma, k):
    # (1) bounded insertions
    if lemma.insertions > k:
        return False
    # (2) deleting the inserted omissions gives a prefix of the base sequence
    clean = [step for step in lemma.steps if not step[2].omissive]
    if clean != list(base[: len(clean)]) or len(clean) != lemma.consumed:
        return False
    # (3) every clean step starts from an omission-recurrent configuration
    trace = scripted_run(prog, sem, Configuration(c0), lemma.steps)
    configs = list(trace.configurations())
    if configs != [tuple(c) for c in lemma.configurations]:
        return False
    for j, (s, r, flavor) in enumerate(lemma.steps):
        if not flavor.omissive:
            role = "starter" if s == 0 else "reactor"
            if shortest_recurrence(prog, sem, configs[j], role, 8) is None:
                return False
    # both agents end away from their starting simulated state
    return all(prog.project(configs[-1][i]) != prog.project(c0[i]) for i in (0, 1))
