import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from popleader.protocols import (
    BOT, CS, naming_i12_population, pairing_program, naming_i12_program, naming_t1_population, naming_t1_program,
    strawman_population, strawman_simulator,
)
from popleader.scheduling import (
    FiniteBudget,
    LeaderBounded,
    NoOmissions,
    RandomOmissions,
    RoundRobinPairs,
    ScheduleError,
    Scripted,
    ScriptedOmissions,
    UniformRandom,
    Unrestricted,
    is_stably,
    run,
    scripted_run,
)
from popleader.semantics import Configuration, Flavor, admissible_outcomes, preset_semantics, table_program

NON = Flavor.NON_OMISSIVE


def pairing_run(P, seed=0, horizon=1000, n_c=5, n_p=3, **kw):
    init = Configuration(["c"] * n_c + ["p"] * n_p)
    return run(table_program(P), preset_semantics("TW"), init, horizon=horizon, seed=seed, **kw)


def test_horizon_zero(P):
    trace = pairing_run(P, horizon=0)
    assert len(trace) == 0 and trace.final == trace.initial


def test_negative_horizon_rejected(P):
    with pytest.raises(ScheduleError):
        pairing_run(P, horizon=-1)


def test_empty_budget_never_omits():
    P_sem = preset_semantics("T3")
    prog = strawman_simulator(pairing_program(), 2)
    trace = run(prog, P_sem, strawman_population(["c", "p", "c", "p"]),
                adv=FiniteBudget(0, RandomOmissions(1.0)), horizon=2000, seed=4)
    assert all(ev.flavor is NON for ev in trace.events)


def test_leader_bounded_budget_over_long_run():
    L = 3
    init = naming_i12_population(8, L)
    trace = run(naming_i12_program(L), preset_semantics("I1"), init,
                adv=LeaderBounded(L, RandomOmissions(0.5)), horizon=10_000, seed=21)
    assert trace.omission_count(leader_only=True) == L       # the adversary spends it all early
    assert trace.omission_count() > 1000                      # unbounded elsewhere


@given(st.integers(0, 6), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_finite_budget_law(budget, rate, seed):
    prog = naming_t1_program(2)
    trace = run(prog, preset_semantics("T1"), naming_t1_population(5, 2),
                adv=FiniteBudget(budget, RandomOmissions(rate)), horizon=300, seed=seed)
    assert trace.omission_count() <= budget


@given(st.integers(0, 4), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_leader_budget_law(budget, rate, seed):
    prog = naming_t1_program(2)
    trace = run(prog, preset_semantics("T1"), naming_t1_population(5, 2, leader=3),
                adv=LeaderBounded(budget, RandomOmissions(rate)), horizon=300, seed=seed)
    assert trace.omission_count(leader_only=True) <= budget


def test_replay_determinism(P):
    adv = Unrestricted(RandomOmissions(0.3))
    prog = strawman_simulator(P, 1)
    init = strawman_population(["c", "p", "c", "c", "p"])
    a = run(prog, preset_semantics("T3"), init, adv=adv, horizon=3000, seed=9)
    b = run(prog, preset_semantics("T3"), init, adv=adv, horizon=3000, seed=9)
    c = run(prog, preset_semantics("T3"), init, adv=adv, horizon=3000, seed=10)
    assert a.events == b.events and a.meta == b.meta
    assert a.events != c.events


def test_scheduler_and_adversary_streams_independent(P):
    # changing the omission rate must not change the chosen pairs
    prog = strawman_simulator(P, 1)
    init = strawman_population(["c", "p", "c", "c", "p"])
    a = run(prog, preset_semantics("T3"), init, adv=Unrestricted(RandomOmissions(0.1)), horizon=500, seed=5)
    b = run(prog, preset_semantics("T3"), init, adv=Unrestricted(RandomOmissions(0.7)), horizon=500, seed=5)
    assert [ev.agents for ev in a.events] == [ev.agents for ev in b.events]


def test_uniform_pair_coverage():
    rng = np.random.default_rng(2024)
    for n in range(2, 9):
        seen = set(UniformRandom().pairs(n, 100_000, rng))
        assert seen == {(s, r) for s in range(n) for r in range(n) if s != r}


def test_uniform_pairs_are_uniform():
    counts = {}
    for pair in UniformRandom(seed=3).pairs(4, 120_000, None):
        counts[pair] = counts.get(pair, 0) + 1
    assert len(counts) == 12
    assert max(counts.values()) / min(counts.values()) < 1.1


def test_roundrobin_and_scripted(P):
    assert list(RoundRobinPairs().pairs(3, 7)) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (0, 1)]
    trace = pairing_run(P, horizon=2, n_c=1, n_p=1, sched=Scripted([(1, 0), (0, 1)]))
    assert trace.final.agents == (CS, BOT)
    with pytest.raises(ScheduleError):
        pairing_run(P, horizon=3, n_c=1, n_p=1, sched=Scripted([(1, 0), (0, 1)]))
    with pytest.raises(ScheduleError):
        pairing_run(P, horizon=1, n_c=1, n_p=1, sched=Scripted([(0, 5)]))


def test_scripted_omissions_placed_exactly():
    prog = naming_t1_program(1)
    trace = run(prog, preset_semantics("T1"), naming_t1_population(3, 1),
                adv=LeaderBounded(5, ScriptedOmissions({2: Flavor.STARTER_SIDE, 4: Flavor.BOTH_SIDES})),
                horizon=10, seed=0)
    assert [ev.time for ev in trace.events if ev.flavor.omissive] == [2, 4]
    with pytest.raises(ScheduleError):
        run(prog, preset_semantics("T1"), naming_t1_population(3, 1),
            adv=FiniteBudget(1, ScriptedOmissions({10: Flavor.BOTH_SIDES})), horizon=10)


def test_omissions_ignored_in_non_omissive_model(P):
    trace = pairing_run(P, horizon=500, adv=Unrestricted(RandomOmissions(1.0)))
    assert trace.omission_count() == 0


def test_scripted_run_examples(P):
    prog = table_program(P)
    empty = scripted_run(prog, preset_semantics("TW"), Configuration(["p", "c"]), [])
    assert len(empty) == 0
    trace = scripted_run(prog, preset_semantics("TW"), Configuration(["p", "c"]), [(0, 1, NON)])
    assert trace.final.agents == (BOT, CS)
    with pytest.raises(Exception):
        scripted_run(prog, preset_semantics("TW"), Configuration(["p", "c"]), [(0, 1, Flavor.BOTH_SIDES)])


def test_trace_replay_detects_tampering(P):
    trace = pairing_run(P, horizon=200)
    trace.replay(table_program(P), preset_semantics("TW"))
    ev = trace.events[0]
    trace.events[0] = type(ev)(ev.time, ev.starter, ev.reactor, ev.flavor, ev.pre, ("p", "p"))
    with pytest.raises(ScheduleError):
        trace.replay(table_program(P), preset_semantics("TW"))


def test_is_stably(P):
    trace = pairing_run(P, horizon=100_000, seed=1)
    assert is_stably(trace, lambda c: True, 10_000)
    assert is_stably(trace, lambda c: c.count(CS) == 3, 10_000)
    assert not is_stably(trace, lambda c: c.count(CS) == 2, 1)
    with pytest.raises(ValueError):
        is_stably(trace, lambda c: True, 100_001)


@given(st.sampled_from(["T1", "T2", "T3"]), st.integers(0, 2**32 - 1))
def test_every_event_conforms_to_relation(name, seed):
    P = pairing_program()
    prog = strawman_simulator(P, 2)
    sem = preset_semantics(name)
    trace = run(prog, sem, strawman_population(["c", "p", "c", "p"]),
                adv=Unrestricted(RandomOmissions(0.4)), horizon=200, seed=seed)
    for ev in trace.events:
        assert admissible_outcomes(sem, prog, *ev.pre)[ev.flavor] == ev.post
    assert [ev.time for ev in trace.events] == list(range(len(trace)))


def test_adversary_dicts():
    assert NoOmissions().to_dict() == {"kind": "none"}
    assert LeaderBounded(3, RandomOmissions(0.5)).to_dict()["budget"] == 3
