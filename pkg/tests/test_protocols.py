from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from popleader.protocols import (
    BOT,
    CS,
    NamingI12State,
    NamingState,
    NamingT1State,
    PairingInstance,
    StrawmanState,
    TokenSimState,
    compose_population,
    compose_with_naming,
    it_token_population,
    it_token_simulator,
    naming_i12_population,
    naming_i12_program,
    naming_t1_population,
    naming_t1_program,
    naming_unbounded_population,
    naming_unbounded_program,
    pairing_program,
    strawman_t1_simulator,
)
from popleader.scheduling import LeaderBounded, RandomOmissions, Unrestricted, run
from popleader.semantics import AgentProgram, Configuration, Flavor, apply_interaction, outcome, preset_semantics

NON, SS, RS, BOTH = Flavor.NON_OMISSIVE, Flavor.STARTER_SIDE, Flavor.REACTOR_SIDE, Flavor.BOTH_SIDES


def test_pairing_table(P):
    assert P.states == {CS, "c", "p", BOT}
    assert P.initial_states == {"c", "p"}
    assert P.delta("c", "p") == (CS, BOT)
    assert P.delta("p", "c") == (BOT, CS)
    assert P.delta("c", "c") == ("c", "c")


def test_pairing_instance():
    inst = PairingInstance(5, 3)
    assert inst.n == 8 and inst.target == 3
    assert Counter(inst.simulated_states()) == {"c": 5, "p": 3}
    with pytest.raises(ValueError):
        PairingInstance(1, 0)


# -- unbounded naming ----------------------------------------------------------

def test_unbounded_naming_examples():
    prog, sem = naming_unbounded_program(), preset_semantics("I1")
    cfg = naming_unbounded_population(3)
    after, _ = apply_interaction(sem, prog, cfg, 0, 1)
    assert after[1].my_ID == 1 and after[0].next_ID == 2
    omitted, _ = apply_interaction(sem, prog, cfg, 0, 1, RS)
    assert omitted[1] == NamingState() and omitted[0].next_ID == 2
    others, _ = apply_interaction(sem, prog, after, 1, 2)
    assert others.agents[1:] == after.agents[1:]


def test_unbounded_naming_distinct_under_unrestricted_adversary():
    prog = naming_unbounded_program()
    for seed in range(5):
        trace = run(prog, preset_semantics("I1"), naming_unbounded_population(7),
                    adv=Unrestricted(RandomOmissions(0.6)), horizon=5000, seed=seed)
        ids = [q.my_ID for q in trace.final.agents]
        assert None not in ids and len(set(ids)) == 7


# -- naming for I1/I2 ----------------------------------------------------------

def test_i12_initial_leader_state():
    leader = naming_i12_population(4, 2)[0]
    assert leader.next_ID == (1, 2, 3)
    assert leader.locked == (False, False, False)
    assert leader.waiting == (None, None, None)


def test_i12_assignment_and_unlock():
    prog, sem = naming_i12_program(2), preset_semantics("I1")
    cfg = naming_i12_population(3, 2)
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1)
    # the reader sees the pre-state active entry; the leader locks it
    assert cfg[1].my_ID == 1
    assert cfg[0].locked == (True, False, False)
    cfg, _ = apply_interaction(sem, prog, cfg, 1, 0)
    assert cfg[0].next_ID == (4, 2, 3)
    assert cfg[0].locked == (False, False, False)


def test_i12_omission_moves_to_next_entry():
    prog, sem = naming_i12_program(2), preset_semantics("I1")
    cfg = naming_i12_population(3, 2)
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1, BOTH)
    assert cfg[1].my_ID is None and cfg[0].locked == (True, False, False)
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 2)
    assert cfg[2].my_ID == 2


def test_i12_all_locked_does_nothing():
    prog, sem = naming_i12_program(1), preset_semantics("I1")
    cfg = naming_i12_population(3, 1)
    for _ in range(2):
        cfg, _ = apply_interaction(sem, prog, cfg, 0, 1, BOTH)
    assert cfg[0].locked == (True, True)
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 2)
    assert cfg[2].my_ID is None and cfg[0].locked == (True, True)


def test_i12_redundant_handshake():
    # an agent that reads an entry while already named marks it redundant,
    # the leader records it as waiting, then both sides clear
    prog, sem = naming_i12_program(1), preset_semantics("I1")
    cfg = naming_i12_population(3, 1)
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1)            # a gets 1, entry 0 locked
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1)            # a already named, entry 1 locked
    assert cfg[1].my_ID == 1 and cfg[1].redundant == (False, True)
    cfg, _ = apply_interaction(sem, prog, cfg, 1, 0)            # leader reads a
    assert cfg[0].waiting == (None, 1)
    assert cfg[0].next_ID == (3, 2) and cfg[0].locked == (False, True)
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1)            # a sees itself waiting on entry 1
    assert cfg[1].redundant == (True, False)                    # ...and was just offered entry 0 again
    cfg, _ = apply_interaction(sem, prog, cfg, 1, 0)            # leader unlocks entry 1, parks entry 0
    assert cfg[0].waiting == (1, None) and cfg[0].locked == (True, False)


@given(st.integers(0, 3), st.integers(3, 7), st.sampled_from(["I1", "I2"]), st.integers(0, 2**32 - 1))
def test_i12_invariants_under_leader_bounded(L, n, model, seed):
    prog = naming_i12_program(L)
    trace = run(prog, preset_semantics(model), naming_i12_population(n, L),
                adv=LeaderBounded(L, RandomOmissions(0.5)), horizon=600, seed=seed)
    size = L + 1
    for cfg in trace.configurations():
        leader = cfg[0]
        assert all(v % size == (j + 1) % size for j, v in enumerate(leader.next_ID))
        ids = [q.my_ID for q in cfg[1:] if q.my_ID is not None]
        assert len(ids) == len(set(ids))
        assert all(i > 0 and i <= size * n for i in ids)


# -- naming for T1 -------------------------------------------------------------

def test_t1_naming_examples():
    prog, sem = naming_t1_program(1), preset_semantics("T1")
    cfg = naming_t1_population(3, 1)
    both, _ = apply_interaction(sem, prog, cfg, 0, 1)
    assert both[1].my_ID == (1, None) and both[0].next_ID == 2
    omitted, _ = apply_interaction(sem, prog, cfg, 0, 1, SS)
    assert omitted[0].next_ID == 1 and omitted[1].my_ID == (1, None)
    others, _ = apply_interaction(sem, prog, cfg, 1, 2)
    assert others == cfg


def test_t1_slots_fill_left_to_right():
    prog, sem = naming_t1_program(2), preset_semantics("T1")
    cfg = naming_t1_population(2, 2)
    seen = []
    for k in range(5):
        cfg, _ = apply_interaction(sem, prog, cfg, k % 2, 1 - k % 2)
        seen.append(cfg[1].my_ID)
    assert seen[:3] == [(1, None, None), (1, 2, None), (1, 2, 3)]
    assert seen[-1] == (1, 2, 3) and cfg[0].next_ID == 4
    assert prog.identity(cfg[1]) == (1, 2, 3) and prog.identity(cfg[0]) == 0


@given(st.integers(0, 3), st.integers(3, 6), st.integers(0, 2**32 - 1))
def test_t1_invariants_under_leader_bounded(L, n, seed):
    prog = naming_t1_program(L)
    trace = run(prog, preset_semantics("T1"), naming_t1_population(n, L),
                adv=LeaderBounded(L, RandomOmissions(0.5)), horizon=600, seed=seed)
    bound = 1 + (n - 1) * (L + 1) + L
    for cfg in trace.configurations():
        assert cfg[0].next_ID <= bound
        done = [q.my_ID for q in cfg[1:] if None not in q.my_ID]
        assert len(done) == len(set(done))


# -- IT token simulator --------------------------------------------------------

def test_token_examples(P):
    prog, sem = it_token_simulator(P), preset_semantics("IT")
    post = outcome(sem, prog, TokenSimState("leader", "c"), TokenSimState("available", "p"), NON)
    assert (post[0].role, post[1].role) == ("available", "moving")
    post = outcome(sem, prog, TokenSimState("starter", "p"), TokenSimState("available", "c"), NON)
    assert post[0].role == "pending"
    assert post[1] == TokenSimState("available", CS, "c")
    post = outcome(sem, prog, TokenSimState("available", CS, "c"), TokenSimState("pending", "p"), NON)
    assert post[1] == TokenSimState("leader", BOT, None)


def token_invariants(cfg):
    busy = [q for q in cfg if q.role != "available"]
    tokens = [q for q in cfg if q.token is not None]
    assert len(busy) == 1
    assert len(tokens) <= 1
    assert bool(tokens) == (busy[0].role == "pending")


@given(st.integers(3, 7), st.integers(0, 2**32 - 1))
def test_token_invariants_hold(n, seed):
    P = pairing_program()
    sim = (["c", "p"] * n)[:n]
    trace = run(it_token_simulator(P), preset_semantics("IT"), it_token_population(sim), horizon=2000, seed=seed)
    for cfg in trace.configurations():
        token_invariants(cfg)


def test_literal_token_copy_loses_tokens(P):
    # the unconditional copy lets an observed token holder be overwritten
    lost = 0
    for seed in range(20):
        trace = run(it_token_simulator(P, literal_token_copy=True), preset_semantics("IT"),
                    it_token_population(["c", "p", "c", "p", "c", "p"]), horizon=20_000, seed=seed)
        counts = Counter(q.state_P for q in trace.final.agents)
        lost += counts[CS] != 3
    assert lost > 0


def test_token_omission_requests_are_noops(P):
    prog = it_token_simulator(P)
    trace = run(prog, preset_semantics("IT"), it_token_population(["c", "p", "c"]),
                adv=Unrestricted(RandomOmissions(1.0)), horizon=100, seed=0)
    assert trace.omission_count() == 0


# -- straw man -----------------------------------------------------------------

def test_strawman_t1_examples(P):
    prog, sem = strawman_t1_simulator(P), preset_semantics("T1")
    p, c = StrawmanState("p", leader=True), StrawmanState("c")
    clean = outcome(sem, prog, p, c, NON)
    assert [q.state_P for q in clean] == [BOT, CS]
    flawed = outcome(sem, prog, p, c, SS)
    assert [q.state_P for q in flawed] == ["p", CS]
    assert outcome(sem, prog, p, c, BOTH) == (p, c)


# -- composition ---------------------------------------------------------------

def id_echo_consumer():
    """Test consumer: remembers the partner's ID it saw last."""
    return AgentProgram(
        name="echo",
        starter_update=lambda own, partner: partner[0].my_ID,
        reactor_update=lambda own, partner: partner[0].my_ID,
        params={"requires_ids": True},
    )


def test_compose_gates_consumer_on_names():
    naming = naming_unbounded_program()
    prog = compose_with_naming(naming, id_echo_consumer())
    sem = preset_semantics("IT")
    cfg = compose_population(naming_unbounded_population(3), ["-", "-", "-"])
    assert cfg.agents[1] == (NamingState(), "-")
    # leader meets unnamed agent: naming moves, consumer does not
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1)
    assert cfg[1] == (NamingState(my_ID=1), "-")
    # both named now: consumer fires
    cfg, _ = apply_interaction(sem, prog, cfg, 0, 1)
    assert cfg[1][1] == 0
    with pytest.raises(ValueError):
        compose_with_naming(naming, AgentProgram("x", reactor_update=lambda o, p: o))


def test_compose_horizon_zero():
    prog = compose_with_naming(naming_unbounded_program(), id_echo_consumer())
    cfg = compose_population(naming_unbounded_population(3), [0, 0, 0])
    trace = run(prog, preset_semantics("IT"), cfg, horizon=0)
    assert trace.final.agents == tuple(zip(naming_unbounded_population(3).agents, [0, 0, 0]))


def test_state_codecs_round_trip():
    for prog, state in [
        (naming_i12_program(2), NamingI12State(3, None, None, None, (False, True, False))),
        (naming_t1_program(1), NamingT1State((1, None), None)),
        (naming_unbounded_program(), NamingState(0, 12)),
        (it_token_simulator(pairing_program()), TokenSimState("pending", "p", None)),
    ]:
        assert prog.decode(prog.encode(state)) == state


def test_population_leader_slot():
    cfg = naming_i12_population(5, 2, leader=3)
    assert cfg.leader_index == 3 and cfg[3].my_ID == 0
    cfg.check_leader(naming_i12_program(2))
    assert isinstance(it_token_population(["c", "p", "c"], 1), Configuration)
