"""Concrete agent programs: pairing, naming, IT token passing, straw men.

Populations are built with the ``*_population`` helpers next to each
program so that the leader sits in a known slot.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Sequence

from .semantics import AgentProgram, Configuration, ProtocolTable, table_program

BOT = "⊥"
CS = "cs"


def pairing_program() -> ProtocolTable:
    return ProtocolTable(
        states={CS, "c", "p", BOT},
        initial_states={"c", "p"},
        rules={("c", "p"): (CS, BOT), ("p", "c"): (BOT, CS)},
        name="pairing",
    )


@dataclass(frozen=True)
class PairingInstance:
    n_c: int
    n_p: int

    def __post_init__(self):
        if self.n_c < 0 or self.n_p < 0 or self.n_c + self.n_p < 2:
            raise ValueError("a pairing instance needs n_c + n_p >= 2")

    @property
    def n(self) -> int:
        return self.n_c + self.n_p

    @property
    def target(self) -> int:
        return min(self.n_c, self.n_p)

    def simulated_states(self) -> list:
        return ["c"] * self.n_c + ["p"] * self.n_p


def _dataclass_codec(cls):
    names = [f.name for f in fields(cls)]

    def encode(state):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(state).items()}

    def decode(obj):
        return cls(**{k: tuple(obj[k]) if isinstance(obj[k], list) else obj[k] for k in names})

    return encode, decode


# -- naming with unbounded memory --------------------------------------------

@dataclass(frozen=True)
class NamingState:
    my_ID: Optional[int] = None
    next_ID: Optional[int] = None


def naming_unbounded_program() -> AgentProgram:
    """The leader hands out a counter that grows on every detected interaction."""

    def g(own):
        if own.my_ID == 0:
            return replace(own, next_ID=own.next_ID + 1)
        return own

    def f(own, partner):
        if own.my_ID is None and partner.my_ID == 0:
            return replace(own, my_ID=partner.next_ID)
        return own

    encode, decode = _dataclass_codec(NamingState)
    return AgentProgram(
        name="naming_unbounded",
        starter_detect=g,
        reactor_update=f,
        starter_update=lambda own, partner: g(own),
        is_leader=lambda q: q.my_ID == 0,
        identity=lambda q: q.my_ID,
        validate=lambda q: isinstance(q, NamingState),
        encode=encode,
        decode=decode,
        memory="my_ID; leader: next_ID (unbounded)",
        params={"counter": lambda q: q.next_ID},
    )


def naming_unbounded_population(n: int, leader: int = 0) -> Configuration:
    agents = [NamingState() for _ in range(n)]
    agents[leader] = NamingState(my_ID=0, next_ID=1)
    return Configuration(agents, leader)


# -- naming for I1/I2 with a known bound L -----------------------------------

@dataclass(frozen=True)
class NamingI12State:
    my_ID: Optional[int] = None
    next_ID: Optional[tuple] = None
    locked: Optional[tuple] = None
    waiting: Optional[tuple] = None
    redundant: Optional[tuple] = None


def _active(locked, size):
    """Index of the first unlocked entry, or ``size`` when all are locked."""
    for j, lock in enumerate(locked):
        if not lock:
            return j
    return size


def naming_i12_program(L: int) -> AgentProgram:
    """Naming with L+1 interleaved ID sequences, locks and a redundancy handshake.

    Entries are 0-based here; entry ``j`` hands out IDs ``j+1, j+1+(L+1), ...``.
    """
    if L < 0:
        raise ValueError("the omission bound L must be non-negative")
    size = L + 1

    def starter_sends(own):
        if own.my_ID != 0:
            return own
        j = _active(own.locked, size)
        if j == size:
            return own
        locked = list(own.locked)
        locked[j] = True
        return replace(own, locked=tuple(locked))

    def reactor_delivers(own, s):
        if own.my_ID == 0:
            locked, waiting, next_ID = list(own.locked), list(own.waiting), list(own.next_ID)
            redundant_s = s.redundant or (False,) * size
            for j in range(size):
                if redundant_s[j]:
                    waiting[j] = s.my_ID
                elif s.my_ID is not None and waiting[j] == s.my_ID:
                    waiting[j] = None
                    locked[j] = False
            if s.my_ID is not None and s.my_ID in next_ID:
                j = next_ID.index(s.my_ID)
                locked[j] = False
                next_ID[j] += size
            return replace(own, next_ID=tuple(next_ID), locked=tuple(locked), waiting=tuple(waiting))

        if s.my_ID != 0:
            return own
        my_ID, redundant = own.my_ID, list(own.redundant)
        j = _active(s.locked, size)
        if j < size:
            if my_ID is None:
                my_ID = s.next_ID[j]
            else:
                redundant[j] = True
        if my_ID is not None:
            for j in range(size):
                if s.waiting[j] == my_ID:
                    redundant[j] = False
        return replace(own, my_ID=my_ID, redundant=tuple(redundant))

    encode, decode = _dataclass_codec(NamingI12State)
    return AgentProgram(
        name="naming_i12",
        starter_detect=starter_sends,
        reactor_update=reactor_delivers,
        starter_update=lambda own, partner: starter_sends(own),
        is_leader=lambda q: q.my_ID == 0,
        identity=lambda q: q.my_ID,
        validate=lambda q: isinstance(q, NamingI12State),
        encode=encode,
        decode=decode,
        memory=f"my_ID; leader: next_ID/locked/waiting[{size}]; others: redundant[{size}]",
        params={"L": L, "counter": lambda q: max(q.next_ID) if q.next_ID else None},
    )


def naming_i12_population(n: int, L: int, leader: int = 0) -> Configuration:
    size = L + 1
    agents = [NamingI12State(redundant=(False,) * size) for _ in range(n)]
    agents[leader] = NamingI12State(
        my_ID=0,
        next_ID=tuple(range(1, size + 1)),
        locked=(False,) * size,
        waiting=(None,) * size,
    )
    return Configuration(agents, leader)


# -- naming for T1 with a known bound L --------------------------------------

@dataclass(frozen=True)
class NamingT1State:
    my_ID: Optional[tuple] = None
    next_ID: Optional[int] = None


def _complete(ids) -> bool:
    return ids is not None and None not in ids


def naming_t1_program(L: int) -> AgentProgram:
    """Each agent collects L+1 counter readings; the full array is its ID."""
    if L < 0:
        raise ValueError("the omission bound L must be non-negative")

    def update(own, partner):
        if own.next_ID is not None:
            if partner.my_ID is not None and None in partner.my_ID:
                return replace(own, next_ID=own.next_ID + 1)
            return own
        if partner.next_ID is not None and None in own.my_ID:
            ids = list(own.my_ID)
            ids[ids.index(None)] = partner.next_ID
            return replace(own, my_ID=tuple(ids))
        return own

    def identity(q):
        if q.next_ID is not None:
            return 0
        return q.my_ID if _complete(q.my_ID) else None

    encode, decode = _dataclass_codec(NamingT1State)
    return AgentProgram(
        name="naming_t1",
        starter_update=update,
        reactor_update=update,
        is_leader=lambda q: q.next_ID is not None,
        identity=identity,
        validate=lambda q: isinstance(q, NamingT1State),
        encode=encode,
        decode=decode,
        memory=f"others: my_ID[{L + 1}]; leader: next_ID",
        params={"L": L, "counter": lambda q: q.next_ID},
    )


def naming_t1_population(n: int, L: int, leader: int = 0) -> Configuration:
    agents = [NamingT1State(my_ID=(None,) * (L + 1)) for _ in range(n)]
    agents[leader] = NamingT1State(next_ID=1)
    return Configuration(agents, leader)


# -- IT token-passing simulator ----------------------------------------------

ROLES = ("leader", "available", "moving", "starter", "pending")


@dataclass(frozen=True)
class TokenSimState:
    role: str
    state_P: object
    token: object = None


def it_token_simulator(P: ProtocolTable, literal_token_copy: bool = False) -> AgentProgram:
    """Sequentialise simulated two-way interactions with a circulating token.

    Leadership moves leader -> moving -> starter; the starter's first
    observer applies ``f_r`` and emits a token carrying its old simulated
    state, which travels by observation until the pending starter applies
    ``f_s``. By default a reactor adopts the starter's token only when the
    starter carries one; ``literal_token_copy=True`` copies it
    unconditionally, which lets a token holder that is observed-into
    (i.e. acts as reactor) lose the token.
    """
    rules = P.rules

    def f_s(a, b):
        hit = rules.get((a, b))
        return a if hit is None else hit[0]

    def f_r(a, b):
        hit = rules.get((a, b))
        return b if hit is None else hit[1]

    def g(own):
        role = own.role
        if role in ("leader", "moving"):
            role = "available"
        elif role == "starter":
            role = "pending"
        if role == own.role and own.token is None:
            return own
        return TokenSimState(role, own.state_P, None)

    def f(own, s):
        role, state_P = own.role, own.state_P
        if literal_token_copy or s.token is not None:
            token = s.token
        else:
            token = own.token
        if s.role == "leader":
            role = "moving"
        elif s.role == "moving":
            role = "starter"
        elif s.role == "starter":
            token = state_P
            state_P = f_r(s.state_P, state_P)
        elif role == "pending" and token is not None:
            state_P = f_s(state_P, token)
            role = "leader"
            token = None
        if role == own.role and state_P == own.state_P and token == own.token:
            return own
        return TokenSimState(role, state_P, token)

    def decode(obj):
        return TokenSimState(obj["role"], obj["state_P"], obj["token"])

    states = P.states
    return AgentProgram(
        name="it_token",
        starter_detect=g,
        reactor_update=f,
        starter_update=lambda own, partner: g(own),
        projection=lambda q: q.state_P,
        is_leader=lambda q: q.role == "leader",
        validate=lambda q: q.role in ROLES and q.state_P in states and (q.token is None or q.token in states),
        encode=lambda q: {"role": q.role, "state_P": q.state_P, "token": q.token},
        decode=decode,
        memory="role x Q_P x (Q_P + null)",
        params={"table": P, "literal_token_copy": literal_token_copy},
    )


def it_token_population(simulated: Sequence, leader: int = 0) -> Configuration:
    agents = [TokenSimState("available", q) for q in simulated]
    agents[leader] = TokenSimState("leader", simulated[leader])
    return Configuration(agents, leader)


# -- straw-man simulators (attack targets) -----------------------------------

@dataclass(frozen=True)
class StrawmanState:
    state_P: object
    leader: bool = False
    alarm: int = 0


def strawman_simulator(P: ProtocolTable, alarm_levels: int = 0) -> AgentProgram:
    """Apply one's own side of delta on every exchange, trusting the partner to do the same.

    Detected omissions only raise a saturating ``alarm`` counter, which
    nothing reads. With ``alarm_levels=0`` the program is stateless apart
    from the simulated state.
    """
    rules = P.rules

    def f_s(own, partner):
        hit = rules.get((own.state_P, partner.state_P))
        if hit is None or hit[0] == own.state_P:
            return own
        return replace(own, state_P=hit[0])

    def f_r(own, partner):
        hit = rules.get((partner.state_P, own.state_P))
        if hit is None or hit[1] == own.state_P:
            return own
        return replace(own, state_P=hit[1])

    def alarm(own):
        if own.alarm >= alarm_levels:
            return own
        return replace(own, alarm=own.alarm + 1)

    def decode(obj):
        return StrawmanState(obj["state_P"], obj["leader"], obj["alarm"])

    states = P.states
    return AgentProgram(
        name="strawman",
        starter_update=f_s,
        reactor_update=f_r,
        starter_omission=alarm,
        reactor_omission=alarm,
        projection=lambda q: q.state_P,
        is_leader=lambda q: q.leader,
        validate=lambda q: q.state_P in states and 0 <= q.alarm <= alarm_levels,
        encode=lambda q: {"state_P": q.state_P, "leader": q.leader, "alarm": q.alarm},
        decode=decode,
        memory=f"Q_P x leader flag x alarm[0..{alarm_levels}]",
        params={"table": P, "alarm_levels": alarm_levels},
    )


def strawman_t1_simulator(P: ProtocolTable) -> AgentProgram:
    return strawman_simulator(P, alarm_levels=0)


def strawman_population(simulated: Sequence, leader: Optional[int] = 0) -> Configuration:
    agents = [StrawmanState(q, leader=(i == leader)) for i, q in enumerate(simulated)]
    return Configuration(agents, leader)


# -- naming composed with an ID consumer -------------------------------------

def compose_with_naming(naming: AgentProgram, consumer: AgentProgram) -> AgentProgram:
    """Product program whose consumer half only runs between named agents.

    States are ``(naming_state, consumer_state)``. Consumer callbacks are
    handed whole product states so they can read IDs, and return a new
    consumer state. Two-party callbacks need both agents named; the
    one-party ones (``g``, ``o``, ``h``) need the acting agent named.
    """
    if not consumer.params.get("requires_ids"):
        raise ValueError(f"consumer {consumer.name!r} does not declare requires_ids")
    if naming.identity is None:
        raise ValueError(f"{naming.name!r} is not a naming program")
    named = naming.identity

    def two_party(nam_cb, con_cb):
        def cb(own, partner):
            new_nam = nam_cb(own[0], partner[0])
            if named(own[0]) is None or named(partner[0]) is None:
                return (new_nam, own[1])
            return (new_nam, con_cb(own, partner))
        return cb

    def one_party(nam_cb, con_cb):
        def cb(own):
            new_nam = nam_cb(own[0])
            if named(own[0]) is None:
                return (new_nam, own[1])
            return (new_nam, con_cb(own))
        return cb

    projection = None
    if consumer.projection is not None:
        projection = lambda q: consumer.projection(q[1])
    return AgentProgram(
        name=f"{naming.name}+{consumer.name}",
        starter_update=two_party(naming.starter_update, consumer.starter_update),
        reactor_update=two_party(naming.reactor_update, consumer.reactor_update),
        starter_detect=one_party(naming.starter_detect, consumer.starter_detect),
        starter_omission=one_party(naming.starter_omission, consumer.starter_omission),
        reactor_omission=one_party(naming.reactor_omission, consumer.reactor_omission),
        projection=projection,
        is_leader=lambda q: naming.is_leader(q[0]),
        identity=lambda q: named(q[0]),
        encode=lambda q: [naming.encode(q[0]), consumer.encode(q[1])],
        decode=lambda obj: (naming.decode(obj[0]), consumer.decode(obj[1])),
        memory=f"({naming.memory}) x ({consumer.memory})",
        params={"naming": naming, "consumer": consumer, **{k: v for k, v in naming.params.items() if k == "L"}},
    )


def compose_population(naming_config: Configuration, consumer_states: Sequence) -> Configuration:
    return Configuration(list(zip(naming_config.agents, consumer_states)), naming_config.leader_index)


__all__ = [
    "BOT", "CS", "PairingInstance", "pairing_program", "table_program",
    "NamingState", "naming_unbounded_program", "naming_unbounded_population",
    "NamingI12State", "naming_i12_program", "naming_i12_population",
    "NamingT1State", "naming_t1_program", "naming_t1_population",
    "TokenSimState", "it_token_simulator", "it_token_population", "ROLES",
    "StrawmanState", "strawman_simulator", "strawman_t1_simulator", "strawman_population",
    "compose_with_naming", "compose_population",
]
