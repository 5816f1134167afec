"""Protocols, interaction models and the single-interaction step function.

Everything else in the package executes interactions through
:func:`apply_interaction`; no other module computes post-states itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Hashable, Mapping, NamedTuple, Optional

State = Hashable
Pair = tuple


class ModelViolation(ValueError):
    """An interaction was requested that the interaction model does not allow."""


class ProgramFault(RuntimeError):
    """A program callback produced a state outside its declared state space."""


class Flavor(enum.Enum):
    NON_OMISSIVE = "NonOmissive"
    STARTER_SIDE = "StarterSide"
    REACTOR_SIDE = "ReactorSide"
    BOTH_SIDES = "BothSides"

    @property
    def omissive(self) -> bool:
        return self is not Flavor.NON_OMISSIVE

    @property
    def starter_omitted(self) -> bool:
        return self in (Flavor.STARTER_SIDE, Flavor.BOTH_SIDES)

    @property
    def reactor_omitted(self) -> bool:
        return self in (Flavor.REACTOR_SIDE, Flavor.BOTH_SIDES)

    def __str__(self) -> str:
        return self.value


OMISSIVE_FLAVORS = (Flavor.STARTER_SIDE, Flavor.REACTOR_SIDE, Flavor.BOTH_SIDES)
ALL_FLAVORS = (Flavor.NON_OMISSIVE,) + OMISSIVE_FLAVORS


@dataclass(frozen=True)
class ProtocolTable:
    """A two-way protocol as an explicit rule table.

    ``rules`` maps an ordered ``(starter, reactor)`` pair to the resulting
    pair. Pairs that are not listed are left unchanged.
    """

    states: frozenset
    initial_states: frozenset
    rules: Mapping[tuple, tuple]
    name: str = "P"

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "initial_states", frozenset(self.initial_states))
        object.__setattr__(self, "rules", {tuple(k): tuple(v) for k, v in dict(self.rules).items()})
        if not self.initial_states:
            raise ValueError("a protocol needs at least one initial state")
        if not self.initial_states <= self.states:
            raise ValueError(f"initial states {set(self.initial_states - self.states)} not in Q")
        for (q_s, q_r), result in self.rules.items():
            if len(result) != 2:
                raise ValueError(f"rule for {(q_s, q_r)} must produce a pair")
            for q in (q_s, q_r, *result):
                if q not in self.states:
                    raise ValueError(f"rule {(q_s, q_r)} -> {result} uses unknown state {q!r}")

    def delta(self, q_s, q_r) -> tuple:
        return self.rules.get((q_s, q_r), (q_s, q_r))

    def f_s(self, q_s, q_r):
        return self.delta(q_s, q_r)[0]

    def f_r(self, q_s, q_r):
        return self.delta(q_s, q_r)[1]

    def nontrivial_rules(self) -> dict:
        return {k: v for k, v in self.rules.items() if k != v}

    def __hash__(self):
        return hash((self.name, self.states, self.initial_states, tuple(sorted(map(repr, self.rules.items())))))


def _identity(state):
    return state


def _keep_own(own, partner):
    return own


@dataclass(frozen=True, eq=False)
class AgentProgram:
    """The per-agent algorithm run by the engine.

    Callback names follow the interaction roles:

    * ``starter_update(own, partner)`` - two-way starter update (``f_s``)
    * ``starter_detect(own)`` - one-way starter detection (``g``)
    * ``reactor_update(own, partner)`` - reactor update (``f_r`` / ``f``)
    * ``starter_omission(own)`` / ``reactor_omission(own)`` - ``o`` and ``h``

    ``partner`` is always the partner's state *before* the interaction.
    """

    name: str
    reactor_update: Callable[[Any, Any], Any]
    starter_update: Callable[[Any, Any], Any] = _keep_own
    starter_detect: Callable[[Any], Any] = _identity
    starter_omission: Callable[[Any], Any] = _identity
    reactor_omission: Callable[[Any], Any] = _identity
    projection: Optional[Callable[[Any], Any]] = None
    is_leader: Callable[[Any], bool] = lambda state: False
    validate: Optional[Callable[[Any], bool]] = None
    identity: Optional[Callable[[Any], Any]] = None
    encode: Callable[[Any], Any] = None
    decode: Callable[[Any], Any] = None
    memory: str = ""
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.encode is None:
            object.__setattr__(self, "encode", encode_plain)
        if self.decode is None:
            object.__setattr__(self, "decode", decode_plain)

    def project(self, state):
        if self.projection is None:
            raise ValueError(f"program {self.name!r} has no simulated projection")
        return self.projection(state)


def encode_plain(state):
    if isinstance(state, tuple):
        return [encode_plain(s) for s in state]
    return state


def decode_plain(obj):
    if isinstance(obj, list):
        return tuple(decode_plain(o) for o in obj)
    return obj


def table_program(table: ProtocolTable) -> AgentProgram:
    """Run a protocol table directly: each side applies its half of delta."""
    rules = table.rules
    states = table.states

    def f_s(own, partner):
        hit = rules.get((own, partner))
        return own if hit is None else hit[0]

    def f_r(own, partner):
        hit = rules.get((partner, own))
        return own if hit is None else hit[1]

    return AgentProgram(
        name=f"table:{table.name}",
        starter_update=f_s,
        reactor_update=f_r,
        projection=_identity,
        validate=states.__contains__,
        memory="Q_P",
        params={"table": table},
    )


@dataclass(frozen=True)
class ModelSemantics:
    """Which transition functions fire in an interaction.

    ``arity`` is ``"two-way"`` (both agents read the partner) or
    ``"one-way"`` (only the reactor reads). A disabled detection flag
    substitutes the identity for ``o`` or ``h``; in one-way models an
    undetectable starter-side omission behaves like ``g``.
    """

    arity: str = "two-way"
    omissive: bool = False
    starter_detects_interaction: bool = False
    starter_detects_omission: bool = False
    reactor_detects_omission: bool = False
    reactor_omission_as_proximity: bool = False
    preset_name: Optional[str] = None

    def __post_init__(self):
        if self.arity not in ("two-way", "one-way"):
            raise ValueError(f"unknown arity {self.arity!r}")
        if self.reactor_omission_as_proximity and not self.reactor_detects_omission:
            raise ValueError("h = g requires reactor_detects_omission")

    @property
    def two_way(self) -> bool:
        return self.arity == "two-way"

    @property
    def starter_sees_reactor(self) -> bool:
        return self.two_way

    def admissible_flavors(self) -> tuple:
        return ALL_FLAVORS if self.omissive else (Flavor.NON_OMISSIVE,)

    def check_flavor(self, flavor: Flavor):
        if flavor.omissive and not self.omissive:
            raise ModelViolation(f"{flavor} interaction is not admissible in {self.label}")

    @property
    def label(self) -> str:
        return self.preset_name or f"custom {self.arity}"

    def to_dict(self) -> dict:
        return {
            "arity": self.arity,
            "omissive": self.omissive,
            "starter_detects_interaction": self.starter_detects_interaction,
            "starter_detects_omission": self.starter_detects_omission,
            "reactor_detects_omission": self.reactor_detects_omission,
            "reactor_omission_as_proximity": self.reactor_omission_as_proximity,
            "preset_name": self.preset_name,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSemantics":
        return cls(**dict(d))


# T2, I3 and I4 are a house convention; see README "Interaction models".
_PRESETS = {
    "TW": dict(arity="two-way"),
    "IT": dict(arity="one-way", starter_detects_interaction=True),
    "IO": dict(arity="one-way"),
    "T1": dict(arity="two-way", omissive=True),
    "T2": dict(arity="two-way", omissive=True, reactor_detects_omission=True),
    "T3": dict(arity="two-way", omissive=True, starter_detects_omission=True, reactor_detects_omission=True),
    "I1": dict(arity="one-way", omissive=True, starter_detects_interaction=True),
    "I2": dict(arity="one-way", omissive=True, starter_detects_interaction=True, reactor_detects_omission=True),
    "I3": dict(arity="one-way", omissive=True, starter_detects_interaction=True, starter_detects_omission=True),
    "I4": dict(arity="one-way", omissive=True, starter_detects_interaction=True,
               reactor_detects_omission=True, reactor_omission_as_proximity=True),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_semantics(name: str) -> ModelSemantics:
    try:
        flags = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown interaction model {name!r}; expected one of {', '.join(PRESET_NAMES)}") from None
    return ModelSemantics(preset_name=name, **flags)


@dataclass(frozen=True)
class Configuration:
    agents: tuple
    leader_index: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if self.leader_index is not None and not 0 <= self.leader_index < len(self.agents):
            raise ValueError(f"leader index {self.leader_index} out of range")

    def __len__(self):
        return len(self.agents)

    def __getitem__(self, i):
        return self.agents[i]

    def with_agents(self, agents) -> "Configuration":
        return replace(self, agents=tuple(agents))

    def check_leader(self, prog: AgentProgram):
        leaders = [i for i, q in enumerate(self.agents) if prog.is_leader(q)]
        if self.leader_index is None:
            if leaders:
                raise ValueError(f"agents {leaders} are in leader states but no leader index is set")
            return
        if leaders != [self.leader_index]:
            raise ValueError(f"expected exactly agent {self.leader_index} in a leader state, found {leaders}")


class InteractionEvent(NamedTuple):
    # a named tuple keeps per-step construction cheap in long runs
    time: int
    starter: int
    reactor: int
    flavor: Flavor
    pre: tuple
    post: tuple

    @property
    def agents(self) -> tuple:
        return (self.starter, self.reactor)


def _starter_post(sem: ModelSemantics, prog: AgentProgram, q_s, q_r, flavor: Flavor):
    if sem.two_way:
        if not flavor.starter_omitted:
            return prog.starter_update(q_s, q_r)
        return prog.starter_omission(q_s) if sem.starter_detects_omission else q_s
    sent = prog.starter_detect(q_s) if sem.starter_detects_interaction else q_s
    if not flavor.omissive:
        return sent
    return prog.starter_omission(q_s) if sem.starter_detects_omission else sent


def _reactor_post(sem: ModelSemantics, prog: AgentProgram, q_s, q_r, flavor: Flavor):
    # one-way models have a single transmission: any omission loses it
    omitted = flavor.reactor_omitted if sem.two_way else flavor.omissive
    if not omitted:
        return prog.reactor_update(q_r, q_s)
    if not sem.reactor_detects_omission:
        return q_r
    if sem.reactor_omission_as_proximity:
        return prog.starter_detect(q_r)
    return prog.reactor_omission(q_r)


def outcome(sem: ModelSemantics, prog: AgentProgram, q_s, q_r, flavor: Flavor) -> tuple:
    """Post-state pair for one interaction; both sides read pre-states only."""
    sem.check_flavor(flavor)
    post = (_starter_post(sem, prog, q_s, q_r, flavor), _reactor_post(sem, prog, q_s, q_r, flavor))
    if prog.validate is not None:
        for q in post:
            if not prog.validate(q):
                raise ProgramFault(f"{prog.name} produced {q!r} outside its state space from ({q_s!r}, {q_r!r})")
    return post


def stepper(sem: ModelSemantics, prog: AgentProgram) -> Callable:
    """Return a fast ``(q_s, q_r, flavor) -> post`` function for one run.

    Equivalent to :func:`outcome` but resolves the model flags once.
    """
    validate = prog.validate
    non = Flavor.NON_OMISSIVE
    if sem.two_way:
        f_s, f_r = prog.starter_update, prog.reactor_update

        def clean(q_s, q_r):
            return f_s(q_s, q_r), f_r(q_r, q_s)
    else:
        f = prog.reactor_update
        if sem.starter_detects_interaction:
            g = prog.starter_detect

            def clean(q_s, q_r):
                return g(q_s), f(q_r, q_s)
        else:
            def clean(q_s, q_r):
                return q_s, f(q_r, q_s)

    def step(q_s, q_r, flavor):
        if flavor is non:
            post = clean(q_s, q_r)
        else:
            sem.check_flavor(flavor)
            post = (_starter_post(sem, prog, q_s, q_r, flavor), _reactor_post(sem, prog, q_s, q_r, flavor))
        if validate is not None:
            for q in post:
                if q is not q_s and q is not q_r and not validate(q):
                    raise ProgramFault(f"{prog.name} produced {q!r} outside its state space from ({q_s!r}, {q_r!r})")
        return post

    return step


def admissible_outcomes(sem: ModelSemantics, prog: AgentProgram, q_s, q_r) -> dict:
    """Map each admissible flavor to the post-state pair it produces."""
    return {flavor: outcome(sem, prog, q_s, q_r, flavor) for flavor in sem.admissible_flavors()}


def apply_interaction(sem: ModelSemantics, prog: AgentProgram, config: Configuration,
                      starter: int, reactor: int, flavor: Flavor = Flavor.NON_OMISSIVE,
                      time: int = 0) -> tuple:
    """Execute one interaction and return ``(new_config, event)``."""
    n = len(config.agents)
    if starter == reactor:
        raise ModelViolation("an agent cannot interact with itself")
    if not (0 <= starter < n and 0 <= reactor < n):
        raise ModelViolation(f"agent index out of range for population of {n}")
    pre = (config.agents[starter], config.agents[reactor])
    post = outcome(sem, prog, pre[0], pre[1], flavor)
    agents = list(config.agents)
    agents[starter], agents[reactor] = post
    event = InteractionEvent(time, starter, reactor, flavor, pre, post)
    return config.with_agents(agents), event
