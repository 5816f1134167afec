"""Leader-assisted population protocols under omission faults: engine, simulators, checkers, attacks."""

from .semantics import (
    AgentProgram, Configuration, Flavor, InteractionEvent, ModelSemantics, ModelViolation, ProgramFault,
    ProtocolTable, PRESET_NAMES, apply_interaction, outcome, preset_semantics, table_program,
)
from .scheduling import (
    FiniteBudget, LeaderBounded, Never, NoOmissions, RandomOmissions, RoundRobinPairs, ScheduleError,
    Scripted, ScriptedOmissions, Trace, UniformRandom, Unrestricted, is_stably, run, scripted_run,
)
from .protocols import (
    BOT, CS, PairingInstance, compose_with_naming, it_token_population, it_token_simulator,
    naming_i12_population, naming_i12_program, naming_t1_population, naming_t1_program,
    naming_unbounded_population, naming_unbounded_program, pairing_program, strawman_population,
    strawman_simulator, strawman_t1_simulator,
)
from .verification import check_naming, check_pairing, check_simulation, measure_state_footprint
from .attacks import (
    build_bounded_memory_attack, build_duplication_attack, build_lemma_sequence, checkpoint_agreement,
    fair_base_sequence, find_omission_recurrent,
)

__version__ = "0.1.0"

__all__ = [
    "AgentProgram",
    "Configuration",
    "Flavor",
    "InteractionEvent",
    "ModelSemantics",
    "ModelViolation",
    "ProgramFault",
    "ProtocolTable",
    "PRESET_NAMES",
    "apply_interaction",
    "outcome",
    "preset_semantics",
    "table_program",
    "FiniteBudget",
    "LeaderBounded",
    "Never",
    "NoOmissions",
    "RandomOmissions",
    "RoundRobinPairs",
    "ScheduleError",
    "Scripted",
    "ScriptedOmissions",
    "Trace",
    "UniformRandom",
    "Unrestricted",
    "is_stably",
    "run",
    "scripted_run",
    "BOT",
    "CS",
    "PairingInstance",
    "compose_with_naming",
    "it_token_population",
    "it_token_simulator",
    "naming_i12_population",
    "naming_i12_program",
    "naming_t1_population",
    "naming_t1_program",
    "naming_unbounded_population",
    "naming_unbounded_program",
    "pairing_program",
    "strawman_population",
    "strawman_simulator",
    "strawman_t1_simulator",
    "check_naming",
    "check_pairing",
    "check_simulation",
    "measure_state_footprint",
    "build_bounded_memory_attack",
    "build_duplication_attack",
    "build_lemma_sequence",
    "checkpoint_agreement",
    "fair_base_sequence",
    "find_omission_recurrent",
]
