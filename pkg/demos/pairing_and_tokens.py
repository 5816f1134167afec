"""Pairing under two-way interactions, then the same protocol driven through the IT token simulator."""

from popleader import (
    check_pairing, check_simulation, it_token_population, it_token_simulator, pairing_program, preset_semantics,
    run, table_program,
)
from popleader.protocols import PairingInstance
from popleader.semantics import Configuration
from popleader.verification import measure_state_footprint


def main():
    P = pairing_program()
    inst = PairingInstance(5, 3)

    # two-way: consumers meet producers directly
    prog = table_program(P)
    trace = run(prog, preset_semantics("TW"), Configuration(["c"] * 5 + ["p"] * 3), horizon=20_000, seed=1)
    rep = check_pairing(trace, inst, prog, 2000)
    print(f"TW pairing: cs={rep.final_cs} stable from step {rep.stabilized_at}, passed={rep.passed}")

    # immediate transmission: a token carries the starter's simulated state to its partner
    token = it_token_simulator(P)
    sim = ["c", "p", "c", "p", "c", "p"]
    trace = run(token, preset_semantics("IT"), it_token_population(sim), horizon=20_000, seed=1)
    verdict = check_simulation(trace, token, P)
    rep = check_pairing(trace, PairingInstance(3, 3), token, 2000)
    fp = measure_state_footprint(trace)
    print(f"IT simulation: matched {len(verdict.matching)} two-way interactions, success={verdict.success}")
    print(f"IT pairing: cs={rep.final_cs}, passed={rep.passed}, distinct states per agent <= {fp.max_per_agent}")


if __name__ == "__main__":
    main()
