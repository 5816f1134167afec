"""Break the straw-man pairing simulators: duplication under T1, bounded memory under T3."""

from popleader import (
    build_lemma_sequence, check_pairing, checkpoint_agreement, fair_base_sequence, pairing_program,
    preset_semantics, strawman_population, strawman_simulator,
)
from popleader.attacks import build_bounded_memory_attack, build_duplication_attack, find_omission_recurrent
from popleader.attacks import reachable_states
from popleader.protocols import BOT, CS, PairingInstance, strawman_t1_simulator


def main():
    P = pairing_program()
    c0 = strawman_population(["p", "c"]).agents

    # T1: omissions are invisible, so a second consumer can shadow the first
    prog, sem = strawman_t1_simulator(P), preset_semantics("T1")
    print("recurrence of the initial configuration:", find_omission_recurrent(prog, sem, c0, "starter"))
    base = fair_base_sequence(prog, sem, c0, (BOT, CS), seed=0)
    script = build_duplication_attack(prog, sem, c0, base)
    trace = script.replay(prog, sem)
    rep = check_pairing(trace, PairingInstance(2, 1), prog, 0)
    print(f"duplication: {len(script.steps)} steps, {script.omissions} omissions, "
          f"cs={rep.final_cs}, safety violated at step {rep.first_safety_violation}")

    # T3: the target counts omissions, so each clean step needs a recurrence and shadows are spent in halves
    for levels in (1, 3, 5):
        prog, sem = strawman_simulator(P, levels), preset_semantics("T3")
        base = fair_base_sequence(prog, sem, c0, (BOT, CS), seed=1)
        k = len(reachable_states(prog, sem, [c0]))
        lemma = build_lemma_sequence(prog, sem, c0, base, k)
        script = build_bounded_memory_attack(prog, sem, c0, lemma)
        trace = script.replay(prog, sem)
        rep = check_pairing(trace, PairingInstance(script.n - 1, 1), prog, 0)
        print(f"bounded memory, {levels} alarm levels: k={k} t={lemma.t} inserted={lemma.insertions} "
              f"agents={script.n} checkpoints agree={checkpoint_agreement(script, trace, lemma)} "
              f"safety={rep.safety}")


if __name__ == "__main__":
    main()
