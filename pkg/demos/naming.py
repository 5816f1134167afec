"""Naming with a leader when at most L omissions touch it, plus the T1 counter scheme and its tight bound."""

from popleader import (
    LeaderBounded, RandomOmissions, check_naming, naming_i12_program, naming_t1_population, naming_t1_program,
    preset_semantics, run, scripted_run,
)
from popleader.protocols import naming_i12_population
from popleader.semantics import Flavor


def main():
    L, n = 3, 8
    prog = naming_i12_program(L)
    for model in ("I1", "I2"):
        trace = run(prog, preset_semantics(model), naming_i12_population(n, L),
                    adv=LeaderBounded(L, RandomOmissions(0.5)), horizon=20_000, seed=3)
        rep = check_naming(trace, prog, 2000)
        ids = sorted(q.my_ID for q in trace.final.agents)
        print(f"{model}: ids={ids} unique={rep.unique} max={rep.max_id}<={(L + 1) * n} congruent={rep.congruent}")

    L, n = 2, 6
    prog = naming_t1_program(L)
    trace = run(prog, preset_semantics("T1"), naming_t1_population(n, L),
                adv=LeaderBounded(L, RandomOmissions(0.5)), horizon=20_000, seed=3)
    rep = check_naming(trace, prog, 2000)
    print(f"T1: arrays={[q.my_ID for q in trace.final.agents[1:]]} counter={rep.counter_max}")

    # one omission too many: agent 2 copies every reading agent 1 missed
    script = [(0, 1, Flavor.STARTER_SIDE), (0, 2, Flavor.NON_OMISSIVE)] * (L + 1)
    trace = scripted_run(prog, preset_semantics("T1"), naming_t1_population(3, L), script)
    rep = check_naming(trace, prog, 0)
    print(f"T1 with L+1 omissions: {trace.final[1].my_ID} and {trace.final[2].my_ID}, unique={rep.unique}")


if __name__ == "__main__":
    main()
