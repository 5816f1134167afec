"""Command-line front end: ``popleader {run,verify,attack,batch,recurrent}``."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import attacks as at
from . import io as pio
from .protocols import BOT, CS, PairingInstance, strawman_population
from .scheduling import ScheduleError, run
from .semantics import ModelViolation, ProgramFault, preset_semantics
from .verification import check_naming, check_pairing, check_simulation, default_window, measure_state_footprint

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CHECKS = ("simulation", "pairing", "naming", "footprint", "replay")
BATCH_COLUMNS = ("seed", "liveness", "safety", "max_id", "omissions", "stabilized_at", "error")


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


def _pairing_instance(trace, prog) -> PairingInstance:
    counts = Counter(prog.project(q) for q in trace.initial.agents)
    return PairingInstance(counts.get("c", 0), counts.get("p", 0))


def _simulated_table(prog):
    return prog.params.get("table")


def _run_from_config(cfg, seed=None, horizon=None):
    prog, init = cfg.build()
    if prog.name == "it_token" and len(init) <= 2:
        _warn("it_token simulator assumes n > 2; with two agents the token cannot move")
    seed = cfg.seed if seed is None else seed
    horizon = cfg.horizon if horizon is None else horizon
    trace = run(prog, cfg.semantics, init, cfg.scheduler, cfg.adversary, horizon, seed,
                meta={"window": min(cfg.window, horizon)})
    return prog, trace


# -- run ---------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = pio.load_config(args.config)
    prog, trace = _run_from_config(cfg, args.seed, args.horizon)
    out = args.out or cfg.out or "trace.jsonl"
    pio.write_trace(trace, prog, out)
    print(f"wrote {len(trace)} events to {out}")
    return EXIT_OK


# -- verify ------------------------------------------------------------------

def verify_trace(trace, prog, sem, checks, window=None, budget=1_000_000) -> dict:
    """Run named checks; returns ``{check: {"pass": bool, ...}}``."""
    results = {}
    if window is None:
        window = trace.meta.get("window", default_window(len(trace)))
    window = min(window, len(trace))
    for name in checks:
        if name == "replay":
            try:
                trace.replay(prog, sem)
                results[name] = {"pass": True}
            except (ScheduleError, ProgramFault, ModelViolation) as exc:
                results[name] = {"pass": False, "error": str(exc)}
        elif name == "simulation":
            table = _simulated_table(prog)
            if table is None:
                raise pio.ConfigError(f"program {prog.name} carries no simulated protocol")
            v = check_simulation(trace, prog, table, budget)
            results[name] = {"pass": v.success, "budget_exhausted": v.budget_exhausted,
                             "counterexample": None if v.counterexample is None else str(v.counterexample)}
        elif name == "pairing":
            rep = check_pairing(trace, _pairing_instance(trace, prog), prog, window)
            results[name] = {"pass": rep.safety and rep.irrevocability and rep.liveness,
                             "safety": rep.safety, "irrevocability": rep.irrevocability,
                             "liveness": rep.liveness, "first_safety_violation": rep.first_safety_violation,
                             "final_cs": rep.final_cs, "stabilized_at": rep.stabilized_at}
        elif name == "naming":
            rep = check_naming(trace, prog, window)
            results[name] = {"pass": rep.unique and rep.all_named and rep.within_bounds,
                             "unique": rep.unique, "all_named": rep.all_named, "max_id": rep.max_id,
                             "counter_max": rep.counter_max, "first_duplicate": rep.first_duplicate}
        elif name == "footprint":
            fp = measure_state_footprint(trace)
            results[name] = {"pass": True, "distinct_states": fp.max_per_agent,
                             "bits": fp.bits}
        else:
            raise pio.ConfigError(f"unknown check {name!r}; expected one of {', '.join(CHECKS)}")
    return results


def cmd_verify(args) -> int:
    checks = [c for group in (args.check or []) for c in group.split(",") if c]
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        print(f"error: unknown check {unknown[0]!r}; expected one of {', '.join(CHECKS)}", file=sys.stderr)
        return EXIT_USAGE
    if not checks:
        _warn("no checks requested; passing vacuously")
        return EXIT_OK
    trace, prog, sem, _ = pio.read_trace(args.trace)
    results = verify_trace(trace, prog, sem, checks, args.window, args.budget)
    for name, res in results.items():
        detail = ", ".join(f"{k}={v}" for k, v in res.items() if k != "pass")
        print(f"{name}: {'PASS' if res['pass'] else 'FAIL'}" + (f" ({detail})" if detail else ""))
    ok = all(r["pass"] for r in results.values())
    pio.append_summary(args.trace, {"checks": results, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


# -- attack ------------------------------------------------------------------

def _attack_target(name: str, levels: int):
    if name == "strawman_t1":
        return pio.build_program({"name": "strawman_t1"}), preset_semantics("T1")
    if name == "strawman":
        return pio.build_program({"name": "strawman", "alarm_levels": levels}), preset_semantics("T3")
    raise pio.ConfigError(f"unknown attack target {name!r}; expected strawman or strawman_t1")


def _safety_line(trace, prog) -> tuple:
    rep = check_pairing(trace, _pairing_instance(trace, prog), prog, 0)
    if rep.safety:
        return True, "safety held"
    return False, f"safety violated at step {rep.first_safety_violation}"


def cmd_attack(args) -> int:
    target = args.target or ("strawman_t1" if args.kind == "duplication" else "strawman")
    prog, sem = _attack_target(target, args.levels)
    c0 = strawman_population(["p", "c"]).agents
    if args.kind == "recurrence":
        role = args.role
        rec = at.find_omission_recurrent(prog, sem, c0, role, args.depth)
        print(str(rec))
        return EXIT_OK
    base = at.fair_base_sequence(prog, sem, c0, (BOT, CS), seed=args.seed)
    if args.kind == "duplication":
        script = at.build_duplication_attack(prog, sem, c0, base)
    else:
        k = len(at.reachable_states(prog, sem, [c0]))
        lemma = at.build_lemma_sequence(prog, sem, c0, base, k, args.depth)
        try:
            script = at.build_bounded_memory_attack(prog, sem, c0, lemma, args.t_cap)
        except at.AttackError as exc:
            print(f"refused: {exc}", file=sys.stderr)
            return EXIT_USAGE
    out = Path(args.out or f"{args.kind}")
    script_path = out.with_suffix(".script.jsonl")
    trace_path = out.with_suffix(".trace.jsonl")
    pio.write_script(script, prog, sem, script_path)
    trace = script.replay(prog, sem)
    pio.write_trace(trace, prog, trace_path)
    held, line = _safety_line(trace, prog)
    mirror = script.mirror_violations(trace)
    print(f"{args.kind} vs {target}: {script.n} agents, {len(script.steps)} steps, {script.omissions} omissions")
    print(f"mirror law: {'holds' if not mirror else f'broken at {mirror}'}")
    print(line)
    print(f"wrote {script_path} and {trace_path}")
    return EXIT_OK


def cmd_recurrent(args) -> int:
    args.kind = "recurrence"
    return cmd_attack(args)


# -- batch -------------------------------------------------------------------

def batch_row(cfg, seed: int, window=None) -> dict:
    row = dict.fromkeys(BATCH_COLUMNS, "")
    row["seed"] = seed
    try:
        prog, trace = _run_from_config(cfg, seed)
        w = min(window if window is not None else cfg.window, len(trace))
        row["omissions"] = trace.omission_count()
        if prog.name.startswith("naming"):
            rep = check_naming(trace, prog, w)
            row.update(liveness=rep.all_named, safety=rep.unique and rep.within_bounds, max_id=rep.max_id)
        else:
            rep = check_pairing(trace, _pairing_instance(trace, prog), prog, w)
            row.update(liveness=rep.liveness, safety=rep.safety and rep.irrevocability,
                       stabilized_at=rep.stabilized_at)
    except Exception as exc:          # per-run failures become failed rows
        row.update(liveness=False, safety=False, error=f"{type(exc).__name__}: {exc}")
    return row


def batch_csv(cfg, seeds: int, base_seed=None, window=None, jobs: int = 1) -> str:
    if seeds < 1:
        raise pio.ConfigError("seeds must be at least 1")
    base = cfg.seed if base_seed is None else base_seed
    seed_list = [base + i for i in range(seeds)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            rows = list(pool.map(lambda s: batch_row(cfg, s, window), seed_list))
    else:
        rows = [batch_row(cfg, s, window) for s in seed_list]
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BATCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_batch(args) -> int:
    cfg = pio.load_config(args.config)
    if args.horizon is not None:
        cfg.horizon = args.horizon
    text = batch_csv(cfg, args.seeds, args.seed, args.window, args.jobs)
    rows = list(csv.DictReader(_io.StringIO(text)))
    live = sum(r["liveness"] == "True" for r in rows)
    safe = sum(r["safety"] == "True" for r in rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"{len(rows)} runs: liveness {live}/{len(rows)}, safety {safe}/{len(rows)}", file=sys.stderr)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="popleader", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a config and write a JSONL trace")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--horizon", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a trace file")
    v.add_argument("trace")
    v.add_argument("--check", action="append", help=f"one of {', '.join(CHECKS)}; repeat or comma-separate")
    v.add_argument("--window", type=int)
    v.add_argument("--budget", type=int, default=1_000_000, help="node budget for the matching search")
    v.set_defaults(func=cmd_verify)

    def attack_args(a):
        a.add_argument("--target", choices=("strawman", "strawman_t1"))
        a.add_argument("--levels", type=int, default=0, help="alarm levels of the strawman target")
        a.add_argument("--seed", type=int, default=0)
        a.add_argument("--depth", type=int, default=16)
        a.add_argument("--out")

    a = sub.add_parser("attack", help="build, write and replay an adversarial script")
    a.add_argument("kind", choices=("duplication", "bounded-memory", "recurrence"))
    attack_args(a)
    a.add_argument("--t-cap", type=int, default=12)
    a.add_argument("--role", choices=("starter", "reactor"), default="starter")
    a.set_defaults(func=cmd_attack)

    rc = sub.add_parser("recurrent", help="omission-recurrence query on the initial two-agent configuration")
    attack_args(rc)
    rc.add_argument("--role", choices=("starter", "reactor"), default="starter")
    rc.set_defaults(func=cmd_recurrent)

    b = sub.add_parser("batch", help="run many seeds and write a CSV summary")
    b.add_argument("--config", required=True)
    b.add_argument("--seeds", type=int, default=100)
    b.add_argument("--seed", type=int, help="base seed (default: config run.seed)")
    b.add_argument("--horizon", type=int)
    b.add_argument("--window", type=int)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (pio.ConfigError, ScheduleError, ModelViolation, ProgramFault, at.AttackError,
            OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
