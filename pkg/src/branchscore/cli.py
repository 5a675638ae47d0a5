"""Command-line entry point.

Exit codes: 0 success, 1 usage error (bad flags, missing input files),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("branchscore")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        return tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"cannot parse config {p}: {e}") from None


def _paths(items) -> list[Path]:
    out = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            out.extend(sorted(p.glob("*.mip")))
        elif p.is_file():
            out.append(p)
        else:
            raise UsageError(f"no such instance file or directory: {p}")
    if not out:
        raise UsageError("no instance files given")
    return out


def _load_instances(items):
    from .instances import read_instance

    return [(p.stem, read_instance(p)) for p in _paths(items)]


def _bnb_config(args):
    from .milp.bnb import BnbConfig

    return BnbConfig(node_limit=args.node_limit, time_limit=args.time_limit,
                     node_selection=args.node_selection, rng_seed=args.seed)


def _load_program(spec: str):
    from .dsl import library
    from .dsl.parser import parse_program

    if spec in library.PROGRAMS:
        return library.load(spec)
    p = Path(spec)
    if not p.is_file():
        raise UsageError(f"no such program file or library program: {spec}")
    return parse_program(p.read_text())


# subcommands

def cmd_generate(args) -> int:
    from .instances import GeneratorSpec, generate, preset_spec

    if args.preset:
        spec = preset_spec(args.preset, seed=args.seed, count=args.count)
    else:
        if not args.family:
            raise UsageError("generate needs --preset or --family")
        keys = {
            "set_cover": ("rows", "cols", "density"),
            "comb_auction": ("items", "bids"),
            "facility_location": ("facilities", "customers"),
            "independent_set": ("nodes", "affinity"),
        }[args.family]
        sizes = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
        spec = GeneratorSpec(args.family, sizes, args.seed, args.count)
    paths = generate(spec, args.out, prefix=args.prefix)
    log.info("wrote %d instances to %s", len(paths), args.out)
    return 0


def cmd_solve(args) -> int:
    from .dsl.policies import make_policy
    from .instances import read_instance
    from .milp.bnb import run_bnb

    path = Path(args.instance)
    if not path.is_file():
        raise UsageError(f"no such instance file: {path}")
    inst = read_instance(path)
    try:
        policy = make_policy(args.policy, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    stats = run_bnb(inst, policy, _bnb_config(args))
    obj = "none" if stats.incumbent_objective is None else repr(stats.incumbent_objective)
    print(f"status={stats.status} nodes={stats.nodes} objective={obj} "
          f"gap={stats.gap:.6g} time_s={stats.wall_time:.3f}")
    return 0


def cmd_tune(args) -> int:
    from .dsl.parser import serialize
    from .tuning import CostMetric, OptBudget, tune_program, write_trials_csv

    program = _load_program(args.program)
    named = _load_instances(args.instances)
    metric = CostMetric(args.metric, args.gap_time_limit)
    budget = OptBudget(args.trials, args.node_limit, args.time_limit, args.seed)
    result = tune_program(program, [inst for _, inst in named], metric, budget, args.workers, args.seed)
    if args.out:
        write_trials_csv(result, args.out, [name for name, _ in named])
    if args.save and not result.failed:
        Path(args.save).write_text(serialize(program.with_params(result.theta)))
    print(f"cost={result.cost!r} theta={[float(v) for v in result.theta]} trials={len(result.trials)}"
          + (" FAILED" if result.failed else ""))
    return 0 if not result.failed else 2


def cmd_evolve(args) -> int:
    from .evolve import EvolutionConfig, LlmClientConfig, SolverEvaluator, evolve_loop
    from .tuning import CostMetric, OptBudget

    if not args.config:
        raise UsageError("evolve needs --config")
    cfg = args.config_data
    base = Path(args.config).parent
    sec = cfg.get("evolve", {})
    inst = cfg.get("instances", {})
    full = _load_instances([base / p for p in inst.get("full", [])])
    subset = _load_instances([base / p for p in inst.get("subset", [])]) if inst.get("subset") else full[:4]
    m = cfg.get("metric", {})
    metric = CostMetric(m.get("kind", "nodes"), m.get("time_limit"), m.get("shift", 1.0))
    t = cfg.get("tuning", {})
    budget = OptBudget(t.get("max_iterations", 50), t.get("node_limit", 100_000),
                       t.get("time_limit", 3600.0), args.seed)
    llm = dict(cfg.get("llm", {}))
    if llm.get("fixture"):
        llm["fixture"] = str(base / llm["fixture"])
    config = EvolutionConfig(
        iterations=sec.get("iterations", 200),
        exploration_prob=sec.get("exploration_prob", 0.7),
        inspirations_k=sec.get("inspirations_k", 4),
        island_count=sec.get("island_count", 4),
        seed=args.seed,
        llm=LlmClientConfig(**llm),
    )
    evaluator = SolverEvaluator([i for _, i in full], [i for _, i in subset], metric, budget,
                                sec.get("baseline", "reliability"), args.workers, args.seed)
    out = Path(args.out or base / sec.get("out_dir", "evolve_out"))
    best = evolve_loop(config, evaluator, out)
    print(f"best record {best.id}: cost={best.cost!r} (iteration {best.iteration})")
    return 0


def cmd_bench(args) -> int:
    from .bench import format_summary, run_benchmark, summary_path_for, write_cells_csv, write_summary_csv
    from .runner import PolicySpec

    named = _load_instances(args.instances)
    specs = []
    for name in args.policies.split(","):
        name = name.strip()
        if name.endswith(".spl"):
            specs.append(PolicySpec(Path(name).stem, _load_program(name), seed=args.seed))
        else:
            specs.append(PolicySpec(name, seed=args.seed))
    report = run_benchmark(specs, named, _bnb_config(args), args.workers, args.win_criterion)
    write_cells_csv(report.cells, args.out)
    write_summary_csv(report.summary, summary_path_for(args.out))
    if not args.quiet:
        print(format_summary(report.summary))
    return 0


def cmd_report(args) -> int:
    import csv
    import math

    if args.features:
        from .features import feature_doc_rows

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["index", "name", "formula"])
        w.writerows(feature_doc_rows())
        return 0
    if args.bench:
        from .bench import format_summary, read_cells_csv, summarize

        print(format_summary(summarize(read_cells_csv(args.bench), args.win_criterion)))
        return 0
    if args.trials:
        with open(args.trials, newline="") as fh:
            rows = list(csv.DictReader(fh))
        best = min(rows, key=lambda r: (float(r["cost"]), int(r["trial"])))
        print(f"trials={len(rows)} best_trial={best['trial']} cost={best['cost']}")
        print("theta=" + ",".join(v for k, v in best.items() if k.startswith("theta_")))
        return 0
    if args.database:
        from .evolve.database import IslandDatabase

        db = IslandDatabase.load(args.database)
        if not db.records:
            raise UsageError(f"empty database: {args.database}")
        print("island,records,best_cost,best_id")
        for isl in sorted(db.islands):
            members = db.island_members(isl)
            b = min(members, key=lambda r: (r.cost, r.id))
            print(f"{isl},{len(members)},{b.cost!r},{b.id}")
        best = db.best()
        print(f"# best overall: id={best.id} cost={best.cost!r}")
        if not math.isfinite(best.cost):
            return 2
        return 0
    raise UsageError("report needs one of --features, --bench, --trials, --database")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global RNG seed (default 0)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML key/value file")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="parallel solver processes")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="branchscore", description="Branch-and-bound with programmable branching scores.",
                parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def limits(sp):
        sp.add_argument("--node-limit", type=int, default=1_000_000)
        sp.add_argument("--time-limit", type=float, default=3600.0)
        sp.add_argument("--node-selection", choices=["best_bound", "depth_first"], default="best_bound")

    g = sub.add_parser("generate", parents=[common], help="write random benchmark instances")
    g.add_argument("--preset")
    g.add_argument("--family", choices=["set_cover", "comb_auction", "facility_location", "independent_set"])
    for k in ("rows", "cols", "items", "bids", "facilities", "customers", "nodes", "affinity"):
        g.add_argument(f"--{k}", type=int)
    g.add_argument("--density", type=float)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--out")
    g.add_argument("--prefix")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", parents=[common], help="solve one instance")
    s.add_argument("--instance")
    s.add_argument("--policy", default="most_fractional")
    limits(s)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("tune", parents=[common], help="tune a program's parameters")
    t.add_argument("--program")
    t.add_argument("--instances", nargs="+")
    t.add_argument("--trials", type=int, default=50)
    t.add_argument("--metric", choices=["nodes", "gap", "time"], default="nodes")
    t.add_argument("--gap-time-limit", type=float)
    t.add_argument("--node-limit", type=int, default=100_000)
    t.add_argument("--time-limit", type=float, default=3600.0)
    t.add_argument("--out", help="trial log CSV")
    t.add_argument("--save", help="write the tuned program here")
    t.set_defaults(func=cmd_tune)

    e = sub.add_parser("evolve", parents=[common], help="run the program discovery loop")
    e.add_argument("--out", help="output directory (default from config)")
    e.set_defaults(func=cmd_evolve)

    b = sub.add_parser("bench", parents=[common], help="benchmark policies on instances")
    b.add_argument("--policies", help="comma-separated names or .spl files")
    b.add_argument("--instances", nargs="+")
    b.add_argument("--out", help="cell CSV; the summary goes next to it")
    b.add_argument("--win-criterion", choices=["time", "nodes"], default="time")
    limits(b)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("report", parents=[common], help="summarize logs or print the feature table")
    r.add_argument("--features", action="store_true")
    r.add_argument("--bench")
    r.add_argument("--trials")
    r.add_argument("--database")
    r.add_argument("--win-criterion", choices=["time", "nodes"], default="time")
    r.set_defaults(func=cmd_report)
    return p


_GLOBAL_DEFAULTS = {"seed": 0, "config": None, "workers": 1, "quiet": False}
# checked after config merging, so a [<command>] section may supply them
_REQUIRED = {
    "generate": ("out",),
    "solve": ("instance",),
    "tune": ("program", "instances"),
    "bench": ("policies", "instances", "out"),
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    for k, v in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.config_data = {}
        if args.config:
            args.config_data = load_config(args.config)
            # [<command>] keys fill options left at their defaults
            section = args.config_data.get(args.command, {})
            for key, value in section.items():
                dest = key.replace("-", "_")
                if hasattr(args, dest) and getattr(args, dest) == parser_default(parser, args.command, dest):
                    setattr(args, dest, value)
        missing = [d for d in _REQUIRED.get(args.command, ()) if getattr(args, d) is None]
        if missing:
            flags = ", ".join("--" + d.replace("_", "-") for d in missing)
            raise UsageError(f"{args.command} needs {flags} (flag or [{args.command}] config key)")
        return args.func(args)
    except UsageError as e:
        print(f"branchscore: error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as e:
        log.debug("runtime failure", exc_info=True)
        print(f"branchscore: failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


def parser_default(parser: argparse.ArgumentParser, command: str, dest: str):
    for action in parser._subparsers._group_actions:
        sp = action.choices.get(command)
        if sp is not None:
            return sp.get_default(dest)
    return None


if __name__ == "__main__":
    sys.exit(main())
