"""Command-line harness for reproducible coloring experiments.

Subcommands: run, sweep, mc, worstcase, lemmas. Exit codes are stable across
subcommands: 0 on success, 1 on any property violation, counterexample, or
non-termination, 2 on usage or configuration errors.

Options may come from a line-oriented key=value config file (--config);
explicit command-line flags override file values. The WFC_SEED environment
variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import os
import re
import statistics
import sys
from dataclasses import dataclass, fields

from . import analysis, cointoss, engine, model, schedulers
from .protocols import FAST5, PROTOCOLS, SLOW5, SLOW6

OK = 0
VIOLATION = 1
USAGE = 2

_INLINE_IDS = re.compile(r"^\d+(,\d+)+$")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment: what to run, under which schedule, and where to put it."""

    protocol: str | None = None
    n: int | None = None
    graph: str | None = None
    ids: str | None = None
    seed: int | None = None
    sched: str | None = None
    horizon: int | None = None
    trials: int | None = None
    trace: str | None = None
    bound: int | None = None
    budget: int | None = None

    _INTS = ("n", "seed", "horizon", "trials", "bound", "budget")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cfg = cls()
        known = {f.name for f in fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
            setattr(cfg, key, int(value) if key in cls._INTS else value)
        return cfg

    def override(self, **values) -> None:
        for key, value in values.items():
            if value is not None:
                setattr(self, key, value)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_text(fh.read())


def _default_seed() -> int:
    return int(os.environ.get("WFC_SEED", "0"))


def _resolve_graph(cfg: ExperimentConfig) -> model.Graph:
    if cfg.graph is not None:
        return model.load_edge_list(cfg.graph)
    if cfg.n is not None:
        return model.cycle(cfg.n)
    raise ConfigError("need either --n or --graph")


def _resolve_ids(cfg: ExperimentConfig, graph: model.Graph, seed: int) -> model.IdAssignment:
    mode = cfg.ids or "random"
    if mode == "random":
        return model.random_unique_ids(graph, seed=seed)
    if mode == "chain":
        if not graph.is_cycle:
            raise ConfigError("chain ids are defined on cycles")
        return model.monotone_chain_ids(graph.node_count)
    if mode.startswith("proper:"):
        return model.proper_coloring_ids(graph, int(mode.split(":", 1)[1]), seed=seed)
    if mode.startswith("file:"):
        return model.load_ids(mode.split(":", 1)[1], graph)
    if _INLINE_IDS.match(mode):
        return model.explicit_ids(graph, [int(v) for v in mode.split(",")])
    raise ConfigError(f"unknown id mode {mode!r}")


def _declared_bound(protocol: str, n: int, override: int | None) -> int | None:
    if override is not None:
        return override
    if protocol == SLOW6:
        return 3 * n // 2 + 4
    if protocol == SLOW5:
        return 3 * n + 8
    return None  # no closed-form bound for fast5 / deltasq


def _reseed(descriptor: schedulers.Descriptor, salt: int) -> schedulers.Descriptor:
    if isinstance(descriptor, schedulers.RandomSched):
        return schedulers.RandomSched(descriptor.p_act, _derive(descriptor.seed, salt))
    if isinstance(descriptor, schedulers.CrashSched):
        return schedulers.CrashSched(_reseed(descriptor.base, salt), descriptor.crash_times)
    return descriptor


def _derive(seed: int, index: int) -> int:
    return seed * 1_000_003 + index


def cmd_run(cfg: ExperimentConfig, from_trace: str | None = None) -> int:
    if from_trace is not None:
        header = _read_header(from_trace)
        graph, ids = header.graph, header.ids
        protocol, sched_text = header.protocol, header.sched
        seed, horizon = header.seed, header.horizon
    else:
        if cfg.protocol not in PROTOCOLS:
            raise ConfigError(f"--protocol must be one of {'|'.join(PROTOCOLS)}")
        graph = _resolve_graph(cfg)
        seed = cfg.seed if cfg.seed is not None else _default_seed()
        ids = _resolve_ids(cfg, graph, seed)
        protocol = cfg.protocol
        sched_text = cfg.sched or "sync"
        horizon = cfg.horizon or engine.default_horizon(protocol, graph.node_count)
    execution = engine.new_execution(graph, ids, protocol)
    scheduler = schedulers.make_scheduler(sched_text, graph.node_count)

    observers = []
    xhat_observer = None
    if protocol == FAST5:
        xhat_observer = analysis.XhatColoringObserver(graph)
        observers.append(xhat_observer)
    writer = None
    trace_fh = None
    if cfg.trace:
        trace_fh = open(cfg.trace, "w", encoding="utf-8")
        writer = engine.TraceFileWriter(
            trace_fh,
            engine.TraceHeader(graph, ids, protocol, scheduler.text, seed, horizon),
        )
        observers.append(writer)

    keep_steps = protocol in (SLOW6, SLOW5)
    trace = engine.run(execution, scheduler, horizon, observers, keep_steps, seed)
    if writer is not None:
        writer.finish(trace)
        trace_fh.close()

    reports = [
        analysis.check_proper_coloring(graph, trace.outputs),
        analysis.check_palette(trace.outputs, protocol, graph.max_degree),
    ]
    if protocol in (SLOW6, SLOW5):
        reports.append(analysis.activation_bound_audit(trace))
    if protocol == SLOW6:
        reports.append(analysis.parity_audit(trace))
        reports.append(analysis.ab_exclusion_audit(trace))
        reports.append(analysis.ab_growth_audit(trace))
    if protocol == SLOW5:
        reports.append(analysis.stop_rule_audit(trace))
    if xhat_observer is not None:
        reports.append(xhat_observer.report)

    max_activations = max(trace.activations.values(), default=0)
    if trace.terminated:
        print(f"terminated: yes (tstar={trace.tstar})")
        print(f"round_complexity: {analysis.round_complexity(trace)}")
    else:
        print(f"terminated: no (horizon={horizon})")
    print(f"max_activations: {max_activations}")
    print(f"returned: {len(trace.outputs)}/{graph.node_count}")
    for report in reports:
        print(f"audit {report.summary()}")
        for t, node, detail in report.violations[:10]:
            print(f"  violation t={t} node={node}: {detail}")
    if not trace.terminated or any(not r.passed for r in reports):
        return VIOLATION
    return OK


def _read_header(path: str) -> engine.TraceHeader:
    with open(path, encoding="utf-8") as fh:
        return engine.parse_header(fh.readline())


def cmd_sweep(cfg: ExperimentConfig) -> int:
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"--protocol must be one of {'|'.join(PROTOCOLS)}")
    trials = cfg.trials if cfg.trials is not None else 0
    if trials < 1:
        raise ConfigError("--trials must be at least 1")
    graph = _resolve_graph(cfg)
    n = graph.node_count
    base_seed = cfg.seed if cfg.seed is not None else _default_seed()
    protocol = cfg.protocol
    horizon = cfg.horizon or engine.default_horizon(protocol, n)
    base_descriptor = schedulers.parse_descriptor(cfg.sched or "sync")
    bound = _declared_bound(protocol, n, cfg.bound)

    print("trial\tseed\tterminated\ttstar\tmax_act\tviolations")
    failures = 0
    maxima = []
    for trial in range(trials):
        seed = _derive(base_seed, trial)
        ids = _resolve_ids(cfg, graph, seed)
        descriptor = _reseed(base_descriptor, trial)
        scheduler = schedulers.Scheduler(descriptor, n)
        execution = engine.new_execution(graph, ids, protocol)
        observers = []
        xhat_observer = None
        if protocol == FAST5:
            xhat_observer = analysis.XhatColoringObserver(graph)
            observers.append(xhat_observer)
        trace = engine.run(execution, scheduler, horizon, observers, False, seed)
        problems = []
        if not trace.terminated:
            problems.append("non-terminated")
        for report in (
            analysis.check_proper_coloring(graph, trace.outputs),
            analysis.check_palette(trace.outputs, protocol, graph.max_degree),
        ):
            if not report.passed:
                problems.append(report.name)
        if xhat_observer is not None and not xhat_observer.report.passed:
            problems.append(xhat_observer.report.name)
        max_act = max(trace.activations.values(), default=0)
        maxima.append(max_act)
        if bound is not None and max_act > bound:
            problems.append(f"bound({max_act}>{bound})")
        if problems:
            failures += 1
        print(
            f"{trial}\t{seed}\t{int(trace.terminated)}\t{trace.tstar}"
            f"\t{max_act}\t{','.join(problems) or '-'}"
        )
    print(
        f"# aggregate trials={trials} max={max(maxima)} "
        f"median={statistics.median(maxima):g} failures={failures}"
        + (f" bound={bound}" if bound is not None else "")
    )
    return VIOLATION if failures else OK


def cmd_mc(cfg: ExperimentConfig) -> int:
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"--protocol must be one of {'|'.join(PROTOCOLS)}")
    graph = _resolve_graph(cfg)
    if graph.node_count > 5:
        raise ConfigError("exhaustive checking is limited to 5 nodes")
    if cfg.bound is None:
        raise ConfigError("mc needs --bound")
    seed = cfg.seed if cfg.seed is not None else _default_seed()
    ids = _resolve_ids(cfg, graph, seed)
    try:
        report = schedulers.exhaustive_check(graph, ids, cfg.protocol, cfg.bound)
    except schedulers.StateSpaceExceeded as exc:
        print(f"state space exceeded: {exc}")
        return VIOLATION
    print(f"explored: {report.explored}")
    print(f"memo_hits: {report.memo_hits}")
    print(f"max_activations: {report.max_activations}")
    print(f"verdict: {report.verdict}")
    for counterexample in report.safety_violations:
        print(f"safety violation: {counterexample.detail}")
        print(f"  schedule: {list(counterexample.schedule)}")
    for node, count in report.bound_violations:
        print(f"bound violation: node {node} reached {count} > {cfg.bound}")
        if report.bound_schedule is not None:
            print(f"  schedule: {list(report.bound_schedule)}")
    return OK if report.verdict == "pass" else VIOLATION


def cmd_worstcase(cfg: ExperimentConfig) -> int:
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"--protocol must be one of {'|'.join(PROTOCOLS)}")
    graph = _resolve_graph(cfg)
    seed = cfg.seed if cfg.seed is not None else _default_seed()
    ids = _resolve_ids(cfg, graph, seed)
    budget = cfg.budget if cfg.budget is not None else 200
    descriptor, worst = schedulers.worst_case_search(
        graph, ids, cfg.protocol, budget, seed
    )
    bound = _declared_bound(cfg.protocol, graph.node_count, cfg.bound)
    print(f"worst_max_activations: {worst}")
    if cfg.trace:
        schedulers.save_schedule(descriptor.sets, cfg.trace)
        print(f"schedule written to {cfg.trace}")
    if bound is not None:
        print(f"bound: {bound}")
        if worst > bound:
            print("bound exceeded")
            return VIOLATION
    return OK


def cmd_lemmas() -> int:
    failures = 0
    checked, bad = cointoss.check_contraction()
    print(f"contraction: checked {checked} pairs, {len(bad)} counterexamples")
    for x, y in bad[:10]:
        print(f"  f({x},{y}) = {cointoss.cv_reduce(x, y)} >= {y}")
    failures += len(bad)
    checked, bad3 = cointoss.check_chain_coloring()
    print(f"chain_coloring: checked {checked} triples, {len(bad3)} counterexamples")
    for x, y, z in bad3[:10]:
        print(f"  f({x},{y}) = f({y},{z}) = {cointoss.cv_reduce(x, y)}")
    failures += len(bad3)
    checked, issues = cointoss.check_logstar_decay()
    print(f"logstar_decay: checked {checked} points, {len(issues)} issues")
    for issue in issues[:10]:
        print(f"  {issue}")
    failures += len(issues)
    return VIOLATION if failures else OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wfcolor",
        description="simulate and audit wait-free coloring protocols on cycles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--protocol", choices=PROTOCOLS)
        p.add_argument("--n", type=int, help="cycle size")
        p.add_argument("--graph", help="edge-list file for general graphs")
        p.add_argument(
            "--ids",
            help="random | chain | proper:<k> | file:<path> | inline list like 1,2,5",
        )
        p.add_argument("--seed", type=int, help="base seed (default: WFC_SEED or 0)")
        p.add_argument("--sched", help="scheduler descriptor (default: sync)")
        p.add_argument("--horizon", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--trace", help="output path (trace file, or schedule for worstcase)")
        p.add_argument("--bound", type=int, help="activation bound to check against")
        p.add_argument("--budget", type=int, help="search budget for worstcase")

    run_parser = sub.add_parser("run", help="execute one trace and audit it")
    add_shared(run_parser)
    run_parser.add_argument("--from-trace", help="re-run the header of a stored trace")
    add_shared(sub.add_parser("sweep", help="run seeded trials and report statistics"))
    add_shared(sub.add_parser("mc", help="exhaustively model-check a tiny instance"))
    add_shared(sub.add_parser("worstcase", help="search for adversarial schedules"))
    sub.add_parser("lemmas", help="run the exhaustive reduction-function checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    if args.command == "lemmas":
        return cmd_lemmas()
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg.override(
            protocol=args.protocol,
            n=args.n,
            graph=args.graph,
            ids=args.ids,
            seed=args.seed,
            sched=args.sched,
            horizon=args.horizon,
            trials=args.trials,
            trace=args.trace,
            bound=args.bound,
            budget=args.budget,
        )
        if args.command == "run":
            return cmd_run(cfg, getattr(args, "from_trace", None))
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "mc":
            return cmd_mc(cfg)
        if args.command == "worstcase":
            return cmd_worstcase(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
