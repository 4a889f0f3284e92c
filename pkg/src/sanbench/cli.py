"""Command line experiment runner.

Subcommands: run, entropy, ratio, gen-trace, export-net.  Exit status is
0 on success, 2 for configuration or input errors and 3 when a runtime
invariant breaks.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

from . import __version__, demand
from ._validation import InvariantError
from .costmodel import IncompatibleAlgorithm, evaluate_ratio
from .demand import PRNG_ID, TraceFormatError
from .entropy import EntropyReport, graph_entropies, sequence_entropies
from .estimators import make_algorithm
from .oracles import OracleLimitError
from .scenario import (
    ConfigError,
    ScenarioConfig,
    build_workload,
    load_bundled,
    load_config,
    ratio_instances,
    ratio_lengths,
)
from . import topo

EXIT_CONFIG = 2
EXIT_INVARIANT = 3
WORKERS_ENV = "SAN_WORKBENCH_WORKERS"

SUMMARY_HEADER = (
    "scenario", "algorithm", "kind", "seed", "n", "m", "service_total", "adjust_total", "total",
    "amortized",
) + EntropyReport.CSV_HEADER[2:]


def _workers(args) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return max(1, args.workers or 1)


def _scenario(args) -> ScenarioConfig:
    if args.config and args.scenario:
        raise ConfigError("give either --config or --scenario, not both")
    if args.config:
        return load_config(args.config)
    if args.scenario:
        return load_bundled(args.scenario)
    raise ConfigError("a scenario is required (--config FILE or --scenario NAME)")


def _metadata(cfg: ScenarioConfig, seed: int, **extra) -> dict:
    meta = {"sanbench": __version__, "scenario": cfg.scenario_id, "seed": seed, "prng": PRNG_ID}
    meta.update(extra)
    meta.update(("config." + k, v) for k, v in cfg.items())
    return meta


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_pair(job):
    cfg, name, seed, out_dir = job
    seq = build_workload(cfg.workload, seed)
    alg = cfg.algorithm(name)
    if "seed" in alg.get_params():
        alg.set_params(seed=seed)
    ledger = alg.fit(seq).serve(seq)
    buf = io.StringIO()
    ledger.write_csv(buf, _metadata(cfg, seed, algorithm=name, kind=alg.kind))
    _write_atomic(os.path.join(out_dir, f"ledger_{name}_seed{seed}.csv"), buf.getvalue())
    ent = sequence_entropies(seq)
    return [
        cfg.scenario_id, name, alg.kind, str(seed), str(seq.n), str(seq.m),
        str(ledger.service_total), str(ledger.adjust_total), str(ledger.total),
        _fmt(ledger.average),
    ] + ent.csv_row()[2:]


def _fmt(x: float) -> str:
    return f"{x:.10f}".rstrip("0").rstrip(".")


def cmd_run(args) -> int:
    cfg = _scenario(args)
    if not cfg.algorithms:
        raise ConfigError("[algorithms] names is empty")
    seeds = [args.seed] if args.seed is not None else cfg.seeds
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg, name, seed, out_dir) for seed in seeds for name in cfg.algorithms]
    workers = _workers(args)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_pair, jobs))
    else:
        rows = [_run_pair(j) for j in jobs]
    buf = io.StringIO()
    for key, value in _metadata(cfg, seeds[0], seeds=" ".join(map(str, seeds))).items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    writer.writerows(rows)
    _write_atomic(os.path.join(out_dir, "summary.csv"), buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_entropy(args) -> int:
    kind = demand.sniff_kind(args.path)
    if kind == "trace":
        report = sequence_entropies(demand.read_trace(args.path))
    else:
        report = graph_entropies(demand.read_graph(args.path))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(EntropyReport.CSV_HEADER)
    writer.writerow(report.csv_row())
    return 0


def cmd_ratio(args) -> int:
    cfg = _scenario(args)
    kind = args.kind or cfg.ratio.get("kind")
    if kind not in ("static", "dynamic", "learning"):
        raise ConfigError(f"ratio kind must be static, dynamic or learning, got {kind!r}")
    seed = args.seed if args.seed is not None else int(cfg.ratio.get("seed", 0))
    on_name = cfg.ratio.get("on", "splay-bst")
    default_base = {"static": "knuth-bst", "dynamic": "offline-bst", "learning": "generator-bst"}[kind]
    base_name = cfg.ratio.get("baseline", default_base)
    on_alg = make_algorithm(on_name, **cfg.algorithm_params.get(on_name, {}))
    baseline = make_algorithm(base_name, **cfg.algorithm_params.get(base_name, {}))
    instances = ratio_instances(cfg, kind, seed)
    mc_seeds = range(int(cfg.ratio.get("seeds", 30)))
    report = evaluate_ratio(
        kind, on_alg, baseline, instances, lengths=ratio_lengths(cfg), seeds=mc_seeds,
        scenario=cfg.scenario_id, seed=seed, workers=_workers(args),
    )
    buf = io.StringIO()
    meta = _metadata(cfg, seed, on=on_name, baseline=base_name)
    meta["ratios"] = " ".join(_fmt(r) for r in report.ratios)
    if report.ci is not None:
        meta["rho_ci95"] = f"{_fmt(report.ci[0])} {_fmt(report.ci[1])}"
    for key, value in meta.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.CSV_HEADER)
    writer.writerow(report.csv_row())
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        _write_atomic(os.path.join(args.out_dir, f"ratio_{kind}_{cfg.scenario_id}.csv"), buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def _params(pairs) -> dict:
    from .scenario import _value

    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = _value(value.strip())
    return out


def cmd_gen_trace(args) -> int:
    params = {"kind": args.workload, **_params(args.param)}
    seed = args.seed if args.seed is not None else 0
    if args.workload == "star":
        n = int(params.get("n", 9))
        g = demand.make_star_demand(n, params.get("weights", [1] * (n - 1)))
        out = g
    elif args.workload == "grid-graph":
        out = demand.make_grid_demand(int(params.get("side", 4)), int(params.get("weight", 1)), params.get("width"))
    else:
        out = build_workload(params, seed)
    if args.graph and isinstance(out, demand.DemandSequence):
        out = demand.build_demand_graph(out)
    target = args.out or sys.stdout
    if isinstance(out, demand.DemandGraph):
        demand.write_graph(out, target)
    else:
        demand.write_trace(out, target)
    return 0


def cmd_export_net(args) -> int:
    params = _params(args.param)
    seed = args.seed if args.seed is not None else 0
    kind = args.topology
    if kind == "expander":
        net = topo.build_random_regular(int(params.get("n", 256)), int(params.get("degree", 3)), seed)
    elif kind == "grid":
        net = topo.grid_network(int(params.get("side", 4)), params.get("width"))
    elif kind == "path":
        net = topo.path_network(int(params.get("n", 8)))
    elif kind == "sat":
        net = topo.build_selfadjusting_tree(int(params.get("n", 15))).to_network()
    elif kind == "ego":
        if not args.demand:
            raise ConfigError("ego networks need --demand FILE")
        if demand.sniff_kind(args.demand) == "trace":
            g = demand.build_demand_graph(demand.read_trace(args.demand))
        else:
            g = demand.read_graph(args.demand)
        net = topo.build_ego_tree_network(g, params.get("max_degree"))
    else:
        raise ConfigError(f"unknown topology {kind!r}")
    net.write(args.out or sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sanbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--config", help="scenario INI file")
        p.add_argument("--scenario", help="bundled scenario name")
        p.add_argument("--seed", type=int, help="override the configured seed(s)")
        p.add_argument("--out-dir", help="directory for CSV output")
        p.add_argument("--workers", type=int, default=1, help=f"parallel workers ({WORKERS_ENV} overrides)")

    p = sub.add_parser("run", help="run a scenario and write ledger and summary CSVs")
    scenario_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("entropy", help="entropy report of a trace or demand-graph file")
    p.add_argument("path")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("ratio", help="measure an optimality ratio")
    scenario_flags(p)
    p.add_argument("--kind", choices=("static", "dynamic", "learning"))
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("gen-trace", help="write a workload trace (or demand graph)")
    p.add_argument("--workload", required=True,
                   choices=("tau", "grid", "zipf-keys", "zipf-pairs", "star", "grid-graph"))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--graph", action="store_true", help="aggregate into a demand graph")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("export-net", help="write a network topology file")
    p.add_argument("--topology", required=True, choices=("expander", "grid", "path", "sat", "ego"))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--demand", help="trace or demand-graph file for ego networks")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_net)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantError as exc:
        print(f"sanbench: invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, TraceFormatError, IncompatibleAlgorithm, OracleLimitError,
            FileNotFoundError, ValueError, KeyError) as exc:
        print(f"sanbench: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
