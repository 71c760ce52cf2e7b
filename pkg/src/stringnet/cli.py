"""Command-line entry points: ``simulate``, ``bench-assign`` and ``cluster``.

Exit codes: 0 success, 1 the attackers breached the protected area, 2 bad
input (invalid configuration, missing or malformed file), 3 runtime failure
or timeout.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .artifacts import InputError, bench_svg, cluster_csv, read_cluster_csv, run_metrics, trajectory_svg, \
    write_bench_csv, write_events, write_json, write_trajectory_csv
from .bench import run_bench
from .clustering import dbscan_labels
from .core import ScenarioConfig, validate_config
from .engine import World

EXIT_OK, EXIT_BREACH, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


def bundled_scenarios() -> list[str]:
    root = resources.files("stringnet") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def _scenario_text(name: str) -> str:
    """Read a scenario from disk, falling back to a bundled scenario of that file name."""
    path = Path(name)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    if path.name in bundled_scenarios() and not path.parent.parts:
        return (resources.files("stringnet") / "scenarios" / path.name).read_text(encoding="utf-8")
    raise FileNotFoundError(f"scenario file not found: {name}")


def _err(msg: str) -> None:
    print(f"stringnet: {msg}", file=sys.stderr)


def cmd_simulate(args) -> int:
    try:
        cfg = ScenarioConfig.loads(_scenario_text(args.scenario))
    except FileNotFoundError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except (ValueError, KeyError, TypeError) as exc:
        _err(f"invalid scenario: {exc}")
        return EXIT_INPUT
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.dt is not None:
        cfg = cfg.replace(dt=args.dt)
    bad = validate_config(cfg)
    if bad:
        _err("invalid scenario:")
        for b in bad:
            print(f"  - {b}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        world = World(cfg)
        status = world.run(args.max_time)
    except Exception as exc:  # noqa: BLE001 - any engine failure maps to the runtime exit code
        _err(f"simulation failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    write_trajectory_csv(world, out / "trajectory.csv")
    write_events(world, out / "events.jsonl")
    metrics = run_metrics(world, status).to_json()
    metrics["seed"] = cfg.seed
    write_json(metrics, out / "metrics.json")
    (out / "trajectory.svg").write_text(trajectory_svg(world), encoding="utf-8")
    print(f"{status}: t={world.t:.2f}s closed_nets={world.stats.closed_nets} "
          f"herd_complete={world.stats.herd_complete} breaches={world.stats.breaches}")
    return {"success": EXIT_OK, "breach": EXIT_BREACH}.get(status, EXIT_RUNTIME)


def cmd_bench_assign(args) -> int:
    rows = run_bench(args.n_swarms_min, args.n_swarms_max, args.instances, args.defenders,
                     0 if args.seed is None else args.seed, args.n_leaf, args.timing)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bench_csv(rows, out / "bench.csv")
    (out / "bench.svg").write_text(bench_svg(rows), encoding="utf-8")
    print(f"{len(rows)} instances written to {out / 'bench.csv'}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    try:
        text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        _err(f"cannot read input: {exc}")
        return EXIT_INPUT
    try:
        ids, pts = read_cluster_csv(text)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    body = cluster_csv(ids, dbscan_labels(pts, args.eps, args.min_pts, args.phi)) if ids else ""
    if args.out is None:
        sys.stdout.write(body)
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "clusters.csv").write_text(body, encoding="utf-8")
    return EXIT_OK


def _positive(kind):
    def parse(text: str):
        val = kind(text)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val
    return parse


def _nonneg_int(text: str) -> int:
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (recorded with the run)")
    parser = argparse.ArgumentParser(prog="stringnet", description="Multi-swarm string-net herding toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a herding scenario")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON file, or the name of a bundled scenario (%s)" % ", ".join(bundled_scenarios()))
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--max-time", type=_positive(float), default=None, help="simulated seconds before giving up")
    p.add_argument("--dt", type=_positive(float), default=None, help="override the integration step")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench-assign", parents=[common], help="benchmark exact vs hierarchical assignment")
    p.add_argument("--n-swarms-min", type=_positive(int), default=2)
    p.add_argument("--n-swarms-max", type=_positive(int), default=10)
    p.add_argument("--defenders", type=_positive(int), default=6, help="defenders per swarm")
    p.add_argument("--instances", type=_nonneg_int, default=20, help="instances per swarm count")
    p.add_argument("--n-leaf", type=_positive(int), default=4, help="largest sub-problem solved exactly")
    p.add_argument("--timing", action="store_true",
                   help="measure wall times (the CSV then differs between runs)")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=cmd_bench_assign)

    p = sub.add_parser("cluster", parents=[common], help="DBSCAN over attacker states from CSV")
    p.add_argument("--input", default="-", help="CSV with id,r_x,r_y,v_x,v_y rows ('-' for stdin)")
    p.add_argument("--eps", type=_positive(float), required=True)
    p.add_argument("--min-pts", type=int, default=3)
    p.add_argument("--phi", type=float, default=0.25)
    p.add_argument("--out", default=None, help="output directory (default: stdout)")
    p.set_defaults(func=cmd_cluster)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bench-assign" and args.n_swarms_max < args.n_swarms_min:
        parser.error("--n-swarms-max must not be below --n-swarms-min")
    if args.command == "cluster" and (args.min_pts < 2 or not 0 < args.phi):
        parser.error("--min-pts must be >= 2 and --phi positive")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
