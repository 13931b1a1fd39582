"""Command-line entry point: ``esglab <subcommand> ...``.

Exit codes: 0 on success, 1 on a domain error (bad data, infeasible
problem), 2 on a usage error.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .calibration import calibrate, load_history, to_returns
from .exceptions import ESGLabError
from .generation import moment_match_affine
from .io import (
    bundled_config,
    config_to_dict,
    parse_config,
    read_scenarios,
    write_quadratic_report,
    write_report,
    write_scenarios,
    write_tree,
)
from .optimization import exact_moment_argmin, solve_grid
from .stability import make_scenarios, quadratic_stability_demo, run_replications
from .tree import build_tree, count_nodes, tree_to_paths
from .types import BranchingVector, ObjectiveSpec


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_config(args):
    if getattr(args, "config", None):
        return parse_config(args.config)
    return bundled_config(), "bundled"


def _write_manifest(path, command, config_echo, master_seed, timings, outputs):
    manifest = {
        "tool": "esglab",
        "version": __version__,
        "command": command,
        "config": config_echo,
        "master_seed": master_seed,
        "timings_seconds": timings,
        "outputs": [str(p) for p in outputs],
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return Path(path)


def _print_json(obj):
    print(json.dumps(obj, indent=2))


def cmd_calibrate(args):
    t0 = time.perf_counter()
    hist = load_history(args.data)
    model = calibrate(to_returns(hist), args.periods_per_year, names=hist.names)
    text = json.dumps(model.to_dict(), indent=2)
    outputs = []
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        outputs.append(args.out)
    print(text)
    if args.manifest:
        _write_manifest(args.manifest, "calibrate", {"data": args.data, "periods_per_year": args.periods_per_year},
                        None, {"calibrate": time.perf_counter() - t0}, outputs)
    return 0


def cmd_generate(args):
    t0 = time.perf_counter()
    config, source = _load_config(args)
    seed = config.master_seed if args.seed is None else args.seed
    s = make_scenarios(config, args.paths, seed)
    outputs = []
    if args.out:
        write_scenarios(s, args.out)
        outputs.append(args.out)
    else:
        write_scenarios(s, sys.stdout)
    if s.resampled:
        print(f"note: {s.resampled} slots redrawn below -100%", file=sys.stderr)
    if args.manifest:
        _write_manifest(args.manifest, "generate", config_to_dict(config, source), seed,
                        {"generate": time.perf_counter() - t0}, outputs)
    return 0


def cmd_tree(args):
    branching = BranchingVector.parse(args.branching)
    if args.count_only:
        print(count_nodes(branching))
        return 0
    t0 = time.perf_counter()
    config, source = _load_config(args)
    seed = config.master_seed if args.seed is None else args.seed
    tree = build_tree(config.model, branching, dt=config.dt if args.dt is None else args.dt, seed=seed,
                      max_nodes=args.max_nodes)
    outputs = []
    if args.out:
        write_tree(tree, args.out)
        outputs.append(args.out)
    if args.paths_out and tree.height > 0:
        paths, probs = tree_to_paths(tree)
        write_scenarios(paths, args.paths_out)
        outputs.append(args.paths_out)
    _print_json({
        "branching": list(branching),
        "nodes": tree.n_nodes,
        "arcs": tree.n_arcs,
        "leaves": int(tree.leaves().size),
        "height": tree.height,
    })
    if args.manifest:
        _write_manifest(args.manifest, "tree", config_to_dict(config, source), seed,
                        {"tree": time.perf_counter() - t0}, outputs)
    return 0


def cmd_optimize(args):
    t0 = time.perf_counter()
    config, source = _load_config(args)
    spec = ObjectiveSpec(config.spec.m0 if args.m0 is None else args.m0,
                         config.spec.step if args.step is None else args.step)
    seed = config.master_seed if args.seed is None else args.seed
    if args.exact:
        best = exact_moment_argmin(config.model, spec, config.dt)
        result = {"method": "exact_moments", "weights": dict(zip(config.model.names, best.weights))}
    else:
        if args.scenarios:
            s = read_scenarios(args.scenarios, dt=config.dt)
            if args.moment_match:
                s = moment_match_affine(s, config.model.mu * s.dt, config.model.covariance(s.dt))
        else:
            s = make_scenarios(config, args.paths, seed, moment_match=args.moment_match or None)
        outcome = solve_grid(s, spec)
        if not outcome.feasible:
            print(f"infeasible: no allocation has mean >= {spec.m0!r}", file=sys.stderr)
            return 1
        result = {
            "method": "grid",
            "paths": s.n_paths,
            "weights": dict(zip(s.names, outcome.best.weights)),
            "objective": outcome.objective,
            "expected": outcome.expected,
            "feasible_count": outcome.feasible_count,
        }
    _print_json(result)
    if args.manifest:
        _write_manifest(args.manifest, "optimize", config_to_dict(config, source), seed,
                        {"optimize": time.perf_counter() - t0}, [])
    return 0


def cmd_stability(args):
    t0 = time.perf_counter()
    config, source = _load_config(args)
    report = run_replications(config, threads=args.threads)
    t1 = time.perf_counter()
    files = write_report(report, args.out)
    t2 = time.perf_counter()
    manifest = Path(args.out) / "manifest.json"
    _write_manifest(manifest, "stability", config_to_dict(config, source), config.master_seed,
                    {"replications": t1 - t0, "write": t2 - t1}, files)
    print(f"{'size':>8} {'mean':>10} {'std':>10} {'ext.disp':>10} {'mean e_f':>10}")
    for z in report.sizes:
        st = report.internal[z]
        print(f"{z:>8} {st.mean:>10.5f} {st.std:>10.5f} "
              f"{report.external_dispersion[z]:>10.5f} {report.mean_bias[z]:>10.3g}")
    print(f"wrote {len(files)} files and manifest.json to {args.out}")
    return 0


def cmd_quadratic_demo(args):
    t0 = time.perf_counter()
    rep = quadratic_stability_demo(args.mean, args.var, args.sizes, args.replications, args.seed)
    outputs = []
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs.append(write_quadratic_report(rep, out / "quadratic.csv"))
    print(f"{'variant':>17} {'size':>7} {'std f*':>10} {'max e_f':>10}")
    for name, v in rep.variants.items():
        for i, z in enumerate(rep.sizes):
            print(f"{name:>17} {z:>7} {v.f_star[i].std(ddof=1):>10.3g} {v.e_f[i].max():>10.3g}")
    if args.out:
        echo = {"mean": args.mean, "var": args.var, "sizes": args.sizes, "replications": args.replications}
        _write_manifest(Path(args.out) / "manifest.json", "quadratic-demo", echo, args.seed,
                        {"demo": time.perf_counter() - t0}, outputs)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="esglab", description="Economic scenario generator laboratory.")
    p.add_argument("--version", action="version", version=f"esglab {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    c = sub.add_parser("calibrate", help="estimate an asset model from a CSV of index levels")
    c.add_argument("--data", required=True)
    c.add_argument("--periods-per-year", type=int, default=12)
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)

    g = sub.add_parser("generate", help="write one scenario set as CSV")
    g.add_argument("--config", help="experiment or model JSON (default: bundled config)")
    g.add_argument("--paths", type=int, default=1000)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("tree", help="node accounting or sampling of a scenario tree")
    t.add_argument("--branching", required=True, help="comma-separated b(1),...,b(T)")
    t.add_argument("--count-only", action="store_true")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--dt", type=float)
    t.add_argument("--max-nodes", type=int, default=10 ** 6)
    t.add_argument("--out", help="node CSV")
    t.add_argument("--paths-out", help="root-to-leaf scenario CSV")
    t.set_defaults(func=cmd_tree)

    o = sub.add_parser("optimize", help="solve the grid allocation problem once")
    o.add_argument("--config")
    o.add_argument("--scenarios", help="scenario CSV written by 'generate'")
    o.add_argument("--paths", type=int, default=10000)
    o.add_argument("--seed", type=int)
    o.add_argument("--m0", type=float)
    o.add_argument("--step", type=float)
    o.add_argument("--moment-match", action="store_true")
    o.add_argument("--exact", action="store_true", help="use population moments instead of scenarios")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("stability", help="run the replication sweep and write report CSVs")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_stability)

    q = sub.add_parser("quadratic-demo", help="internal vs external stability on min E[(x - xi)^2]")
    q.add_argument("--mean", type=float, default=0.0)
    q.add_argument("--var", type=float, default=1.0)
    q.add_argument("--sizes", type=_int_list, default=[50, 1000, 5000, 10000])
    q.add_argument("--replications", type=int, default=30)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_quadratic_demo)

    for sp in (c, g, t, o):
        sp.add_argument("--manifest", help="write a run manifest JSON here")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ESGLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
