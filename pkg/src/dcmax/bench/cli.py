"""Command line front end: run recipes, list them, query the oracles."""

import argparse
import os
import sys
import configparser

import numpy as np

from .recipes import RECIPES, run_recipe, write_outputs
from .oracles import (oracle_enumerate_qubo, oracle_enumerate_qubo_batch,
                      oracle_chebyshev, oracle_best_aggregate)
from ..instances import parse_orlib_qubo, gen_qubo_random, gen_sparse_rows
from ..lp import solve_chebyshev
from ..sketch import rng_from

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_MISSING_DATA = 3


def _parse_value(s):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    low = s.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    return s


def _load_config(path):
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError("config file not found: %s" % path)
    out = {"run": {}, "recipes": {}}
    if cp.has_section("run"):
        for key, val in cp.items("run"):
            out["run"][key] = _parse_value(val)
    for sect in cp.sections():
        if sect.startswith("recipe."):
            out["recipes"][sect[len("recipe."):]] = {
                key: _parse_value(val) for key, val in cp.items(sect)}
    return out


def cmd_list(args):
    width = max(len(name) for name in RECIPES)
    for name in sorted(RECIPES):
        doc = (RECIPES[name].__doc__ or "").strip().splitlines()
        first = doc[0] if doc else ""
        print("%-*s  %s" % (width, name, first))
    return EXIT_OK


def cmd_run(args):
    config = {"run": {}, "recipes": {}}
    if args.config:
        config = _load_config(args.config)
    seed = args.seed if args.seed is not None else config["run"].get("seed", 0)
    out_dir = args.out or config["run"].get("out", "results")
    data_dir = args.data or config["run"].get("data")
    threads = args.threads or config["run"].get("threads", 1)
    if args.recipe == "all":
        names = sorted(RECIPES)
    else:
        names = [args.recipe]
        if args.recipe not in RECIPES:
            print("unknown recipe %r; run `dcmax list`" % args.recipe,
                  file=sys.stderr)
            return EXIT_ERROR
    missing = False
    for name in names:
        overrides = dict(config["recipes"].get(name, {}))
        result = run_recipe(name, seed=int(seed), data_dir=data_dir,
                            threads=int(threads), **overrides)
        echo = {"seed": seed, "data": data_dir or "", "threads": threads}
        echo.update(overrides)
        csv_path, _ = write_outputs(result, out_dir, int(seed),
                                    config_echo=echo)
        print("wrote %s (%d rows)" % (csv_path, len(result.rows)))
        if result.skipped:
            print("  skipped: missing file %s" % result.skipped)
            missing = True
    return EXIT_MISSING_DATA if missing else EXIT_OK


def cmd_oracle(args):
    if args.which == "qubo":
        if args.file:
            if not os.path.exists(args.file):
                print("missing file %s" % args.file, file=sys.stderr)
                return EXIT_MISSING_DATA
            with open(args.file) as fh:
                instances = parse_orlib_qubo(fh.read())
            inst = instances[args.index]
        else:
            inst = gen_qubo_random(args.n, 0.5, 10, args.seed)
        val, z = oracle_enumerate_qubo(inst.Q)
        if inst.n <= 16:
            val2, _ = oracle_enumerate_qubo_batch(inst.Q)
            if abs(val - val2) > 1e-9:
                print("oracle cross-check failed: %r vs %r" % (val, val2),
                      file=sys.stderr)
                return EXIT_ERROR
        print("optimum %.10g at %s" % (val, "".join(str(int(b)) for b in z)))
        return EXIT_OK
    if args.which == "chebyshev":
        rng = rng_from(args.seed, 1)
        A = rng.standard_normal((args.m, args.r))
        b = rng.standard_normal(args.m)
        t_grid, alpha = oracle_chebyshev(A, b)
        sol = solve_chebyshev(A, b)
        print("grid t %.10g, solver t %.10g, gap %.3g"
              % (t_grid, sol.t, abs(t_grid - sol.t)))
        return EXIT_OK
    # aggregate: random signed rows, enumerated best k-subset
    rng = rng_from(args.seed, 2)
    cols = rng.standard_normal((args.cols, args.rows))
    columns = np.concatenate([cols, -cols], axis=1)
    row_ids = np.concatenate([np.arange(args.rows), np.arange(args.rows)])
    norm, _ = oracle_best_aggregate(
        [(columns, row_ids, args.slots)], np.zeros(args.cols))
    print("best aggregate norm %.10g over %d rows choose %d (signed)"
          % (norm, args.rows, args.slots))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="dcmax",
        description="benchmark driver for max-structured DC solvers")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a recipe (or `all`)")
    runp.add_argument("recipe")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--data", default=None, help="directory with datasets")
    runp.add_argument("--config", default=None, help="INI config file")
    runp.add_argument("--threads", type=int, default=None)
    runp.set_defaults(func=cmd_run)

    listp = sub.add_parser("list", help="list available recipes")
    listp.set_defaults(func=cmd_list)

    orp = sub.add_parser("oracle", help="run a brute-force oracle")
    orsub = orp.add_subparsers(dest="which", required=True)
    q = orsub.add_parser("qubo")
    q.add_argument("--file", default=None, help="OR-Library style file")
    q.add_argument("--index", type=int, default=0)
    q.add_argument("--n", type=int, default=12)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_oracle)
    c = orsub.add_parser("chebyshev")
    c.add_argument("--m", type=int, default=5)
    c.add_argument("--r", type=int, default=3)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_oracle)
    a = orsub.add_parser("aggregate")
    a.add_argument("--rows", type=int, default=8)
    a.add_argument("--cols", type=int, default=5)
    a.add_argument("--slots", type=int, default=2)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_oracle)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_MISSING_DATA
    except Exception as exc:   # surface the failure, keep the exit contract
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
