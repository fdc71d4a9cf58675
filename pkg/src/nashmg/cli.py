"""Command line entry point: ``nashmg <subcommand>``.

Exit codes: 0 success, 1 usage or config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import harness
from .errors import ConfigError, HistoryBudgetExceeded, InvariantViolation, MalformedInput
from .markov_game import generate_random_mg, load_mg, load_policy_pair, save_mg, save_policy_pair
from .matrix_nash import DEFAULT_ETA, DEFAULT_ITERS, solve_lp, solve_mwu
from .oracle import exact_nash_solve, exploitability

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _out(args, path):
    """Every path on the command line is taken relative to ``--output-dir``."""
    return os.path.join(args.output_dir, path)


def cmd_generate_env(args):
    mg = generate_random_mg(args.S, args.A, args.B, args.H, args.seed)
    path = _out(args, args.out)
    save_mg(mg, path)
    print(path)


def cmd_solve_exact(args):
    mg = load_mg(_out(args, args.env))
    sol = exact_nash_solve(mg, args.gamma)
    print(f"{sol.v_star[0, mg.initial_state]:.6f}")
    if args.policy_out:
        save_policy_pair(sol.mu_star, sol.nu_star, _out(args, args.policy_out))


def _config(args):
    overrides = {"output_dir": args.output_dir}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.config:
        return harness.load_config(_out(args, args.config), **overrides)
    return harness.parse_config("", **overrides)


def cmd_train(args):
    cfg = _config(args)
    rows, paths = harness.train(cfg)
    last = max(rows, key=lambda r: (r.seed, r.episode))
    print(f"wrote {', '.join(paths)}")
    print(f"final exploitability (seed {last.seed}, episode {last.episode}): "
          f"{last.exploitability:.6f}")


def cmd_compare(args):
    cfg = _config(args)
    _, series, paths = harness.compare(cfg)
    print(f"wrote {', '.join(paths)}")
    for alg, (x, med, _, _) in series.items():
        print(f"{alg:>18s}  episode {x[-1]:>7d}  median exploitability {med[-1]:.6f}")


def cmd_exploit_eval(args):
    mg = load_mg(_out(args, args.env))
    mu, nu = load_policy_pair(_out(args, args.policy))
    if args.mode == "exact":
        value = exploitability(mg, mu, nu, args.gamma, args.node_budget)
    else:
        cfg = harness.ExperimentConfig(gamma=args.gamma, approx_episodes=args.episodes,
                                       approx_eval_episodes=args.eval_episodes)
        value = harness.approximate_exploitability(mg, mu, nu, cfg.approx_config(),
                                                   cfg.approx_eval_episodes, args.seed)
    print(f"{value:.6f}")


def bench_solvers(m, n, samples, seed=0, eta=DEFAULT_ETA, iters=DEFAULT_ITERS):
    """Mean seconds per matrix and worst gap for each solver on random matrices."""
    rng = np.random.default_rng(seed)
    mats = rng.uniform(-1.0, 1.0, size=(samples, m, n))
    out = {}
    for name, solve in (("lp", solve_lp), ("mwu", lambda A: solve_mwu(A, eta, iters))):
        t0 = time.perf_counter()
        gaps = [solve(A).eps for A in mats]
        out[name] = ((time.perf_counter() - t0) / samples, max(gaps))
    return out


def cmd_bench_solvers(args):
    res = bench_solvers(args.m, args.n, args.samples, args.seed, args.eta, args.iters)
    print(f"{'solver':<8}{'time per sample (s)':>22}{'max eps':>14}")
    for name, (t, eps) in res.items():
        print(f"{name:<8}{t:>22.6f}{eps:>14.3e}")


def build_parser():
    p = _Parser(prog="nashmg", description="Tabular zero-sum Markov game toolkit")
    p.add_argument("--output-dir", default=".", help="directory that output paths are relative to")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate-env", help="write a random game file")
    for k in ("S", "A", "B", "H"):
        g.add_argument(f"-{k}", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate_env)

    s = sub.add_parser("solve-exact", help="print V*(s1) and write the Nash policy pair")
    s.add_argument("env")
    s.add_argument("--policy-out", default="nash_policy.json")
    s.add_argument("--gamma", type=float, default=1.0)
    s.set_defaults(func=cmd_solve_exact)

    for name, func, helptext in (("train", cmd_train, "train one algorithm"),
                                 ("compare", cmd_compare, "train and plot several algorithms")):
        t = sub.add_parser(name, help=helptext)
        t.add_argument("--config", help="key = value config file")
        t.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        t.set_defaults(func=func)

    e = sub.add_parser("exploit-eval", help="exploitability of a saved policy pair")
    e.add_argument("policy")
    e.add_argument("env")
    e.add_argument("--mode", choices=("exact", "approx"), default="exact")
    e.add_argument("--gamma", type=float, default=1.0)
    e.add_argument("--episodes", type=int, default=30_000, help="exploiter training episodes")
    e.add_argument("--eval-episodes", type=int, default=10_000)
    e.add_argument("--node-budget", type=int, default=harness.DEFAULT_NODE_BUDGET)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_exploit_eval)

    b = sub.add_parser("bench-solvers", help="time the LP and MWU matrix-game solvers")
    b.add_argument("-m", type=int, default=6)
    b.add_argument("-n", type=int, default=6)
    b.add_argument("--samples", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--eta", type=float, default=DEFAULT_ETA)
    b.add_argument("--iters", type=int, default=DEFAULT_ITERS)
    b.set_defaults(func=cmd_bench_solvers)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"nashmg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"nashmg: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, MalformedInput, InvariantViolation, HistoryBudgetExceeded) as exc:
        print(f"nashmg: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
