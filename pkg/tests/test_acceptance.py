"""End-to-end acceptance criteria 1 to 9.

Each test prints one ``criterion N: PASS|FAIL`` line (collected again in the
terminal summary) and then asserts the same condition.  Stated runtime
budgets are part of every pass condition.
"""
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from brute_force import brute_force_mixture_br
from conftest import random_policy
from nashmg import harness
from nashmg.baselines import do_train, fsp_train, self_play_train
from nashmg.cli import main
from nashmg.markov_game import MixturePolicy, generate_random_mg, save_mg
from nashmg.matrix_nash import matrix_exploitability, solve_lp, solve_mwu
from nashmg.oracle import (
    best_response_to_mixture,
    exact_nash_solve,
    exploitability,
    max_player_br_value,
    min_player_br_value,
)

pytestmark = pytest.mark.acceptance

ENV_I_SEEDS = [5000, 5001, 5002, 5003, 5004]
ENV_II_SEED = 6000
LEARNERS = ("nash_vi", "nash_vi_exploiter")
BASELINES = ("sp", "fsp", "do")


def test_criterion_1_lp_soundness(acceptance_report):
    mats = np.random.default_rng(1).uniform(-1, 1, size=(1000, 6, 6))
    t0 = time.perf_counter()
    eps = [solve_lp(A).eps for A in mats]
    elapsed = time.perf_counter() - t0
    per = elapsed / len(mats)
    ok = max(eps) <= 1e-6 and per < 0.010 and elapsed < 60
    acceptance_report(1, ok, f"max eps {max(eps):.2e} (<= 1e-6), {per * 1e3:.3f} ms/sample (< 10 ms)")
    assert ok


def test_criterion_2_mwu_agrees_with_lp(acceptance_report):
    mats = np.random.default_rng(2).uniform(-1, 1, size=(100, 6, 6))
    t0 = time.perf_counter()
    dv, gaps = [], []
    for A in mats:
        lp, mwu = solve_lp(A), solve_mwu(A, eta=0.1, iters=10_000)
        dv.append(abs(mwu.value - lp.value))
        gaps.append(matrix_exploitability(A, mwu.row_strategy, mwu.col_strategy))
    elapsed = time.perf_counter() - t0
    ok = max(dv) <= 0.02 and max(gaps) <= 0.05 and elapsed < 60
    acceptance_report(2, ok, f"max |dv| {max(dv):.4f} (<= 0.02), max MWU eps {max(gaps):.4f} (<= 0.05), "
                             f"{elapsed:.0f}s")
    assert ok


def test_criterion_3_oracle_correctness(acceptance_report):
    t0 = time.perf_counter()
    worst_nash, worst_sandwich = 0.0, -np.inf
    for seed in range(100):
        mg = generate_random_mg(3, 3, 3, 3, seed=3000 + seed)
        sol = exact_nash_solve(mg)
        v_star = sol.v_star[0, mg.initial_state]
        worst_nash = max(worst_nash, exploitability(mg, sol.mu_star, sol.nu_star))
        rng = np.random.default_rng(seed)
        for _ in range(10):
            mu, nu = random_policy(rng, 3, 3, 3), random_policy(rng, 3, 3, 3)
            worst_sandwich = max(worst_sandwich, min_player_br_value(mg, mu) - v_star,
                                 v_star - max_player_br_value(mg, nu))
    elapsed = time.perf_counter() - t0
    ok = worst_nash <= 1e-6 and worst_sandwich <= 1e-6 and elapsed < 60
    acceptance_report(3, ok, f"max Nash exploitability {worst_nash:.1e}, max sandwich violation "
                             f"{worst_sandwich:.1e} (<= 1e-6)")
    assert ok


def test_criterion_4_mixture_best_response_exact(acceptance_report):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        mg = generate_random_mg(2, 2, 2, 2, seed=4000 + seed)
        rng = np.random.default_rng(seed)
        mix = MixturePolicy((random_policy(rng, 2, 2, 2), random_policy(rng, 2, 2, 2)),
                            rng.dirichlet(np.ones(2)))
        worst = max(worst, abs(best_response_to_mixture(mg, mix) - brute_force_mixture_br(mg, mix)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 60
    acceptance_report(4, ok, f"max |recursion - brute force| {worst:.1e} (<= 1e-9)")
    assert ok


def test_criterion_5_env_one_convergence_ordering(acceptance_report):
    config = harness.parse_config("episodes = 50000\neval_every = 250\nbr_episodes = 2000")
    t0 = time.perf_counter()
    reach = {alg: [] for alg in LEARNERS + BASELINES}
    final = {alg: [] for alg in LEARNERS}
    value_range = None
    for env_seed in ENV_I_SEEDS:
        env = generate_random_mg(3, 3, 3, 3, env_seed)
        value_range = 2.0 * env.horizon
        for alg in reach:
            rows, _ = harness.run_single(config, alg, 0, env)
            reach[alg].append(harness.episodes_to_reach([r.episode for r in rows],
                                                        [r.exploitability for r in rows], 0.2))
            if alg in final:
                final[alg].append(rows[-1].exploitability)
    elapsed = time.perf_counter() - t0
    med_final = {a: float(np.median(v)) for a, v in final.items()}
    med_reach = {a: float(np.median(v)) for a, v in reach.items()}
    slowest_learner = max(med_reach[a] for a in LEARNERS)
    fastest_baseline = min(med_reach[a] for a in BASELINES)
    ok = (all(v < 0.1 * value_range for v in med_final.values())
          and slowest_learner < fastest_baseline and elapsed < 30 * 60)
    detail = ", ".join(f"{a} {med_final[a]:.4f}" for a in LEARNERS)
    detail += f" (< {0.1 * value_range:g}); episodes to 0.2: " + ", ".join(
        f"{a} {med_reach[a]:g}" for a in reach)
    acceptance_report(5, ok, detail)
    assert ok


def test_criterion_6_env_two_sanity(acceptance_report):
    config = harness.parse_config("S = 6\nA = 6\nB = 6\nH = 6\nepisodes = 50000\n"
                                  f"eval_every = 50000\nbr_episodes = 2000\nenv_seed = {ENV_II_SEED}")
    env = config.make_env()
    t0 = time.perf_counter()
    rows, _ = harness.run_single(config, "nash_vi", 0, env)
    start, end = rows[0].exploitability, rows[-1].exploitability
    iterations = config.episodes // config.br_episodes
    baseline_final = {}
    for name, train in (("sp", self_play_train), ("fsp", fsp_train), ("do", do_train)):
        res = train(env, iterations, config.br_config(), seed=0)
        mu, nu = res.mixtures()
        baseline_final[name] = harness.evaluate(config, env, mu, nu, 0, res.episodes)
    elapsed = time.perf_counter() - t0
    ok = start >= 5 * end and all(end < v for v in baseline_final.values()) and elapsed < 60 * 60
    detail = f"nash_vi {start:.3f} -> {end:.4f} (factor {start / end:.0f}); baselines " + ", ".join(
        f"{k} {v:.3f}" for k, v in baseline_final.items())
    acceptance_report(6, ok, detail)
    assert ok


def test_criterion_7_approximate_exploiter(tmp_path, capsys, acceptance_report):
    save_mg(generate_random_mg(3, 3, 3, 3, seed=ENV_I_SEEDS[0]), tmp_path / "env.json")
    t0 = time.perf_counter()
    assert main(["--output-dir", str(tmp_path), "solve-exact", "env.json", "--policy-out", "nash.json"]) == 0
    capsys.readouterr()
    values = {}
    for mode in ("exact", "approx"):
        assert main(["--output-dir", str(tmp_path), "exploit-eval", "nash.json", "env.json",
                     "--mode", mode]) == 0
        values[mode] = float(capsys.readouterr().out)
    elapsed = time.perf_counter() - t0
    ok = values["approx"] <= 0.1 and values["approx"] <= values["exact"] + 0.1 and elapsed < 600
    acceptance_report(7, ok, f"approx {values['approx']:.4f} (<= 0.1), exact {values['exact']:.2e}")
    assert ok


def test_criterion_8_determinism(tmp_path, capsys, acceptance_report):
    t0 = time.perf_counter()
    mismatched = []
    for alg in harness.ALGORITHMS:
        text = f"algorithm = {alg}\nepisodes = 2000\neval_every = 250\nbr_episodes = 500\nseeds = 0, 1\n"
        outputs = []
        for run in ("first", "second"):
            out = tmp_path / alg / run
            out.mkdir(parents=True)
            (out / "run.cfg").write_text(text)
            assert main(["--output-dir", str(out), "train", "--config", "run.cfg"]) == 0
            outputs.append({f: (out / f).read_bytes() for f in sorted(os.listdir(out))})
        if outputs[0] != outputs[1] or len(outputs[0]) != 4:
            mismatched.append(alg)
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    ok = not mismatched and elapsed < 300
    acceptance_report(8, ok, f"{len(harness.ALGORITHMS)} algorithms x 2 seeds, byte-identical CSV and "
                             f"policy files; mismatches: {mismatched or 'none'}")
    assert ok


def test_criterion_9_invariant_suite(acceptance_report):
    tests_dir = os.path.dirname(__file__)
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-m", "invariant", "-p", "no:cacheprovider", tests_dir],
        capture_output=True, text=True, cwd=os.path.dirname(tests_dir),
    )
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 600
    acceptance_report(9, ok, f"invariant property tests: {summary}")
    assert ok, proc.stdout[-3000:]
