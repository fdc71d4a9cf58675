"""Learned exploiters against exact best responses.

For the exact Nash pair and for trained learner outputs on one random game,
prints the exact exploitability next to the value found by Q-learning
exploiters of increasing training length.  Learned exploiters under-report
because they rarely find the exact best response.
"""
import argparse

from nashmg.baselines import BRConfig, approximate_exploitability
from nashmg.learners import extract_policy, nash_q_learning_train, nash_vi_train
from nashmg.markov_game import generate_random_mg
from nashmg.oracle import exact_nash_solve, exploitability

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--env-seed", type=int, default=0)
ap.add_argument("--episodes", type=int, default=20_000, help="learner training episodes")
ap.add_argument("--exploiter-episodes", type=int, nargs="+", default=[1000, 10_000, 30_000])
args = ap.parse_args()

env = generate_random_mg(3, 3, 3, 3, args.env_seed)
sol = exact_nash_solve(env)
pairs = {
    "oracle nash": (sol.mu_star, sol.nu_star),
    "nash_vi": extract_policy(nash_vi_train(env, args.episodes)),
    "nash_q": extract_policy(nash_q_learning_train(env, args.episodes)),
}
head = "".join(f"{f'approx@{n}':>14}" for n in args.exploiter_episodes)
print(f"{'policy':>12}{'exact':>10}{head}")
for name, (mu, nu) in pairs.items():
    approx = [approximate_exploitability(env, mu, nu, BRConfig(episodes=n), 10_000)
              for n in args.exploiter_episodes]
    print(f"{name:>12}{exploitability(env, mu, nu):10.4f}" + "".join(f"{v:14.4f}" for v in approx))
