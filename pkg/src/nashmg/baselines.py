"""Iterative best-response baselines: self-play, fictitious self-play, double oracle.

Best responses are learned with single-agent tabular Q-learning against an
opponent mixture that is resampled every episode.  Double oracle solves the
empirical meta-game between the two policy sets after every new policy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import DimensionMismatch
from .learners import EpsilonSchedule
from .markov_game import (
    MarkovPolicy,
    MixturePolicy,
    Policy,
    Simulator,
    TabularMG,
    as_mixture,
    check_policy,
    make_rng,
    sample_returns,
)
from .matrix_nash import solve_lp
from .oracle import best_response_to_markov, best_response_to_markov_min, policy_value

MAX, MIN = "max", "min"


@dataclass
class PolicySet:
    policies: List[MarkovPolicy]
    owner: str

    def __post_init__(self):
        if self.owner not in (MAX, MIN):
            raise ValueError(f"owner must be 'max' or 'min', got {self.owner!r}")
        if not self.policies:
            raise ValueError("a policy set is never empty")
        shape = self.policies[0].probs.shape
        if any(p.probs.shape != shape for p in self.policies):
            raise DimensionMismatch("policies in a set must share dimensions")

    def __len__(self):
        return len(self.policies)

    def mixture(self, meta) -> MixturePolicy:
        """Behavioural mixture; components with zero meta weight are dropped."""
        meta = np.asarray(meta, dtype=float)
        if meta.shape != (len(self.policies),):
            raise DimensionMismatch("meta strategy length differs from the policy set")
        keep = np.flatnonzero(meta > 0.0)
        return MixturePolicy(tuple(self.policies[i] for i in keep), meta[keep] / meta[keep].sum())


@dataclass(frozen=True)
class BRConfig:
    """Settings for one best-response phase.

    ``exact`` replaces Q-learning with a dynamic-programming best response to
    the meta-weighted average Markov policy, which is the true best response
    for a single component or a one-step game.
    """

    episodes: int = 2000
    alpha: float = 0.1
    schedule: EpsilonSchedule = field(default_factory=EpsilonSchedule.exponential)
    gamma: float = 1.0
    threshold: Optional[float] = None
    window: int = 100
    exact: bool = False


def _learner_env(env: TabularMG, player: str) -> TabularMG:
    return env if player == MIN else env.swapped()


def q_learning_best_response(env: TabularMG, opponent: Policy, player: str,
                             config: BRConfig = BRConfig(), rng=None):
    """Greedy policy for ``player`` learned by Q-learning against ``opponent``.

    Returns ``(policy, episodes_used)``; fewer than ``config.episodes`` are
    used only when the reward-threshold early stop is enabled and fires.
    """
    if player not in (MAX, MIN):
        raise ValueError(f"player must be 'max' or 'min', got {player!r}")
    opponent_side = MIN if player == MAX else MAX
    check_policy(env, opponent, opponent_side)
    if config.episodes < 1:
        raise ValueError("a best-response phase needs at least one episode")
    if rng is None:
        rng = make_rng(0, "best_response")
    if config.exact:
        return _exact_best_response(env, opponent, player, config.gamma), 0

    # Work in the frame where the opponent is the max player and the learner
    # minimises, then flip the learned table back to a plain argmin.
    game = _learner_env(env, player)
    mix = as_mixture(opponent)
    opp_cdf = np.cumsum(mix.stacked(), axis=-1)
    sim = Simulator(game)
    H, S = game.horizon, game.num_states
    n_opp, n_own = game.num_actions_max, game.num_actions_min
    q = np.zeros((H, S, n_own))
    recent = []
    steps = 0
    used = 0
    gamma, alpha = config.gamma, config.alpha
    for _ in range(config.episodes):
        k = int(rng.choice(len(mix.components), p=mix.meta))
        s = sim.reset()
        ep_return = 0.0
        for h in range(H):
            cdf = opp_cdf[k, h, s]
            a = min(int(np.searchsorted(cdf, rng.random(), side="right")), n_opp - 1)
            if rng.random() < config.schedule(steps):
                b = int(rng.integers(n_own))
            else:
                b = int(np.argmin(q[h, s]))
            sample = sim.step(h, s, a, b, rng)
            steps += 1
            ep_return += gamma**h * sample.r
            target = sample.r
            if not sample.done:
                target += gamma * q[h + 1, sample.s_next].min()
            q[h, s, b] = alpha * target + (1.0 - alpha) * q[h, s, b]
            if sample.done:
                break
            s = sample.s_next
        used += 1
        if config.threshold is not None:
            # learner's own reward is the negated game reward in this frame
            recent.append(-ep_return)
            if len(recent) > config.window:
                recent.pop(0)
            if len(recent) == config.window and np.mean(recent) > config.threshold:
                break
    greedy = np.argmin(q, axis=-1)
    return MarkovPolicy.deterministic(greedy, n_own), used


def _exact_best_response(env, opponent, player, gamma):
    mix = as_mixture(opponent)
    avg = MarkovPolicy(np.einsum("k,khsa->hsa", mix.meta, mix.stacked()))
    if player == MIN:
        return best_response_to_markov(env, avg, gamma)[0]
    return best_response_to_markov_min(env, avg, gamma)[0]


def meta_payoffs(env: TabularMG, set_mu: PolicySet, set_nu: PolicySet, eval_episodes: int,
                 rng=None, exact: bool = False, gamma: float = 1.0) -> np.ndarray:
    """Mean episodic return of every pairing; exact DP values when ``exact``."""
    if eval_episodes < 1:
        raise ValueError("eval_episodes must be positive")
    if rng is None:
        rng = make_rng(0, "meta_nash")
    M = np.zeros((len(set_mu), len(set_nu)))
    for i, mu in enumerate(set_mu.policies):
        for j, nu in enumerate(set_nu.policies):
            if exact:
                M[i, j] = policy_value(env, mu, nu, gamma)[0, env.initial_state]
            else:
                M[i, j] = sample_returns(env, mu, nu, eval_episodes, rng, gamma).mean()
    return M


def meta_nash(env: TabularMG, set_mu: PolicySet, set_nu: PolicySet, eval_episodes: int,
              rng=None, exact: bool = False, gamma: float = 1.0):
    """Meta-strategies ``(rho_mu, rho_nu)`` solving the empirical meta-game."""
    sol = solve_lp(meta_payoffs(env, set_mu, set_nu, eval_episodes, rng, exact, gamma))
    return sol.row_strategy, sol.col_strategy


@dataclass
class IterativeBRResult:
    set_mu: PolicySet
    set_nu: PolicySet
    meta_mu: np.ndarray
    meta_nu: np.ndarray
    episodes: int = 0
    iterations: int = 0

    def mixtures(self):
        return self.set_mu.mixture(self.meta_mu), self.set_nu.mixture(self.meta_nu)


IterationHook = Callable[[int, int, MixturePolicy, MixturePolicy], None]


def _one_hot(n):
    v = np.zeros(n)
    v[-1] = 1.0
    return v


def _train(env, iterations, br_config, rule, seed, meta_eval_episodes=100,
           exact_meta=False, hook: Optional[IterationHook] = None) -> IterativeBRResult:
    if iterations < 0:
        raise ValueError("iterations must be nonnegative")
    H, S = env.horizon, env.num_states
    res = IterativeBRResult(
        PolicySet([MarkovPolicy.uniform(H, S, env.num_actions_max)], MAX),
        PolicySet([MarkovPolicy.uniform(H, S, env.num_actions_min)], MIN),
        np.ones(1),
        np.ones(1),
    )
    # The best-response stream is shared by all rules, so the first iteration
    # of every rule is the same best response to the same uniform policy.
    br_rng = make_rng(seed, "iterative/best_response")
    meta_rng = make_rng(seed, "iterative/meta_nash")
    if hook is not None:
        hook(0, 0, *res.mixtures())
    for t in range(1, iterations + 1):
        if t % 2 == 0:
            learner, own, other, other_meta = MIN, res.set_nu, res.set_mu, res.meta_mu
        else:
            learner, own, other, other_meta = MAX, res.set_mu, res.set_nu, res.meta_nu
        policy, used = q_learning_best_response(env, other.mixture(other_meta), learner,
                                                br_config, br_rng)
        own.policies.append(policy)
        res.episodes += used
        if rule == "sp":
            new_meta = _one_hot(len(own))
        elif rule == "fsp":
            new_meta = np.full(len(own), 1.0 / len(own))
        else:
            res.meta_mu, res.meta_nu = meta_nash(env, res.set_mu, res.set_nu, meta_eval_episodes,
                                                 meta_rng, exact_meta, br_config.gamma)
            new_meta = None
        if new_meta is not None:
            if learner == MAX:
                res.meta_mu = new_meta
            else:
                res.meta_nu = new_meta
        res.iterations = t
        if hook is not None:
            hook(t, res.episodes, *res.mixtures())
    return res


def self_play_train(env, iterations, br_config=BRConfig(), seed=0, hook=None):
    """Alternate best responses to the opponent's latest policy."""
    return _train(env, iterations, br_config, "sp", seed, hook=hook)


def fsp_train(env, iterations, br_config=BRConfig(), seed=0, hook=None):
    """Alternate best responses to the uniform mixture of the opponent's past policies."""
    return _train(env, iterations, br_config, "fsp", seed, hook=hook)


def do_train(env, iterations, br_config=BRConfig(), meta_eval_episodes=100, seed=0,
             exact_meta=False, hook=None):
    """Double oracle: best-respond to the opponent's meta-Nash mixture."""
    return _train(env, iterations, br_config, "do", seed, meta_eval_episodes, exact_meta, hook)


def approximate_exploitability(env: TabularMG, mu_hat: Policy, nu_hat: Policy,
                               br_config: BRConfig = BRConfig(episodes=30_000),
                               eval_episodes: int = 10_000, seed: int = 0) -> float:
    """Exploitability measured by learned exploiters instead of exact dynamic programming.

    A fresh Q-learning exploiter is trained against each side, then both
    matchups are scored by Monte-Carlo returns.  Learned exploiters are
    weaker than exact best responses, so this tends to under-report.
    """
    rng = make_rng(seed, "approx_exploiter")
    min_br, _ = q_learning_best_response(env, mu_hat, MIN, br_config, rng)
    max_br, _ = q_learning_best_response(env, nu_hat, MAX, br_config, rng)
    lower = sample_returns(env, mu_hat, min_br, eval_episodes, rng, br_config.gamma).mean()
    upper = sample_returns(env, max_br, nu_hat, eval_episodes, rng, br_config.gamma).mean()
    return float(upper - lower)
