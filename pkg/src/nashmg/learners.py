"""Tabular equilibrium learners that only interact with the game by sampling.

``nash_vi_train`` and ``nash_vi_exploiter_train`` are model based: they count
transitions, and every ``update_interval`` stored samples rebuild the
empirical model and redo a full backward sweep.  ``nash_q_learning_train`` is
model free and applies a soft update per sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .markov_game import MarkovPolicy, Simulator, TabularMG, make_rng
from .matrix_nash import solve_lp
from .oracle import ORACLE_TOL, nash_policies

EvalHook = Callable[[int, MarkovPolicy, MarkovPolicy], None]


@dataclass(frozen=True)
class EpsilonSchedule:
    eps0: float = 0.5
    eps1: float = 0.5
    p: float = 8000.0
    mode: str = "constant"

    def __post_init__(self):
        if self.mode not in ("constant", "exponential"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if not (0.0 <= self.eps0 <= 1.0 and 0.0 <= self.eps1 <= 1.0):
            raise ValueError("epsilons must lie in [0, 1]")
        if self.p <= 0:
            raise ValueError("decay scale p must be positive")

    @classmethod
    def constant(cls, eps: float) -> "EpsilonSchedule":
        return cls(eps, eps, 1.0, "constant")

    @classmethod
    def exponential(cls, eps0=1.0, eps1=0.0, p=8000.0) -> "EpsilonSchedule":
        return cls(eps0, eps1, p, "exponential")

    def __call__(self, t: int) -> float:
        if self.mode == "constant":
            return self.eps0
        return self.eps1 + (self.eps0 - self.eps1) * math.exp(-t / self.p)


@dataclass
class EmpiricalModel:
    visit_counts: np.ndarray  # (H, S, A, B)
    next_counts: np.ndarray  # (H, S, A, B, S)
    reward_sums: np.ndarray  # (H, S, A, B)

    @classmethod
    def empty(cls, H, S, A, B) -> "EmpiricalModel":
        return cls(
            np.zeros((H, S, A, B), dtype=np.int64),
            np.zeros((H, S, A, B, S), dtype=np.int64),
            np.zeros((H, S, A, B)),
        )

    def add(self, sample) -> None:
        h, s, a, b = sample.h, sample.s, sample.a, sample.b
        self.visit_counts[h, s, a, b] += 1
        self.next_counts[h, s, a, b, sample.s_next] += 1
        self.reward_sums[h, s, a, b] += sample.r

    def add_batch(self, h, s, a, b, r, s_next) -> None:
        """Vectorised :meth:`add` for equal-length index arrays."""
        np.add.at(self.visit_counts, (h, s, a, b), 1)
        np.add.at(self.next_counts, (h, s, a, b, s_next), 1)
        np.add.at(self.reward_sums, (h, s, a, b), r)

    def estimate(self):
        """``(P_hat, r_hat)``; unvisited entries get a uniform row and zero reward."""
        n = self.visit_counts
        S = self.next_counts.shape[-1]
        seen = n > 0
        safe = np.where(seen, n, 1)
        P = np.where(seen[..., None], self.next_counts / safe[..., None], 1.0 / S)
        r = np.where(seen, self.reward_sums / safe, 0.0)
        return P, r


@dataclass
class LearnerState:
    q: np.ndarray
    q_tilde: Optional[np.ndarray] = None
    model: Optional[EmpiricalModel] = None
    episodes_seen: int = 0
    samples_seen: int = 0
    sweeps: int = 0
    gamma: float = 1.0


def extract_policy(state: LearnerState):
    """Per-(h, s) equilibrium of the main Q table as a ``(mu, nu)`` pair."""
    mu, nu, _ = nash_policies(state.q, ORACLE_TOL)
    return mu, nu


def sweep_model(model: EmpiricalModel, gamma: float = 1.0, exploiter: bool = False):
    """Full backward sweep on the empirical model.

    Returns ``(q, q_tilde, v)``: the Nash-backup Q table, the exploiter table
    (``None`` unless ``exploiter``) whose continuation is the min over columns
    of the main table's max-player equilibrium strategy, and the Nash values.
    Nothing is bootstrapped past the last step.
    """
    P, r = model.estimate()
    H, S, A, B = r.shape
    q = np.zeros((H, S, A, B))
    v = np.zeros((H + 1, S))
    mu = np.zeros((H, S, A))
    for h in reversed(range(H)):
        q[h] = r[h] if h == H - 1 else r[h] + gamma * P[h] @ v[h + 1]
        for s in range(S):
            sol = solve_lp(q[h, s], ORACLE_TOL)
            mu[h, s], v[h, s] = sol.row_strategy, sol.value
    if not exploiter:
        return q, None, v
    qt = np.zeros((H, S, A, B))
    v_exploit = np.zeros(S)
    for h in reversed(range(H)):
        qt[h] = r[h] if h == H - 1 else r[h] + gamma * P[h] @ v_exploit
        v_exploit = np.einsum("sa,sab->sb", mu[h], qt[h]).min(axis=1)
    return q, qt, v


def _sample(rng, cdf) -> int:
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)


def _check_common(episodes, gamma):
    if episodes < 0:
        raise ValueError("episodes must be nonnegative")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")


class _ModelBasedLearner:
    """Shared data collection and sweep for the two Nash VI variants."""

    def __init__(self, env: TabularMG, exploiter: bool, gamma: float):
        self.sim = Simulator(env)
        H, S = env.horizon, env.num_states
        A, B = env.num_actions_max, env.num_actions_min
        self.dims = (H, S, A, B)
        self.gamma = gamma
        self.state = LearnerState(
            q=np.zeros((H, S, A, B)),
            q_tilde=np.zeros((H, S, A, B)) if exploiter else None,
            model=EmpiricalModel.empty(H, S, A, B),
            gamma=gamma,
        )
        self._refresh_policies()

    def _refresh_policies(self):
        mu, nu, _ = nash_policies(self.state.q, ORACLE_TOL)
        self.mu, self.nu = mu, nu
        self.mu_cdf = np.cumsum(mu.probs, axis=-1)
        self.nu_cdf = np.cumsum(nu.probs, axis=-1)
        if self.state.q_tilde is not None:
            col = np.einsum("hsa,hsab->hsb", mu.probs, self.state.q_tilde)
            self.exploit_action = np.argmin(col, axis=-1)

    def sweep(self):
        st = self.state
        st.q, q_tilde, _ = sweep_model(st.model, self.gamma, st.q_tilde is not None)
        if q_tilde is not None:
            st.q_tilde = q_tilde
        st.sweeps += 1
        self._refresh_policies()

    def act(self, h, s, eps, rng):
        _, _, A, B = self.dims
        if rng.random() < eps:
            return int(rng.integers(A)), int(rng.integers(B))
        a = _sample(rng, self.mu_cdf[h, s])
        if self.state.q_tilde is not None:
            b = int(self.exploit_action[h, s])
        else:
            b = _sample(rng, self.nu_cdf[h, s])
        return a, b

    def train(self, episodes, schedule, update_interval, rng, eval_every, hook):
        st = self.state
        if hook is not None:
            hook(0, self.mu, self.nu)
        for k in range(1, episodes + 1):
            s = self.sim.reset()
            for h in range(self.sim.horizon):
                a, b = self.act(h, s, schedule(st.samples_seen), rng)
                sample = self.sim.step(h, s, a, b, rng)
                st.model.add(sample)
                st.samples_seen += 1
                if st.samples_seen % update_interval == 0:
                    self.sweep()
                if sample.done:
                    break
                s = sample.s_next
            st.episodes_seen = k
            if hook is not None and (k % eval_every == 0 or k == episodes):
                hook(k, self.mu, self.nu)
        return st


def _defaults(env, schedule, update_interval, eval_every):
    if schedule is None:
        schedule = EpsilonSchedule.constant(0.5)
    if update_interval is None:
        update_interval = env.horizon * 100
    if update_interval < 1:
        raise ValueError("update_interval must be positive")
    if eval_every is None:
        eval_every = 250
    return schedule, update_interval, eval_every


def nash_vi_train(env: TabularMG, episodes: int, schedule=None, update_interval=None,
                  gamma: float = 1.0, seed: int = 0, eval_every=None,
                  hook: Optional[EvalHook] = None) -> LearnerState:
    """Epsilon-greedy Nash value iteration; ``extract_policy`` gives the output pair."""
    _check_common(episodes, gamma)
    schedule, update_interval, eval_every = _defaults(env, schedule, update_interval, eval_every)
    learner = _ModelBasedLearner(env, exploiter=False, gamma=gamma)
    return learner.train(episodes, schedule, update_interval, make_rng(seed, "nash_vi"),
                         eval_every, hook)


def nash_vi_exploiter_train(env: TabularMG, episodes: int, schedule=None, update_interval=None,
                            gamma: float = 1.0, seed: int = 0, eval_every=None,
                            hook: Optional[EvalHook] = None) -> LearnerState:
    """Nash VI whose min side is played by an exploiter best-responding under ``q_tilde``."""
    _check_common(episodes, gamma)
    schedule, update_interval, eval_every = _defaults(env, schedule, update_interval, eval_every)
    learner = _ModelBasedLearner(env, exploiter=True, gamma=gamma)
    return learner.train(episodes, schedule, update_interval,
                         make_rng(seed, "nash_vi_exploiter"), eval_every, hook)


def nash_q_learning_train(env: TabularMG, episodes: int, schedule=None, alpha: float = 0.1,
                          gamma: float = 1.0, seed: int = 0, eval_every=None,
                          hook: Optional[EvalHook] = None) -> LearnerState:
    """Model-free Nash Q-learning with soft updates toward the next-state Nash value."""
    _check_common(episodes, gamma)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    schedule, _, eval_every = _defaults(env, schedule, 1, eval_every)
    rng = make_rng(seed, "nash_q")
    sim = Simulator(env)
    H, S, A, B = env.reward.shape
    st = LearnerState(q=np.zeros((H, S, A, B)), gamma=gamma)
    cache = {}

    def nash(h, s):
        sol = cache.get((h, s))
        if sol is None:
            sol = cache[h, s] = solve_lp(st.q[h, s], ORACLE_TOL)
        return sol

    def report(k):
        if hook is not None:
            mu, nu = extract_policy(st)
            hook(k, mu, nu)

    report(0)
    for k in range(1, episodes + 1):
        s = sim.reset()
        for h in range(H):
            if rng.random() < schedule(st.samples_seen):
                a, b = int(rng.integers(A)), int(rng.integers(B))
            else:
                sol = nash(h, s)
                a = _sample(rng, np.cumsum(sol.row_strategy))
                b = _sample(rng, np.cumsum(sol.col_strategy))
            sample = sim.step(h, s, a, b, rng)
            st.samples_seen += 1
            target = sample.r
            if not sample.done:
                target += gamma * nash(h + 1, sample.s_next).value
            old = st.q[h, s, a, b]
            new = alpha * target + (1.0 - alpha) * old
            if new != old:
                st.q[h, s, a, b] = new
                cache.pop((h, s), None)
            if sample.done:
                break
            s = sample.s_next
        st.episodes_seen = k
        if k % eval_every == 0 or k == episodes:
            report(k)
    return st
