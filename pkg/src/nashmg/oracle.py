"""Ground truth on a known game: Nash values, best responses, exploitability.

Value tables have shape ``(H + 1, S)`` with a zero terminal row; Q tables have
shape ``(H, S, A, B)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HistoryBudgetExceeded
from .markov_game import (
    MarkovPolicy,
    MixturePolicy,
    Policy,
    TabularMG,
    as_mixture,
    check_policy,
)
from .matrix_nash import solve_lp

ORACLE_TOL = 1e-8
DEFAULT_NODE_BUDGET = 10**7


@dataclass(frozen=True)
class NashSolutionMG:
    q_star: np.ndarray
    v_star: np.ndarray
    mu_star: MarkovPolicy
    nu_star: MarkovPolicy


def backup(mg: TabularMG, h: int, v_next, gamma: float = 1.0) -> np.ndarray:
    """``r[h] + gamma * P[h] V[h+1]`` as an ``(S, A, B)`` array."""
    if h == mg.horizon - 1:
        return mg.reward[h].copy()
    return mg.reward[h] + gamma * mg.transition[h] @ v_next


def value_bound(mg: TabularMG, gamma: float = 1.0) -> np.ndarray:
    """``bound[h] = sum_{t >= h} gamma^(t - h)``, the largest possible |V[h]|."""
    H = mg.horizon
    return np.array([sum(gamma**k for k in range(H - h)) for h in range(H + 1)])


def nash_policies(q: np.ndarray, tol: float = ORACLE_TOL):
    """Per-(h, s) equilibrium of a Q table; returns ``(mu, nu, values)``."""
    H, S, A, B = q.shape
    mu = np.empty((H, S, A))
    nu = np.empty((H, S, B))
    v = np.empty((H, S))
    for h in range(H):
        for s in range(S):
            sol = solve_lp(q[h, s], tol)
            mu[h, s], nu[h, s], v[h, s] = sol.row_strategy, sol.col_strategy, sol.value
    return MarkovPolicy(mu), MarkovPolicy(nu), v


def exact_nash_solve(mg: TabularMG, gamma: float = 1.0) -> NashSolutionMG:
    H, S, A, B = mg.reward.shape
    q = np.zeros((H, S, A, B))
    v = np.zeros((H + 1, S))
    mu = np.empty((H, S, A))
    nu = np.empty((H, S, B))
    for h in reversed(range(H)):
        q[h] = backup(mg, h, v[h + 1], gamma)
        for s in range(S):
            sol = solve_lp(q[h, s], ORACLE_TOL)
            mu[h, s], nu[h, s], v[h, s] = sol.row_strategy, sol.col_strategy, sol.value
    return NashSolutionMG(q, v, MarkovPolicy(mu), MarkovPolicy(nu))


def policy_value(mg: TabularMG, mu: MarkovPolicy, nu: MarkovPolicy, gamma: float = 1.0):
    check_policy(mg, mu, "max")
    check_policy(mg, nu, "min")
    H, S = mg.horizon, mg.num_states
    v = np.zeros((H + 1, S))
    for h in reversed(range(H)):
        q = backup(mg, h, v[h + 1], gamma)
        v[h] = np.einsum("sa,sab,sb->s", mu.probs[h], q, nu.probs[h])
    return v


def best_response_to_markov(mg: TabularMG, mu: MarkovPolicy, gamma: float = 1.0):
    """Min-player best response to the max-player policy ``mu``.

    Returns ``(nu_dagger, V)`` where ``nu_dagger`` is pure with lowest-index
    ties and ``V[h, s]`` is the value of ``mu`` against it.
    """
    check_policy(mg, mu, "max")
    H, S, B = mg.horizon, mg.num_states, mg.num_actions_min
    v = np.zeros((H + 1, S))
    actions = np.zeros((H, S), dtype=int)
    for h in reversed(range(H)):
        q = backup(mg, h, v[h + 1], gamma)
        col_values = np.einsum("sa,sab->sb", mu.probs[h], q)
        actions[h] = np.argmin(col_values, axis=1)
        v[h] = col_values[np.arange(S), actions[h]]
    return MarkovPolicy.deterministic(actions, B), v


def best_response_to_markov_min(mg: TabularMG, nu: MarkovPolicy, gamma: float = 1.0):
    """Max-player best response to ``nu``; the mirror of :func:`best_response_to_markov`."""
    check_policy(mg, nu, "min")
    mu_dagger, v = best_response_to_markov(mg.swapped(), nu, gamma)
    return mu_dagger, -v


def _history_nodes(mg: TabularMG) -> int:
    return (mg.num_states * mg.num_actions_max) ** mg.horizon


def best_response_to_mixture(
    mg: TabularMG,
    mixture: MixturePolicy,
    gamma: float = 1.0,
    node_budget: int = DEFAULT_NODE_BUDGET,
    return_policy: bool = False,
):
    """Exact value ``V^{mix, dagger}(s_1)`` of a max-player mixture against its best response.

    The mixture samples one component per episode, so the min player can
    learn which one is in play from the max player's past actions.  The
    recursion walks max-player (state, action) histories carrying the
    posterior weight of every component; at each node the responder picks
    the column minimising the posterior-averaged Q.

    With ``return_policy`` the responder is also returned as a dict mapping
    ``((s_1, a_1), ..., (s_{h-1}, a_{h-1}), s_h)`` to its action.
    """
    mixture = as_mixture(mixture)
    check_policy(mg, mixture, "max")
    if _history_nodes(mg) > node_budget:
        raise HistoryBudgetExceeded(
            f"(S*A)^H = {_history_nodes(mg)} history nodes exceed the budget {node_budget}"
        )
    comp = mixture.stacked()  # (K, H, S, A)
    H = mg.horizon
    P, R = mg.transition, mg.reward
    responder = {} if return_policy else None

    def visit(h, s, weights, prefix):
        likelihood = weights[:, None] * comp[:, h, s, :]  # (K, A)
        mu_hat = likelihood.sum(axis=0) / weights.sum()
        q = R[h, s].copy()  # (A, B)
        if h < H - 1:
            for a in np.flatnonzero(mu_hat > 0.0):
                child = likelihood[:, a]
                reach = P[h, s, a]  # (B, S')
                v_next = np.zeros(mg.num_states)
                for s_next in np.flatnonzero(reach.max(axis=0) > 0.0):
                    v_next[s_next] = visit(h + 1, s_next, child, prefix + ((s, int(a)),))
                q[a] += gamma * reach @ v_next
        col_values = mu_hat @ q
        b = int(np.argmin(col_values))
        if responder is not None:
            responder[prefix + (s,)] = b
        return float(col_values[b])

    value = visit(0, mg.initial_state, mixture.meta.copy(), ())
    if return_policy:
        return value, responder
    return value


def min_player_br_value(mg, mu_hat: Policy, gamma=1.0, node_budget=DEFAULT_NODE_BUDGET):
    """``V^{mu_hat, dagger}(s_1)`` for a Markov or mixture max-player policy."""
    if isinstance(mu_hat, MixturePolicy) and len(mu_hat.components) > 1:
        return best_response_to_mixture(mg, mu_hat, gamma, node_budget)
    mu = as_mixture(mu_hat).components[0]
    return float(best_response_to_markov(mg, mu, gamma)[1][0, mg.initial_state])


def max_player_br_value(mg, nu_hat: Policy, gamma=1.0, node_budget=DEFAULT_NODE_BUDGET):
    """``V^{dagger, nu_hat}(s_1)`` for a Markov or mixture min-player policy."""
    check_policy(mg, nu_hat, "min")
    return -min_player_br_value(mg.swapped(), nu_hat, gamma, node_budget)


def exploitability(mg, mu_hat: Policy, nu_hat: Policy, gamma=1.0, node_budget=DEFAULT_NODE_BUDGET):
    """Duality gap ``V^{dagger, nu_hat}(s_1) - V^{mu_hat, dagger}(s_1)``."""
    upper = max_player_br_value(mg, nu_hat, gamma, node_budget)
    lower = min_player_br_value(mg, mu_hat, gamma, node_budget)
    return upper - lower


def max_player_exploitability(mg, mu_hat: Policy, gamma=1.0, v_star=None,
                              node_budget=DEFAULT_NODE_BUDGET):
    """One-sided gap ``V*(s_1) - V^{mu_hat, dagger}(s_1)`` of the max player."""
    if v_star is None:
        v_star = exact_nash_solve(mg, gamma).v_star[0, mg.initial_state]
    return float(v_star) - min_player_br_value(mg, mu_hat, gamma, node_budget)
