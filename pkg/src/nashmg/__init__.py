"""Tabular two-player zero-sum Markov games: exact oracles, equilibrium learners, baselines."""

from .markov_game import MarkovPolicy, MixturePolicy, TabularMG, generate_random_mg
from .matrix_nash import matrix_exploitability, solve_lp, solve_mwu
from .oracle import exact_nash_solve, exploitability

__all__ = [
    "MarkovPolicy",
    "MixturePolicy",
    "TabularMG",
    "exact_nash_solve",
    "exploitability",
    "generate_random_mg",
    "matrix_exploitability",
    "solve_lp",
    "solve_mwu",
]
