"""Zero-sum matrix games: equilibrium by linear programming and by MWU.

Payoffs are always from the row (max) player's point of view.  Strategies are
plain 1-d float arrays; :class:`MixedStrategy` validates them where a checked
object is wanted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InfeasibleLP, NonFinite

DEFAULT_TOL = 1e-8
DEFAULT_ETA = 0.1
DEFAULT_ITERS = 10_000

_PIVOT_EPS = 1e-12
_DANTZIG_PIVOTS = 50
_MAX_PIVOTS = 5_000


def as_payoff(A) -> np.ndarray:
    """Return ``A`` as a 2-d float array, rejecting empty or non-finite input."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"payoff matrix must be 2-d and non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("payoff matrix contains NaN or Inf")
    return A


@dataclass(frozen=True)
class PayoffMatrix:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", as_payoff(self.entries))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class MixedStrategy:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DimensionMismatch("a mixed strategy is a non-empty vector")
        if not is_distribution(p):
            raise ValueError(f"not a probability vector: {p}")
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size


def is_distribution(p, atol: float = 1e-9) -> bool:
    p = np.asarray(p, dtype=float)
    return bool(np.all(np.isfinite(p)) and np.all(p >= 0.0) and abs(p.sum() - 1.0) <= atol)


@dataclass(frozen=True)
class MatrixNashSolution:
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    value: float
    eps: float


def _check_pair(A, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (A.shape[0],) or y.shape != (A.shape[1],):
        raise DimensionMismatch(
            f"strategies of shape {x.shape}, {y.shape} do not fit a {A.shape} matrix"
        )
    return x, y


def matrix_exploitability(A, x, y) -> float:
    """Duality gap ``max_i (A y)_i - min_j (x^T A)_j`` of the pair ``(x, y)``.

    The gap is nonnegative for any pair of distributions; rounding below zero
    is clipped.
    """
    A = as_payoff(A)
    x, y = _check_pair(A, x, y)
    return max(0.0, float(np.max(A @ y) - np.min(x @ A)))


def pure_best_response_row(A, y) -> int:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[1],):
        raise DimensionMismatch(f"column strategy of shape {y.shape} does not fit {A.shape}")
    # np.argmax returns the first maximiser, which is the lowest-index tie-break.
    return int(np.argmax(A @ y))


def pure_best_response_col(A, x) -> int:
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    if A.ndim != 2 or x.shape != (A.shape[0],):
        raise DimensionMismatch(f"row strategy of shape {x.shape} does not fit {A.shape}")
    return int(np.argmin(x @ A))


def _solution(A, x, y) -> MatrixNashSolution:
    value = float(x @ A @ y)
    return MatrixNashSolution(x, y, value, matrix_exploitability(A, x, y))


def _saddle_point(A):
    """Pure equilibrium ``(i, j)`` if one exists, lowest indices first."""
    row_floor = A.min(axis=1)
    col_ceiling = A.max(axis=0)
    i = int(np.argmax(row_floor))
    j = int(np.argmin(col_ceiling))
    if row_floor[i] == col_ceiling[j]:
        return i, j
    return None


def _simplex_game(B):
    """Solve the game with strictly positive payoffs ``B``.

    Column player: maximise ``sum(w)`` subject to ``B w <= 1, w >= 0``.  The
    slack basis is feasible at the origin, and the row player's scaled
    strategy is read off the slack reduced costs of the optimal tableau.
    """
    m, n = B.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = B
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = list(range(n, n + m))

    for it in range(_MAX_PIVOTS):
        costs = T[m, :-1]
        if it < _DANTZIG_PIVOTS:
            col = int(np.argmin(costs))
            if costs[col] >= -_PIVOT_EPS:
                break
        else:
            # Bland's rule past the Dantzig budget; guarantees termination.
            neg = np.flatnonzero(costs < -_PIVOT_EPS)
            if neg.size == 0:
                break
            col = int(neg[0])
        column = T[:m, col]
        rows = np.flatnonzero(column > _PIVOT_EPS)
        if rows.size == 0:
            raise InfeasibleLP("unbounded column LP; payoffs were not positive")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-15]
        row = int(min(tied, key=lambda r: basis[r]))
        T[row] /= T[row, col]
        pivot_col = T[:, col].copy()
        pivot_col[row] = 0.0
        T -= np.outer(pivot_col, T[row])
        basis[row] = col
    else:
        raise InfeasibleLP("simplex did not terminate")

    w = np.zeros(n)
    for r, var in enumerate(basis):
        if var < n:
            w[var] = T[r, -1]
    u = T[m, n:n + m].copy()
    return u, w


def _normalise(v):
    v = np.clip(v, 0.0, None)
    s = v.sum()
    if not np.isfinite(s) or s <= 0.0:
        raise InfeasibleLP("degenerate LP solution")
    return v / s


def _solve_highs(A):
    from scipy.optimize import linprog

    m, n = A.shape

    def side(M):
        # max v  s.t.  M^T x >= v, sum x = 1, x >= 0  (variables x, v)
        rows, cols = M.shape
        c = np.zeros(rows + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-M.T, np.ones((cols, 1))])
        A_eq = np.hstack([np.ones((1, rows)), np.zeros((1, 1))])
        bounds = [(0, None)] * rows + [(None, None)]
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(cols), A_eq=A_eq, b_eq=[1.0],
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise InfeasibleLP(res.message)
        return _normalise(res.x[:rows])

    return side(A), side(-A.T)


def solve_lp(A, tol: float = DEFAULT_TOL) -> MatrixNashSolution:
    """Equilibrium of the zero-sum game ``A`` with gap at most ``tol``.

    A pure saddle point is returned directly when one exists.  Otherwise the
    payoffs are shifted to be at least 1 and solved with a dense tableau
    simplex; if rounding leaves the certificate above ``tol`` the game is
    re-solved with HiGHS.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = as_payoff(A)
    m, n = A.shape

    saddle = _saddle_point(A)
    if saddle is not None:
        x = np.zeros(m)
        y = np.zeros(n)
        x[saddle[0]] = 1.0
        y[saddle[1]] = 1.0
        return _solution(A, x, y)

    B = A - A.min() + 1.0
    u, w = _simplex_game(B)
    sol = _solution(A, _normalise(u), _normalise(w))
    if sol.eps <= tol:
        return sol
    x, y = _solve_highs(A)
    sol = _solution(A, x, y)
    if sol.eps > tol:
        raise InfeasibleLP(f"no solver reached gap {tol:g} (got {sol.eps:g})")
    return sol


def _softmax(z):
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def mwu_iterates(A, eta: float = DEFAULT_ETA, iters: int = DEFAULT_ITERS):
    """Yield the simultaneous MWU strategy pairs ``(x_n, y_n)`` for n < iters.

    Weights are kept as cumulative payoffs in log space, so the iterates are
    exactly the multiplicative updates without overflow.
    """
    A = as_payoff(A)
    m, n = A.shape
    row_score = np.zeros(m)
    col_score = np.zeros(n)
    for _ in range(iters):
        x = _softmax(eta * row_score)
        y = _softmax(-eta * col_score)
        yield x, y
        row_score += A @ y
        col_score += x @ A


def solve_mwu(A, eta: float = DEFAULT_ETA, iters: int = DEFAULT_ITERS) -> MatrixNashSolution:
    """Time-averaged MWU strategies; ``eps`` is whatever gap they achieve."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    A = as_payoff(A)
    x_sum = np.zeros(A.shape[0])
    y_sum = np.zeros(A.shape[1])
    for x, y in mwu_iterates(A, eta, iters):
        x_sum += x
        y_sum += y
    return _solution(A, x_sum / iters, y_sum / iters)
