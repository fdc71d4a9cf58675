"""Finite-horizon tabular zero-sum Markov games and policies over them.

Steps are 0-based internally: ``h = 0 .. H-1``.  ``transition[h]`` maps the
state at step ``h`` to the state at step ``h + 1``, so there are ``H - 1``
transition layers and the episode ends after the reward at step ``H - 1``.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, MalformedInput
from .matrix_nash import is_distribution

ROW_SUM_ATOL = 1e-9
LOAD_ROW_SUM_ATOL = 1e-6


def make_rng(seed: int, stream: str = "") -> np.random.Generator:
    """Independent generator for the named ``stream`` of a base ``seed``."""
    return np.random.default_rng([int(seed), zlib.crc32(stream.encode())])


@dataclass(frozen=True, eq=False)
class TabularMG:
    transition: np.ndarray  # (H-1, S, A, B, S)
    reward: np.ndarray  # (H, S, A, B)
    initial_state: int = 0

    def __post_init__(self):
        r = np.asarray(self.reward, dtype=float)
        if r.ndim != 4 or min(r.shape) < 1:
            raise InvariantViolation(f"reward must have shape (H, S, A, B), got {r.shape}")
        H, S, A, B = r.shape
        P = np.asarray(self.transition, dtype=float).reshape(H - 1, S, A, B, S)
        if not (np.all(np.isfinite(r)) and np.all(np.abs(r) <= 1.0)):
            raise InvariantViolation("rewards must lie in [-1, 1]")
        if not np.all(np.isfinite(P)) or np.any(P < 0.0):
            raise InvariantViolation("transition probabilities must be finite and nonnegative")
        if P.size and np.max(np.abs(P.sum(axis=-1) - 1.0)) > ROW_SUM_ATOL:
            raise InvariantViolation("transition rows must sum to 1")
        if not 0 <= int(self.initial_state) < S:
            raise InvariantViolation(f"initial_state {self.initial_state} outside [0, {S})")
        P.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "initial_state", int(self.initial_state))

    @property
    def horizon(self) -> int:
        return self.reward.shape[0]

    @property
    def num_states(self) -> int:
        return self.reward.shape[1]

    @property
    def num_actions_max(self) -> int:
        return self.reward.shape[2]

    @property
    def num_actions_min(self) -> int:
        return self.reward.shape[3]

    @property
    def shape(self):
        """``(S, A, B, H)``"""
        H, S, A, B = self.reward.shape
        return S, A, B, H

    def __eq__(self, other):
        if not isinstance(other, TabularMG):
            return NotImplemented
        return (
            self.initial_state == other.initial_state
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.reward, other.reward)
        )

    def swapped(self) -> "TabularMG":
        """The same game seen from the min player: actions swapped, rewards negated."""
        return TabularMG(
            np.swapaxes(self.transition, 2, 3),
            -np.swapaxes(self.reward, 2, 3),
            self.initial_state,
        )


def generate_random_mg(S: int, A: int, B: int, H: int, seed: int) -> TabularMG:
    """Random game with uniform transition weights and uniform [-1, 1] rewards."""
    for name, v in (("S", S), ("A", A), ("B", B), ("H", H)):
        if int(v) < 1:
            raise ValueError(f"{name} must be positive, got {v}")
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.0, 1.0, size=(H - 1, S, A, B, S))
    P /= P.sum(axis=-1, keepdims=True)
    r = rng.uniform(-1.0, 1.0, size=(H, S, A, B))
    return TabularMG(P, r, 0)


def matrix_game_mg(payoff, H: int = 1) -> TabularMG:
    """Single-state game repeating the matrix game ``payoff`` for ``H`` steps."""
    M = np.asarray(payoff, dtype=float)
    A, B = M.shape
    r = np.broadcast_to(M, (H, 1, A, B)).copy()
    P = np.ones((H - 1, 1, A, B, 1))
    return TabularMG(P, r, 0)


# -- policies ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovPolicy:
    probs: np.ndarray  # (H, S, n_actions)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 3 or min(p.shape) < 1:
            raise DimensionMismatch(f"policy table must be (H, S, n), got {p.shape}")
        if np.any(p < 0.0) or np.max(np.abs(p.sum(axis=-1) - 1.0)) > 1e-9:
            raise InvariantViolation("every policy row must be a probability vector")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def num_actions(self) -> int:
        return self.probs.shape[2]

    def __eq__(self, other):
        if not isinstance(other, MarkovPolicy):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    @classmethod
    def uniform(cls, H: int, S: int, n: int) -> "MarkovPolicy":
        return cls(np.full((H, S, n), 1.0 / n))

    @classmethod
    def deterministic(cls, actions, n: int) -> "MarkovPolicy":
        actions = np.asarray(actions, dtype=int)
        return cls(np.eye(n)[actions])


@dataclass(frozen=True, eq=False)
class MixturePolicy:
    components: tuple
    meta: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        meta = np.asarray(self.meta, dtype=float)
        if not comps:
            raise DimensionMismatch("a mixture needs at least one component")
        if meta.shape != (len(comps),):
            raise DimensionMismatch(f"{len(comps)} components but meta of shape {meta.shape}")
        if not is_distribution(meta):
            raise InvariantViolation(f"meta weights are not a distribution: {meta}")
        shape = comps[0].probs.shape
        if any(c.probs.shape != shape for c in comps):
            raise DimensionMismatch("mixture components disagree in shape")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "meta", meta)

    @property
    def num_actions(self) -> int:
        return self.components[0].num_actions

    def stacked(self) -> np.ndarray:
        """``(K, H, S, n)`` array of component tables."""
        return np.stack([c.probs for c in self.components])

    def __eq__(self, other):
        if not isinstance(other, MixturePolicy):
            return NotImplemented
        return (
            len(self.components) == len(other.components)
            and all(a == b for a, b in zip(self.components, other.components))
            and np.array_equal(self.meta, other.meta)
        )


Policy = Union[MarkovPolicy, MixturePolicy]


def as_mixture(policy: Policy) -> MixturePolicy:
    if isinstance(policy, MixturePolicy):
        return policy
    return MixturePolicy((policy,), np.ones(1))


def check_policy(mg: TabularMG, policy: Policy, player: str) -> None:
    n = mg.num_actions_max if player == "max" else mg.num_actions_min
    for comp in as_mixture(policy).components:
        expected = (mg.horizon, mg.num_states, n)
        if comp.probs.shape != expected:
            raise DimensionMismatch(
                f"{player}-player policy has shape {comp.probs.shape}, game needs {expected}"
            )


# -- simulation --------------------------------------------------------------


class TransitionSample(NamedTuple):
    h: int
    s: int
    a: int
    b: int
    r: float
    done: bool
    s_next: int


def _categorical(rng, p) -> int:
    i = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
    return min(i, len(p) - 1)


class Simulator:
    """Step-by-step sampling interface; learners see the game only through this."""

    def __init__(self, mg: TabularMG):
        self.horizon = mg.horizon
        self.num_states = mg.num_states
        self.num_actions_max = mg.num_actions_max
        self.num_actions_min = mg.num_actions_min
        self.initial_state = mg.initial_state
        self._reward = mg.reward
        self._cdf = np.cumsum(mg.transition, axis=-1)

    def reset(self) -> int:
        return self.initial_state

    def step(self, h: int, s: int, a: int, b: int, rng: np.random.Generator) -> TransitionSample:
        r = float(self._reward[h, s, a, b])
        if h == self.horizon - 1:
            return TransitionSample(h, s, a, b, r, True, s)
        cdf = self._cdf[h, s, a, b]
        s_next = min(int(np.searchsorted(cdf, rng.random(), side="right")), self.num_states - 1)
        return TransitionSample(h, s, a, b, r, False, s_next)


def rollout(mg: TabularMG, mu: MarkovPolicy, nu: MarkovPolicy, rng, gamma: float = 1.0):
    """Play one episode; returns ``(trajectory, discounted_return)``."""
    check_policy(mg, mu, "max")
    check_policy(mg, nu, "min")
    sim = Simulator(mg)
    s = sim.reset()
    traj = []
    ret = 0.0
    for h in range(mg.horizon):
        a = _categorical(rng, mu.probs[h, s])
        b = _categorical(rng, nu.probs[h, s])
        sample = sim.step(h, s, a, b, rng)
        traj.append(sample)
        ret += gamma**h * sample.r
        s = sample.s_next
    return traj, ret


def _sample_rows(rng, rows):
    """One categorical draw per row of the (n, k) array ``rows``."""
    u = rng.random(rows.shape[0])[:, None]
    idx = (np.cumsum(rows, axis=1) <= u * rows.sum(axis=1, keepdims=True)).sum(axis=1)
    return np.minimum(idx, rows.shape[1] - 1)


def sample_returns(mg: TabularMG, mu: Policy, nu: Policy, n: int, rng, gamma: float = 1.0):
    """Discounted returns of ``n`` independent episodes, vectorised over episodes.

    Mixtures draw one component per episode and follow it throughout.
    """
    check_policy(mg, mu, "max")
    check_policy(mg, nu, "min")
    mu_mix, nu_mix = as_mixture(mu), as_mixture(nu)
    mu_tab, nu_tab = mu_mix.stacked(), nu_mix.stacked()
    ki = rng.choice(len(mu_mix.components), size=n, p=mu_mix.meta)
    kj = rng.choice(len(nu_mix.components), size=n, p=nu_mix.meta)
    s = np.full(n, mg.initial_state)
    ret = np.zeros(n)
    for h in range(mg.horizon):
        a = _sample_rows(rng, mu_tab[ki, h, s])
        b = _sample_rows(rng, nu_tab[kj, h, s])
        ret += gamma**h * mg.reward[h, s, a, b]
        if h < mg.horizon - 1:
            s = _sample_rows(rng, mg.transition[h, s, a, b])
    return ret


# -- serialisation -------------------------------------------------------------

ENV_FIELDS = ("S", "A", "B", "H", "initial_state", "transition", "reward")


def serialize(mg: TabularMG) -> bytes:
    """Environment file: one JSON object, one top-level field per line."""
    S, A, B, H = mg.shape
    fields = {
        "S": S,
        "A": A,
        "B": B,
        "H": H,
        "initial_state": mg.initial_state,
        "transition": mg.transition.tolist(),
        "reward": mg.reward.tolist(),
    }
    lines = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in fields.items()]
    return ("{\n" + ",\n".join(lines) + "\n}\n").encode()


def _int_field(doc, key):
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise MalformedInput(f"field {key!r} must be an integer")
    return v


def deserialize(data: Union[bytes, str]) -> TabularMG:
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    if not data.strip():
        raise MalformedInput("empty environment file")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedInput("environment file must hold a single object")
    missing = [k for k in ENV_FIELDS if k not in doc]
    if missing:
        raise MalformedInput(f"missing fields: {missing}")
    S, A, B, H = (_int_field(doc, k) for k in ("S", "A", "B", "H"))
    s0 = _int_field(doc, "initial_state")
    if min(S, A, B, H) < 1:
        raise MalformedInput("S, A, B, H must be positive")
    try:
        P = np.array(doc["transition"], dtype=float)
        r = np.array(doc["reward"], dtype=float)
    except (TypeError, ValueError):
        raise MalformedInput("transition/reward must be rectangular numeric arrays") from None
    if r.shape != (H, S, A, B):
        raise MalformedInput(f"reward shape {r.shape} != {(H, S, A, B)}")
    if P.size == 0 and H == 1:
        P = P.reshape(0, S, A, B, S)
    if P.shape != (H - 1, S, A, B, S):
        raise MalformedInput(f"transition shape {P.shape} != {(H - 1, S, A, B, S)}")
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(r))):
        raise InvariantViolation("non-finite entries")
    if np.any(P < 0.0):
        raise InvariantViolation("negative transition probability")
    if P.size:
        sums = P.sum(axis=-1)
        if np.max(np.abs(sums - 1.0)) > LOAD_ROW_SUM_ATOL:
            raise InvariantViolation("a transition row does not sum to 1")
        off = np.abs(sums - 1.0) > ROW_SUM_ATOL
        P[off] /= sums[off][:, None]
    if np.any(np.abs(r) > 1.0):
        raise InvariantViolation("reward outside [-1, 1]")
    if not 0 <= s0 < S:
        raise InvariantViolation("initial_state out of range")
    return TabularMG(P, r, s0)


def save_mg(mg: TabularMG, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(mg))


def load_mg(path) -> TabularMG:
    with open(path, "rb") as fh:
        return deserialize(fh.read())



# -- policy files ----------------------------------------------------------------


def policy_to_dict(policy: Policy) -> dict:
    if isinstance(policy, MarkovPolicy):
        return {"type": "markov", "probs": policy.probs.tolist()}
    return {
        "type": "mixture",
        "meta": policy.meta.tolist(),
        "components": [c.probs.tolist() for c in policy.components],
    }


def policy_from_dict(doc) -> Policy:
    if not isinstance(doc, dict) or doc.get("type") not in ("markov", "mixture"):
        raise MalformedInput("policy entry needs type 'markov' or 'mixture'")
    try:
        if doc["type"] == "markov":
            return MarkovPolicy(np.array(doc["probs"], dtype=float))
        comps = tuple(MarkovPolicy(np.array(c, dtype=float)) for c in doc["components"])
        return MixturePolicy(comps, np.array(doc["meta"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (InvariantViolation, DimensionMismatch)):
            raise
        raise MalformedInput(f"bad policy entry: {exc}") from None


def serialize_policy_pair(mu: Policy, nu: Policy) -> bytes:
    lines = [
        f'  "max": {json.dumps(policy_to_dict(mu))}',
        f'  "min": {json.dumps(policy_to_dict(nu))}',
    ]
    return ("{\n" + ",\n".join(lines) + "\n}\n").encode()


def deserialize_policy_pair(data: Union[bytes, str]):
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    if not data.strip():
        raise MalformedInput("empty policy file")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "max" not in doc or "min" not in doc:
        raise MalformedInput("policy file needs 'max' and 'min' entries")
    return policy_from_dict(doc["max"]), policy_from_dict(doc["min"])


def save_policy_pair(mu: Policy, nu: Policy, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_policy_pair(mu, nu))


def load_policy_pair(path):
    with open(path, "rb") as fh:
        return deserialize_policy_pair(fh.read())
