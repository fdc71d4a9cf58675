"""Experiment runner: configs, training with periodic exploitability, CSV and SVG output."""
from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional

import numpy as np

from .baselines import BRConfig, approximate_exploitability, do_train, fsp_train, self_play_train
from .errors import ConfigError, HistoryBudgetExceeded
from .learners import (
    EpsilonSchedule,
    extract_policy,
    nash_q_learning_train,
    nash_vi_exploiter_train,
    nash_vi_train,
)
from .markov_game import TabularMG, generate_random_mg, load_mg, save_policy_pair
from .oracle import DEFAULT_NODE_BUDGET, exploitability
from .svg import convergence_svg

log = logging.getLogger(__name__)

ALGORITHMS = ("nash_vi", "nash_vi_exploiter", "nash_q", "sp", "fsp", "do")
LEARNERS = ("nash_vi", "nash_vi_exploiter", "nash_q")
CSV_HEADER = ("algorithm", "seed", "episode", "exploitability", "wall_time_ms")
SMOOTH_WINDOW = 100


@dataclass
class ExperimentConfig:
    env_path: Optional[str] = None
    S: int = 3
    A: int = 3
    B: int = 3
    H: int = 3
    env_seed: int = 0
    algorithms: List[str] = field(default_factory=lambda: ["nash_vi"])
    episodes: int = 50_000
    gamma: float = 1.0
    eps_mode: str = "constant"
    eps0: float = 0.5
    eps1: float = 0.5
    eps_decay: float = 8000.0
    alpha: float = 0.1
    update_interval: Optional[int] = None
    eval_every: int = 250
    eval_mode: str = "exact"
    seeds: List[int] = field(default_factory=lambda: [0])
    output_dir: str = "."
    br_episodes: int = 2000
    br_alpha: float = 0.1
    br_eps0: float = 1.0
    br_eps1: float = 0.0
    br_eps_decay: float = 8000.0
    br_threshold: Optional[float] = None
    meta_eval_episodes: int = 100
    approx_episodes: int = 30_000
    approx_eval_episodes: int = 10_000
    node_budget: int = DEFAULT_NODE_BUDGET
    record_wall_time: bool = False
    log_y: bool = False

    @property
    def algorithm(self) -> str:
        return self.algorithms[0]

    def validate(self) -> "ExperimentConfig":
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if not self.algorithms or bad:
            raise ConfigError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
        for name in ("S", "A", "B", "H", "eval_every", "br_episodes", "meta_eval_episodes",
                     "approx_episodes", "approx_eval_episodes", "node_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.episodes < 0:
            raise ConfigError("episodes must be nonnegative")
        if self.episodes % self.eval_every:
            raise ConfigError("eval_every must divide episodes")
        if self.episodes % self.br_episodes and set(self.algorithms) - set(LEARNERS):
            raise ConfigError("br_episodes must divide episodes for sp/fsp/do")
        if self.eval_mode not in ("exact", "approx_exploiter"):
            raise ConfigError("eval_mode must be 'exact' or 'approx_exploiter'")
        if self.eps_mode not in ("constant", "exponential"):
            raise ConfigError("eps_mode must be 'constant' or 'exponential'")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.update_interval is not None and self.update_interval < 1:
            raise ConfigError("update_interval must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        try:
            self.schedule()
            self.br_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(self.eps0, self.eps1 if self.eps_mode == "exponential" else self.eps0,
                               self.eps_decay, self.eps_mode)

    def br_config(self) -> BRConfig:
        return BRConfig(
            episodes=self.br_episodes,
            alpha=self.br_alpha,
            schedule=EpsilonSchedule.exponential(self.br_eps0, self.br_eps1, self.br_eps_decay),
            gamma=self.gamma,
            threshold=self.br_threshold,
        )

    def approx_config(self) -> BRConfig:
        return replace(self.br_config(), episodes=self.approx_episodes, threshold=None)

    def make_env(self) -> TabularMG:
        if self.env_path:
            return load_mg(os.path.join(self.output_dir, self.env_path))
        return generate_random_mg(self.S, self.A, self.B, self.H, self.env_seed)


_LIST_KEYS = {"algorithms": str, "seeds": int}
_ALIASES = {"algorithm": "algorithms", "env": "env_path", "seed": "seeds"}


def _coerce(name, raw, kind):
    raw = raw.strip()
    if kind == "Optional[int]" or kind == "Optional[float]" or kind == "Optional[str]":
        if raw.lower() in ("", "none", "null"):
            return None
        kind = kind[len("Optional["):-1]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"cannot read {name} = {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Read ``key = value`` lines (``#`` starts a comment) into a validated config."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    items = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        items.append((key, raw))
    items.extend((k, str(v)) for k, v in overrides.items() if v is not None)
    for key, raw in items:
        key = _ALIASES.get(key, key)
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        if key in _LIST_KEYS:
            parts = [p.strip() for p in raw.replace(",", " ").split()]
            try:
                values[key] = [_LIST_KEYS[key](p) for p in parts]
            except ValueError:
                raise ConfigError(f"cannot read {key} = {raw!r}") from None
        else:
            values[key] = _coerce(key, raw, types[key])
    return ExperimentConfig(**values).validate()


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


# -- running --------------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    algorithm: str
    seed: int
    episode: int
    exploitability: float
    wall_time_ms: float


def evaluate(config: ExperimentConfig, env: TabularMG, mu, nu, seed: int, episode: int) -> float:
    """Exploitability per ``eval_mode``; exact mode falls back to learned
    exploiters when a mixture is too large for the exact history recursion."""
    if config.eval_mode == "exact":
        try:
            return exploitability(env, mu, nu, config.gamma, config.node_budget)
        except HistoryBudgetExceeded:
            log.info("mixture beyond history budget at episode %d; using learned exploiters",
                     episode)
    return approximate_exploitability(env, mu, nu, config.approx_config(),
                                      config.approx_eval_episodes, seed * 1_000_003 + episode)


def run_single(config: ExperimentConfig, algorithm: str, seed: int, env: TabularMG = None):
    """Train one algorithm with one seed; returns ``(rows, (mu, nu))``."""
    if env is None:
        env = config.make_env()
    rows = []
    clock = {"start": time.perf_counter(), "eval": 0.0}

    def record(episode, mu, nu):
        t0 = time.perf_counter()
        value = evaluate(config, env, mu, nu, seed, episode)
        t1 = time.perf_counter()
        wall = 0.0
        if config.record_wall_time:
            wall = round((t0 - clock["start"] - clock["eval"]) * 1000.0, 3)
        clock["eval"] += t1 - t0
        rows.append(Row(algorithm, seed, episode, value, wall))

    if algorithm in LEARNERS:
        kw = dict(gamma=config.gamma, seed=seed, eval_every=config.eval_every, hook=record)
        if algorithm == "nash_q":
            state = nash_q_learning_train(env, config.episodes, config.schedule(),
                                          alpha=config.alpha, **kw)
        else:
            train = nash_vi_train if algorithm == "nash_vi" else nash_vi_exploiter_train
            state = train(env, config.episodes, config.schedule(), config.update_interval, **kw)
        pair = extract_policy(state)
    else:
        iterations = config.episodes // config.br_episodes
        hook = lambda t, episodes, mu, nu: record(episodes, mu, nu)  # noqa: E731
        if algorithm == "sp":
            res = self_play_train(env, iterations, config.br_config(), seed, hook)
        elif algorithm == "fsp":
            res = fsp_train(env, iterations, config.br_config(), seed, hook)
        else:
            res = do_train(env, iterations, config.br_config(), config.meta_eval_episodes, seed,
                           hook=hook)
        pair = res.mixtures()
    return rows, pair


def _run_job(args):
    config, algorithm, seed, env = args
    return run_single(config, algorithm, seed, env)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("NASHMG_THREADS", "1")))
    except ValueError:
        return 1


def run_many(config: ExperimentConfig, jobs, env: TabularMG = None):
    """Run ``(algorithm, seed)`` jobs, in parallel up to ``NASHMG_THREADS`` workers."""
    if env is None:
        env = config.make_env()
    args = [(config, a, s, env) for a, s in jobs]
    n = min(worker_count(), len(args))
    if n <= 1:
        results = [_run_job(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_job, args))
    return dict(zip(jobs, results))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(rows, key=lambda r: (r.algorithm, r.seed, r.episode)):
        writer.writerow([r.algorithm, r.seed, r.episode, repr(float(r.exploitability)),
                         repr(float(r.wall_time_ms))])
    return buf.getvalue()


def read_csv(path) -> List[Row]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return [Row(a, int(s), int(e), float(x), float(w)) for a, s, e, x, w in reader]


def trailing_smooth(episodes, values, window=SMOOTH_WINDOW):
    """Mean of the values whose episode lies within the trailing ``window`` episodes."""
    episodes = np.asarray(episodes)
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    for i, e in enumerate(episodes):
        mask = (episodes > e - window) & (episodes <= e)
        out[i] = values[mask].mean()
    return out


def summarize(rows, smooth: bool = False):
    """Per algorithm: ``(episodes, median, min, max)`` across seeds on the shared episode grid."""
    series = {}
    for alg in sorted({r.algorithm for r in rows}, key=lambda a: ALGORITHMS.index(a)
                      if a in ALGORITHMS else len(ALGORITHMS)):
        by_seed = {}
        for r in rows:
            if r.algorithm == alg:
                by_seed.setdefault(r.seed, {})[r.episode] = r.exploitability
        grid = sorted(set.intersection(*(set(d) for d in by_seed.values())))
        table = np.array([[d[e] for e in grid] for d in by_seed.values()])
        if smooth:
            table = np.array([trailing_smooth(grid, t) for t in table])
        series[alg] = (grid, np.median(table, axis=0).tolist(), table.min(axis=0).tolist(),
                       table.max(axis=0).tolist())
    return series


def episodes_to_reach(episodes, values, level):
    """First episode at which ``values`` drops to ``level`` or below; ``inf`` if never."""
    for e, v in zip(episodes, values):
        if v <= level:
            return e
    return float("inf")


def train(config: ExperimentConfig):
    """Single-algorithm run over all seeds; writes ``train.csv`` and one policy file per seed."""
    env = config.make_env()
    os.makedirs(config.output_dir, exist_ok=True)
    algorithm = config.algorithm
    results = run_many(config, [(algorithm, s) for s in config.seeds], env)
    rows = [r for rs, _ in results.values() for r in rs]
    csv_path = os.path.join(config.output_dir, "train.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    paths = [csv_path]
    for (alg, seed), (_, (mu, nu)) in results.items():
        path = os.path.join(config.output_dir, f"policy_{alg}_seed{seed}.json")
        save_policy_pair(mu, nu, path)
        paths.append(path)
    return rows, paths


def compare(config: ExperimentConfig):
    """All listed algorithms on the same game and seeds; writes ``compare.csv`` and ``compare.svg``."""
    os.makedirs(config.output_dir, exist_ok=True)
    env = config.make_env()
    jobs = [(a, s) for a in config.algorithms for s in config.seeds]
    results = run_many(config, jobs, env)
    rows = [r for rs, _ in results.values() for r in rs]
    csv_path = os.path.join(config.output_dir, "compare.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    series = summarize(rows, smooth=config.eval_mode == "approx_exploiter")
    S, A, B, H = env.shape
    title = f"exploitability, S={S} A={A} B={B} H={H}, {len(config.seeds)} seeds"
    svg_path = os.path.join(config.output_dir, "compare.svg")
    with open(svg_path, "w") as fh:
        fh.write(convergence_svg(series, title=title, log_y=config.log_y))
    return rows, series, (csv_path, svg_path)
